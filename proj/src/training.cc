#include "abusenet/training.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "abusenet/csv.h"
#include "abusenet/error.h"

namespace abusenet {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(EnsembleMode mode) {
  return mode == EnsembleMode::kAverage ? "average" : "best_fold";
}

EnsembleMode parse_ensemble(const std::string& s) {
  if (s == "average") return EnsembleMode::kAverage;
  if (s == "best_fold") return EnsembleMode::kBestFold;
  throw ConfigError("unknown ensemble mode '" + s + "' (expected average or best_fold)");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// -log p of the gold class, with p floored so a confident miss stays finite.
double nll(double p) { return -std::log(std::max(p, 1e-30)); }

}  // namespace

TrainConfig TrainConfig::defaults_for_task(int task) {
  TrainConfig c;
  c.task = task;
  if (task == 2) {
    c.batch_size = 64;
    c.epochs = 7;
  }
  return c;
}

void TrainConfig::validate() const {
  if (task < 1 || task > 3) throw ConfigError("task must be 1, 2 or 3");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
}

ordered_json to_json(const TrainConfig& c) {
  ordered_json j;
  j["task"] = c.task;
  j["language"] = std::string(to_string(c.language));
  j["folds"] = c.folds;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.eps;
  j["seed"] = c.seed;
  j["multitask"] = c.multitask;
  j["ensemble"] = to_string(c.ensemble);
  j["threads"] = c.threads;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("train section must be a JSON object");
  static const std::vector<std::string> known = {
      "task", "language", "folds", "batch_size", "epochs", "learning_rate", "beta1",
      "beta2", "epsilon", "seed", "multitask", "ensemble", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown key 'train." + key + "'");
  }
  try {
    TrainConfig c = TrainConfig::defaults_for_task(j.value("task", 1));
    if (j.contains("language")) c.language = parse_language(j.at("language").get<std::string>());
    c.folds = j.value("folds", c.folds);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.adam.lr = j.value("learning_rate", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("epsilon", c.adam.eps);
    c.seed = j.value("seed", c.seed);
    c.multitask = j.value("multitask", c.multitask);
    if (j.contains("ensemble")) c.ensemble = parse_ensemble(j.at("ensemble").get<std::string>());
    c.threads = j.value("threads", c.threads);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train section: ") + e.what());
  }
}

std::vector<int> task_labels(int task) {
  if (task == 3) return {1, 3};
  if (task == 1 || task == 2) return {1};
  throw ConfigError("task must be 1, 2 or 3");
}

Tensor<std::int32_t> EncodedDataset::batch(const std::vector<std::size_t>& rows) const {
  Tensor<std::int32_t> out({rows.size(), seq_len});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(indices.begin() + static_cast<std::ptrdiff_t>(rows[r] * seq_len), seq_len,
                out.data() + r * seq_len);
  }
  return out;
}

std::vector<int> EncodedDataset::head_labels(std::size_t head,
                                             const std::vector<std::size_t>& rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels.at(head).at(r));
  return out;
}

EncodedDataset EncodedDataset::select_heads(const std::vector<std::size_t>& heads) const {
  EncodedDataset out;
  out.seq_len = seq_len;
  out.indices = indices;
  for (std::size_t h : heads) out.labels.push_back(labels.at(h));
  return out;
}

EncodedDataset encode_examples(const std::vector<std::vector<std::string>>& tokens,
                               const std::vector<LabeledExample>& examples,
                               const std::vector<int>& label_ids, const Vocabulary& vocab,
                               std::size_t seq_len) {
  if (tokens.size() != examples.size())
    throw DataError("token lists and examples differ in length");
  EncodedDataset out;
  out.seq_len = seq_len;
  out.indices.reserve(examples.size() * seq_len);
  out.labels.assign(label_ids.size(), {});
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncodedSequence seq = encode(tokens[i], vocab, seq_len);
    out.indices.insert(out.indices.end(), seq.indices.begin(), seq.indices.end());
    for (std::size_t h = 0; h < label_ids.size(); ++h) {
      const auto it = examples[i].labels.find(label_ids[h]);
      if (it == examples[i].labels.end())
        throw DataError("example '" + examples[i].id + "' has no label " +
                        std::to_string(label_ids[h]));
      out.labels[h].push_back(it->second);
    }
  }
  return out;
}

ordered_json to_json(const RunReport& report) {
  ordered_json j;
  j["labels"] = report.label_ids;
  j["config"] = report.config;
  j["vocab_size"] = report.vocab_size;
  j["embedding_coverage"] = report.embedding_coverage;
  ordered_json avg = ordered_json::array();
  for (const HeadSummary& h : report.averaged) {
    ordered_json a;
    a["label"] = h.label;
    a["precision_macro"] = h.precision;
    a["recall_macro"] = h.recall;
    a["f1_macro"] = h.f1;
    a["f1_mean_per_class"] = h.mean_class_f1;
    a["accuracy"] = h.accuracy;
    avg.push_back(a);
  }
  j["averaged"] = avg;
  ordered_json folds = ordered_json::array();
  for (const FoldReport& f : report.folds) {
    ordered_json fj;
    fj["fold"] = f.fold;
    fj["train_size"] = f.train_size;
    fj["val_size"] = f.val_size;
    ordered_json epochs = ordered_json::array();
    for (const EpochRecord& e : f.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"val_loss", e.val_loss},
                        {"val_accuracy", e.val_accuracy}});
    }
    fj["epochs"] = epochs;
    ordered_json heads = ordered_json::array();
    for (std::size_t h = 0; h < f.heads.size(); ++h) {
      ordered_json hj = to_json(f.heads[h]);
      hj["label"] = h < report.label_ids.size() ? report.label_ids[h] : 0;
      heads.push_back(hj);
    }
    fj["heads"] = heads;
    folds.push_back(fj);
  }
  j["folds"] = folds;
  if (!report.holdout.empty()) {
    ordered_json hold = ordered_json::array();
    for (std::size_t h = 0; h < report.holdout.size(); ++h) {
      ordered_json hj = to_json(report.holdout[h]);
      hj["label"] = h < report.label_ids.size() ? report.label_ids[h] : 0;
      hold.push_back(hj);
    }
    j["holdout"] = hold;
  }
  return j;
}

EpochStats train_epoch(Network<float>& net, const EncodedDataset& data,
                       const std::vector<std::size_t>& rows, std::size_t batch_size,
                       const AdamConfig& adam, Rng& rng,
                       const std::function<void(const std::vector<std::size_t>&)>& on_batch) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::size_t heads = net.config().num_heads;
  const std::size_t classes = net.config().classes_per_head;
  if (data.heads() != heads)
    throw ConfigError("dataset has " + std::to_string(data.heads()) + " label heads, model has " +
                      std::to_string(heads));

  std::vector<std::size_t> order = rows;
  rng.shuffle(order);

  EpochStats stats;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<Tensor<float>> probs;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const std::vector<std::size_t> batch_rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                              order.begin() + static_cast<std::ptrdiff_t>(end));
    if (on_batch) on_batch(batch_rows);
    const Tensor<std::int32_t> batch = data.batch(batch_rows);
    std::vector<std::vector<int>> golds(heads);
    std::vector<Tensor<float>> targets;
    for (std::size_t h = 0; h < heads; ++h) {
      golds[h] = data.head_labels(h, batch_rows);
      targets.push_back(one_hot<float>(golds[h], classes));
    }
    const float loss = net.train_step(batch, targets, adam, rng, &probs);
    if (!std::isfinite(loss))
      throw NumericError("non-finite training loss at step " + std::to_string(stats.steps + 1));
    loss_sum += static_cast<double>(loss) * static_cast<double>(batch_rows.size());
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t r = 0; r < batch_rows.size(); ++r) {
        std::vector<double> p(classes);
        for (std::size_t c = 0; c < classes; ++c) p[c] = probs[h].at(r, c);
        if (argmax_tie_high(p.data(), classes) == golds[h][r]) ++correct;
      }
    }
    ++stats.steps;
  }
  if (!order.empty()) {
    stats.loss = loss_sum / static_cast<double>(order.size());
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(order.size() * heads);
  }
  return stats;
}

EvalResult evaluate(Network<float>& net, const EncodedDataset& data,
                    const std::vector<std::size_t>& rows, std::size_t batch_size) {
  const std::size_t heads = net.config().num_heads;
  const std::size_t classes = net.config().classes_per_head;
  if (data.heads() != heads) throw ConfigError("dataset and model disagree on head count");
  EvalResult out;
  out.predictions.assign(heads, {});
  Rng unused(0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    const std::vector<std::size_t> batch_rows(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                              rows.begin() + static_cast<std::ptrdiff_t>(end));
    const auto probs = net.forward(data.batch(batch_rows), false, unused);
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t r = 0; r < batch_rows.size(); ++r) {
        const int gold = data.labels[h][batch_rows[r]];
        std::vector<double> p(classes);
        for (std::size_t c = 0; c < classes; ++c) p[c] = probs[h].at(r, c);
        const int pred = argmax_tie_high(p.data(), classes);
        out.predictions[h].push_back(pred);
        if (pred == gold) ++correct;
        loss_sum += nll(p[gold]) / static_cast<double>(heads);
      }
    }
  }
  if (!rows.empty()) {
    out.loss = loss_sum / static_cast<double>(rows.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size() * heads);
  }
  return out;
}

CvResult run_cv(const EncodedDataset& data, const ModelConfig& model_config,
                const TrainConfig& config, std::shared_ptr<const EmbeddingTable> table,
                const CvOptions& options) {
  config.validate();
  model_config.validate();
  if (data.heads() != model_config.num_heads)
    throw ConfigError("dataset has " + std::to_string(data.heads()) +
                      " label heads but the model has " + std::to_string(model_config.num_heads));
  if (data.seq_len != model_config.seq_len)
    throw ConfigError("dataset sequence length " + std::to_string(data.seq_len) +
                      " differs from model seq_len " + std::to_string(model_config.seq_len));
  const std::size_t n = data.size();
  if (n < config.folds)
    throw ConfigError("need at least " + std::to_string(config.folds) + " examples for " +
                      std::to_string(config.folds) + "-fold cross-validation, got " +
                      std::to_string(n));
  for (const auto& head : data.labels) {
    for (int y : head) {
      if (y < 0 || static_cast<std::size_t>(y) >= model_config.classes_per_head)
        throw DataError("label " + std::to_string(y) + " outside the model's class range");
    }
  }

  const FoldAssignment folds = kfold_indices(n, config.folds, config.seed);
  std::vector<std::optional<Network<float>>> models(config.folds);
  std::vector<FoldReport> reports(config.folds);
  std::mutex log_mutex;

  auto run_fold = [&](std::size_t f) {
    const std::vector<std::size_t> train_rows = folds.complement(f);
    const std::vector<std::size_t> val_rows = folds.fold_members(f);
    std::vector<char> held_out(n, 0);
    for (std::size_t r : val_rows) held_out[r] = 1;

    ModelConfig fold_config = model_config;
    fold_config.seed = mix_seed(model_config.seed, f);
    Network<float> net(fold_config, table);
    Rng rng(mix_seed(config.seed, 1000 + f));

    auto guard = [&](const std::vector<std::size_t>& batch_rows) {
      for (std::size_t r : batch_rows) {
        if (held_out[r])
          throw std::logic_error("fold " + std::to_string(f) +
                                 " tried to train on its own validation example");
      }
      if (options.on_batch) options.on_batch(f, batch_rows);
    };

    FoldReport report;
    report.fold = f;
    report.train_size = train_rows.size();
    report.val_size = val_rows.size();
    EvalResult last;
    for (std::size_t e = 0; e < config.epochs; ++e) {
      const EpochStats train =
          train_epoch(net, data, train_rows, config.batch_size, config.adam, rng, guard);
      last = evaluate(net, data, val_rows, 256);
      report.epochs.push_back({e + 1, train.loss, train.accuracy, last.loss, last.accuracy});
      if (options.log) {
        std::lock_guard lock(log_mutex);
        *options.log << "fold " << f + 1 << "/" << config.folds << " epoch " << e + 1 << "/"
                     << config.epochs << std::fixed << std::setprecision(4)
                     << "  loss " << train.loss << "  acc " << train.accuracy << "  val_loss "
                     << last.loss << "  val_acc " << last.accuracy << "\n";
        options.log->unsetf(std::ios::floatfield);
      }
    }
    for (std::size_t h = 0; h < data.heads(); ++h) {
      report.heads.push_back(classification_report(data.head_labels(h, val_rows),
                                                   last.predictions[h],
                                                   model_config.classes_per_head));
    }
    reports[f] = std::move(report);
    models[f].emplace(std::move(net));
  };

  const std::size_t workers = std::min(config.threads, config.folds);
  if (workers <= 1) {
    for (std::size_t f = 0; f < config.folds; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(config.folds);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < config.folds; f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  CvResult result;
  RunReport& report = result.report;
  report.label_ids = task_labels(config.task);
  if (report.label_ids.size() != data.heads()) {
    // Single-label runs of a two-label task: the caller fills label_ids.
    report.label_ids.resize(data.heads(), report.label_ids.front());
  }
  report.folds = std::move(reports);
  report.vocab_size = table ? table->rows : 0;
  report.embedding_coverage = table ? table->coverage : 0.0;
  report.config["model"] = to_json(model_config);
  report.config["train"] = to_json(config);
  for (std::size_t h = 0; h < data.heads(); ++h) {
    std::vector<double> p, r, f1, alt, acc;
    for (const FoldReport& fold : report.folds) {
      p.push_back(fold.heads[h].map);
      r.push_back(fold.heads[h].mar);
      f1.push_back(fold.heads[h].macro_f1);
      alt.push_back(fold.heads[h].mean_class_f1);
      acc.push_back(fold.heads[h].accuracy);
    }
    report.averaged.push_back(
        {report.label_ids[h], mean_of(p), mean_of(r), mean_of(f1), mean_of(alt), mean_of(acc)});
  }
  for (auto& m : models) result.models.push_back(std::move(*m));
  return result;
}

EnsembleOutput ensemble_predict(std::vector<Network<float>>& models,
                                const Tensor<std::int32_t>& sequences, std::size_t batch_size) {
  if (models.empty()) throw ConfigError("ensemble needs at least one model");
  const ModelConfig& ref = models.front().config();
  for (const auto& m : models) {
    if (!m.config().same_architecture(ref))
      throw ConfigError("ensemble members were trained under different configurations");
  }
  if (sequences.rank() != 2) throw ShapeError("sequences must be N x seq_len");
  const std::size_t n = sequences.dim(0);
  const std::size_t len = sequences.dim(1);
  const std::size_t heads = ref.num_heads;
  const std::size_t classes = ref.classes_per_head;
  if (batch_size == 0) batch_size = 256;

  EnsembleOutput out;
  out.probs.assign(heads, std::vector<double>(n * classes, 0.0));
  out.labels.assign(heads, std::vector<int>(n, 0));
  Rng unused(0);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    Tensor<std::int32_t> chunk({end - start, len});
    std::copy(sequences.data() + start * len, sequences.data() + end * len, chunk.data());
    for (auto& model : models) {
      const auto probs = model.forward(chunk, false, unused);
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t r = 0; r < end - start; ++r) {
          for (std::size_t c = 0; c < classes; ++c)
            out.probs[h][(start + r) * classes + c] += static_cast<double>(probs[h].at(r, c));
        }
      }
    }
  }
  const double m = static_cast<double>(models.size());
  for (std::size_t h = 0; h < heads; ++h) {
    for (double& p : out.probs[h]) p /= m;
    for (std::size_t r = 0; r < n; ++r)
      out.labels[h][r] = argmax_tie_high(out.probs[h].data() + r * classes, classes);
  }
  return out;
}

std::size_t best_fold(const RunReport& report) {
  if (report.folds.empty()) throw ConfigError("run report has no folds");
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    double s = 0.0;
    for (const auto& h : report.folds[f].heads) s += h.macro_f1;
    if (!report.folds[f].heads.empty()) s /= static_cast<double>(report.folds[f].heads.size());
    if (s > best_score) {
      best_score = s;
      best = f;
    }
  }
  return best;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

void write_row(std::ostream& out, const std::string& fold, const EpochRecord& e) {
  out << fold << ',' << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ','
      << e.val_loss << ',' << e.val_accuracy << '\n';
}

const char* kCurveHeader = "fold,epoch,train_loss,train_acc,val_loss,val_acc\n";

std::vector<EpochRecord> mean_series(const RunReport& report) {
  std::size_t epochs = 0;
  for (const auto& f : report.folds) epochs = std::max(epochs, f.epochs.size());
  std::vector<EpochRecord> mean(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::size_t count = 0;
    mean[e].epoch = e + 1;
    for (const auto& f : report.folds) {
      if (e >= f.epochs.size()) continue;
      mean[e].train_loss += f.epochs[e].train_loss;
      mean[e].train_accuracy += f.epochs[e].train_accuracy;
      mean[e].val_loss += f.epochs[e].val_loss;
      mean[e].val_accuracy += f.epochs[e].val_accuracy;
      ++count;
    }
    if (count) {
      const double c = static_cast<double>(count);
      mean[e].train_loss /= c;
      mean[e].train_accuracy /= c;
      mean[e].val_loss /= c;
      mean[e].val_accuracy /= c;
    }
  }
  return mean;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

// Two side-by-side panels (accuracy, loss), each with a train and val line.
std::string render_svg(const std::string& title, const std::vector<EpochRecord>& series) {
  const double panel_w = 360, panel_h = 240, margin = 40, gap = 40;
  const double width = 2 * panel_w + gap + 2 * margin;
  const double height = panel_h + 2 * margin + 20;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << fmt(margin) << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";

  auto panel = [&](double x0, const char* name, auto train_value, auto val_value) {
    double lo = 0.0, hi = 1.0;
    for (const auto& e : series) {
      hi = std::max({hi, train_value(e), val_value(e)});
      lo = std::min({lo, train_value(e), val_value(e)});
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const double y0 = margin + 10;
    const std::size_t n = series.size();
    auto px = [&](std::size_t i) {
      return x0 + (n > 1 ? panel_w * static_cast<double>(i) / static_cast<double>(n - 1)
                         : panel_w / 2);
    };
    auto py = [&](double v) { return y0 + panel_h * (1.0 - (v - lo) / (hi - lo)); };
    svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(panel_w)
        << "\" height=\"" << fmt(panel_h) << "\" fill=\"none\" stroke=\"#888\"/>\n"
        << "<text x=\"" << fmt(x0) << "\" y=\"" << fmt(y0 - 4) << "\">" << name << "</text>\n"
        << "<text x=\"" << fmt(x0 - 4) << "\" y=\"" << fmt(y0 + 4)
        << "\" text-anchor=\"end\">" << fmt(hi) << "</text>\n"
        << "<text x=\"" << fmt(x0 - 4) << "\" y=\"" << fmt(y0 + panel_h)
        << "\" text-anchor=\"end\">" << fmt(lo) << "</text>\n"
        << "<text x=\"" << fmt(x0 + panel_w / 2) << "\" y=\"" << fmt(y0 + panel_h + 16)
        << "\" text-anchor=\"middle\">epoch</text>\n";
    auto line = [&](auto value, const char* color, const char* label, double ly) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < n; ++i) {
        svg << (i ? " " : "") << fmt(px(i)) << "," << fmt(py(value(series[i])));
      }
      svg << "\"/>\n<text x=\"" << fmt(x0 + panel_w - 60) << "\" y=\"" << fmt(ly)
          << "\" fill=\"" << color << "\">" << label << "</text>\n";
    };
    line(train_value, "#1f77b4", "train", y0 + 16);
    line(val_value, "#d62728", "val", y0 + 32);
  };
  panel(margin, "accuracy", [](const EpochRecord& e) { return e.train_accuracy; },
        [](const EpochRecord& e) { return e.val_accuracy; });
  panel(margin + panel_w + gap, "loss", [](const EpochRecord& e) { return e.train_loss; },
        [](const EpochRecord& e) { return e.val_loss; });
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

void emit_curves(const RunReport& report, const std::string& out_path) {
  std::ofstream out = open_output(out_path);
  out << kCurveHeader;
  for (const auto& f : report.folds) {
    for (const auto& e : f.epochs) write_row(out, std::to_string(f.fold + 1), e);
  }
  if (!out) throw IoError("failed writing " + out_path);
}

void emit_mean_curves(const RunReport& report, const std::string& out_path) {
  std::ofstream out = open_output(out_path);
  out << kCurveHeader;
  for (const auto& e : mean_series(report)) write_row(out, "mean", e);
  if (!out) throw IoError("failed writing " + out_path);
}

void emit_curve_svgs(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (const auto& f : report.folds) {
    const std::string path = (fs::path(dir) / ("curves_fold" + std::to_string(f.fold + 1) + ".svg")).string();
    std::ofstream out = open_output(path);
    out << render_svg("fold " + std::to_string(f.fold + 1), f.epochs);
  }
  std::ofstream out = open_output((fs::path(dir) / "curves_mean.svg").string());
  out << render_svg("mean over folds", mean_series(report));
}

std::vector<CurveRow> read_curves(const std::string& path) {
  const CsvTable table = CsvTable::read_file(path);
  const std::size_t cf = table.require_column("fold");
  const std::size_t ce = table.require_column("epoch");
  const std::size_t ctl = table.require_column("train_loss");
  const std::size_t cta = table.require_column("train_acc");
  const std::size_t cvl = table.require_column("val_loss");
  const std::size_t cva = table.require_column("val_acc");
  std::vector<CurveRow> rows;
  for (const auto& rec : table.rows()) {
    try {
      CurveRow row;
      row.fold = std::stoul(rec.fields[cf]) - 1;
      row.record.epoch = std::stoul(rec.fields[ce]);
      row.record.train_loss = std::stod(rec.fields[ctl]);
      row.record.train_accuracy = std::stod(rec.fields[cta]);
      row.record.val_loss = std::stod(rec.fields[cvl]);
      row.record.val_accuracy = std::stod(rec.fields[cva]);
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw ParseError(path + ":" + std::to_string(rec.line) + ": malformed curve row");
    }
  }
  return rows;
}

}  // namespace abusenet
