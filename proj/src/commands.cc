#include "abusenet/commands.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "abusenet/corpus.h"
#include "abusenet/csv.h"
#include "abusenet/embeddings.h"
#include "abusenet/error.h"
#include "abusenet/metrics.h"
#include "abusenet/model.h"
#include "abusenet/run_config.h"
#include "abusenet/text.h"
#include "abusenet/training.h"

namespace abusenet {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kRunFormat = "abusenet-run";
constexpr int kRunVersion = 1;

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string label_column(int label) { return "label_" + std::to_string(label); }

// Header columns of a submission/gold file for the given label ids.
std::vector<std::string> label_columns(const std::vector<int>& labels) {
  if (labels.size() == 1) return {"label"};
  std::vector<std::string> cols;
  for (int l : labels) cols.push_back(label_column(l));
  return cols;
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// Stopword lists fall back to the bundled file for the language.
PreprocessSettings with_default_stopwords(PreprocessSettings s, Language lang) {
  if (!s.text.stopword_files.count(lang)) {
    s.text.stopword_files[lang] =
        (fs::path(bundled_data_dir()) / "stopwords" / (std::string(to_string(lang)) + ".txt"))
            .string();
  }
  return s;
}

std::vector<std::vector<std::string>> tokenize_all(const std::vector<LabeledExample>& examples,
                                                   Language lang, const PreprocessConfig& pc,
                                                   const Stopwords& stopwords) {
  std::vector<std::vector<std::string>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(preprocess(ex.text, lang, pc, stopwords));
  return out;
}

std::size_t resolve_threads(const TrainOptions& opts, std::size_t configured) {
  if (opts.threads) {
    if (*opts.threads == 0) throw ConfigError("--threads must be positive");
    return *opts.threads;
  }
  if (const char* env = std::getenv("ABUSE_DETECT_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0)
      throw ConfigError(std::string("ABUSE_DETECT_THREADS must be a positive integer, got '") +
                        env + "'");
    return v;
  }
  return configured;
}

void print_summary(std::ostream& out, const RunReport& report) {
  for (std::size_t h = 0; h < report.label_ids.size(); ++h) {
    out << "label " << report.label_ids[h] << "\n";
    out << "  fold  precision  recall  f1      accuracy\n";
    for (const auto& f : report.folds) {
      const auto& r = f.heads[h];
      out << "  " << std::left << std::setw(6) << f.fold + 1 << std::setw(11) << fixed4(r.map)
          << std::setw(8) << fixed4(r.mar) << std::setw(8) << fixed4(r.macro_f1)
          << fixed4(r.accuracy) << "\n";
    }
    const auto& a = report.averaged[h];
    out << "  " << std::left << std::setw(6) << "mean" << std::setw(11) << fixed4(a.precision)
        << std::setw(8) << fixed4(a.recall) << std::setw(8) << fixed4(a.f1)
        << fixed4(a.accuracy) << "\n";
    if (h < report.holdout.size()) {
      const auto& r = report.holdout[h];
      out << "  " << std::left << std::setw(6) << "test" << std::setw(11) << fixed4(r.map)
          << std::setw(8) << fixed4(r.mar) << std::setw(8) << fixed4(r.macro_f1)
          << fixed4(r.accuracy) << "\n";
    }
    out << std::right;
  }
}

struct PredictionTable {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<int>> columns;  // column name -> labels
};

PredictionTable read_label_csv(const std::string& path) {
  const CsvTable table = CsvTable::read_file(path);
  const std::size_t id_col = table.require_column("id");
  PredictionTable out;
  std::vector<std::pair<std::string, std::size_t>> cols;
  for (std::size_t c = 0; c < table.header().size(); ++c) {
    const std::string& name = table.header()[c];
    if (name == "label") {
      cols.emplace_back(label_column(1), c);
    } else if (name.rfind("label_", 0) == 0) {
      cols.emplace_back(name, c);
    }
  }
  if (cols.empty()) throw SchemaError(path + ": no label column (expected 'label' or 'label_N')");
  for (std::size_t i = 1; i < cols.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (cols[i].first == cols[k].first)
        throw SchemaError(path + ": columns 'label' and 'label_1' both present");
  std::unordered_set<std::string> seen;
  for (const auto& rec : table.rows()) {
    const std::string& id = rec.fields[id_col];
    if (!seen.insert(id).second)
      throw DataError(path + ":" + std::to_string(rec.line) + ": duplicate id '" + id + "'");
    out.ids.push_back(id);
    for (const auto& [name, c] : cols) {
      const std::string& v = rec.fields[c];
      if (v != "0" && v != "1")
        throw ParseError(path + ":" + std::to_string(rec.line) + ": label '" + v +
                         "' is not 0 or 1 (id " + id + ")");
      out.columns[name].push_back(v == "1" ? 1 : 0);
    }
  }
  return out;
}

struct RunMember {
  std::vector<int> labels;
  fs::path dir;
  std::size_t folds = 0;
  std::size_t best_fold = 0;
};

}  // namespace

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

// ---------------------------------------------------------------------------
// prepare

int cmd_prepare(const PrepareOptions& opts, std::ostream& out, std::ostream& err) {
  return run_guarded([&] {
    if (opts.task < 1 || opts.task > 3) throw ConfigError("--task must be 1, 2 or 3");
    if (!(opts.ratio > 0.0 && opts.ratio < 1.0)) throw ConfigError("--ratio must lie in (0, 1)");
    if (opts.out.empty()) throw ConfigError("--out is required");
    const Language lang = parse_language(opts.language);
    if (!opts.external.empty() && opts.task != 2)
      throw ConfigError("--external data is only used by task 2");
    if (opts.task == 2 && opts.external.empty())
      err << "warning: task 2 without --external data is identical to task 1\n";

    const std::vector<int> labels = task_labels(opts.task);
    const auto all_rows = parse_uli_csv(opts.input);
    std::vector<RawAnnotationRow> rows;
    std::size_t other_language = 0;
    for (const auto& r : all_rows) {
      if (r.language == lang) {
        rows.push_back(r);
      } else {
        ++other_language;
      }
    }
    AssembleStats stats;
    std::vector<LabeledExample> examples =
        assemble_examples(rows, std::set<int>(labels.begin(), labels.end()), &stats);

    ordered_json external_stats = ordered_json::array();
    for (const std::string& entry : opts.external) {
      const auto colon = entry.find(':');
      if (colon == std::string::npos)
        throw ConfigError("--external expects SOURCE:PATH, got '" + entry + "'");
      const Source source = parse_source(entry.substr(0, colon));
      const std::string path = entry.substr(colon + 1);
      const auto extra = load_external(path, source, lang);
      examples = merge_external(examples, extra);
      external_stats.push_back(
          {{"source", std::string(to_string(source))}, {"path", path}, {"examples", extra.size()}});
    }
    if (examples.size() < 2) throw DataError("need at least 2 labeled examples to split");

    const DatasetSplit split = split_train_test(
        examples, opts.ratio, opts.seed, opts.stratified ? std::optional<int>(1) : std::nullopt);

    const fs::path dir(opts.out);
    make_dir(dir);
    write_dataset_jsonl((dir / "dataset.jsonl").string(), examples);
    write_dataset_jsonl((dir / "train.jsonl").string(), split.train);
    write_dataset_jsonl((dir / "test.jsonl").string(), split.test);

    ordered_json sj;
    sj["seed"] = opts.seed;
    sj["ratio"] = opts.ratio;
    sj["stratified"] = opts.stratified;
    sj["train_indices"] = split.train_indices;
    sj["test_indices"] = split.test_indices;
    write_json(dir / "split.json", sj);

    {
      std::ofstream in_csv(dir / "test_input.csv", std::ios::binary);
      std::ofstream gold_csv(dir / "test_gold.csv", std::ios::binary);
      if (!in_csv || !gold_csv) throw IoError("cannot write test files in " + dir.string());
      write_csv_row(in_csv, {"id", "text"});
      std::vector<std::string> header = {"id"};
      for (const auto& c : label_columns(labels)) header.push_back(c);
      write_csv_row(gold_csv, header);
      for (const auto& ex : split.test) {
        write_csv_row(in_csv, {ex.id, ex.text});
        std::vector<std::string> row = {ex.id};
        for (int l : labels) row.push_back(std::to_string(ex.labels.at(l)));
        write_csv_row(gold_csv, row);
      }
    }

    ordered_json st;
    st["task"] = opts.task;
    st["language"] = std::string(to_string(lang));
    st["labels"] = labels;
    st["input"] = opts.input;
    st["rows"] = all_rows.size();
    st["rows_other_language"] = other_language;
    st["annotated_groups"] = stats.groups;
    st["dropped_unlabeled"] = stats.dropped_unlabeled;
    st["external"] = external_stats;
    st["examples"] = examples.size();
    st["train_size"] = split.train.size();
    st["test_size"] = split.test.size();
    ordered_json counts;
    for (int l : labels) {
      std::size_t pos = 0;
      for (const auto& ex : examples) pos += ex.labels.at(l) == 1;
      counts[std::to_string(l)] = {{"0", examples.size() - pos}, {"1", pos}};
    }
    st["label_counts"] = counts;
    write_json(dir / "stats.json", st);

    out << "task " << opts.task << ", language " << to_string(lang) << "\n"
        << "rows read: " << all_rows.size() << " (" << other_language
        << " in other languages skipped)\n"
        << "annotated ids: " << stats.groups << ", dropped without majority label: "
        << stats.dropped_unlabeled << "\n";
    for (const auto& e : external_stats)
      out << "external " << e["source"].get<std::string>() << ": " << e["examples"] << " examples\n";
    out << "examples: " << examples.size() << " (train " << split.train.size() << ", test "
        << split.test.size() << ")\n";
    for (int l : labels) {
      const auto& c = counts[std::to_string(l)];
      out << "label " << l << ": " << c["1"] << " positive, " << c["0"] << " negative\n";
    }
    out << "written to " << dir.string() << "\n";
  }, err);
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return run_guarded([&] {
    RunConfigFile cfg = load_run_config(opts.config);
    const std::string out_dir = !opts.out_dir.empty() ? opts.out_dir : cfg.output_dir;
    if (out_dir.empty()) throw ConfigError("no output directory: pass --out-dir or set output_dir");

    if (!opts.prepared.empty()) cfg.data.prepared = opts.prepared;
    const fs::path prepared(cfg.data.prepared);
    const json stats = read_json(prepared / "stats.json");
    const int task = stats.at("task").get<int>();
    const Language lang = parse_language(stats.at("language").get<std::string>());
    TrainConfig tc = resolve_train_config(cfg, task, lang);
    if (opts.seed) {
      tc.seed = *opts.seed;
      cfg.model.seed = *opts.seed;
    }
    tc.threads = resolve_threads(opts, tc.threads);

    const std::vector<LabeledExample> train = read_dataset_jsonl((prepared / "train.jsonl").string());
    const std::vector<LabeledExample> test = read_dataset_jsonl((prepared / "test.jsonl").string());

    const PreprocessSettings settings = with_default_stopwords(cfg.preprocess, lang);
    const Stopwords stopwords = Stopwords::from_config(settings.text);
    const auto train_tokens = tokenize_all(train, lang, settings.text, stopwords);
    const auto test_tokens = tokenize_all(test, lang, settings.text, stopwords);
    const Vocabulary vocab = build_vocab(train_tokens, settings.min_frequency);

    const WordVectorFile vectors = load_vectors(cfg.data.embeddings, cfg.data.embeddings_cache);
    BuildMatrixOptions bm;
    bm.expected_dim = cfg.model.embed_dim;
    bm.random_missing = settings.random_missing;
    bm.seed = tc.seed;
    auto table = std::make_shared<const EmbeddingTable>(build_matrix(vocab, vectors, bm));
    err << "vocabulary " << vocab.size() << " tokens, embedding coverage "
        << fixed4(table->coverage) << "\n";

    std::vector<std::vector<int>> member_labels;
    if (task == 3 && !tc.multitask) {
      member_labels = {{1}, {3}};
    } else {
      member_labels = {task_labels(task)};
    }

    const fs::path run_dir(out_dir);
    make_dir(run_dir);
    ordered_json members = ordered_json::array();
    ordered_json reports = ordered_json::array();
    for (const auto& labels : member_labels) {
      ModelConfig mc = cfg.model;
      if (cfg.model_heads_given && mc.num_heads != labels.size())
        throw ConfigError("model.num_heads " + std::to_string(mc.num_heads) + " but task " +
                          std::to_string(task) + " trains " + std::to_string(labels.size()) +
                          " head(s) per model");
      mc.num_heads = labels.size();
      const EncodedDataset data = encode_examples(train_tokens, train, labels, vocab, mc.seq_len);

      CvOptions cv;
      if (!opts.quiet) cv.log = &err;
      CvResult result = run_cv(data, mc, tc, table, cv);
      RunReport& report = result.report;
      report.label_ids = labels;
      for (std::size_t h = 0; h < labels.size(); ++h) report.averaged[h].label = labels[h];
      report.config["preprocess"] = to_json(settings);
      report.config["data"] = {{"prepared", cfg.data.prepared},
                               {"embeddings", cfg.data.embeddings},
                               {"train_examples", train.size()},
                               {"test_examples", test.size()}};
      const std::size_t best = best_fold(report);

      if (!test.empty()) {
        const EncodedDataset held = encode_examples(test_tokens, test, labels, vocab, mc.seq_len);
        std::vector<std::size_t> all(held.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        EnsembleOutput pred;
        if (tc.ensemble == EnsembleMode::kAverage) {
          pred = ensemble_predict(result.models, held.batch(all));
        } else {
          std::vector<Network<float>> one{result.models[best]};
          pred = ensemble_predict(one, held.batch(all));
        }
        for (std::size_t h = 0; h < labels.size(); ++h)
          report.holdout.push_back(
              classification_report(held.labels[h], pred.labels[h], mc.classes_per_head));
      }

      const fs::path member_dir =
          member_labels.size() == 1 ? run_dir : run_dir / label_column(labels.front());
      make_dir(member_dir);
      for (std::size_t f = 0; f < result.models.size(); ++f)
        save_checkpoint(result.models[f], (member_dir / ("fold_" + std::to_string(f + 1))).string());
      write_json(member_dir / "run_report.json", to_json(report));
      emit_curves(report, (member_dir / "curves.csv").string());
      emit_mean_curves(report, (member_dir / "curves_mean.csv").string());
      emit_curve_svgs(report, member_dir.string());

      members.push_back({{"labels", labels},
                         {"dir", fs::relative(member_dir, run_dir).generic_string()},
                         {"folds", result.models.size()},
                         {"best_fold", best + 1}});
      reports.push_back(to_json(report));
      print_summary(out, report);
    }
    if (member_labels.size() > 1) {
      ordered_json combined;
      combined["members"] = reports;
      write_json(run_dir / "run_report.json", combined);
    }

    vocab.save((run_dir / "vocab.txt").string());
    {
      const auto& words = stopwords.list(lang);
      std::vector<std::string> sorted(words.begin(), words.end());
      std::sort(sorted.begin(), sorted.end());
      std::string content;
      for (const auto& w : sorted) content += w + "\n";
      write_text(run_dir / "stopwords.txt", content);
    }
    ordered_json pre = to_json(settings);
    pre["stopwords"] = {{std::string(to_string(lang)), "stopwords.txt"}};
    if (!settings.emoji_ranges_file.empty()) {
      fs::copy_file(settings.emoji_ranges_file, run_dir / "emoji_ranges.txt",
                    fs::copy_options::overwrite_existing);
      pre["emoji_ranges"] = "emoji_ranges.txt";
    }
    ordered_json manifest;
    manifest["format"] = kRunFormat;
    manifest["version"] = kRunVersion;
    manifest["task"] = task;
    manifest["language"] = std::string(to_string(lang));
    manifest["labels"] = task_labels(task);
    manifest["seq_len"] = cfg.model.seq_len;
    manifest["ensemble"] = tc.ensemble == EnsembleMode::kAverage ? "average" : "best_fold";
    manifest["preprocess"] = pre;
    manifest["members"] = members;
    write_json(run_dir / "run_manifest.json", manifest);
    out << "run written to " << run_dir.string() << "\n";
  }, err);
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err) {
  return run_guarded([&] {
    const fs::path run_dir(opts.run_dir);
    const json manifest = read_json(run_dir / "run_manifest.json");
    try {
      if (manifest.at("format").get<std::string>() != kRunFormat ||
          manifest.at("version").get<int>() != kRunVersion)
        throw CorruptionError(opts.run_dir + ": not a run directory of this tool");
      const Language lang = parse_language(manifest.at("language").get<std::string>());
      const std::vector<int> labels = manifest.at("labels").get<std::vector<int>>();
      const bool best_only = manifest.at("ensemble").get<std::string>() == "best_fold";
      const PreprocessSettings settings =
          preprocess_settings_from_json(manifest.at("preprocess"), run_dir.string());
      const Stopwords stopwords = Stopwords::from_config(settings.text);
      const Vocabulary vocab = Vocabulary::load((run_dir / "vocab.txt").string());

      const CsvTable input = CsvTable::read_file(opts.input);
      const std::size_t id_col = input.require_column("id");
      const std::size_t text_col = input.require_column("text");
      std::vector<std::string> ids;
      std::vector<std::int32_t> indices;
      std::size_t seq_len = manifest.at("seq_len").get<std::size_t>();
      for (const auto& rec : input.rows()) {
        ids.push_back(rec.fields[id_col]);
        const auto tokens = preprocess(rec.fields[text_col], lang, settings.text, stopwords);
        const auto seq = encode(tokens, vocab, seq_len);
        indices.insert(indices.end(), seq.indices.begin(), seq.indices.end());
      }
      const Tensor<std::int32_t> sequences({ids.size(), seq_len}, indices);

      std::map<int, std::vector<int>> predicted;
      for (const auto& m : manifest.at("members")) {
        const fs::path dir = run_dir / m.at("dir").get<std::string>();
        const std::size_t folds = m.at("folds").get<std::size_t>();
        const std::size_t best = m.at("best_fold").get<std::size_t>();
        std::vector<Network<float>> models;
        for (std::size_t f = 1; f <= folds; ++f) {
          if (best_only && f != best) continue;
          const fs::path ck = dir / ("fold_" + std::to_string(f));
          if (!fs::exists(ck / "manifest.json"))
            throw IoError("missing checkpoint " + ck.string());
          models.push_back(load_checkpoint(ck.string()));
        }
        if (models.empty()) throw IoError("no checkpoints found under " + dir.string());
        if (models.front().config().seq_len != seq_len)
          throw ConfigError("checkpoint seq_len differs from the run manifest");
        const EnsembleOutput pred = ensemble_predict(models, sequences);
        const auto member_labels = m.at("labels").get<std::vector<int>>();
        for (std::size_t h = 0; h < member_labels.size(); ++h)
          predicted[member_labels[h]] = pred.labels[h];
      }

      std::ostringstream csv;
      std::vector<std::string> header = {"id"};
      for (const auto& c : label_columns(labels)) header.push_back(c);
      write_csv_row(csv, header);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::string> row = {ids[i]};
        for (int l : labels) row.push_back(std::to_string(predicted.at(l)[i]));
        write_csv_row(csv, row);
      }
      if (opts.out.empty() || opts.out == "-") {
        out << csv.str();
      } else {
        write_text(opts.out, csv.str());
        err << "wrote " << ids.size() << " predictions to " << opts.out << "\n";
      }
    } catch (const json::exception& e) {
      throw CorruptionError(opts.run_dir + "/run_manifest.json: " + e.what());
    }
  }, err);
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
  return run_guarded([&] {
    const PredictionTable gold = read_label_csv(opts.gold);
    const PredictionTable pred = read_label_csv(opts.pred);

    std::unordered_map<std::string, std::size_t> pred_pos;
    for (std::size_t i = 0; i < pred.ids.size(); ++i) pred_pos[pred.ids[i]] = i;
    std::unordered_set<std::string> gold_ids(gold.ids.begin(), gold.ids.end());
    std::vector<std::string> offenders;
    for (const auto& id : gold.ids)
      if (!pred_pos.count(id)) offenders.push_back(id + " (missing from predictions)");
    for (const auto& id : pred.ids)
      if (!gold_ids.count(id)) offenders.push_back(id + " (not in gold)");
    if (!offenders.empty()) {
      std::string msg = "id sets differ in " + std::to_string(offenders.size()) + " place(s):";
      for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) msg += "\n  " + offenders[i];
      throw DataError(msg);
    }

    std::vector<std::string> shared;
    for (const auto& [name, _] : gold.columns)
      if (pred.columns.count(name)) shared.push_back(name);
    if (shared.empty()) throw SchemaError("gold and prediction files share no label column");

    ordered_json result;
    for (const auto& name : shared) {
      std::vector<int> preds;
      preds.reserve(gold.ids.size());
      for (const auto& id : gold.ids) preds.push_back(pred.columns.at(name)[pred_pos.at(id)]);
      const ordered_json report = to_json(classification_report(gold.columns.at(name), preds, 2));
      if (shared.size() == 1) {
        result = report;
      } else {
        result[name] = report;
      }
    }
    out << result.dump(2) << "\n";
  }, err);
}

// ---------------------------------------------------------------------------
// inspect-embeddings

int cmd_inspect_embeddings(const InspectOptions& opts, std::ostream& out, std::ostream& err) {
  return run_guarded([&] {
    const WordVectorFile vectors = parse_vector_file(opts.file);
    out << "dimension: " << vectors.dimension() << "\n"
        << "entries: " << vectors.size() << "\n"
        << "header: " << (vectors.had_header() ? "yes" : "no") << "\n";
    if (vectors.duplicate_count())
      out << "duplicates: " << vectors.duplicate_count() << "\n";
    if (!opts.vocab.empty()) {
      std::ifstream in(opts.vocab, std::ios::binary);
      if (!in) throw IoError("cannot open " + opts.vocab);
      std::size_t total = 0, found = 0;
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == kPadToken || line == kOovToken) continue;
        ++total;
        if (!vectors.find(line).empty()) ++found;
      }
      const double coverage = total ? static_cast<double>(found) / static_cast<double>(total) : 0.0;
      out << "coverage: " << fixed4(coverage) << " (" << found << "/" << total << ")\n";
    }
  }, err);
}

}  // namespace abusenet
