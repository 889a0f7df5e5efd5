#include "abusenet/model.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "abusenet/error.h"

namespace abusenet {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(seq_len, "seq_len");
  positive(embed_dim, "embed_dim");
  positive(conv_filters, "conv_filters");
  positive(conv_kernel, "conv_kernel");
  positive(lstm_units, "lstm_units");
  positive(dense_units, "dense_units");
  positive(classes_per_head, "classes_per_head");
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v < 1.0)) {
      throw ConfigError(std::string("model.") + name + " must lie in [0, 1)");
    }
  };
  rate(lstm_dropout, "lstm_dropout");
  rate(lstm_recurrent_dropout, "lstm_recurrent_dropout");
  rate(spatial_dropout_rate, "spatial_dropout_rate");
  rate(final_dropout_rate, "final_dropout_rate");
  if (num_heads != 1 && num_heads != 2) throw ConfigError("model.num_heads must be 1 or 2");
  if (seq_len < conv_kernel) throw ConfigError("model.seq_len must be >= conv_kernel");
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
  return seq_len == o.seq_len && embed_dim == o.embed_dim &&
         conv_filters == o.conv_filters && conv_kernel == o.conv_kernel &&
         lstm_units == o.lstm_units && dense_units == o.dense_units &&
         num_heads == o.num_heads && classes_per_head == o.classes_per_head &&
         conv_activation == o.conv_activation && dense_activation == o.dense_activation &&
         dense_order == o.dense_order;
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["seq_len"] = c.seq_len;
  j["embed_dim"] = c.embed_dim;
  j["conv_filters"] = c.conv_filters;
  j["conv_kernel"] = c.conv_kernel;
  j["lstm_units"] = c.lstm_units;
  j["lstm_dropout"] = c.lstm_dropout;
  j["lstm_recurrent_dropout"] = c.lstm_recurrent_dropout;
  j["dense_units"] = c.dense_units;
  j["spatial_dropout_rate"] = c.spatial_dropout_rate;
  j["final_dropout_rate"] = c.final_dropout_rate;
  j["num_heads"] = c.num_heads;
  j["classes_per_head"] = c.classes_per_head;
  j["conv_activation"] = to_string(c.conv_activation);
  j["dense_activation"] = to_string(c.dense_activation);
  j["dense_order"] =
      c.dense_order == DenseOrder::kDenseThenPool ? "dense_then_pool" : "pool_then_dense";
  j["seed"] = c.seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  static const std::set<std::string> known = {
      "seq_len", "embed_dim", "conv_filters", "conv_kernel", "lstm_units",
      "lstm_dropout", "lstm_recurrent_dropout", "dense_units",
      "spatial_dropout_rate", "final_dropout_rate", "num_heads",
      "classes_per_head", "conv_activation", "dense_activation", "dense_order",
      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown model config key '" + key + "'");
  }
  try {
    c.seq_len = j.value("seq_len", c.seq_len);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.conv_filters = j.value("conv_filters", c.conv_filters);
    c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
    c.lstm_units = j.value("lstm_units", c.lstm_units);
    c.lstm_dropout = j.value("lstm_dropout", c.lstm_dropout);
    c.lstm_recurrent_dropout = j.value("lstm_recurrent_dropout", c.lstm_recurrent_dropout);
    c.dense_units = j.value("dense_units", c.dense_units);
    c.spatial_dropout_rate = j.value("spatial_dropout_rate", c.spatial_dropout_rate);
    c.final_dropout_rate = j.value("final_dropout_rate", c.final_dropout_rate);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.classes_per_head = j.value("classes_per_head", c.classes_per_head);
    c.seed = j.value("seed", c.seed);
    if (j.contains("conv_activation")) {
      c.conv_activation = parse_activation(j["conv_activation"].get<std::string>());
    }
    if (j.contains("dense_activation")) {
      c.dense_activation = parse_activation(j["dense_activation"].get<std::string>());
    }
    if (j.contains("dense_order")) {
      const auto order = j["dense_order"].get<std::string>();
      if (order == "dense_then_pool") {
        c.dense_order = DenseOrder::kDenseThenPool;
      } else if (order == "pool_then_dense") {
        c.dense_order = DenseOrder::kPoolThenDense;
      } else {
        throw ConfigError("model.dense_order must be dense_then_pool or pool_then_dense");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config value: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, std::size_t classes) {
  Tensor<T> t({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range");
    }
    t.at(i, static_cast<std::size_t>(labels[i])) = T(1);
  }
  return t;
}

int argmax_tie_high(const double* probs, std::size_t classes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (probs[c] >= probs[best]) best = c;
  }
  return static_cast<int>(best);
}

// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(const ModelConfig& config, std::shared_ptr<const EmbeddingTable> table)
    : config_(config),
      table_(std::move(table)),
      conv_(config.embed_dim, config.conv_filters, config.conv_kernel, config.conv_activation),
      bilstm_(config.conv_filters, config.lstm_units),
      dense_("dense", 2 * config.lstm_units, config.dense_units, config.dense_activation) {
  config_.validate();
  if (!table_) throw ConfigError("network needs an embedding table");
  if (table_->dim != config_.embed_dim) {
    throw ConfigError("embedding table dimension " + std::to_string(table_->dim) +
                      " does not match model embed_dim " +
                      std::to_string(config_.embed_dim));
  }
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    heads_.emplace_back("head" + std::to_string(h), config_.dense_units,
                        config_.classes_per_head, Activation::kLinear);
  }
  initialize();
}

template <typename T>
void Network<T>::initialize() {
  Rng rng(config_.seed);
  conv_.init(rng);
  bilstm_.init(rng);
  dense_.init(rng);
  for (auto& head : heads_) head.init(rng);
  for (Parameter<T>* p : parameters()) {
    p->zero_grad();
    p->adam_m.fill(T(0));
    p->adam_v.fill(T(0));
    p->step_count = 0;
  }
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out = {
      &conv_.kernel,         &conv_.bias,           &bilstm_.fwd.params.W,
      &bilstm_.fwd.params.U, &bilstm_.fwd.params.b, &bilstm_.bwd.params.W,
      &bilstm_.bwd.params.U, &bilstm_.bwd.params.b, &dense_.weight,
      &dense_.bias};
  for (auto& head : heads_) {
    out.push_back(&head.weight);
    out.push_back(&head.bias);
  }
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::parameters() const {
  auto* self = const_cast<Network<T>*>(this);
  std::vector<const Parameter<T>*> out;
  for (Parameter<T>* p : self->parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::forward(const Tensor<std::int32_t>& batch, bool train,
                                           Rng& rng) {
  require_shape(batch.rank() == 2 && batch.dim(1) == config_.seq_len,
                "network input must be B x " + std::to_string(config_.seq_len) +
                    ", got " + shape_string(batch.shape()));
  shapes_.clear();
  shapes_.push_back(batch.shape());
  Tensor<T> x = embedding_forward<T>(batch, *table_);
  shapes_.push_back(x.shape());
  x = spatial_dropout_.forward(x, config_.spatial_dropout_rate, train, rng);
  x = conv_.forward(x);
  shapes_.push_back(x.shape());
  x = bilstm_.forward(x, config_.lstm_dropout, config_.lstm_recurrent_dropout, train, rng);
  shapes_.push_back(x.shape());
  if (config_.dense_order == DenseOrder::kDenseThenPool) {
    x = dense_.forward(x);
    shapes_.push_back(x.shape());
    x = pool_.forward(x);
  } else {
    x = pool_.forward(x);
    shapes_.push_back(x.shape());
    x = dense_.forward(x);
  }
  shapes_.push_back(x.shape());
  x = dropout_.forward(x, config_.final_dropout_rate, train, rng);
  shapes_.push_back(x.shape());

  logits_.clear();
  std::vector<Tensor<T>> probs;
  for (auto& head : heads_) {
    logits_.push_back(head.forward(x));
    probs.push_back(softmax(logits_.back()));
  }
  shapes_.push_back(logits_.front().shape());
  return probs;
}

template <typename T>
T Network<T>::compute_gradients(const Tensor<std::int32_t>& batch,
                                const std::vector<Tensor<T>>& targets, bool train,
                                Rng& rng, std::vector<Tensor<T>>* probs_out) {
  if (targets.size() != heads_.size()) {
    throw DataError("expected labels for " + std::to_string(heads_.size()) +
                    " head(s), got " + std::to_string(targets.size()));
  }
  auto probs = forward(batch, train, rng);
  const T inv_heads = T(1) / static_cast<T>(heads_.size());
  T total = 0;
  Tensor<T> grad;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    CrossEntropy<T> ce = softmax_cross_entropy(logits_[h], targets[h]);
    total += ce.loss;
    for (T& g : ce.grad.values()) g *= inv_heads;
    Tensor<T> g = heads_[h].backward(ce.grad);
    if (h == 0) {
      grad = std::move(g);
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
  }
  grad = dropout_.backward(grad);
  if (config_.dense_order == DenseOrder::kDenseThenPool) {
    grad = pool_.backward(grad);
    grad = dense_.backward(grad);
  } else {
    grad = dense_.backward(grad);
    grad = pool_.backward(grad);
  }
  grad = bilstm_.backward(grad);
  // The embedding table is frozen, so no gradient is propagated past conv.
  conv_.backward(grad, /*need_input_grad=*/false);
  if (probs_out) *probs_out = std::move(probs);
  return total * inv_heads;
}

template <typename T>
T Network<T>::train_step(const Tensor<std::int32_t>& batch,
                         const std::vector<Tensor<T>>& targets, const AdamConfig& adam,
                         Rng& rng, std::vector<Tensor<T>>* probs_out) {
  zero_grad();
  const T loss = compute_gradients(batch, targets, /*train=*/true, rng, probs_out);
  for (Parameter<T>* p : parameters()) adam_step(*p, adam);
  return loss;
}

template <typename T>
void Network<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->zero_grad();
}

template <typename T>
std::vector<std::vector<int>> Network<T>::predict(const Tensor<std::int32_t>& batch) {
  Rng unused(0);
  const auto probs = forward(batch, /*train=*/false, unused);
  std::vector<std::vector<int>> labels(probs.size());
  std::vector<double> row(config_.classes_per_head);
  for (std::size_t h = 0; h < probs.size(); ++h) {
    const std::size_t B = probs[h].dim(0), C = probs[h].dim(1);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) row[c] = static_cast<double>(probs[h].at(b, c));
      labels[h].push_back(argmax_tie_high(row.data(), C));
    }
  }
  return labels;
}

template class Network<float>;
template class Network<double>;
template Tensor<float> one_hot<float>(const std::vector<int>&, std::size_t);
template Tensor<double> one_hot<double>(const std::vector<int>&, std::size_t);

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kManifestFormat = "abusenet-checkpoint";
constexpr int kManifestVersion = 1;

std::vector<std::string> layer_order(const ModelConfig& c) {
  std::vector<std::string> layers = {"embedding", "spatial_dropout1d", "conv1d", "bilstm"};
  if (c.dense_order == DenseOrder::kDenseThenPool) {
    layers.insert(layers.end(), {"dense", "global_avg_pool1d"});
  } else {
    layers.insert(layers.end(), {"global_avg_pool1d", "dense"});
  }
  layers.push_back("dropout");
  for (std::size_t h = 0; h < c.num_heads; ++h) layers.push_back("head" + std::to_string(h));
  return layers;
}

void write_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      out.write(b, 4);
    }
  }
}

void read_floats(const std::vector<unsigned char>& bytes, std::size_t offset,
                 std::span<float> dst) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const unsigned char* p = bytes.data() + (offset + i) * 4;
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                               (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    dst[i] = std::bit_cast<float>(bits);
  }
}

}  // namespace

void save_checkpoint(const Network<float>& net, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir + ": " + ec.message());

  const EmbeddingTable& table = net.table();
  nlohmann::ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["config"] = to_json(net.config());
  manifest["layers"] = layer_order(net.config());
  manifest["embedding_coverage"] = table.coverage;
  manifest["embedding_found"] = table.found;

  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  params.push_back({{"name", "embedding.table"},
                    {"shape", {table.rows, table.dim}},
                    {"offset", offset},
                    {"count", table.matrix.size()},
                    {"trainable", false}});
  offset += table.matrix.size();
  for (const Parameter<float>* p : net.parameters()) {
    params.push_back({{"name", p->name},
                      {"shape", p->shape()},
                      {"offset", offset},
                      {"count", p->value.size()},
                      {"trainable", true}});
    offset += p->value.size();
  }
  manifest["parameters"] = params;
  manifest["total_values"] = offset;

  const std::string weights_path = (fs::path(dir) / "weights.bin").string();
  {
    std::ofstream out(weights_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + weights_path);
    write_floats(out, table.matrix);
    for (const Parameter<float>* p : net.parameters()) write_floats(out, p->value.values());
    if (!out) throw IoError("write failed for " + weights_path);
  }
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + manifest_path);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + manifest_path);
}

namespace {

Network<float> read_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  const std::string weights_path = (fs::path(dir) / "weights.bin").string();
  std::ifstream min(manifest_path, std::ios::binary);
  if (!min) throw IoError("checkpoint manifest missing: " + manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(min);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(manifest_path + ": " + e.what());
  }
  if (manifest.value("format", "") != kManifestFormat ||
      manifest.value("version", 0) != kManifestVersion) {
    throw CorruptionError(manifest_path + ": unsupported checkpoint format");
  }
  const ModelConfig config = model_config_from_json(manifest.at("config"));

  std::ifstream win(weights_path, std::ios::binary);
  if (!win) throw IoError("checkpoint weights missing: " + weights_path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(win)),
                                   std::istreambuf_iterator<char>());
  const std::size_t total = manifest.at("total_values").get<std::size_t>();
  if (bytes.size() != total * 4) {
    throw CorruptionError(weights_path + ": expected " + std::to_string(total * 4) +
                          " bytes, found " + std::to_string(bytes.size()));
  }

  const auto& entries = manifest.at("parameters");
  if (entries.empty() || entries[0].at("name") != "embedding.table") {
    throw CorruptionError(manifest_path + ": first entry must be embedding.table");
  }
  auto table = std::make_shared<EmbeddingTable>();
  const auto tshape = entries[0].at("shape").get<std::vector<std::size_t>>();
  if (tshape.size() != 2) throw CorruptionError(manifest_path + ": bad embedding shape");
  table->rows = tshape[0];
  table->dim = tshape[1];
  table->coverage = manifest.value("embedding_coverage", 0.0);
  table->found = manifest.value("embedding_found", std::size_t{0});
  table->matrix.resize(table->rows * table->dim);
  const std::size_t table_offset = entries[0].at("offset").get<std::size_t>();
  if (table_offset + table->matrix.size() > total) {
    throw CorruptionError(manifest_path + ": embedding entry exceeds weights.bin");
  }
  read_floats(bytes, table_offset, table->matrix);

  Network<float> net(config, table);
  auto params = net.parameters();
  if (entries.size() != params.size() + 1) {
    throw CorruptionError(manifest_path + ": parameter count mismatch with config");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i + 1];
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const auto offset = e.at("offset").get<std::size_t>();
    if (e.at("name").get<std::string>() != params[i]->name || shape != params[i]->shape()) {
      throw CorruptionError(manifest_path + ": parameter " + params[i]->name +
                            " does not match manifest entry " +
                            e.at("name").get<std::string>());
    }
    if (offset + params[i]->value.size() > total) {
      throw CorruptionError(manifest_path + ": entry " + params[i]->name +
                            " exceeds weights.bin");
    }
    read_floats(bytes, offset, params[i]->value.values());
  }
  return net;
}

}  // namespace

Network<float> load_checkpoint(const std::string& dir) {
  try {
    return read_checkpoint(dir);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(dir + ": malformed checkpoint manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError(dir + ": bad model config in checkpoint: " + e.what());
  }
}

Network<float> load_checkpoint(const std::string& dir, const ModelConfig& expected) {
  Network<float> net = load_checkpoint(dir);
  if (!net.config().same_architecture(expected)) {
    const auto& c = net.config();
    std::string detail;
    if (c.seq_len != expected.seq_len) {
      detail = "seq_len " + std::to_string(c.seq_len) + " vs expected " +
               std::to_string(expected.seq_len);
    } else {
      detail = "architecture fields differ";
    }
    throw ConfigError("checkpoint " + dir + " is incompatible: " + detail);
  }
  return net;
}

}  // namespace abusenet
