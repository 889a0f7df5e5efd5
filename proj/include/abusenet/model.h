#ifndef ABUSENET_MODEL_H_
#define ABUSENET_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abusenet/embeddings.h"
#include "abusenet/layers.h"
#include "abusenet/rng.h"
#include "abusenet/tensor.h"

namespace abusenet {

// Where the 128-unit dense layer sits relative to global average pooling.
enum class DenseOrder {
  kDenseThenPool,  // per-timestep dense, then pool (default)
  kPoolThenDense,
};

struct ModelConfig {
  std::size_t seq_len = 100;
  std::size_t embed_dim = 300;
  std::size_t conv_filters = 64;
  std::size_t conv_kernel = 2;
  std::size_t lstm_units = 128;
  double lstm_dropout = 0.1;
  double lstm_recurrent_dropout = 0.1;
  std::size_t dense_units = 128;
  double spatial_dropout_rate = 0.2;
  double final_dropout_rate = 0.1;
  std::size_t num_heads = 1;
  std::size_t classes_per_head = 2;
  Activation conv_activation = Activation::kRelu;
  Activation dense_activation = Activation::kRelu;
  DenseOrder dense_order = DenseOrder::kDenseThenPool;
  std::uint64_t seed = 42;

  // Throws ConfigError on non-positive sizes, rates outside [0, 1) or
  // seq_len < conv_kernel.
  void validate() const;
  bool same_architecture(const ModelConfig& other) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
// Rejects unknown keys; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

// Per-head one-hot targets from integer labels.
template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, std::size_t classes);

// Argmax with ties going to the highest class index, so an exact 0.5/0.5
// split predicts label 1.
int argmax_tie_high(const double* probs, std::size_t classes);

// CNN-BiLSTM classifier:
//   embedding -> spatial dropout -> conv1d -> bilstm -> dense(per step) ->
//   global average pool -> dropout -> one softmax head per task.
template <typename T>
class Network {
 public:
  Network(const ModelConfig& config, std::shared_ptr<const EmbeddingTable> table);

  const ModelConfig& config() const { return config_; }
  const EmbeddingTable& table() const { return *table_; }
  std::shared_ptr<const EmbeddingTable> table_ptr() const { return table_; }

  // Re-draws every trainable parameter from config().seed.
  void initialize();

  // Trainable parameters in a fixed order.
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;

  // Returns per-head B x C probabilities. Caches intermediates for backward.
  std::vector<Tensor<T>> forward(const Tensor<std::int32_t>& batch, bool train, Rng& rng);
  // Per-head logits from the most recent forward call.
  const std::vector<Tensor<T>>& last_logits() const { return logits_; }

  // Forward + backward; gradients accumulate into the parameters. Returns the
  // unweighted mean of per-head cross-entropies.
  T compute_gradients(const Tensor<std::int32_t>& batch,
                      const std::vector<Tensor<T>>& targets, bool train, Rng& rng,
                      std::vector<Tensor<T>>* probs_out = nullptr);

  // compute_gradients followed by one Adam step on every parameter.
  T train_step(const Tensor<std::int32_t>& batch, const std::vector<Tensor<T>>& targets,
               const AdamConfig& adam, Rng& rng,
               std::vector<Tensor<T>>* probs_out = nullptr);

  void zero_grad();

  // Eval-mode labels, one vector per head.
  std::vector<std::vector<int>> predict(const Tensor<std::int32_t>& batch);

  // Intermediate activations of the last forward, in layer order; used to
  // check the shape chain.
  std::vector<std::vector<std::size_t>> last_shapes() const { return shapes_; }

 private:
  ModelConfig config_;
  std::shared_ptr<const EmbeddingTable> table_;
  SpatialDropout1D<T> spatial_dropout_;
  Conv1D<T> conv_;
  BiLstm<T> bilstm_;
  Dense<T> dense_;
  GlobalAvgPool1D<T> pool_;
  Dropout<T> dropout_;
  std::vector<Dense<T>> heads_;
  std::vector<Tensor<T>> logits_;
  std::vector<std::vector<std::size_t>> shapes_;
};

// Checkpoint directory: manifest.json + weights.bin (little-endian f32 in
// manifest order). The frozen embedding table is stored as a non-trainable
// entry so a checkpoint is self-contained.
void save_checkpoint(const Network<float>& net, const std::string& dir);
Network<float> load_checkpoint(const std::string& dir);
// Additionally checks the stored architecture against `expected`; a mismatch
// (for example a different seq_len) raises ConfigError.
Network<float> load_checkpoint(const std::string& dir, const ModelConfig& expected);

}  // namespace abusenet

#endif  // ABUSENET_MODEL_H_
