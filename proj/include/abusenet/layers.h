#ifndef ABUSENET_LAYERS_H_
#define ABUSENET_LAYERS_H_

// Forward/backward kernels for every layer of the CNN-BiLSTM classifier.
// Each layer object caches what its backward pass needs from the most recent
// forward call; backward() must follow a matching forward(). Parameter
// gradients accumulate into Parameter::grad until the optimizer consumes them.
//
// Tensor layouts are row-major: sequences are B x L x C.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "abusenet/embeddings.h"
#include "abusenet/rng.h"
#include "abusenet/tensor.h"

namespace abusenet {

enum class Activation { kLinear, kRelu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

// Inverted-dropout keep mask: entries are 0 or 1 / (1 - rate).
template <typename T>
struct DropoutMask {
  Tensor<T> keep;
  double rate = 0.0;
  bool variational = false;

  bool active() const { return !keep.empty(); }
};

template <typename T>
DropoutMask<T> make_dropout_mask(std::vector<std::size_t> shape, double rate,
                                 Rng& rng, bool variational);

// ---------------------------------------------------------------------------

// Row lookup into the frozen table. Throws ShapeError on out-of-range ids.
template <typename T>
Tensor<T> embedding_forward(const Tensor<std::int32_t>& indices,
                            const EmbeddingTable& table);

// Drops whole (batch, channel) feature maps across every timestep.
template <typename T>
class SpatialDropout1D {
 public:
  Tensor<T> forward(const Tensor<T>& input, double rate, bool train, Rng& rng);
  Tensor<T> backward(const Tensor<T>& grad_out) const;
  const DropoutMask<T>& mask() const { return mask_; }

 private:
  DropoutMask<T> mask_;  // B x C
};

template <typename T>
class Dropout {
 public:
  Tensor<T> forward(const Tensor<T>& input, double rate, bool train, Rng& rng);
  Tensor<T> backward(const Tensor<T>& grad_out) const;

 private:
  DropoutMask<T> mask_;  // same shape as the input
};

// Valid (unpadded) 1D cross-correlation over time.
// kernel: k x C_in x C_out, bias: C_out.
template <typename T>
class Conv1D {
 public:
  Conv1D(std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
         Activation activation);

  void init(Rng& rng);  // Glorot uniform kernel, zero bias
  Tensor<T> forward(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

  std::size_t in_channels() const { return in_channels_; }
  std::size_t filters() const { return filters_; }
  std::size_t kernel_size() const { return kernel_size_; }

  Parameter<T> kernel;
  Parameter<T> bias;

 private:
  std::size_t in_channels_, filters_, kernel_size_;
  Activation activation_;
  Tensor<T> input_;
  Tensor<T> output_;
};

// Gates stacked in order i, f, g, o.
// W: 4H x D_in, U: 4H x H, b: 4H.
template <typename T>
struct LstmCellParams {
  LstmCellParams(const std::string& prefix, std::size_t input_size,
                 std::size_t hidden_size);

  // Glorot uniform W, orthogonal U, zero bias with forget-gate bias 1.
  void init(Rng& rng);

  std::size_t input_size;
  std::size_t hidden;
  Parameter<T> W;
  Parameter<T> U;
  Parameter<T> b;
};

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

// One timestep on B x D input. rec_mask (B x H), when given, multiplies h_prev
// before it enters the recurrent projection of every gate.
template <typename T>
LstmState<T> lstm_cell_forward(const Tensor<T>& x_t, const Tensor<T>& h_prev,
                               const Tensor<T>& c_prev,
                               const LstmCellParams<T>& params,
                               const DropoutMask<T>* rec_mask = nullptr);

// Single-direction LSTM over a whole sequence, returning every hidden state.
// Input dropout and recurrent dropout are variational: one mask per sequence.
template <typename T>
class LstmLayer {
 public:
  LstmLayer(const std::string& prefix, std::size_t input_size,
            std::size_t hidden_size, bool reverse);

  Tensor<T> forward(const Tensor<T>& input, double input_rate, double rec_rate,
                    bool train, Rng& rng);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

  bool reverse() const { return reverse_; }

  LstmCellParams<T> params;

 private:
  bool reverse_;
  std::size_t batch_ = 0, length_ = 0;
  DropoutMask<T> in_mask_;   // B x D
  DropoutMask<T> rec_mask_;  // B x H
  Tensor<T> x_;              // masked input, B x L x D
  Tensor<T> gates_;          // activated gates, B x L x 4H
  Tensor<T> c_prev_;         // B x L x H
  Tensor<T> tanh_c_;         // B x L x H
  Tensor<T> h_prev_;         // masked recurrent input, B x L x H
};

// Forward and reverse LSTMs; outputs concatenated per timestep (fwd || bwd).
template <typename T>
class BiLstm {
 public:
  BiLstm(std::size_t input_size, std::size_t hidden_size);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& input, double input_rate, double rec_rate,
                    bool train, Rng& rng);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

  std::size_t hidden() const { return fwd.params.hidden; }

  LstmLayer<T> fwd;
  LstmLayer<T> bwd;
};

// Affine map over the trailing dimension. weight: D_in x D_out.
template <typename T>
class Dense {
 public:
  Dense(const std::string& prefix, std::size_t in_features,
        std::size_t out_features, Activation activation);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  std::size_t in_, out_;
  Activation activation_;
  Tensor<T> input_;
  Tensor<T> output_;
};

// Mean over the time axis: B x L x C -> B x C.
template <typename T>
class GlobalAvgPool1D {
 public:
  Tensor<T> forward(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& grad_out) const;

 private:
  std::size_t length_ = 0;
};

// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
struct CrossEntropy {
  T loss{};           // mean over the batch
  Tensor<T> grad;     // d loss / d logits = (p - y) / B
  Tensor<T> probs;
};

// Throws DataError when a target row is negative or does not sum to 1.
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Tensor<T>& logits,
                                      const Tensor<T>& onehot);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

// Bias-corrected Adam update; increments step_count and zeroes the gradient.
template <typename T>
void adam_step(Parameter<T>& param, const AdamConfig& config);

template <typename T>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace abusenet

#endif  // ABUSENET_LAYERS_H_
