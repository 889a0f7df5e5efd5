#include "abusenet/layers.h"

#include <cmath>

#include <Eigen/Dense>

namespace abusenet {
namespace {

template <typename T>
using MatrixR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatrixR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatrixR<T>>;
using Stride = Eigen::OuterStride<>;
template <typename T>
using StridedMapR = Eigen::Map<MatrixR<T>, 0, Stride>;
template <typename T>
using CStridedMapR = Eigen::Map<const MatrixR<T>, 0, Stride>;

template <typename T>
CMapR<T> as_matrix(const Tensor<T>& t, std::size_t rows, std::size_t cols) {
  return CMapR<T>(t.data(), static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(cols));
}

template <typename T>
MapR<T> as_matrix(Tensor<T>& t, std::size_t rows, std::size_t cols) {
  return MapR<T>(t.data(), static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(cols));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void apply_activation(Tensor<T>& t, Activation a) {
  if (a == Activation::kRelu) {
    for (T& v : t.values()) v = v > T(0) ? v : T(0);
  }
}

// grad *= activation'(pre) expressed through the stored output.
template <typename T>
void activation_backward(Tensor<T>& grad, const Tensor<T>& output, Activation a) {
  if (a == Activation::kRelu) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!(output[i] > T(0))) grad[i] = T(0);
    }
  }
}

std::size_t leading(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) n *= shape[i];
  return n;
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + s + "' (expected relu or linear)");
}

template <typename T>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (T& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
DropoutMask<T> make_dropout_mask(std::vector<std::size_t> shape, double rate,
                                 Rng& rng, bool variational) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  DropoutMask<T> m;
  m.rate = rate;
  m.variational = variational;
  m.keep = Tensor<T>(std::move(shape));
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (T& v : m.keep.values()) v = rng.uniform() < rate ? T(0) : scale;
  return m;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> embedding_forward(const Tensor<std::int32_t>& indices,
                            const EmbeddingTable& table) {
  require_shape(indices.rank() == 2, "embedding input must be B x L");
  const std::size_t B = indices.dim(0), L = indices.dim(1), E = table.dim;
  Tensor<T> out({B, L, E});
  for (std::size_t i = 0; i < B * L; ++i) {
    const std::int32_t id = indices[i];
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows) {
      throw ShapeError("embedding index " + std::to_string(id) +
                       " out of range for table with " +
                       std::to_string(table.rows) + " rows");
    }
    const float* src = table.matrix.data() + static_cast<std::size_t>(id) * E;
    T* dst = out.data() + i * E;
    for (std::size_t k = 0; k < E; ++k) dst[k] = static_cast<T>(src[k]);
  }
  return out;
}

template <typename T>
Tensor<T> SpatialDropout1D<T>::forward(const Tensor<T>& input, double rate,
                                       bool train, Rng& rng) {
  require_shape(input.rank() == 3, "spatial dropout input must be B x L x C");
  mask_ = {};
  if (!train || rate == 0.0) return input;
  const std::size_t B = input.dim(0), L = input.dim(1), C = input.dim(2);
  mask_ = make_dropout_mask<T>({B, C}, rate, rng, true);
  Tensor<T> out(input.shape());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        out.at(b, t, c) = input.at(b, t, c) * mask_.keep.at(b, c);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> SpatialDropout1D<T>::backward(const Tensor<T>& grad_out) const {
  if (!mask_.active()) return grad_out;
  Tensor<T> g(grad_out.shape());
  const std::size_t B = g.dim(0), L = g.dim(1), C = g.dim(2);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        g.at(b, t, c) = grad_out.at(b, t, c) * mask_.keep.at(b, c);
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& input, double rate, bool train,
                              Rng& rng) {
  mask_ = {};
  if (!train || rate == 0.0) return input;
  mask_ = make_dropout_mask<T>(input.shape(), rate, rng, false);
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input[i] * mask_.keep[i];
  return out;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) const {
  if (!mask_.active()) return grad_out;
  Tensor<T> g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * mask_.keep[i];
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Conv1D<T>::Conv1D(std::size_t in_channels, std::size_t filters,
                  std::size_t kernel_size, Activation activation)
    : kernel("conv.kernel", {kernel_size, in_channels, filters}),
      bias("conv.bias", {filters}),
      in_channels_(in_channels),
      filters_(filters),
      kernel_size_(kernel_size),
      activation_(activation) {}

template <typename T>
void Conv1D<T>::init(Rng& rng) {
  glorot_uniform(kernel.value, kernel_size_ * in_channels_, kernel_size_ * filters_, rng);
  bias.value.fill(T(0));
}

template <typename T>
Tensor<T> Conv1D<T>::forward(const Tensor<T>& input) {
  require_shape(input.rank() == 3 && input.dim(2) == in_channels_,
                "conv1d input must be B x L x " + std::to_string(in_channels_) +
                    ", got " + shape_string(input.shape()));
  const std::size_t B = input.dim(0), L = input.dim(1);
  require_shape(L >= kernel_size_, "conv1d sequence length " + std::to_string(L) +
                                       " shorter than kernel " +
                                       std::to_string(kernel_size_));
  const std::size_t Lout = L - kernel_size_ + 1;
  const std::size_t window = kernel_size_ * in_channels_;
  input_ = input;
  Tensor<T> out({B, Lout, filters_});
  const auto K = as_matrix(kernel.value, window, filters_);
  const auto bvec = as_matrix(bias.value, 1, filters_);
  for (std::size_t b = 0; b < B; ++b) {
    // Overlapping windows: row t starts at x[b, t, 0] and spans k * C_in values.
    CStridedMapR<T> X(input.data() + b * L * in_channels_,
                      static_cast<Eigen::Index>(Lout), static_cast<Eigen::Index>(window),
                      Stride(static_cast<Eigen::Index>(in_channels_)));
    MapR<T> Y(out.data() + b * Lout * filters_, static_cast<Eigen::Index>(Lout),
              static_cast<Eigen::Index>(filters_));
    Y.noalias() = X * K;
    Y.rowwise() += bvec.row(0);
  }
  apply_activation(out, activation_);
  output_ = out;
  return out;
}

template <typename T>
Tensor<T> Conv1D<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_shape(grad_out.same_shape(output_), "conv1d grad shape mismatch: " +
                                                  shape_string(grad_out.shape()) +
                                                  " vs " + shape_string(output_.shape()));
  const std::size_t B = input_.dim(0), L = input_.dim(1);
  const std::size_t Lout = output_.dim(1);
  const std::size_t window = kernel_size_ * in_channels_;
  Tensor<T> dz = grad_out;
  activation_backward(dz, output_, activation_);

  auto dK = as_matrix(kernel.grad, window, filters_);
  auto db = as_matrix(bias.grad, 1, filters_);
  const auto K = as_matrix(kernel.value, window, filters_);
  Tensor<T> grad_in;
  if (need_input_grad) grad_in = Tensor<T>(input_.shape());
  MatrixR<T> dwin;
  for (std::size_t b = 0; b < B; ++b) {
    CStridedMapR<T> X(input_.data() + b * L * in_channels_,
                      static_cast<Eigen::Index>(Lout), static_cast<Eigen::Index>(window),
                      Stride(static_cast<Eigen::Index>(in_channels_)));
    CMapR<T> dY(dz.data() + b * Lout * filters_, static_cast<Eigen::Index>(Lout),
                static_cast<Eigen::Index>(filters_));
    dK.noalias() += X.transpose() * dY;
    db += dY.colwise().sum();
    if (need_input_grad) {
      dwin.noalias() = dY * K.transpose();  // Lout x (k * C_in)
      T* gx = grad_in.data() + b * L * in_channels_;
      for (std::size_t t = 0; t < Lout; ++t) {
        const T* src = dwin.data() + t * window;
        T* dst = gx + t * in_channels_;
        for (std::size_t j = 0; j < window; ++j) dst[j] += src[j];
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------

template <typename T>
LstmCellParams<T>::LstmCellParams(const std::string& prefix, std::size_t input_size_,
                                  std::size_t hidden_size)
    : input_size(input_size_),
      hidden(hidden_size),
      W(prefix + ".W", {4 * hidden_size, input_size_}),
      U(prefix + ".U", {4 * hidden_size, hidden_size}),
      b(prefix + ".b", {4 * hidden_size}) {}

template <typename T>
void LstmCellParams<T>::init(Rng& rng) {
  glorot_uniform(W.value, input_size, 4 * hidden, rng);
  // Orthogonal columns: QR of a Gaussian 4H x H matrix with the sign fix.
  const auto rows = static_cast<Eigen::Index>(4 * hidden);
  const auto cols = static_cast<Eigen::Index>(hidden);
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      U.value[static_cast<std::size_t>(i * cols + j)] = static_cast<T>(q(i, j));
    }
  }
  b.value.fill(T(0));
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b.value[j] = T(1);
}

template <typename T>
LstmState<T> lstm_cell_forward(const Tensor<T>& x_t, const Tensor<T>& h_prev,
                               const Tensor<T>& c_prev,
                               const LstmCellParams<T>& params,
                               const DropoutMask<T>* rec_mask) {
  const std::size_t H = params.hidden, D = params.input_size;
  require_shape(x_t.rank() == 2 && x_t.dim(1) == D, "lstm cell input must be B x D_in");
  const std::size_t B = x_t.dim(0);
  require_shape(h_prev.shape() == std::vector<std::size_t>{B, H} &&
                    c_prev.shape() == std::vector<std::size_t>{B, H},
                "lstm cell state must be B x H");
  Tensor<T> hp = h_prev;
  if (rec_mask && rec_mask->active()) {
    require_shape(rec_mask->keep.same_shape(h_prev), "recurrent mask must be B x H");
    for (std::size_t i = 0; i < hp.size(); ++i) hp[i] *= rec_mask->keep[i];
  }
  MatrixR<T> z = as_matrix(x_t, B, D) * as_matrix(params.W.value, 4 * H, D).transpose() +
                 as_matrix(hp, B, H) * as_matrix(params.U.value, 4 * H, H).transpose();
  z.rowwise() += as_matrix(params.b.value, 1, 4 * H).row(0);
  LstmState<T> next{Tensor<T>({B, H}), Tensor<T>({B, H})};
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t j = 0; j < H; ++j) {
      const T i = sigmoid(z(r, j));
      const T f = sigmoid(z(r, H + j));
      const T g = std::tanh(z(r, 2 * H + j));
      const T o = sigmoid(z(r, 3 * H + j));
      const T c = f * c_prev.at(r, j) + i * g;
      next.c.at(r, j) = c;
      next.h.at(r, j) = o * std::tanh(c);
    }
  }
  return next;
}

template <typename T>
LstmLayer<T>::LstmLayer(const std::string& prefix, std::size_t input_size,
                        std::size_t hidden_size, bool reverse)
    : params(prefix, input_size, hidden_size), reverse_(reverse) {}

template <typename T>
Tensor<T> LstmLayer<T>::forward(const Tensor<T>& input, double input_rate,
                                double rec_rate, bool train, Rng& rng) {
  const std::size_t D = params.input_size, H = params.hidden, G = 4 * H;
  require_shape(input.rank() == 3 && input.dim(2) == D,
                "lstm input must be B x L x " + std::to_string(D) + ", got " +
                    shape_string(input.shape()));
  const std::size_t B = input.dim(0), L = input.dim(1);
  batch_ = B;
  length_ = L;

  in_mask_ = {};
  rec_mask_ = {};
  if (train && input_rate > 0.0) in_mask_ = make_dropout_mask<T>({B, D}, input_rate, rng, true);
  if (train && rec_rate > 0.0) rec_mask_ = make_dropout_mask<T>({B, H}, rec_rate, rng, true);

  x_ = input;
  if (in_mask_.active()) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t d = 0; d < D; ++d) x_.at(b, t, d) *= in_mask_.keep.at(b, d);
      }
    }
  }

  // Input projections for every timestep at once.
  MatrixR<T> xp = as_matrix(x_, B * L, D) * as_matrix(params.W.value, G, D).transpose();
  xp.rowwise() += as_matrix(params.b.value, 1, G).row(0);

  gates_ = Tensor<T>({B, L, G});
  c_prev_ = Tensor<T>({B, L, H});
  tanh_c_ = Tensor<T>({B, L, H});
  h_prev_ = Tensor<T>({B, L, H});
  Tensor<T> out({B, L, H});

  const auto Ut = as_matrix(params.U.value, G, H).transpose();
  MatrixR<T> h = MatrixR<T>::Zero(B, H);
  MatrixR<T> c = MatrixR<T>::Zero(B, H);
  MatrixR<T> hp(B, H);
  MatrixR<T> z(B, G);
  for (std::size_t s = 0; s < L; ++s) {
    const std::size_t t = reverse_ ? L - 1 - s : s;
    hp = h;
    if (rec_mask_.active()) hp.array() *= as_matrix(rec_mask_.keep, B, H).array();
    CStridedMapR<T> xp_t(xp.data() + t * G, static_cast<Eigen::Index>(B),
                         static_cast<Eigen::Index>(G), Stride(static_cast<Eigen::Index>(L * G)));
    z.noalias() = hp * Ut;
    z += xp_t;
    for (std::size_t b = 0; b < B; ++b) {
      T* gate = gates_.data() + (b * L + t) * G;
      T* cp = c_prev_.data() + (b * L + t) * H;
      T* tc = tanh_c_.data() + (b * L + t) * H;
      T* hpo = h_prev_.data() + (b * L + t) * H;
      T* y = out.data() + (b * L + t) * H;
      for (std::size_t j = 0; j < H; ++j) {
        const T i = sigmoid(z(b, j));
        const T f = sigmoid(z(b, H + j));
        const T g = std::tanh(z(b, 2 * H + j));
        const T o = sigmoid(z(b, 3 * H + j));
        gate[j] = i;
        gate[H + j] = f;
        gate[2 * H + j] = g;
        gate[3 * H + j] = o;
        cp[j] = c(b, j);
        hpo[j] = hp(b, j);
        const T cn = f * c(b, j) + i * g;
        const T tcn = std::tanh(cn);
        c(b, j) = cn;
        tc[j] = tcn;
        h(b, j) = o * tcn;
        y[j] = h(b, j);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> LstmLayer<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  const std::size_t B = batch_, L = length_, D = params.input_size, H = params.hidden;
  const std::size_t G = 4 * H;
  require_shape(grad_out.shape() == std::vector<std::size_t>{B, L, H},
                "lstm grad shape mismatch: " + shape_string(grad_out.shape()));

  MatrixR<T> dz_all(B * L, G);
  MatrixR<T> dh_next = MatrixR<T>::Zero(B, H);
  MatrixR<T> dc_next = MatrixR<T>::Zero(B, H);
  MatrixR<T> dhp(B, H);
  const auto U = as_matrix(params.U.value, G, H);

  for (std::size_t s = L; s-- > 0;) {
    const std::size_t t = reverse_ ? L - 1 - s : s;
    for (std::size_t b = 0; b < B; ++b) {
      const T* gate = gates_.data() + (b * L + t) * G;
      const T* cp = c_prev_.data() + (b * L + t) * H;
      const T* tc = tanh_c_.data() + (b * L + t) * H;
      const T* gy = grad_out.data() + (b * L + t) * H;
      T* dz = dz_all.data() + (b * L + t) * G;
      for (std::size_t j = 0; j < H; ++j) {
        const T i = gate[j], f = gate[H + j], g = gate[2 * H + j], o = gate[3 * H + j];
        const T dh = gy[j] + dh_next(b, j);
        const T d_o = dh * tc[j];
        const T dc = dh * o * (T(1) - tc[j] * tc[j]) + dc_next(b, j);
        dc_next(b, j) = dc * f;
        dz[j] = dc * g * i * (T(1) - i);
        dz[H + j] = dc * cp[j] * f * (T(1) - f);
        dz[2 * H + j] = dc * i * (T(1) - g * g);
        dz[3 * H + j] = d_o * o * (T(1) - o);
      }
    }
    CStridedMapR<T> dz_t(dz_all.data() + t * G, static_cast<Eigen::Index>(B),
                         static_cast<Eigen::Index>(G), Stride(static_cast<Eigen::Index>(L * G)));
    dhp.noalias() = dz_t * U;
    if (rec_mask_.active()) dhp.array() *= as_matrix(rec_mask_.keep, B, H).array();
    dh_next = dhp;
  }

  as_matrix(params.U.grad, G, H).noalias() +=
      dz_all.transpose() * as_matrix(h_prev_, B * L, H);
  as_matrix(params.W.grad, G, D).noalias() += dz_all.transpose() * as_matrix(x_, B * L, D);
  as_matrix(params.b.grad, 1, G) += dz_all.colwise().sum();

  Tensor<T> grad_in;
  if (need_input_grad) {
    grad_in = Tensor<T>({B, L, D});
    as_matrix(grad_in, B * L, D).noalias() = dz_all * as_matrix(params.W.value, G, D);
    if (in_mask_.active()) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < L; ++t) {
          for (std::size_t d = 0; d < D; ++d) grad_in.at(b, t, d) *= in_mask_.keep.at(b, d);
        }
      }
    }
  }
  return grad_in;
}

template <typename T>
BiLstm<T>::BiLstm(std::size_t input_size, std::size_t hidden_size)
    : fwd("lstm_fwd", input_size, hidden_size, false),
      bwd("lstm_bwd", input_size, hidden_size, true) {}

template <typename T>
void BiLstm<T>::init(Rng& rng) {
  fwd.params.init(rng);
  bwd.params.init(rng);
}

template <typename T>
Tensor<T> BiLstm<T>::forward(const Tensor<T>& input, double input_rate,
                             double rec_rate, bool train, Rng& rng) {
  const Tensor<T> yf = fwd.forward(input, input_rate, rec_rate, train, rng);
  const Tensor<T> yb = bwd.forward(input, input_rate, rec_rate, train, rng);
  const std::size_t B = yf.dim(0), L = yf.dim(1), H = yf.dim(2);
  Tensor<T> out({B, L, 2 * H});
  for (std::size_t r = 0; r < B * L; ++r) {
    std::copy_n(yf.data() + r * H, H, out.data() + r * 2 * H);
    std::copy_n(yb.data() + r * H, H, out.data() + r * 2 * H + H);
  }
  return out;
}

template <typename T>
Tensor<T> BiLstm<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_shape(grad_out.rank() == 3 && grad_out.dim(2) == 2 * hidden(),
                "bilstm grad must be B x L x 2H");
  const std::size_t B = grad_out.dim(0), L = grad_out.dim(1), H = hidden();
  Tensor<T> gf({B, L, H}), gb({B, L, H});
  for (std::size_t r = 0; r < B * L; ++r) {
    std::copy_n(grad_out.data() + r * 2 * H, H, gf.data() + r * H);
    std::copy_n(grad_out.data() + r * 2 * H + H, H, gb.data() + r * H);
  }
  Tensor<T> dxf = fwd.backward(gf, need_input_grad);
  Tensor<T> dxb = bwd.backward(gb, need_input_grad);
  if (need_input_grad) {
    for (std::size_t i = 0; i < dxf.size(); ++i) dxf[i] += dxb[i];
  }
  return dxf;
}

// ---------------------------------------------------------------------------

template <typename T>
Dense<T>::Dense(const std::string& prefix, std::size_t in_features,
                std::size_t out_features, Activation activation)
    : weight(prefix + ".W", {in_features, out_features}),
      bias(prefix + ".b", {out_features}),
      in_(in_features),
      out_(out_features),
      activation_(activation) {}

template <typename T>
void Dense<T>::init(Rng& rng) {
  glorot_uniform(weight.value, in_, out_, rng);
  bias.value.fill(T(0));
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& input) {
  require_shape(input.rank() >= 1 && input.shape().back() == in_,
                "dense input trailing dimension must be " + std::to_string(in_) +
                    ", got " + shape_string(input.shape()));
  const std::size_t n = leading(input.shape());
  std::vector<std::size_t> shape = input.shape();
  shape.back() = out_;
  Tensor<T> out(shape);
  auto Y = as_matrix(out, n, out_);
  Y.noalias() = as_matrix(input, n, in_) * as_matrix(weight.value, in_, out_);
  Y.rowwise() += as_matrix(bias.value, 1, out_).row(0);
  apply_activation(out, activation_);
  input_ = input;
  output_ = out;
  return out;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_shape(grad_out.same_shape(output_), "dense grad shape mismatch: " +
                                                  shape_string(grad_out.shape()) +
                                                  " vs " + shape_string(output_.shape()));
  const std::size_t n = leading(input_.shape());
  Tensor<T> dz = grad_out;
  activation_backward(dz, output_, activation_);
  const auto dZ = as_matrix(dz, n, out_);
  const auto X = as_matrix(input_, n, in_);
  as_matrix(weight.grad, in_, out_).noalias() += X.transpose() * dZ;
  as_matrix(bias.grad, 1, out_) += dZ.colwise().sum();
  Tensor<T> grad_in;
  if (need_input_grad) {
    grad_in = Tensor<T>(input_.shape());
    as_matrix(grad_in, n, in_).noalias() = dZ * as_matrix(weight.value, in_, out_).transpose();
  }
  return grad_in;
}

template <typename T>
Tensor<T> GlobalAvgPool1D<T>::forward(const Tensor<T>& input) {
  require_shape(input.rank() == 3 && input.dim(1) >= 1, "pooling input must be B x L x C with L >= 1");
  const std::size_t B = input.dim(0), L = input.dim(1), C = input.dim(2);
  length_ = L;
  // Mean taken as x0 + mean(x - x0): exact for a constant sequence.
  Tensor<T> out({B, C});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 1; t < L; ++t) {
      for (std::size_t c = 0; c < C; ++c) out.at(b, c) += input.at(b, t, c) - input.at(b, 0, c);
    }
    for (std::size_t c = 0; c < C; ++c)
      out.at(b, c) = input.at(b, 0, c) + out.at(b, c) / static_cast<T>(L);
  }
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPool1D<T>::backward(const Tensor<T>& grad_out) const {
  require_shape(grad_out.rank() == 2, "pooling grad must be B x C");
  const std::size_t B = grad_out.dim(0), C = grad_out.dim(1), L = length_;
  Tensor<T> g({B, L, C});
  const T inv = T(1) / static_cast<T>(L);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t c = 0; c < C; ++c) g.at(b, t, c) = grad_out.at(b, c) * inv;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_shape(logits.rank() == 2, "softmax expects B x C logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t b = 0; b < B; ++b) {
    T mx = logits.at(b, 0);
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits.at(b, c));
    T sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
      p.at(b, c) = std::exp(logits.at(b, c) - mx);
      sum += p.at(b, c);
    }
    for (std::size_t c = 0; c < C; ++c) p.at(b, c) /= sum;
  }
  return p;
}

template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& onehot) {
  require_shape(logits.rank() == 2 && logits.same_shape(onehot),
                "cross-entropy logits and targets must share a B x C shape");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  for (std::size_t b = 0; b < B; ++b) {
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      if (onehot.at(b, c) < T(0)) throw DataError("negative target in cross-entropy");
      sum += static_cast<double>(onehot.at(b, c));
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DataError("target row " + std::to_string(b) + " does not sum to 1");
    }
  }
  CrossEntropy<T> r;
  r.probs = softmax(logits);
  r.grad = Tensor<T>(logits.shape());
  T total = 0;
  const T inv_b = T(1) / static_cast<T>(B);
  for (std::size_t b = 0; b < B; ++b) {
    T mx = logits.at(b, 0);
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits.at(b, c));
    T sum = 0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(logits.at(b, c) - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t c = 0; c < C; ++c) {
      const T y = onehot.at(b, c);
      if (y != T(0)) total -= y * (logits.at(b, c) - lse);
      r.grad.at(b, c) = (r.probs.at(b, c) - y) * inv_b;
    }
  }
  r.loss = total * inv_b;
  return r;
}

template <typename T>
void adam_step(Parameter<T>& param, const AdamConfig& config) {
  ++param.step_count;
  const double t = static_cast<double>(param.step_count);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T lr = static_cast<T>(config.lr), eps = static_cast<T>(config.eps);
  const T inv_bc1 = static_cast<T>(1.0 / bc1), inv_bc2 = static_cast<T>(1.0 / bc2);
  T* w = param.value.data();
  T* g = param.grad.data();
  T* m = param.adam_m.data();
  T* v = param.adam_v.data();
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T m_hat = m[i] * inv_bc1;
    const T v_hat = v[i] * inv_bc2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    g[i] = T(0);
  }
}

#define ABUSENET_INSTANTIATE(T)                                                   \
  template void glorot_uniform<T>(Tensor<T>&, std::size_t, std::size_t, Rng&);   \
  template DropoutMask<T> make_dropout_mask<T>(std::vector<std::size_t>, double,  \
                                               Rng&, bool);                       \
  template Tensor<T> embedding_forward<T>(const Tensor<std::int32_t>&,            \
                                          const EmbeddingTable&);                 \
  template class SpatialDropout1D<T>;                                             \
  template class Dropout<T>;                                                      \
  template class Conv1D<T>;                                                       \
  template struct LstmCellParams<T>;                                              \
  template LstmState<T> lstm_cell_forward<T>(const Tensor<T>&, const Tensor<T>&,  \
                                             const Tensor<T>&,                    \
                                             const LstmCellParams<T>&,            \
                                             const DropoutMask<T>*);              \
  template class LstmLayer<T>;                                                    \
  template class BiLstm<T>;                                                       \
  template class Dense<T>;                                                        \
  template class GlobalAvgPool1D<T>;                                              \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                \
  template CrossEntropy<T> softmax_cross_entropy<T>(const Tensor<T>&,             \
                                                    const Tensor<T>&);            \
  template void adam_step<T>(Parameter<T>&, const AdamConfig&);

ABUSENET_INSTANTIATE(float)
ABUSENET_INSTANTIATE(double)

#undef ABUSENET_INSTANTIATE

}  // namespace abusenet
