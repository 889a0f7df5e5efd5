#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "abusenet/error.h"
#include "abusenet/layers.h"
#include "abusenet/rng.h"
#include "support/test_support.h"

using namespace abusenet;
using testsupport::check_gradient;
using testsupport::random_tensor;
using testsupport::weighted_sum;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor<double> naive_conv(const Tensor<double>& in, const Tensor<double>& kernel,
                          const Tensor<double>& bias, std::size_t k, bool relu) {
  const std::size_t B = in.dim(0), L = in.dim(1), C = in.dim(2), O = bias.size();
  Tensor<double> out({B, L - k + 1, O});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t + k <= L; ++t)
      for (std::size_t o = 0; o < O; ++o) {
        double s = bias[o];
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t c = 0; c < C; ++c) s += in.at(b, t + j, c) * kernel[(j * C + c) * O + o];
        out.at(b, t, o) = relu ? std::max(0.0, s) : s;
      }
  return out;
}

// One LSTM step per batch row with explicit loops.
void naive_lstm_step(const LstmCellParams<double>& p, const double* x, const double* h_prev,
                     double* h, double* c) {
  const std::size_t H = p.hidden, D = p.input_size;
  std::vector<double> z(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double s = p.b.value[r];
    for (std::size_t d = 0; d < D; ++d) s += p.W.value[r * D + d] * x[d];
    for (std::size_t j = 0; j < H; ++j) s += p.U.value[r * H + j] * h_prev[j];
    z[r] = s;
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(z[j]), f = sigmoid(z[H + j]), g = std::tanh(z[2 * H + j]),
                 o = sigmoid(z[3 * H + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

Tensor<double> naive_lstm_sequence(const LstmCellParams<double>& p, const Tensor<double>& in,
                                   bool reverse) {
  const std::size_t B = in.dim(0), L = in.dim(1), D = in.dim(2), H = p.hidden;
  Tensor<double> out({B, L, H});
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> h(H, 0.0), c(H, 0.0), hn(H);
    for (std::size_t s = 0; s < L; ++s) {
      const std::size_t t = reverse ? L - 1 - s : s;
      naive_lstm_step(p, in.data() + (b * L + t) * D, h.data(), hn.data(), c.data());
      h = hn;
      for (std::size_t j = 0; j < H; ++j) out.at(b, t, j) = h[j];
    }
  }
  return out;
}

constexpr int kSeeds = 5;

}  // namespace

TEST_CASE("conv1d matches the naive oracle") {
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    for (std::size_t k : {1u, 2u, 3u}) {
      Conv1D<double> conv(7, 5, k, Activation::kRelu);
      conv.init(rng);
      conv.bias.value = random_tensor<double>({5}, rng);
      const auto in = random_tensor<double>({3, 11, 7}, rng);
      const auto out = conv.forward(in);
      const auto want = naive_conv(in, conv.kernel.value, conv.bias.value, k, true);
      REQUIRE(out.shape() == want.shape());
      for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(std::abs(out[i] - want[i]) <= 1e-10);
    }
  }
}

TEST_CASE("conv1d at the default shape") {
  Rng rng(1);
  Conv1D<double> conv(300, 64, 2, Activation::kRelu);
  conv.init(rng);
  const auto in = random_tensor<double>({2, 100, 300}, rng);
  const auto out = conv.forward(in);
  CHECK(out.shape() == std::vector<std::size_t>{2, 99, 64});
  const auto want = naive_conv(in, conv.kernel.value, conv.bias.value, 2, true);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out[i] - want[i]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("lstm cell matches the scalar oracle") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(100 + seed);
    LstmCellParams<double> p("cell", 6, 4);
    p.init(rng);
    p.b.value = random_tensor<double>({16}, rng);
    const auto x = random_tensor<double>({3, 6}, rng);
    const auto h0 = random_tensor<double>({3, 4}, rng);
    const auto c0 = random_tensor<double>({3, 4}, rng);
    const auto next = lstm_cell_forward(x, h0, c0, p);
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<double> h(4), c(c0.data() + b * 4, c0.data() + b * 4 + 4);
      naive_lstm_step(p, x.data() + b * 6, h0.data() + b * 4, h.data(), c.data());
      for (std::size_t j = 0; j < 4; ++j) {
        REQUIRE(std::abs(next.h.at(b, j) - h[j]) <= 1e-12);
        REQUIRE(std::abs(next.c.at(b, j) - c[j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("lstm sequence matches the scalar oracle in both directions") {
  Rng rng(8);
  for (bool reverse : {false, true}) {
    LstmLayer<double> layer("l", 5, 3, reverse);
    layer.params.init(rng);
    const auto in = random_tensor<double>({2, 9, 5}, rng);
    const auto out = layer.forward(in, 0.0, 0.0, false, rng);
    const auto want = naive_lstm_sequence(layer.params, in, reverse);
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(std::abs(out[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("bilstm concatenates forward and reverse states") {
  Rng rng(9);
  BiLstm<double> bi(4, 3);
  bi.init(rng);
  const auto in = random_tensor<double>({2, 6, 4}, rng);
  const auto out = bi.forward(in, 0.0, 0.0, false, rng);
  CHECK(out.shape() == std::vector<std::size_t>{2, 6, 6});
  const auto f = naive_lstm_sequence(bi.fwd.params, in, false);
  const auto r = naive_lstm_sequence(bi.bwd.params, in, true);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(std::abs(out.at(b, t, j) - f.at(b, t, j)) <= 1e-12);
        REQUIRE(std::abs(out.at(b, t, 3 + j) - r.at(b, t, j)) <= 1e-12);
      }
  BiLstm<float> wide(64, 128);
  Rng r2(1);
  wide.init(r2);
  const auto o = wide.forward(Tensor<float>({1, 99, 64}, 0.1f), 0.0, 0.0, false, r2);
  CHECK(o.dim(2) == 256);
}

TEST_CASE("lstm initialization") {
  Rng rng(3);
  LstmCellParams<double> p("x", 10, 6);
  p.init(rng);
  for (std::size_t j = 0; j < 24; ++j) CHECK(p.b.value[j] == (j >= 6 && j < 12 ? 1.0 : 0.0));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> U(
      p.U.value.data(), 24, 6);
  const Eigen::MatrixXd gram = U.transpose() * U;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  const double limit = std::sqrt(6.0 / (10 + 24));
  for (double w : p.W.value.values()) CHECK(std::abs(w) <= limit);
}

TEST_CASE("analytic anchors") {
  // Uniform logits over two classes cost ln 2 regardless of the target.
  const Tensor<double> logits({3, 2}, 0.37);
  const Tensor<double> y({3, 2}, std::vector<double>{1, 0, 0, 1, 1, 0});
  CHECK(std::abs(softmax_cross_entropy(logits, y).loss - std::numbers::ln2) <= 1e-9);

  Conv1D<float> conv(300, 64, 2, Activation::kRelu);
  CHECK(conv.forward(Tensor<float>({1, 100, 300})).dim(1) == 99);

  GlobalAvgPool1D<double> pool;
  Tensor<double> constant({2, 99, 4});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 99; ++t)
      for (std::size_t c = 0; c < 4; ++c) constant.at(b, t, c) = 0.1 * (c + 1) - b / 7.0;
  const auto pooled = pool.forward(constant);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 4; ++c) CHECK(pooled.at(b, c) == constant.at(b, 0, c));
  GlobalAvgPool1D<float> fpool;
  const auto fpooled = fpool.forward(Tensor<float>({1, 99, 3}, 0.1f));
  for (std::size_t c = 0; c < 3; ++c) CHECK(fpooled.at(0, c) == 0.1f);
}

TEST_CASE("softmax is stable and cross-entropy validates targets") {
  const Tensor<double> big({1, 2}, std::vector<double>{1000.0, 0.0});
  const auto p = softmax(big);
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] == doctest::Approx(1.0));
  const Tensor<double> bad({1, 2}, std::vector<double>{0.5, 0.6});
  CHECK_THROWS_AS(softmax_cross_entropy(big, bad), DataError);
  const Tensor<double> neg({1, 2}, std::vector<double>{1.5, -0.5});
  CHECK_THROWS_AS(softmax_cross_entropy(big, neg), DataError);
}

TEST_CASE("embedding lookup") {
  EmbeddingTable t;
  t.rows = 3;
  t.dim = 2;
  t.matrix = {0, 0, 0, 0, 1.5f, -2};
  const Tensor<std::int32_t> idx({1, 3}, std::vector<std::int32_t>{2, 0, 2});
  const auto e = embedding_forward<float>(idx, t);
  CHECK(e.at(0, 0, 0) == 1.5f);
  CHECK(e.at(0, 1, 1) == 0.0f);
  const Tensor<std::int32_t> oob({1, 1}, std::vector<std::int32_t>{3});
  CHECK_THROWS_AS(embedding_forward<float>(oob, t), ShapeError);
}

TEST_CASE("dropout keeps the expected fraction and scale") {
  Rng rng(21);
  const double rate = 0.2;
  const auto m = make_dropout_mask<double>({200000}, rate, rng, false);
  double kept = 0.0, mean = 0.0;
  for (double v : m.keep.values()) {
    kept += v != 0.0;
    mean += v;
    if (v != 0.0) REQUIRE(v == doctest::Approx(1.0 / (1.0 - rate)));
  }
  kept /= 200000.0;
  mean /= 200000.0;
  CHECK(std::abs(kept - (1.0 - rate)) < 0.01);
  CHECK(std::abs(mean - 1.0) < 0.01);
  CHECK_THROWS_AS(make_dropout_mask<double>({2}, 1.0, rng, false), ConfigError);
}

TEST_CASE("spatial dropout zeroes whole channels across time") {
  Rng rng(4);
  SpatialDropout1D<double> sd;
  const Tensor<double> in({4, 10, 50}, 1.0);
  const auto out = sd.forward(in, 0.5, true, rng);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t c = 0; c < 50; ++c)
      for (std::size_t t = 1; t < 10; ++t) REQUIRE(out.at(b, t, c) == out.at(b, 0, c));
  const auto eval = sd.forward(in, 0.5, false, rng);
  CHECK(eval == in);
  Dropout<double> d;
  CHECK(d.forward(in, 0.3, false, rng) == in);
}

TEST_CASE("variational lstm masks hold across timesteps") {
  // With input dropout at rate r, each (batch, feature) is either kept for the
  // whole sequence or dropped for the whole sequence; a dropped feature must
  // not influence any output.
  Rng init(2);
  LstmLayer<double> layer("l", 6, 3, false);
  layer.params.init(init);
  Rng rng(12);
  const auto in = random_tensor<double>({1, 5, 6}, rng);
  Rng a(77);
  const auto base = layer.forward(in, 0.5, 0.0, true, a);
  int invariant_features = 0;
  for (std::size_t d = 0; d < 6; ++d) {
    auto bumped = in;
    for (std::size_t t = 0; t < 5; ++t) bumped.at(0, t, d) += 1.0;
    Rng b(77);
    const auto out = layer.forward(bumped, 0.5, 0.0, true, b);
    bool same = true;
    for (std::size_t i = 0; i < out.size(); ++i) same &= out[i] == base[i];
    invariant_features += same;
  }
  CHECK(invariant_features > 0);
  CHECK(invariant_features < 6);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks in double precision.

TEST_CASE("gradient check: conv1d") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(1000 + seed);
    for (auto act : {Activation::kRelu, Activation::kLinear}) {
      Conv1D<double> conv(4, 3, 2, act);
      conv.init(rng);
      conv.bias.value = random_tensor<double>({3}, rng, -0.1, 0.1);
      auto in = random_tensor<double>({2, 6, 4}, rng);
      const auto probe = random_tensor<double>({2, 5, 3}, rng);
      auto loss = [&] { return weighted_sum(conv.forward(in), probe); };
      conv.kernel.zero_grad();
      conv.bias.zero_grad();
      conv.forward(in);
      const auto din = conv.backward(probe, true);
      CHECK(check_gradient(conv.kernel.value, conv.kernel.grad, loss).max_rel < 1e-4);
      CHECK(check_gradient(conv.bias.value, conv.bias.grad, loss).max_rel < 1e-4);
      CHECK(check_gradient(in, din, loss).max_rel < 1e-4);
    }
  }
}

TEST_CASE("gradient check: dense") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(2000 + seed);
    for (auto act : {Activation::kRelu, Activation::kLinear}) {
      for (bool sequence : {false, true}) {
        Dense<double> dense("d", 5, 4, act);
        dense.init(rng);
        dense.bias.value = random_tensor<double>({4}, rng, -0.1, 0.1);
        auto in = sequence ? random_tensor<double>({2, 3, 5}, rng) : random_tensor<double>({3, 5}, rng);
        auto probe_shape = in.shape();
        probe_shape.back() = 4;
        const auto probe = random_tensor<double>(probe_shape, rng);
        auto loss = [&] { return weighted_sum(dense.forward(in), probe); };
        dense.weight.zero_grad();
        dense.bias.zero_grad();
        dense.forward(in);
        const auto din = dense.backward(probe, true);
        CHECK(check_gradient(dense.weight.value, dense.weight.grad, loss).max_rel < 1e-4);
        CHECK(check_gradient(dense.bias.value, dense.bias.grad, loss).max_rel < 1e-4);
        CHECK(check_gradient(in, din, loss).max_rel < 1e-4);
      }
    }
  }
}

TEST_CASE("gradient check: lstm cell") {
  // A single step (L = 1) exercises the gate equations; L = 2 adds the
  // recurrent weights.
  for (int seed = 0; seed < kSeeds; ++seed) {
    for (std::size_t L : {1u, 2u}) {
      Rng rng(3000 + seed);
      LstmLayer<double> layer("c", 4, 3, false);
      layer.params.init(rng);
      layer.params.b.value = random_tensor<double>({12}, rng, -0.5, 0.5);
      auto in = random_tensor<double>({2, L, 4}, rng);
      const auto probe = random_tensor<double>({2, L, 3}, rng);
      auto loss = [&] {
        Rng r(5);
        return weighted_sum(layer.forward(in, 0.0, 0.0, true, r), probe);
      };
      for (auto* p : {&layer.params.W, &layer.params.U, &layer.params.b}) p->zero_grad();
      Rng r(5);
      layer.forward(in, 0.0, 0.0, true, r);
      const auto din = layer.backward(probe, true);
      CHECK(check_gradient(layer.params.W.value, layer.params.W.grad, loss).max_rel < 1e-4);
      CHECK(check_gradient(layer.params.b.value, layer.params.b.grad, loss).max_rel < 1e-4);
      if (L > 1) CHECK(check_gradient(layer.params.U.value, layer.params.U.grad, loss).max_rel < 1e-4);
      CHECK(check_gradient(in, din, loss).max_rel < 1e-4);
    }
  }
}

TEST_CASE("gradient check: bilstm through time with variational dropout") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(4000 + seed);
    BiLstm<double> bi(5, 4);
    bi.init(rng);
    auto in = random_tensor<double>({2, 7, 5}, rng);
    const auto probe = random_tensor<double>({2, 7, 8}, rng);
    const std::uint64_t mask_seed = 50 + seed;
    auto loss = [&] {
      Rng r(mask_seed);
      return weighted_sum(bi.forward(in, 0.1, 0.1, true, r), probe);
    };
    for (auto* l : {&bi.fwd, &bi.bwd})
      for (auto* p : {&l->params.W, &l->params.U, &l->params.b}) p->zero_grad();
    Rng r(mask_seed);
    bi.forward(in, 0.1, 0.1, true, r);
    const auto din = bi.backward(probe, true);
    for (auto* l : {&bi.fwd, &bi.bwd}) {
      for (auto* p : {&l->params.W, &l->params.U, &l->params.b}) {
        INFO(p->name);
        CHECK(check_gradient(p->value, p->grad, loss).max_rel < 1e-4);
      }
    }
    CHECK(check_gradient(in, din, loss).max_rel < 1e-4);
  }
}

TEST_CASE("gradient check: softmax cross-entropy") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(5000 + seed);
    for (std::size_t classes : {2u, 3u}) {
      auto logits = random_tensor<double>({4, classes}, rng, -3.0, 3.0);
      Tensor<double> y({4, classes});
      for (std::size_t b = 0; b < 4; ++b) y.at(b, rng.below(classes)) = 1.0;
      auto loss = [&] { return softmax_cross_entropy(logits, y).loss; };
      const auto ce = softmax_cross_entropy(logits, y);
      CHECK(check_gradient(logits, ce.grad, loss, 1e-5).max_rel < 1e-6);
    }
  }
}

TEST_CASE("gradient check: pooling and dropout layers") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(6000 + seed);
    auto in = random_tensor<double>({2, 5, 3}, rng);
    GlobalAvgPool1D<double> pool;
    const auto probe = random_tensor<double>({2, 3}, rng);
    auto pool_loss = [&] { return weighted_sum(pool.forward(in), probe); };
    pool.forward(in);
    CHECK(check_gradient(in, pool.backward(probe), pool_loss).max_rel < 1e-6);

    SpatialDropout1D<double> sd;
    const auto probe3 = random_tensor<double>({2, 5, 3}, rng);
    auto sd_loss = [&] {
      Rng r(9);
      return weighted_sum(sd.forward(in, 0.4, true, r), probe3);
    };
    Rng r(9);
    sd.forward(in, 0.4, true, r);
    CHECK(check_gradient(in, sd.backward(probe3), sd_loss).max_rel < 1e-6);
  }
}

TEST_CASE("adam descends x^2 and follows the bias-corrected update") {
  Parameter<double> x("x", {1});
  x.value[0] = 3.0;
  AdamConfig cfg;
  cfg.lr = 0.1;
  // First step: m_hat = g, v_hat = g^2, so the move is lr * g / (|g| + eps).
  x.grad[0] = 2.0 * x.value[0];
  adam_step(x, cfg);
  CHECK(x.value[0] == doctest::Approx(3.0 - 0.1 * 6.0 / (6.0 + 1e-7)).epsilon(1e-14));
  CHECK(x.grad[0] == 0.0);
  CHECK(x.step_count == 1);
  double previous = x.value[0] * x.value[0];
  for (int i = 0; i < 300; ++i) {
    x.grad[0] = 2.0 * x.value[0];
    adam_step(x, cfg);
  }
  CHECK(x.value[0] * x.value[0] < previous);
  CHECK(std::abs(x.value[0]) < 0.05);

  // Second step against a hand-computed reference.
  Parameter<double> y("y", {1});
  y.value[0] = 1.0;
  AdamConfig c2;
  y.grad[0] = 0.5;
  adam_step(y, c2);
  y.grad[0] = -0.25;
  adam_step(y, c2);
  const double m = 0.9 * (0.1 * 0.5) + 0.1 * -0.25;
  const double v = 0.999 * (0.001 * 0.25) + 0.001 * 0.0625;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double after_first = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-7);
  CHECK(y.value[0] == doctest::Approx(after_first - 1e-3 * mhat / (std::sqrt(vhat) + 1e-7)).epsilon(1e-12));
}

TEST_CASE("glorot uniform bounds") {
  Rng rng(1);
  Tensor<double> w({40, 60});
  glorot_uniform(w, 40, 60, rng);
  const double limit = std::sqrt(6.0 / 100.0);
  double lo = 1, hi = -1;
  for (double v : w.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -limit);
  CHECK(hi <= limit);
  CHECK(hi > 0.9 * limit);
  CHECK(lo < -0.9 * limit);
}
