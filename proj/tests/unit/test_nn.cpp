#include <doctest.h>

#include <cmath>
#include <numeric>

#include "signrec/nn/gradcheck.hpp"
#include "signrec/nn/layers.hpp"
#include "signrec/nn/optim.hpp"
#include "support/layer_gradcheck.hpp"

using namespace signrec;
using namespace signrec::nn;

namespace {

template <typename Real>
Conv2d<Real> single_conv(std::size_t cin, std::size_t cout, std::size_t k, Padding pad) {
  Rng rng(1);
  return Conv2d<Real>("c", cin, cout, k, 1, pad, rng);
}

}  // namespace

TEST_CASE("conv2d examples") {
  SUBCASE("1x1 kernel scales") {
    auto conv = single_conv<float>(1, 1, 1, Padding::Valid);
    conv.weight.value.fill(2.0f);
    conv.bias.value.fill(0.0f);
    Tensor<float> x({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(conv.forward(x).to_vector() == std::vector<float>{2, 4, 6, 8});
  }
  SUBCASE("2x2 ones kernel on 3x3 ones, valid") {
    auto conv = single_conv<float>(1, 1, 2, Padding::Valid);
    conv.weight.value.fill(1.0f);
    conv.bias.value.fill(0.0f);
    Tensor<float> out = conv.forward(Tensor<float>({1, 1, 3, 3}, 1.0f));
    CHECK(out.shape() == Shape{1, 1, 2, 2});
    CHECK(out.to_vector() == std::vector<float>{4, 4, 4, 4});
  }
  SUBCASE("same padding keeps extents") {
    auto conv = single_conv<float>(1, 8, 3, Padding::Same);
    CHECK(conv.forward(Tensor<float>({1, 1, 32, 32}, 0.5f)).shape() == Shape{1, 8, 32, 32});
  }
  SUBCASE("channel mismatch names the shape") {
    auto conv = single_conv<float>(2, 1, 3, Padding::Same);
    CHECK_THROWS_WITH_AS(conv.forward(Tensor<float>({1, 1, 4, 4})),
                         doctest::Contains("(1,1,4,4)"), DimensionError);
  }
  SUBCASE("kernel larger than valid input") {
    auto conv = single_conv<float>(1, 1, 3, Padding::Valid);
    CHECK_THROWS_AS(conv.forward(Tensor<float>({1, 1, 2, 2})), DimensionError);
  }
  SUBCASE("backward before forward") {
    auto conv = single_conv<float>(1, 1, 1, Padding::Valid);
    CHECK_THROWS_AS(conv.backward(Tensor<float>({1, 1, 1, 1})), StateError);
  }
}

TEST_CASE("batch_norm examples") {
  SUBCASE("constant channel normalises to zero") {
    BatchNorm<double> bn("bn", 1);
    auto out = bn.forward(Tensor<double>({4, 1}, 3.0), Mode::Train);
    for (double v : out.data()) CHECK(v == 0.0);
  }
  SUBCASE("zero scale yields the shift") {
    BatchNorm<double> bn("bn", 1);
    bn.scale.value.fill(0.0);
    bn.shift.value.fill(3.0);
    auto out = bn.forward(Tensor<double>({3, 1}, {0.2, -5.0, 7.0}), Mode::Train);
    for (double v : out.data()) CHECK(v == 3.0);
  }
  SUBCASE("batch {1, 3}") {
    BatchNorm<double> bn("bn", 1);
    auto out = bn.forward(Tensor<double>({2, 1}, {1.0, 3.0}), Mode::Train);
    // mean 2, biased variance 1: (x - 2) / sqrt(1 + 1e-5)
    const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(out[0] == doctest::Approx(-expected).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("running statistics use momentum 0.9") {
    BatchNorm<double> bn("bn", 1);
    bn.forward(Tensor<double>({2, 1}, {1.0, 3.0}), Mode::Train);
    CHECK(bn.running_mean.value[0] == doctest::Approx(0.2));
    CHECK(bn.running_var.value[0] == doctest::Approx(0.9 + 0.1 * 1.0));
    auto inferred = bn.forward(Tensor<double>({1, 1}, {0.2}), Mode::Infer);
    CHECK(inferred[0] == doctest::Approx(0.0));
  }
  SUBCASE("zero variance never divides by zero") {
    BatchNorm<float> bn("bn", 2);
    auto out = bn.forward(Tensor<float>({1, 2, 2, 2}, 1.0f), Mode::Train);
    CHECK(all_finite(out));
  }
}

TEST_CASE("max_pool2d examples") {
  MaxPool2d<float> pool(2, 2);
  CHECK(pool.forward(Tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4})).to_vector() == std::vector<float>{4});
  CHECK(pool.forward(Tensor<float>({1, 1, 4, 4}, 7.0f)).to_vector() ==
        std::vector<float>{7, 7, 7, 7});
  std::vector<float> ramp(16);
  std::iota(ramp.begin(), ramp.end(), 0.0f);
  // windows {0,1,4,5} {2,3,6,7} {8,9,12,13} {10,11,14,15}
  CHECK(pool.forward(Tensor<float>({1, 1, 4, 4}, ramp)).to_vector() ==
        std::vector<float>{5, 7, 13, 15});
  MaxPool2d<float> big(3, 1);
  CHECK_THROWS_AS(big.forward(Tensor<float>({1, 1, 2, 2})), DimensionError);
}

TEST_CASE("dense examples") {
  Rng rng(3);
  Dense<float> dense("d", 2, 2, rng);
  SUBCASE("identity") {
    dense.weight.value = Tensor<float>::from_rows({{1, 0}, {0, 1}});
    dense.bias.value.fill(0);
    CHECK(dense.forward(Tensor<float>({2}, {0.25f, -4.0f})).to_vector() ==
          std::vector<float>{0.25f, -4.0f});
  }
  SUBCASE("zero weight returns bias") {
    dense.weight.value.fill(0);
    dense.bias.value = Tensor<float>({2}, {5, -1});
    CHECK(dense.forward(Tensor<float>({2}, {3, 3})).to_vector() == std::vector<float>{5, -1});
  }
  SUBCASE("hand multiply") {
    dense.weight.value = Tensor<float>::from_rows({{1, 2}, {3, 4}});
    dense.bias.value.fill(0);
    CHECK(dense.forward(Tensor<float>({2}, {1, 1})).to_vector() == std::vector<float>{3, 7});
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(dense.forward(Tensor<float>({3})), DimensionError);
  }
  SUBCASE("sum-loss gradient through identity is all ones") {
    dense.weight.value = Tensor<float>::from_rows({{1, 0}, {0, 1}});
    dense.forward(Tensor<float>({1, 2}, {0.3f, 0.7f}));
    auto g = dense.backward(Tensor<float>({1, 2}, 1.0f));
    CHECK(g.to_vector() == std::vector<float>{1, 1});
  }
  SUBCASE("zero upstream gradient gives zero gradients") {
    dense.forward(Tensor<float>({1, 2}, {0.3f, 0.7f}));
    auto g = dense.backward(Tensor<float>({1, 2}, 0.0f));
    for (float v : g.data()) CHECK(v == 0.0f);
    for (float v : dense.weight.grad.data()) CHECK(v == 0.0f);
    for (float v : dense.bias.grad.data()) CHECK(v == 0.0f);
  }
}

TEST_CASE("dropout") {
  Rng rng(11);
  Tensor<double> x({4, 5});
  for (auto& v : x.data()) v = rng.uniform(0.5, 1.5);
  SUBCASE("rate 0 and infer mode are the identity") {
    Dropout<double> none(0.0);
    CHECK(none.forward(x, Mode::Train, rng) == x);
    Dropout<double> half(0.5);
    CHECK(half.forward(x, Mode::Infer, rng) == x);
  }
  SUBCASE("rate >= 1 is a config error") {
    CHECK_THROWS_AS(Dropout<double>(1.0), ConfigError);
    CHECK_THROWS_AS(Dropout<double>(-0.1), ConfigError);
  }
  SUBCASE("inverted dropout preserves the mean over 1e4 trials") {
    Dropout<double> half(0.5);
    Rng mask(7);
    double input_mean = 0.0;
    for (double v : x.data()) input_mean += v;
    input_mean /= static_cast<double>(x.size());
    double acc = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      auto y = half.forward(x, Mode::Train, mask);
      double s = 0.0;
      for (double v : y.data()) s += v;
      acc += s / static_cast<double>(y.size());
    }
    CHECK(std::abs(acc / trials - input_mean) <= 0.05 * input_mean);
  }
}

TEST_CASE("lstm_seq") {
  Rng rng(5);
  SUBCASE("zero parameters give zero hidden states") {
    Lstm<double> lstm("l", 3, 4, rng);
    for (auto* p : lstm.params()) p->value.fill(0.0);
    Tensor<double> x({6, 3});
    for (auto& v : x.data()) v = rng.uniform(-2, 2);
    const auto h = lstm.forward_sequence(x, true);
    for (double v : h.data()) CHECK(v == 0.0);
  }
  SUBCASE("single step matches the cell equations") {
    Lstm<double> lstm("l", 1, 1, rng);
    // gates i, f, g, o: kernel [1,4], recurrent unused at T=1, bias [4]
    lstm.kernel.value = Tensor<double>({1, 4}, {0.1, 0.2, 0.3, 0.4});
    lstm.bias.value = Tensor<double>({4}, {0.0, 1.0, -0.1, 0.05});
    const double x = 0.5;
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double i = sig(0.05), g = std::tanh(0.15 - 0.1), o = sig(0.2 + 0.05);
    const double c = i * g;
    const double h = o * std::tanh(c);
    auto out = lstm.forward_sequence(Tensor<double>({1, 1}, {x}), false);
    CHECK(out.shape() == Shape{1});
    CHECK(out[0] == doctest::Approx(h).epsilon(1e-14));
  }
  SUBCASE("shape") {
    Lstm<float> lstm("l", 5, 16, rng);
    CHECK(lstm.forward_sequence(Tensor<float>({7, 5}, 0.1f), true).shape() == Shape{7, 16});
  }
  SUBCASE("forget bias initialised to one") {
    Lstm<float> lstm("l", 2, 3, rng);
    for (std::size_t j = 0; j < 12; ++j) CHECK(lstm.bias.value[j] == (j >= 3 && j < 6 ? 1.0f : 0.0f));
  }
  SUBCASE("packed sequences match separate runs") {
    Lstm<double> lstm("l", 2, 3, rng);
    Tensor<double> a({3, 2}), b({2, 2});
    for (auto& v : a.data()) v = rng.uniform(-1, 1);
    for (auto& v : b.data()) v = rng.uniform(-1, 1);
    auto ha = lstm.forward_sequence(a, true);
    auto hb = lstm.forward_sequence(b, true);
    Tensor<double> packed({5, 2});
    std::copy(a.data().begin(), a.data().end(), packed.ptr());
    std::copy(b.data().begin(), b.data().end(), packed.ptr() + 6);
    auto hp = lstm.forward(packed, SeqLayout{{3, 2}});
    for (std::size_t i = 0; i < 9; ++i) CHECK(hp[i] == doctest::Approx(ha[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i) CHECK(hp[9 + i] == doctest::Approx(hb[i]).epsilon(1e-12));
  }
}

TEST_CASE("bilstm_seq") {
  Rng rng(9);
  SUBCASE("zero parameters") {
    BiLstm<double> bl("b", 2, 3, rng);
    for (auto* p : bl.params()) p->value.fill(0.0);
    Tensor<double> x({4, 2}, 0.7);
    const auto out = bl.forward(x, SeqLayout::single(4));
    for (double v : out.data()) CHECK(v == 0.0);
  }
  SUBCASE("palindrome symmetry with tied directions") {
    BiLstm<double> bl("b", 2, 3, rng);
    bl.backward_lstm().kernel.value = bl.forward_lstm().kernel.value;
    bl.backward_lstm().recurrent.value = bl.forward_lstm().recurrent.value;
    bl.backward_lstm().bias.value = bl.forward_lstm().bias.value;
    Tensor<double> x({5, 2}, {1, 2, 3, 4, 5, 6, 3, 4, 1, 2});
    auto out = bl.forward(x, SeqLayout::single(5));
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(out.at(t, j) == doctest::Approx(out.at(4 - t, 3 + j)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("shape and no temporal downsampling") {
    BiLstm<float> bl("b", 4, 8, rng);
    CHECK(bl.forward(Tensor<float>({5, 4}, 0.2f), SeqLayout::single(5)).shape() == Shape{5, 16});
  }
}

TEST_CASE("softmax rows") {
  auto p = softmax_rows(Tensor<double>::from_rows({{2, 2, 2, 2}, {0, std::log(3.0), 0, 0}}));
  for (std::size_t j = 0; j < 4; ++j) CHECK(p.at(0, j) == doctest::Approx(0.25));
  auto q = softmax_rows(Tensor<double>::from_rows({{0, std::log(3.0)}}));
  CHECK(q.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  // shift invariance, including very large logits
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor<double> row({1, 5});
    for (auto& v : row.data()) v = rng.uniform(-5, 5);
    Tensor<double> shifted = row;
    const double c = rng.uniform(-1e4, 1e4);
    for (auto& v : shifted.data()) v += c;
    auto a = softmax_rows(row), b = softmax_rows(shifted);
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
      sum += b[j];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("adam_step") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  SUBCASE("zero gradient leaves parameters unchanged") {
    Param<double> w("w", Tensor<double>({3}, {1, -2, 3}));
    Adam<double> adam(cfg);
    adam.step({&w}, 1);
    CHECK(w.value.to_vector() == std::vector<double>{1, -2, 3});
  }
  SUBCASE("one step on w^2 descends") {
    Param<double> w("w", Tensor<double>({1}, {1.0}));
    w.grad[0] = 2.0;
    Adam<double> adam(cfg);
    adam.step({&w}, 1);
    CHECK(w.value[0] < 1.0);
  }
  SUBCASE("200 steps on (w-3)^2 converge") {
    Param<double> w("w", Tensor<double>({1}, {0.0}));
    Adam<double> adam(cfg);
    for (std::size_t t = 1; t <= 200; ++t) {
      w.grad[0] = 2.0 * (w.value[0] - 3.0);
      adam.step({&w}, t);
    }
    CHECK(std::abs(w.value[0] - 3.0) <= 1e-2);
  }
  SUBCASE("global norm clipping") {
    Param<double> a("a", Tensor<double>({1})), b("b", Tensor<double>({1}));
    a.grad[0] = 30.0;
    b.grad[0] = 40.0;
    CHECK(clip_global_norm<double>({&a, &b}, 5.0) == doctest::Approx(50.0));
    CHECK(a.grad[0] == doctest::Approx(3.0));
    CHECK(b.grad[0] == doctest::Approx(4.0));
  }
  SUBCASE("l2 adds lambda * w") {
    Param<double> a("a", Tensor<double>({2}, {2.0, -1.0}));
    add_l2_gradient<double>({&a}, 0.5);
    CHECK(a.grad.to_vector() == std::vector<double>{1.0, -0.5});
  }
  SUBCASE("config validation") {
    TrainConfig bad;
    bad.dropout = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.learning_rate = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(TrainConfig{}.validate());
  }
}

TEST_CASE("finite_diff_check") {
  SUBCASE("linear map") {
    ScalarFunction f = [](std::span<const double> x, std::vector<double>* g) {
      if (g) *g = {3.0, -2.0, 0.5};
      return 3.0 * x[0] - 2.0 * x[1] + 0.5 * x[2];
    };
    CHECK(finite_diff_check(f, {0.1, 0.2, 0.3}) <= 1e-10);
  }
  SUBCASE("quadratic form") {
    // f = x^T A x with A = [[2,1],[1,3]]
    ScalarFunction f = [](std::span<const double> x, std::vector<double>* g) {
      if (g) *g = {4 * x[0] + 2 * x[1], 2 * x[0] + 6 * x[1]};
      return 2 * x[0] * x[0] + 2 * x[0] * x[1] + 3 * x[1] * x[1];
    };
    CHECK(finite_diff_check(f, {0.7, -1.3}) <= 1e-6);
  }
  SUBCASE("wrong gradient is detected") {
    ScalarFunction f = [](std::span<const double> x, std::vector<double>* g) {
      if (g) *g = {1.0};
      return x[0] * x[0];
    };
    CHECK(finite_diff_check(f, {2.0}) > 0.5);
  }
}

TEST_CASE("layer gradients match finite differences (64-bit, 20 seeds)") {
  for (const auto& [name, check] : testing::layer_checks()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CAPTURE(name);
      CAPTURE(seed);
      CHECK(check(seed) <= 1e-4);
    }
  }
}

TEST_CASE("determinism: same seed, same outputs") {
  auto run = [] {
    Rng rng(42);
    Conv2d<float> conv("c", 1, 2, 3, 1, Padding::Same, rng);
    Lstm<float> lstm("l", 2 * 16, 4, rng);
    Tensor<float> x({3, 1, 4, 4});
    for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
    auto y = conv.forward(x).reshaped({3, 32});
    return lstm.forward(y, SeqLayout::single(3));
  };
  CHECK(run() == run());
}
