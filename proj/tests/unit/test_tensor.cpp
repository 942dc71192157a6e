#include <doctest.h>

#include <cmath>
#include <limits>

#include "bipath/autodiff.hpp"
#include "oracles.hpp"

using namespace bipath;

namespace {

using Op = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

Tensor64 t64(Shape s, std::vector<double> v) { return Tensor64(std::move(s), std::move(v)); }

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  CHECK(t.dim(1) == 3);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
  CHECK_THROWS_AS(t.dim(3), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  CHECK(t.reshaped({6, 4}).shape() == Shape{6, 4});
  CHECK(shape_string({1, 2}) == "[1,2]");
}

TEST_CASE("conv2d identity kernel") {
  std::mt19937_64 rng(1);
  Tape<float> tape;
  auto x = tape.constant(oracle::random_tensor<float>({1, 1, 3, 3}, rng));
  auto w = tape.constant(Tensor({1, 1, 1, 1}, 1.0f));
  auto b = tape.constant(Tensor({1}));
  auto y = conv2d(x, w, b, {1, 0, 1});
  CHECK(y.value() == x.value());
}

TEST_CASE("conv2d dilation 2 padding 2 keeps 8x8") {
  Tape<float> tape;
  auto y = conv2d(tape.constant(Tensor({1, 1, 8, 8})), tape.constant(Tensor({1, 1, 3, 3})), tape.constant(Tensor({1})),
                  {1, 2, 2});
  CHECK(y.shape() == Shape{1, 1, 8, 8});
  CHECK(conv_output_extent(5, 3, {1, 2, 2}) == 5);
  CHECK_THROWS_AS(conv_output_extent(2, 3, {1, 0, 2}), ShapeError);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  std::mt19937_64 rng(7);
  {
    Tape<float> tape;
    const Tensor x = oracle::random_tensor<float>({1, 2, 5, 5}, rng);
    const Tensor w = oracle::random_tensor<float>({3, 2, 3, 3}, rng);
    const Tensor b = oracle::random_tensor<float>({3}, rng);
    auto y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), {1, 1, 1});
    CHECK(oracle::relative_error(y.value(), oracle::conv2d(x, w, b, 1, 1, 1)) < 1e-5);
  }
  // Every small geometry up to 6x6 with stride, padding and dilation mixed in.
  std::uniform_int_distribution<int> dim(1, 6), small(1, 2), pad(0, 2), k(1, 3);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int H = dim(rng), W = dim(rng), C = small(rng), O = small(rng), K = k(rng);
    const ConvSpec spec{small(rng), pad(rng), small(rng)};
    if (H + 2 * spec.padding - spec.dilation * (K - 1) - 1 < 0 || W + 2 * spec.padding - spec.dilation * (K - 1) - 1 < 0)
      continue;
    Tape<float> tape;
    const Tensor x = oracle::random_tensor<float>({2, C, H, W}, rng);
    const Tensor w = oracle::random_tensor<float>({O, C, K, K}, rng);
    const Tensor b = oracle::random_tensor<float>({O}, rng);
    auto y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), spec);
    REQUIRE(oracle::relative_error(y.value(), oracle::conv2d(x, w, b, spec.stride, spec.padding, spec.dilation)) <
            1e-5);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("conv2d rejects channel mismatch and bad specs") {
  Tape<float> tape;
  auto x = tape.constant(Tensor({1, 2, 4, 4}));
  CHECK_THROWS_AS(conv2d(x, tape.constant(Tensor({1, 3, 3, 3})), tape.constant(Tensor({1})), {}), ShapeError);
  CHECK_THROWS_AS(conv2d(x, tape.constant(Tensor({1, 2, 3, 3})), tape.constant(Tensor({1})), {0, 0, 1}),
                  std::invalid_argument);
}

TEST_CASE("pointwise ops") {
  Tape<float> tape;
  auto r = relu(tape.constant(Tensor({3}, std::vector<float>{-1, 0, 2})));
  CHECK(r.value().vec() == std::vector<float>{0, 0, 2});

  std::mt19937_64 rng(3);
  auto a = tape.constant(oracle::random_tensor<float>({1, 64, 2, 2}, rng));
  auto b = tape.constant(oracle::random_tensor<float>({1, 64, 2, 2}, rng));
  const Var<float> both[2] = {a, b};
  auto c = concat_channels<float>(both);
  CHECK(c.shape() == Shape{1, 128, 2, 2});
  CHECK(slice_channels(c, 0, 64).value() == a.value());
  CHECK(slice_channels(c, 64, 64).value() == b.value());

  auto g = tape.constant(Tensor({1}));
  CHECK(scale_add(a, b, g).value() == a.value());
  CHECK_THROWS_AS(add(a, tape.constant(Tensor({1, 3, 2, 2}))), ShapeError);
}

TEST_CASE("concat backward routes one-hot gradients to their source") {
  Tape<double> tape;
  auto a = tape.variable(Tensor64({1, 2, 1, 2}));
  auto b = tape.variable(Tensor64({1, 1, 1, 2}));
  const Var<double> both[2] = {a, b};
  auto c = concat_channels<double>(both);
  for (std::size_t hot = 0; hot < 6; ++hot) {
    Tape<double> t2;
    auto a2 = t2.variable(a.value());
    auto b2 = t2.variable(b.value());
    const Var<double> parts[2] = {a2, b2};
    auto c2 = concat_channels<double>(parts);
    Tensor64 seed(c2.shape());
    seed[hot] = 1;
    t2.backward(c2, seed);
    const Tensor64 ga = a2.grad(), gb = b2.grad();
    for (std::size_t i = 0; i < 4; ++i) CHECK(ga[i] == (i == hot ? 1.0 : 0.0));
    for (std::size_t i = 0; i < 2; ++i) CHECK(gb[i] == (i + 4 == hot ? 1.0 : 0.0));
  }
  CHECK(c.shape() == Shape{1, 3, 1, 2});
}

TEST_CASE("softmax rows") {
  Tape<float> tape;
  auto s = softmax_rows(tape.constant(Tensor({1, 4}, 2.0f)));
  for (float v : s.value().vec()) CHECK(v == doctest::Approx(0.25f));
  auto big = softmax_rows(tape.constant(Tensor({1, 2}, std::vector<float>{1000, 0})));
  CHECK(big.value()[0] == doctest::Approx(1.0));
  CHECK(big.value()[1] == doctest::Approx(0.0));
  std::mt19937_64 rng(5);
  auto r = softmax_rows(tape.constant(oracle::random_tensor<float>({7, 13}, rng, -20, 20)));
  for (int i = 0; i < 7; ++i) {
    double sum = 0;
    for (int j = 0; j < 13; ++j) sum += r.value()[i * 13 + j];
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("matmul matches the nested-loop oracle") {
  std::mt19937_64 rng(11);
  Tape<float> tape;
  const Tensor a = oracle::random_tensor<float>({2, 3}, rng), b = oracle::random_tensor<float>({3, 2}, rng);
  CHECK(oracle::relative_error(matmul(tape.constant(a), tape.constant(b)).value(), oracle::matmul(a, b)) < 1e-6);
  const Tensor ba = oracle::random_tensor<float>({2, 3, 4}, rng), bb = oracle::random_tensor<float>({2, 4, 5}, rng);
  auto y = matmul(tape.constant(ba), tape.constant(bb));
  for (int k = 0; k < 2; ++k) {
    Tensor sa({3, 4}, std::vector<float>(ba.vec().begin() + k * 12, ba.vec().begin() + (k + 1) * 12));
    Tensor sb({4, 5}, std::vector<float>(bb.vec().begin() + k * 20, bb.vec().begin() + (k + 1) * 20));
    Tensor sy({3, 5}, std::vector<float>(y.value().vec().begin() + k * 15, y.value().vec().begin() + (k + 1) * 15));
    CHECK(oracle::relative_error(sy, oracle::matmul(sa, sb)) < 1e-6);
  }
  CHECK_THROWS_AS(matmul(tape.constant(a), tape.constant(a)), ShapeError);
}

TEST_CASE("bilinear upsample") {
  Tape<float> tape;
  auto c = bilinear_upsample(tape.constant(Tensor({1, 1, 3, 2}, 3.5f)), 8);
  CHECK(c.shape() == Shape{1, 1, 24, 16});
  for (float v : c.value().vec()) CHECK(v == 3.5f);
  // Half-pixel centres: outputs sample the ramp at -0.25 (clamped), 0.25, 0.75, 1.25 (clamped).
  auto r = bilinear_upsample(tape.constant(Tensor({1, 1, 1, 2}, std::vector<float>{0, 1})), 2);
  CHECK(r.value().vec() == std::vector<float>{0.0f, 0.25f, 0.75f, 1.0f, 0.0f, 0.25f, 0.75f, 1.0f});
  auto big = bilinear_upsample(tape.constant(Tensor({1, 64, 72, 72})), 8);
  CHECK(big.shape() == Shape{1, 64, 576, 576});
  CHECK_THROWS_AS(bilinear_upsample(tape.constant(Tensor({1, 1, 2, 2})), 0), std::invalid_argument);
}

TEST_CASE("mse loss") {
  std::mt19937_64 rng(2);
  Tape<float> tape;
  const Tensor g = oracle::random_tensor<float>({1, 1, 4, 5}, rng);
  CHECK(mse_loss(tape.constant(g), tape.constant(g)).value()[0] == 0.0f);
  Tensor plus = g;
  for (auto& v : plus.data()) v += 1;
  CHECK(mse_loss(tape.constant(plus), tape.constant(g)).value()[0] == doctest::Approx(1.0).epsilon(1e-6));
  const Tensor p = oracle::random_tensor<float>({1, 1, 4, 5}, rng);
  double direct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) direct += (double(p[i]) - g[i]) * (double(p[i]) - g[i]);
  direct /= static_cast<double>(p.size());
  CHECK(mse_loss(tape.constant(p), tape.constant(g)).value()[0] == doctest::Approx(direct).epsilon(1e-6));
  CHECK_THROWS_AS(mse_loss(tape.constant(p), tape.constant(Tensor({1, 1, 5, 4}))), ShapeError);
}

TEST_CASE("non-finite values are errors") {
  Tape<float> tape;
  Tensor bad({2}, 1.0f);
  bad[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(tape.constant(bad), NumericError);
  auto big = tape.constant(Tensor({1, 2}, std::vector<float>{3e38f, 3e38f}));
  CHECK_THROWS_AS(add(big, big), NumericError);
}

TEST_CASE("tape backward runs once and param grads accumulate") {
  Param<double> p("p", t64({2}, {1.0, 2.0}));
  for (int pass = 0; pass < 2; ++pass) {
    Tape<double> tape;
    auto s = sum(tape.param(p));
    tape.backward(s);
    CHECK_THROWS_AS(tape.backward(s), std::logic_error);
  }
  CHECK(p.grad.vec() == std::vector<double>{2.0, 2.0});
  p.zero_grad();
  CHECK(p.grad.vec() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("gradient check of elementary ops") {
  std::mt19937_64 rng(19);
  GradCheckOptions opt;
  auto rt = [&](Shape s) { return oracle::random_tensor<double>(s, rng); };

  CHECK(gradient_check<double>(Op([](Tape<double>&, std::span<const Var<double>> v) { return add(v[0], v[1]); }),
                               {rt({1, 2, 3, 3}), rt({1, 2, 3, 3})}, opt) < 1e-9);
  CHECK(gradient_check<double>(Op([](Tape<double>&, std::span<const Var<double>> v) {
                                 return conv2d(v[0], v[1], v[2], {1, 1, 1});
                               }),
                               {rt({1, 2, 4, 4}), rt({3, 2, 3, 3}), rt({3})}, opt) < 1e-5);
}
