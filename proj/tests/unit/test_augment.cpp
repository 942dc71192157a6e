#include <doctest.h>

#include <cmath>
#include <random>

#include "bipath/augment.hpp"
#include "bipath/synthetic_gen.hpp"
#include "oracles.hpp"

using namespace bipath;

namespace {

SampleGroup make_group(int w, int h, int n_dots, std::uint64_t seed, FlowEncoding mode = FlowEncoding::polar) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0, w), uy(0, h);
  SampleGroup g;
  g.image = value_noise_image(w, h, seed, 3);
  const auto [a, b] = oracle::translated_pair(w, h, 1.5, -0.5, seed);
  g.flow = encode_flow(oracle::uniform_flow(w, h, 1.5f, -0.5f), frame_difference(a, b), mode);
  g.dots = DotMap(w, h);
  for (int i = 0; i < n_dots; ++i) g.dots.add(ux(rng), uy(rng));
  return g;
}

double mean_abs(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("augment config validation") {
  AugmentConfig c;
  CHECK_NOTHROW(c.validate());
  c.crop_size = 60;
  CHECK_THROWS(c.validate());
  c = {};
  c.gamma_prob = 1.5;
  CHECK_THROWS(c.validate());
  c = {};
  c.scale_lo = 2.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("random crop") {
  const SampleGroup g = make_group(64, 64, 100, 1);
  const SampleGroup same = random_crop(g, 64, 0, 0);
  CHECK(same.image == g.image);
  CHECK(same.flow == g.flow);
  CHECK(same.dots == g.dots);

  SampleGroup one = make_group(64, 64, 0, 2);
  one.dots.add(10, 10);
  CHECK(random_crop(one, 32, 20, 20).dots.size() == 0);

  const SampleGroup c = random_crop(g, 24, 13, 29);
  std::vector<Dot> expect;
  for (const Dot& d : g.dots.dots())
    if (d.x >= 13 && d.x < 37 && d.y >= 29 && d.y < 53) expect.push_back({d.x - 13, d.y - 29});
  CHECK(c.dots.dots() == expect);
  CHECK_THROWS_AS(random_crop(g, 32, 40, 0), std::out_of_range);
}

TEST_CASE("flip is an involution and corrects flow") {
  for (FlowEncoding mode : {FlowEncoding::polar, FlowEncoding::cartesian}) {
    const SampleGroup g = make_group(48, 40, 30, 3, mode);
    for (FlipAxis axis : {FlipAxis::horizontal, FlipAxis::vertical}) {
      const SampleGroup twice = flip(flip(g, axis), axis);
      CHECK(twice.image == g.image);
      CHECK(twice.flow == g.flow);
      CHECK(twice.dots == g.dots);
    }
  }
  const SampleGroup c = make_group(16, 16, 0, 4, FlowEncoding::cartesian);
  SampleGroup right = c;
  right.flow = encode_flow(oracle::uniform_flow(16, 16, 1, 0), Image(16, 16, 1, 0.5f), FlowEncoding::cartesian);
  const FlowField back = decode_flow(flip(right, FlipAxis::horizontal).flow);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.u[i] == -1.0f);
    CHECK(back.v[i] == 0.0f);
  }
}

TEST_CASE("flipped flow matches recomputed flow") {
  const auto [a, b] = oracle::translated_pair(64, 64, 2.0, 1.0, 12);
  for (FlowEncoding mode : {FlowEncoding::polar, FlowEncoding::cartesian}) {
    SampleGroup g;
    g.image = a;
    g.flow = encode_flow(dis_flow(a, b), frame_difference(a, b), mode);
    g.dots = DotMap(64, 64);
    for (FlipAxis axis : {FlipAxis::horizontal, FlipAxis::vertical}) {
      const bool h = axis == FlipAxis::horizontal;
      const FlowField flipped = decode_flow(flip(g, axis).flow);
      const FlowField recomputed = dis_flow(mirror(a, h), mirror(b, h));
      CHECK(mean_abs(flipped.u, recomputed.u) < 0.2);
      CHECK(mean_abs(flipped.v, recomputed.v) < 0.2);
    }
  }
}

TEST_CASE("scaled flow matches recomputed flow") {
  const auto [a, b] = oracle::translated_pair(64, 64, 2.0, 1.0, 13);
  SampleGroup g;
  g.image = a;
  g.flow = encode_flow(dis_flow(a, b), frame_difference(a, b), FlowEncoding::polar);
  g.dots = DotMap(64, 64);
  const double factor = 1.5;
  const FlowField scaled = decode_flow(random_scale(g, factor).flow);
  const int w = scaled_extent(64, factor);
  Image sa = resize_bilinear(a, w, w, factor), sb = resize_bilinear(b, w, w, factor);
  clamp_unit(sa);
  clamp_unit(sb);
  const FlowField recomputed = dis_flow(sa, sb);
  CHECK(mean_abs(scaled.u, recomputed.u) < 0.3);
  CHECK(mean_abs(scaled.v, recomputed.v) < 0.3);
}

TEST_CASE("gamma") {
  const Image img = value_noise_image(16, 16, 2, 3);
  CHECK(gamma_correct(img, 1.0) == img);
  Image quarter(1, 1, 3, 0.25f);
  CHECK(gamma_correct(quarter, 2.0).data[0] == 0.0625f);
  Image small(1, 1, 3, 0.0625f);
  CHECK(gamma_correct(small, 0.4).data[0] == doctest::Approx(std::pow(0.0625, 0.4)).epsilon(1e-6));
  CHECK_THROWS(gamma_correct(img, 0.0));
}

TEST_CASE("random scale") {
  SampleGroup g = make_group(200, 100, 0, 5);
  g.dots.add(100, 50);
  const SampleGroup s = random_scale(g, 1.5);
  CHECK(s.width() == 300);
  CHECK(s.height() == 150);
  REQUIRE(s.dots.size() == 1);
  CHECK(s.dots.dots()[0] == Dot{150, 75});
  const SampleGroup same = random_scale(g, 1.0);
  CHECK(same.image == g.image);
  CHECK_THROWS(random_scale(g, 0.5, 64));
}

TEST_CASE("pipeline identity, determinism and rates") {
  const SampleGroup g = make_group(64, 64, 40, 6);
  AugmentConfig id;
  id.crop_size = 64;
  id.hflip_prob = id.vflip_prob = id.gamma_prob = 0;
  id.scale_lo = id.scale_hi = 1;
  std::mt19937_64 r0(1);
  const SampleGroup same = apply_pipeline(g, id, r0);
  CHECK(same.image == g.image);
  CHECK(same.dots == g.dots);

  AugmentConfig cfg;
  cfg.crop_size = 32;
  cfg.scale_lo = 0.6;
  cfg.scale_hi = 1.8;
  std::mt19937_64 ra(9), rb(9);
  const SampleGroup x = apply_pipeline(g, cfg, ra), y = apply_pipeline(g, cfg, rb);
  CHECK(x.image == y.image);
  CHECK(x.flow == y.flow);
  CHECK(x.dots == y.dots);

  std::mt19937_64 rng(10);
  int applied = 0;
  const SampleGroup tiny = make_group(16, 16, 3, 7);
  AugmentConfig t;
  t.crop_size = 8;
  t.scale_lo = 0.6;
  t.scale_hi = 1.0;
  for (int i = 0; i < 1000; ++i) {
    AugmentDraw d;
    const SampleGroup out = apply_pipeline(tiny, t, rng, &d);
    applied += d.gamma_applied;
    for (float v : out.image.data) REQUIRE((v >= 0.0f && v <= 1.0f));
  }
  CHECK(applied >= 450);
  CHECK(applied <= 550);
}
