#include <doctest.h>

#include <cmath>

#include "bipath/synthetic_gen.hpp"

using namespace bipath;

TEST_CASE("scene spec validation") {
  SceneSpec s;
  CHECK_NOTHROW(s.validate());
  s.width = 32;
  CHECK_THROWS(s.validate());
  s = {};
  s.frames = 1;
  CHECK_THROWS(s.validate());
  s = {};
  s.luminance = 0;
  CHECK_THROWS(s.validate());
  s = {};
  s.speed_lo = -1;
  CHECK_THROWS(s.validate());
}

TEST_CASE("empty static scene") {
  SceneSpec s;
  s.n_persons = 0;
  const GeneratedSequence g = generate_sequence(s);
  REQUIRE(g.frames.size() == 6);
  for (const Image& f : g.frames) CHECK(f == g.frames[0]);
  for (const FlowField& f : g.flow) {
    for (float u : f.u) REQUIRE(u == 0.0f);
    for (float v : f.v) REQUIRE(v == 0.0f);
  }
}

TEST_CASE("explicit person kinematics") {
  SceneSpec s;
  s.width = s.height = 64;
  s.n_persons = 1;
  s.persons = {{32, 32, 2, 0, 4}};
  s.frames = 3;
  const GeneratedSequence g = generate_sequence(s);
  REQUIRE(g.dots[1].size() == 1);
  CHECK(g.dots[1].dots()[0] == Dot{34, 32});
  CHECK(g.dots[2].dots()[0] == Dot{36, 32});
  // Person pixels carry the person's velocity, background none.
  const FlowField& f = g.flow[0];
  CHECK(f.u[32 * 64 + 32] == 2.0f);
  CHECK(f.u[5 * 64 + 5] == 0.0f);
}

TEST_CASE("generation is deterministic and conserves persons") {
  SceneSpec s;
  s.jitter = 0.7;
  s.n_distractors = 3;
  s.frames = 8;
  const GeneratedSequence a = generate_sequence(s), b = generate_sequence(s);
  CHECK(a.frames == b.frames);
  CHECK(a.dots == b.dots);
  CHECK(a.flow == b.flow);
  for (const DotMap& d : a.dots) CHECK(d.size() == 12);
  for (const Image& f : a.frames)
    for (float v : f.data) REQUIRE((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("reflective boundaries keep fast persons in frame") {
  SceneSpec s;
  s.width = s.height = 64;
  s.speed_lo = 5;
  s.speed_hi = 8;
  s.frames = 40;
  s.n_persons = 6;
  const GeneratedSequence g = generate_sequence(s);
  for (const DotMap& d : g.dots) CHECK(d.size() == 6);
}

TEST_CASE("background flow equals the jitter difference") {
  SceneSpec s;
  s.n_persons = 0;
  s.jitter = 1.0;
  const GeneratedSequence g = generate_sequence(s);
  for (const FlowField& f : g.flow) {
    for (float u : f.u) REQUIRE(u == f.u[0]);
    for (float v : f.v) REQUIRE(v == f.v[0]);
  }
}

TEST_CASE("true flow warps frame t onto frame t+1 on person pixels") {
  // Separate lanes, so no person is occluded in the next frame; the last one bounces off the right border.
  SceneSpec s;
  s.jitter = 0.5;
  s.frames = 8;
  s.persons = {{20, 20, 1.3, 0.4, 4}, {60, 50, -0.8, 0.9, 3.5}, {30, 100, 1.7, -0.6, 5}, {112, 75, 1.9, 0.2, 4}};
  s.n_persons = 4;
  const GeneratedSequence g = generate_sequence(s);
  for (std::size_t t = 0; t < g.flow.size(); ++t) {
    const FlowField& f = g.flow[t];
    const std::vector<unsigned char>& mask = g.person_masks[t];
    double worst = 0;
    int n = 0;
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * s.width + x;
        if (!mask[i]) continue;
        // Interior person pixels only: soft edges blend with the background.
        bool interior = true;
        for (int dy = -1; dy <= 1 && interior; ++dy)
          for (int dx = -1; dx <= 1 && interior; ++dx) {
            const int xx = std::clamp(x + dx, 0, s.width - 1), yy = std::clamp(y + dy, 0, s.height - 1);
            interior = mask[static_cast<std::size_t>(yy) * s.width + xx] != 0;
          }
        if (!interior) continue;
        for (int c = 0; c < 3; ++c) {
          const float warped = sample_bilinear(g.frames[t + 1], c, x + f.u[i], y + f.v[i]);
          worst = std::max(worst, static_cast<double>(std::abs(warped - g.frames[t].at(c, x, y))));
        }
        ++n;
      }
    CHECK(n > 0);
    CHECK(worst < 0.05);
  }
}

TEST_CASE("night rendering") {
  const GeneratedSequence g = generate_sequence(SceneSpec{});
  CHECK(apply_night(g.frames, 1.0) == g.frames);
  const std::vector<Image> one = {Image(1, 1, 3, 0.8f)};
  CHECK(apply_night(one, 0.1)[0].data[0] == doctest::Approx(0.08f));
  const auto dark = apply_night(g.frames, 0.1);
  double day = 0, night = 0;
  for (std::size_t t = 0; t < dark.size(); ++t) {
    day += mean_value(g.frames[t]);
    night += mean_value(dark[t]);
  }
  CHECK(night < 0.15 * day);
  CHECK_THROWS(apply_night(g.frames, 0.0));
  CHECK_THROWS(apply_night(g.frames, 1.5));
}

TEST_CASE("value noise range and shift continuity") {
  const Image a = value_noise_image(64, 64, 7, 4);
  for (float v : a.data) REQUIRE((v >= 0.15f && v <= 0.85f));
  const Image b = value_noise_image(64, 64, 7, 4, 1.0, 0.0);
  // Shifting by one pixel moves the texture by exactly one pixel.
  for (int y = 0; y < 64; ++y)
    for (int x = 1; x < 64; ++x) REQUIRE(b.at(0, x, y) == doctest::Approx(a.at(0, x - 1, y)).epsilon(1e-5));
}
