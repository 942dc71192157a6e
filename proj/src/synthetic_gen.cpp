#include "bipath/synthetic_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace bipath {

void SceneSpec::validate() const {
  if (width < 64 || height < 64) throw std::invalid_argument("scene must be at least 64x64");
  if (frames < 2) throw std::invalid_argument("scene needs at least two frames");
  if (n_persons < 0 || n_distractors < 0) throw std::invalid_argument("person counts must be nonnegative");
  if (!(radius_lo > 0 && radius_lo <= radius_hi)) throw std::invalid_argument("radius range must be positive with lo <= hi");
  if (!(speed_lo >= 0 && speed_lo <= speed_hi)) throw std::invalid_argument("speed range must be nonnegative with lo <= hi");
  if (!(jitter >= 0)) throw std::invalid_argument("jitter amplitude must be nonnegative");
  if (!(luminance > 0 && luminance <= 1)) throw std::invalid_argument("luminance must lie in (0, 1]");
  if (octaves < 1) throw std::invalid_argument("octave count must be positive");
  const double margin = radius_hi + jitter + 1;
  if (2 * margin >= std::min(width, height)) throw std::invalid_argument("persons do not fit inside the frame");
  for (const PersonSpec& p : persons) {
    if (!(p.radius > 0)) throw std::invalid_argument("person radius must be positive");
    const double m = p.radius + jitter + 1;
    if (p.x < m || p.x > width - m || p.y < m || p.y > height - m) {
      throw std::invalid_argument("explicit person starts outside the reflective bounds");
    }
  }
}

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double lattice(std::uint64_t seed, int layer, long ix, long iy) {
  std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(layer)));
  h = mix(h ^ static_cast<std::uint64_t>(ix));
  h = mix(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

double value_noise(std::uint64_t seed, int layer, int octaves, double x, double y) {
  double total = 0, norm = 0, amp = 1, cell = 16;
  for (int o = 0; o < octaves; ++o) {
    const double gx = x / cell, gy = y / cell;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
    const double tx = fade(gx - fx), ty = fade(gy - fy);
    const int key = layer * 64 + o;
    const double a = lattice(seed, key, ix, iy), b = lattice(seed, key, ix + 1, iy);
    const double c = lattice(seed, key, ix, iy + 1), d = lattice(seed, key, ix + 1, iy + 1);
    total += amp * ((a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty);
    norm += amp;
    amp *= 0.6;
    cell = std::max(2.0, cell / 2);
  }
  return total / norm;
}

struct Body {
  double x, y, vx, vy, radius;
  float color[3];
  bool annotated;
};

float coverage(const Body& b, double px, double py) {
  const double d = std::hypot(px - b.x, py - b.y);
  return static_cast<float>(std::clamp(b.radius + 0.5 - d, 0.0, 1.0));
}

// Saturated clothing colour: random hue, saturation 0.7-1, value 0.75-1, so persons
// differ in chroma from the near-gray background regardless of its brightness.
template <class Rng>
void draw_color(float (&rgb)[3], Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 6.0 * unit(rng), s = 0.7 + 0.3 * unit(rng), v = 0.75 + 0.25 * unit(rng);
  const int sector = std::min(5, static_cast<int>(h));
  const double f = h - sector, p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  const double table[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<float>(table[sector][c]);
}

void advance(double& p, double& v, double lo, double hi) {
  p += v;
  // Bounces are resolved until the position is back inside; speeds never exceed the span.
  while (p < lo || p > hi) {
    if (p < lo) p = 2 * lo - p;
    if (p > hi) p = 2 * hi - p;
    v = -v;
  }
}

}  // namespace

Image value_noise_image(int width, int height, std::uint64_t seed, int octaves, double ox, double oy) {
  Image out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double sx = x + 0.5 - ox, sy = y + 0.5 - oy;
      const double shared = value_noise(seed, 0, octaves, sx, sy);
      for (int c = 0; c < 3; ++c) {
        const double tint = value_noise(seed, c + 1, octaves, sx, sy);
        out.at(c, x, y) = static_cast<float>(0.15 + 0.7 * (0.75 * shared + 0.25 * tint));
      }
    }
  }
  return out;
}

GeneratedSequence generate_sequence(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int w = spec.width, h = spec.height;

  std::vector<Body> bodies;
  auto random_body = [&](bool annotated, bool moving) {
    Body b{};
    b.radius = spec.radius_lo + (spec.radius_hi - spec.radius_lo) * unit(rng);
    const double m = spec.radius_hi + spec.jitter + 1;
    b.x = m + (w - 2 * m) * unit(rng);
    b.y = m + (h - 2 * m) * unit(rng);
    const double speed = spec.speed_lo + (spec.speed_hi - spec.speed_lo) * unit(rng);
    const double angle = 2 * M_PI * unit(rng);
    b.vx = moving ? speed * std::cos(angle) : 0.0;
    b.vy = moving ? speed * std::sin(angle) : 0.0;
    draw_color(b.color, rng);
    b.annotated = annotated;
    return b;
  };
  for (int i = 0; i < spec.n_distractors; ++i) bodies.push_back(random_body(false, false));
  if (spec.persons.empty()) {
    for (int i = 0; i < spec.n_persons; ++i) bodies.push_back(random_body(true, true));
  } else {
    for (const PersonSpec& p : spec.persons) {
      Body b{p.x, p.y, p.vx, p.vy, p.radius, {0.9f, 0.2f, 0.2f}, true};
      draw_color(b.color, rng);
      bodies.push_back(b);
    }
  }

  std::vector<double> jx(spec.frames, 0.0), jy(spec.frames, 0.0);
  for (int t = 0; t < spec.frames; ++t) {
    jx[t] = spec.jitter * (2 * unit(rng) - 1);
    jy[t] = spec.jitter * (2 * unit(rng) - 1);
  }

  // Centres per frame, before the global shift.
  std::vector<std::vector<Body>> states(spec.frames);
  states[0] = bodies;
  for (int t = 1; t < spec.frames; ++t) {
    states[t] = states[t - 1];
    for (Body& b : states[t]) {
      const double m = b.radius + spec.jitter + 1;
      advance(b.x, b.vx, m, w - m);
      advance(b.y, b.vy, m, h - m);
    }
  }

  GeneratedSequence seq;
  seq.spec = spec;
  for (int t = 0; t < spec.frames; ++t) {
    Image frame = value_noise_image(w, h, spec.texture_seed, spec.octaves, jx[t], jy[t]);
    DotMap dots(w, h);
    for (Body b : states[t]) {
      b.x += jx[t];
      b.y += jy[t];
      const int x0 = std::max(0, static_cast<int>(b.x - b.radius - 1));
      const int x1 = std::min(w - 1, static_cast<int>(b.x + b.radius + 1));
      const int y0 = std::max(0, static_cast<int>(b.y - b.radius - 1));
      const int y1 = std::min(h - 1, static_cast<int>(b.y + b.radius + 1));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const float a = coverage(b, x + 0.5, y + 0.5);
          if (a <= 0) continue;
          // Dome shading gives the interior texture to track; no kink at the centre, so
          // bilinear warps of a moving disc stay accurate.
          const double d = std::hypot(x + 0.5 - b.x, y + 0.5 - b.y) / b.radius;
          const float shade = static_cast<float>(0.55 + 0.45 * std::max(0.0, 1.0 - d * d));
          for (int c = 0; c < 3; ++c) frame.at(c, x, y) = (1 - a) * frame.at(c, x, y) + a * b.color[c] * shade;
        }
      }
      if (b.annotated) dots.add(b.x, b.y);
    }
    if (spec.luminance != 1.0) {
      for (float& v : frame.data) v = std::clamp(static_cast<float>(v * spec.luminance), 0.0f, 1.0f);
    }
    seq.frames.push_back(std::move(frame));
    seq.dots.push_back(std::move(dots));
  }

  for (int t = 0; t + 1 < spec.frames; ++t) {
    FlowField flow(w, h);
    std::vector<unsigned char> mask(flow.size(), 0);
    const float djx = static_cast<float>(jx[t + 1] - jx[t]);
    const float djy = static_cast<float>(jy[t + 1] - jy[t]);
    std::fill(flow.u.begin(), flow.u.end(), djx);
    std::fill(flow.v.begin(), flow.v.end(), djy);
    for (std::size_t i = 0; i < states[t].size(); ++i) {
      Body b = states[t][i];
      const Body& next = states[t + 1][i];
      b.x += jx[t];
      b.y += jy[t];
      const float du = static_cast<float>(next.x - states[t][i].x) + djx;
      const float dv = static_cast<float>(next.y - states[t][i].y) + djy;
      const int x0 = std::max(0, static_cast<int>(b.x - b.radius - 1));
      const int x1 = std::min(w - 1, static_cast<int>(b.x + b.radius + 1));
      const int y0 = std::max(0, static_cast<int>(b.y - b.radius - 1));
      const int y1 = std::min(h - 1, static_cast<int>(b.y + b.radius + 1));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (coverage(b, x + 0.5, y + 0.5) < 0.5f) continue;
          const std::size_t k = static_cast<std::size_t>(y) * w + x;
          flow.u[k] = du;
          flow.v[k] = dv;
          mask[k] = b.annotated ? 1 : 0;
        }
      }
    }
    seq.flow.push_back(std::move(flow));
    seq.person_masks.push_back(std::move(mask));
  }
  return seq;
}

std::vector<Image> apply_night(const std::vector<Image>& frames, double luminance) {
  if (!(luminance > 0 && luminance <= 1)) throw std::invalid_argument("luminance must lie in (0, 1]");
  std::vector<Image> out = frames;
  if (luminance == 1.0) return out;
  const float l = static_cast<float>(luminance);
  for (Image& f : out) {
    for (float& v : f.data) v = std::clamp(v * l, 0.0f, 1.0f);
  }
  return out;
}

}  // namespace bipath
