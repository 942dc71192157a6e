#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bipath/optical_flow.hpp"

namespace bipath {
namespace {

// Encoded channels live on a 2^-24 lattice so that the flip remaps
// (c -> 1 - c, h -> 0.5 - h, h -> 1 - h) are exact float operations.
float snap_unit(double value) {
  constexpr double kScale = 16777216.0;  // 2^24
  return static_cast<float>(std::nearbyint(value * kScale) / kScale);
}

void check_same(const FlowField& flow, const Image& plane) {
  if (flow.width != plane.width || flow.height != plane.height) {
    throw std::invalid_argument("flow and frame-difference sizes differ");
  }
}

}  // namespace

float FlowField::magnitude(std::size_t i) const { return std::sqrt(u[i] * u[i] + v[i] * v[i]); }

float FlowField::max_magnitude() const {
  float m = 0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, magnitude(i));
  return m;
}

std::string to_string(FlowEncoding mode) { return mode == FlowEncoding::polar ? "polar" : "cartesian"; }

FlowEncoding parse_flow_encoding(const std::string& text) {
  if (text == "polar") return FlowEncoding::polar;
  if (text == "cartesian") return FlowEncoding::cartesian;
  throw std::invalid_argument("unknown flow encoding '" + text + "' (expected polar or cartesian)");
}

Image frame_difference(const Image& frame_t, const Image& frame_t1) {
  if (!frame_t.same_size(frame_t1)) throw std::invalid_argument("frame_difference: frame size mismatch");
  const Image a = luminance(frame_t);
  const Image b = luminance(frame_t1);
  Image out(a.width, a.height, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] - b.data[i] + 1.0f) * 0.5f;
  return out;
}

FlowField threshold_filter(const FlowField& flow, double tau) {
  if (!(tau >= 0)) throw std::invalid_argument("threshold_filter: tau must be nonnegative");
  FlowField out = flow;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.magnitude(i) < tau) {
      out.u[i] = 0.0f;
      out.v[i] = 0.0f;
    }
  }
  return out;
}

FlowInput encode_flow(const FlowField& flow, const Image& f_sub, FlowEncoding mode) {
  check_same(flow, f_sub);
  if (f_sub.channels != 1) throw std::invalid_argument("encode_flow: frame difference must be one channel");
  FlowInput out;
  out.mode = mode;
  const float m = flow.max_magnitude();
  out.max_magnitude = m > 0 ? m : 1.0f;
  out.planes = Image(flow.width, flow.height, 3);
  auto c0 = out.planes.plane(0);
  auto c1 = out.planes.plane(1);
  const double inv = 1.0 / out.max_magnitude;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (mode == FlowEncoding::cartesian) {
      c0[i] = snap_unit(std::clamp((flow.u[i] * inv + 1.0) * 0.5, 0.0, 1.0));
      c1[i] = snap_unit(std::clamp((flow.v[i] * inv + 1.0) * 0.5, 0.0, 1.0));
    } else {
      double turn = std::atan2(static_cast<double>(flow.v[i]), static_cast<double>(flow.u[i])) /
                    (2.0 * std::numbers::pi);
      if (turn < 0) turn += 1.0;
      float h = snap_unit(turn) + 0.0f;
      if (h >= 1.0f) h = 0.0f;
      c0[i] = h;
      c1[i] = snap_unit(std::min(1.0, flow.magnitude(i) * inv));
    }
  }
  auto c2 = out.planes.plane(2);
  std::copy(f_sub.data.begin(), f_sub.data.end(), c2.begin());
  return out;
}

FlowField decode_flow(const FlowInput& input) {
  FlowField out(input.width(), input.height());
  auto c0 = input.planes.plane(0);
  auto c1 = input.planes.plane(1);
  const double m = input.max_magnitude;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (input.mode == FlowEncoding::cartesian) {
      out.u[i] = static_cast<float>((2.0 * c0[i] - 1.0) * m);
      out.v[i] = static_cast<float>((2.0 * c1[i] - 1.0) * m);
    } else {
      const double angle = c0[i] * 2.0 * std::numbers::pi;
      const double mag = c1[i] * m;
      out.u[i] = static_cast<float>(mag * std::cos(angle));
      out.v[i] = static_cast<float>(mag * std::sin(angle));
    }
  }
  return out;
}

FlowField mirror_flow(const FlowField& flow, bool horizontal) {
  FlowField out(flow.width, flow.height);
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      const int sx = horizontal ? flow.width - 1 - x : x;
      const int sy = horizontal ? y : flow.height - 1 - y;
      const std::size_t src = static_cast<std::size_t>(sy) * flow.width + sx;
      const std::size_t dst = static_cast<std::size_t>(y) * flow.width + x;
      out.u[dst] = horizontal ? -flow.u[src] : flow.u[src];
      out.v[dst] = horizontal ? flow.v[src] : -flow.v[src];
    }
  return out;
}

FlowField resize_flow(const FlowField& flow, int out_w, int out_h, double factor) {
  Image u(flow.width, flow.height, 1), v(flow.width, flow.height, 1);
  u.data = flow.u;
  v.data = flow.v;
  const Image ru = resize_bilinear(u, out_w, out_h, factor);
  const Image rv = resize_bilinear(v, out_w, out_h, factor);
  FlowField out(out_w, out_h);
  const float f = static_cast<float>(factor);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.u[i] = ru.data[i] * f;
    out.v[i] = rv.data[i] * f;
  }
  return out;
}

double mean_endpoint_error(const FlowField& a, const FlowField& b, const std::vector<unsigned char>* mask) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("endpoint error: size mismatch");
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    acc += std::hypot(static_cast<double>(a.u[i]) - b.u[i], static_cast<double>(a.v[i]) - b.v[i]);
    ++n;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace bipath
