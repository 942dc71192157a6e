#include "bipath/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bipath {

void SampleGroup::check() const {
  const bool ok = image.channels == 3 && flow.planes.channels == 3 && flow.width() == image.width &&
                  flow.height() == image.height && dots.width() == image.width && dots.height() == image.height;
  if (!ok) throw std::logic_error("sample group members disagree on frame size");
}

void AugmentConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  };
  if (crop_size < 1) throw std::invalid_argument("crop size must be positive");
  if (crop_size % 8 != 0) throw std::invalid_argument("crop size must be divisible by 8");
  prob(hflip_prob, "hflip_prob");
  prob(vflip_prob, "vflip_prob");
  prob(gamma_prob, "gamma_prob");
  if (!(gamma_lo > 0 && gamma_lo <= gamma_hi)) throw std::invalid_argument("gamma range must be positive with lo <= hi");
  if (!(scale_lo > 0 && scale_lo <= scale_hi)) throw std::invalid_argument("scale range must be positive with lo <= hi");
}

int scaled_extent(int extent, double factor) {
  return static_cast<int>(std::ceil(extent * factor - 1e-9));
}

SampleGroup random_crop(const SampleGroup& g, int size, int ox, int oy) {
  g.check();
  if (size < 1 || ox < 0 || oy < 0 || ox + size > g.width() || oy + size > g.height()) {
    throw std::out_of_range("crop window exceeds frame bounds");
  }
  SampleGroup out;
  out.sequence_id = g.sequence_id;
  out.frame_index = g.frame_index;
  out.image = crop(g.image, ox, oy, size, size);
  out.flow = g.flow;
  out.flow.planes = crop(g.flow.planes, ox, oy, size, size);
  out.dots = DotMap(size, size);
  for (const Dot& d : g.dots.dots()) {
    if (d.x >= ox && d.x < ox + size && d.y >= oy && d.y < oy + size) out.dots.add(d.x - ox, d.y - oy);
  }
  out.check();
  return out;
}

namespace {

// Exact on the 2^-24 lattice encoded channels are stored on.
float mirror_turn_horizontal(float h) { return h <= 0.5f ? 0.5f - h : 1.5f - h; }
float mirror_turn_vertical(float h) { return h == 0.0f ? 0.0f : 1.0f - h; }

double mirror_coordinate(double c, int extent) { return c == 0.0 ? 0.0 : extent - c; }

}  // namespace

SampleGroup flip(const SampleGroup& g, FlipAxis axis, bool correct_flow) {
  g.check();
  const bool horizontal = axis == FlipAxis::horizontal;
  SampleGroup out;
  out.sequence_id = g.sequence_id;
  out.frame_index = g.frame_index;
  out.image = mirror(g.image, horizontal);
  out.flow = g.flow;
  out.flow.planes = mirror(g.flow.planes, horizontal);
  if (correct_flow) {
    if (g.flow.mode == FlowEncoding::cartesian) {
      for (float& c : out.flow.planes.plane(horizontal ? 0 : 1)) c = 1.0f - c;
    } else {
      for (float& h : out.flow.planes.plane(0)) h = horizontal ? mirror_turn_horizontal(h) : mirror_turn_vertical(h);
    }
  }
  out.dots = DotMap(g.width(), g.height());
  for (const Dot& d : g.dots.dots()) {
    if (horizontal) {
      out.dots.add(mirror_coordinate(d.x, g.width()), d.y);
    } else {
      out.dots.add(d.x, mirror_coordinate(d.y, g.height()));
    }
  }
  out.check();
  return out;
}

Image gamma_correct(const Image& image, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
  Image out = image;
  if (gamma == 1.0) return out;
  const float gf = static_cast<float>(gamma);
  for (float& v : out.data) v = std::clamp(std::pow(v, gf), 0.0f, 1.0f);
  return out;
}

SampleGroup random_scale(const SampleGroup& g, double factor, int min_extent, bool correct_flow) {
  g.check();
  if (!(factor > 0)) throw std::invalid_argument("scale factor must be positive");
  const int w = scaled_extent(g.width(), factor);
  const int h = scaled_extent(g.height(), factor);
  if (w < min_extent || h < min_extent) {
    throw std::invalid_argument("scaled frame " + std::to_string(w) + "x" + std::to_string(h) +
                                " is smaller than the crop size " + std::to_string(min_extent));
  }
  if (factor == 1.0) return g;

  SampleGroup out;
  out.sequence_id = g.sequence_id;
  out.frame_index = g.frame_index;
  out.image = resize_bilinear(g.image, w, h, factor);
  clamp_unit(out.image);
  if (correct_flow) {
    Image f_sub(g.width(), g.height(), 1);
    const auto src = g.flow.planes.plane(2);
    f_sub.data.assign(src.begin(), src.end());
    const FlowField field = resize_flow(decode_flow(g.flow), w, h, factor);
    out.flow = encode_flow(field, resize_bilinear(f_sub, w, h, factor), g.flow.mode);
  } else {
    out.flow = g.flow;
    out.flow.planes = resize_bilinear(g.flow.planes, w, h, factor);
  }
  out.dots = DotMap(w, h);
  const double below_edge_x = w - 1.0 / 1048576.0;
  const double below_edge_y = h - 1.0 / 1048576.0;
  for (const Dot& d : g.dots.dots()) {
    out.dots.add(std::min(snap_coordinate(d.x * factor), below_edge_x),
                 std::min(snap_coordinate(d.y * factor), below_edge_y));
  }
  out.check();
  return out;
}

SampleGroup apply_pipeline(const SampleGroup& g, const AugmentConfig& cfg, std::mt19937_64& rng,
                           AugmentDraw* draw) {
  cfg.validate();
  AugmentDraw d;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  d.scale = cfg.scale_lo + (cfg.scale_hi - cfg.scale_lo) * unit(rng);
  SampleGroup out = random_scale(g, d.scale, cfg.crop_size, cfg.correct_flow);

  d.crop_x = std::uniform_int_distribution<int>(0, out.width() - cfg.crop_size)(rng);
  d.crop_y = std::uniform_int_distribution<int>(0, out.height() - cfg.crop_size)(rng);
  out = random_crop(out, cfg.crop_size, d.crop_x, d.crop_y);

  d.hflip = unit(rng) < cfg.hflip_prob;
  d.vflip = unit(rng) < cfg.vflip_prob;
  if (d.hflip) out = flip(out, FlipAxis::horizontal, cfg.correct_flow);
  if (d.vflip) out = flip(out, FlipAxis::vertical, cfg.correct_flow);

  d.gamma_applied = unit(rng) < cfg.gamma_prob;
  const double gamma = cfg.gamma_lo + (cfg.gamma_hi - cfg.gamma_lo) * unit(rng);
  if (d.gamma_applied) {
    d.gamma = gamma;
    out.image = gamma_correct(out.image, gamma);
  }
  out.check();
  if (draw) *draw = d;
  return out;
}

}  // namespace bipath
