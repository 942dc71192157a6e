#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "bipath/density_metrics.hpp"
#include "bipath/image.hpp"
#include "bipath/optical_flow.hpp"

namespace bipath {

/// One training group: RGB frame, its flow-branch input, and its head annotations.
struct SampleGroup {
  Image image;
  FlowInput flow;
  DotMap dots;
  std::string sequence_id;
  int frame_index = 0;

  int width() const noexcept { return image.width; }
  int height() const noexcept { return image.height; }
  /// Throws std::logic_error unless image, flow and dots share one frame size.
  void check() const;
};

struct AugmentConfig {
  int crop_size = 576;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double gamma_prob = 0.5;
  double gamma_lo = 0.4;
  double gamma_hi = 2.0;
  double scale_lo = 0.6;
  double scale_hi = 1.8;
  std::uint64_t seed = 0;
  // Apply sign/angle/magnitude corrections to the flow input under flips and rescaling.
  bool correct_flow = true;

  void validate() const;
};

enum class FlipAxis { horizontal, vertical };

/// What apply_pipeline drew, in application order.
struct AugmentDraw {
  double scale = 1.0;
  int crop_x = 0;
  int crop_y = 0;
  bool hflip = false;
  bool vflip = false;
  bool gamma_applied = false;
  double gamma = 1.0;
};

/// Frame extent after scaling by `factor`: the smallest integer >= extent * factor.
int scaled_extent(int extent, double factor);

SampleGroup random_crop(const SampleGroup& g, int size, int ox, int oy);

/// Mirrors all members. Dots map x -> W - x (horizontal) or y -> H - y (vertical),
/// with 0 fixed; flow channels are re-signed when `correct_flow` is set.
SampleGroup flip(const SampleGroup& g, FlipAxis axis, bool correct_flow = true);

/// Per-channel v -> v^gamma.
Image gamma_correct(const Image& image, double gamma);

/// Bilinear rescale of image and flow input, dots multiplied by factor, and
/// displacements multiplied by factor before re-encoding when `correct_flow` is set.
SampleGroup random_scale(const SampleGroup& g, double factor, int min_extent = 1, bool correct_flow = true);

/// scale -> crop -> flip -> gamma, all randomness drawn from `rng` in a fixed order.
SampleGroup apply_pipeline(const SampleGroup& g, const AugmentConfig& cfg, std::mt19937_64& rng,
                           AugmentDraw* draw = nullptr);

}  // namespace bipath
