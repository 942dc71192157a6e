#pragma once

#include <cstdint>
#include <vector>

#include "bipath/density_metrics.hpp"
#include "bipath/image.hpp"
#include "bipath/optical_flow.hpp"

namespace bipath {

/// Explicit person placement; overrides the random draw when given.
struct PersonSpec {
  double x = 0;  // centre at frame 0, continuous coordinates
  double y = 0;
  double vx = 0;  // px/frame
  double vy = 0;
  double radius = 4;
};

struct SceneSpec {
  int n_persons = 12;
  double radius_lo = 3.0;
  double radius_hi = 5.0;
  double speed_lo = 0.5;
  double speed_hi = 2.0;
  std::uint64_t texture_seed = 1;
  int octaves = 4;
  double jitter = 0.0;  // amplitude of the per-frame global shift, px
  double luminance = 1.0;
  int frames = 6;
  int height = 128;
  int width = 128;
  std::uint64_t seed = 1;
  // Static person-shaped blobs that carry no annotation.
  int n_distractors = 0;
  std::vector<PersonSpec> persons;

  void validate() const;
};

struct GeneratedSequence {
  std::vector<Image> frames;
  std::vector<DotMap> dots;
  std::vector<FlowField> flow;  // flow[t] maps frame t to frame t + 1
  // Pixels of frame t covered by a person, one mask per flow pair.
  std::vector<std::vector<unsigned char>> person_masks;
  SceneSpec spec;
};

/// Multi-octave value noise RGB texture in [0.15, 0.85], sampled at pixel
/// centres shifted by (-ox, -oy); continuous in the shift.
Image value_noise_image(int width, int height, std::uint64_t seed, int octaves, double ox = 0, double oy = 0);

GeneratedSequence generate_sequence(const SceneSpec& spec);

/// Per-pixel multiply by luminance and clamp to [0,1].
std::vector<Image> apply_night(const std::vector<Image>& frames, double luminance);

}  // namespace bipath
