#pragma once

#include <string>
#include <vector>

#include "bipath/image.hpp"

namespace bipath {

/// Per-pixel displacement in px/frame; u points right, v points down.
struct FlowField {
  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), u(static_cast<std::size_t>(w) * h), v(u.size()) {}

  std::size_t size() const noexcept { return u.size(); }
  float magnitude(std::size_t i) const;
  float max_magnitude() const;

  friend bool operator==(const FlowField&, const FlowField&) = default;

  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;
};

enum class FlowEncoding { cartesian, polar };

std::string to_string(FlowEncoding mode);
FlowEncoding parse_flow_encoding(const std::string& text);

/// Three-channel flow-branch input. Channel 2 is always the frame difference.
/// Cartesian: (u/M + 1)/2, (v/M + 1)/2. Polar: angle/2π in [0,1), magnitude/M in [0,1].
/// `max_magnitude` is the per-frame normaliser M, carried so the field can be decoded.
struct FlowInput {
  Image planes;
  FlowEncoding mode = FlowEncoding::polar;
  float max_magnitude = 1.0f;

  int width() const noexcept { return planes.width; }
  int height() const noexcept { return planes.height; }
  friend bool operator==(const FlowInput&, const FlowInput&) = default;
};

struct DisParams {
  int patch_size = 8;
  int patch_stride = 4;
  int iterations = 8;
  int pyramid_factor = 2;
  int min_level_dim = 16;
  double densify_eps = 1e-6;

  void validate() const;
};

/// Coarse-to-fine pyramid; element 0 is the coarsest level, the last is the input.
std::vector<Image> build_pyramid(const Image& gray, const DisParams& params);

/// Top-left corners of the patch grid along one axis: multiples of the stride,
/// plus the last position so the far border is always covered.
std::vector<int> patch_origins(int extent, int patch_size, int stride);

/// Dense inverse search flow from frame_t to frame_t1 (gray or RGB inputs).
FlowField dis_flow(const Image& frame_t, const Image& frame_t1, const DisParams& params = {});

/// Luminance(frame_t) - luminance(frame_t1), mapped from [-1,1] to [0,1].
Image frame_difference(const Image& frame_t, const Image& frame_t1);

/// Zeroes vectors whose magnitude is below tau.
FlowField threshold_filter(const FlowField& flow, double tau);

FlowInput encode_flow(const FlowField& flow, const Image& f_sub, FlowEncoding mode);

/// Inverse of encode_flow given the carried normaliser.
FlowField decode_flow(const FlowInput& input);

/// Mirrors the field and negates the mirrored component.
FlowField mirror_flow(const FlowField& flow, bool horizontal);

/// Bilinear resample with half-pixel centres; displacements are multiplied by `factor`.
FlowField resize_flow(const FlowField& flow, int out_w, int out_h, double factor);

/// Mean endpoint error, optionally restricted to pixels where mask is nonzero.
double mean_endpoint_error(const FlowField& a, const FlowField& b, const std::vector<unsigned char>* mask = nullptr);

}  // namespace bipath
