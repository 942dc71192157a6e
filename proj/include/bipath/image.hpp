#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bipath/tensor.hpp"

namespace bipath {

/// Planar float image (C×H×W). RGB frames hold values in [0,1].
struct Image {
  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f);

  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::span<float> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const { return {data.data() + c * plane_size(), plane_size()}; }

  float& at(int c, int x, int y) { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int x, int y) const { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }

  bool same_size(const Image& o) const noexcept { return width == o.width && height == o.height; }
  bool empty() const noexcept { return data.empty(); }

  friend bool operator==(const Image&, const Image&) = default;

  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;
};

/// 0.299 R + 0.587 G + 0.114 B as a single-channel image.
Image luminance(const Image& rgb);

double mean_value(const Image& img);

/// Bilinear sample of channel c at index coordinates (pixel centres on integers), border replicated.
float sample_bilinear(const Image& img, int c, float x, float y);

/// Resamples to out_w×out_h; output pixel centre x maps to (x + 0.5) / factor - 0.5 in the source.
Image resize_bilinear(const Image& src, int out_w, int out_h, double factor);

/// Half-pixel resampling where the factor is implied by the size ratio.
Image resize_to(const Image& src, int out_w, int out_h);

Image crop(const Image& src, int ox, int oy, int w, int h);

Image mirror(const Image& src, bool horizontal);

void clamp_unit(Image& img);

/// 1×C×H×W tensor view copy of an image.
Tensor to_tensor(const Image& img);

}  // namespace bipath
