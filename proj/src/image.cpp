#include "bipath/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bipath {

Image::Image(int w, int h, int c, float fill) : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || c < 0) throw std::invalid_argument("image dimensions must be nonnegative");
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

Image luminance(const Image& rgb) {
  if (rgb.channels == 1) return rgb;
  if (rgb.channels != 3) throw std::invalid_argument("luminance needs a 3-channel image");
  Image out(rgb.width, rgb.height, 1);
  auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  return out;
}

double mean_value(const Image& img) {
  if (img.data.empty()) return 0.0;
  return std::accumulate(img.data.begin(), img.data.end(), 0.0) / static_cast<double>(img.data.size());
}

float sample_bilinear(const Image& img, int c, float x, float y) {
  x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float fx = x - static_cast<float>(x0);
  const float fy = y - static_cast<float>(y0);
  const float top = img.at(c, x0, y0) + fx * (img.at(c, x1, y0) - img.at(c, x0, y0));
  const float bot = img.at(c, x0, y1) + fx * (img.at(c, x1, y1) - img.at(c, x0, y1));
  return top + fy * (bot - top);
}

Image resize_bilinear(const Image& src, int out_w, int out_h, double factor) {
  if (out_w < 1 || out_h < 1 || !(factor > 0)) throw std::invalid_argument("resize_bilinear: bad target size");
  Image out(out_w, out_h, src.channels);
  std::vector<float> sx(out_w), sy(out_h);
  for (int x = 0; x < out_w; ++x) sx[x] = static_cast<float>((x + 0.5) / factor - 0.5);
  for (int y = 0; y < out_h; ++y) sy[y] = static_cast<float>((y + 0.5) / factor - 0.5);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) out.at(c, x, y) = sample_bilinear(src, c, sx[x], sy[y]);
  return out;
}

Image resize_to(const Image& src, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_to: bad target size");
  Image out(out_w, out_h, src.channels);
  const double fx = static_cast<double>(out_w) / src.width;
  const double fy = static_cast<double>(out_h) / src.height;
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x)
        out.at(c, x, y) = sample_bilinear(src, c, static_cast<float>((x + 0.5) / fx - 0.5),
                                          static_cast<float>((y + 0.5) / fy - 0.5));
  return out;
}

Image crop(const Image& src, int ox, int oy, int w, int h) {
  if (ox < 0 || oy < 0 || w < 0 || h < 0 || ox + w > src.width || oy + h > src.height) {
    throw std::out_of_range("crop window exceeds image bounds");
  }
  Image out(w, h, src.channels);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < h; ++y) {
      const float* row = &src.data[c * src.plane_size() + static_cast<std::size_t>(oy + y) * src.width + ox];
      std::copy(row, row + w, &out.at(c, 0, y));
    }
  return out;
}

Image mirror(const Image& src, bool horizontal) {
  Image out(src.width, src.height, src.channels);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        const int sx = horizontal ? src.width - 1 - x : x;
        const int sy = horizontal ? y : src.height - 1 - y;
        out.at(c, x, y) = src.at(c, sx, sy);
      }
  return out;
}

void clamp_unit(Image& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

Tensor to_tensor(const Image& img) {
  return Tensor({1, img.channels, img.height, img.width}, img.data);
}

}  // namespace bipath
