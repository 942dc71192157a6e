#include <algorithm>
#include <stdexcept>

#include "bipath/optical_flow.hpp"

namespace bipath {

void DisParams::validate() const {
  if (patch_stride < 1 || patch_size < patch_stride) {
    throw std::invalid_argument("DisParams: need patch_size >= patch_stride >= 1");
  }
  if (iterations < 1) throw std::invalid_argument("DisParams: iterations must be >= 1");
  if (pyramid_factor < 2) throw std::invalid_argument("DisParams: pyramid_factor must be >= 2");
  if (min_level_dim < patch_size) throw std::invalid_argument("DisParams: min_level_dim must be >= patch_size");
  if (!(densify_eps > 0)) throw std::invalid_argument("DisParams: densify_eps must be positive");
}

namespace {

Image box_decimate(const Image& src, int k) {
  const int w = src.width / k;
  const int h = src.height / k;
  Image out(w, h, src.channels);
  const float norm = 1.0f / static_cast<float>(k * k);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float acc = 0;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) acc += src.at(c, x * k + dx, y * k + dy);
        out.at(c, x, y) = acc * norm;
      }
  return out;
}

}  // namespace

std::vector<Image> build_pyramid(const Image& gray, const DisParams& params) {
  params.validate();
  if (gray.channels != 1) throw std::invalid_argument("build_pyramid expects a single-channel image");
  if (std::min(gray.width, gray.height) < params.min_level_dim) {
    throw std::invalid_argument("build_pyramid: image " + std::to_string(gray.width) + "x" +
                                std::to_string(gray.height) + " smaller than minimum level dimension " +
                                std::to_string(params.min_level_dim));
  }
  std::vector<Image> levels{gray};
  const int k = params.pyramid_factor;
  while (std::min(levels.back().width, levels.back().height) / k >= params.min_level_dim) {
    levels.push_back(box_decimate(levels.back(), k));
  }
  std::reverse(levels.begin(), levels.end());
  return levels;
}

std::vector<int> patch_origins(int extent, int patch_size, int stride) {
  if (extent < patch_size) throw std::invalid_argument("patch_origins: extent smaller than patch");
  std::vector<int> origins;
  for (int p = 0; p + patch_size <= extent; p += stride) origins.push_back(p);
  if (origins.back() != extent - patch_size) origins.push_back(extent - patch_size);
  return origins;
}

}  // namespace bipath
