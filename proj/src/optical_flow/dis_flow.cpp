#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bipath/optical_flow.hpp"

namespace bipath {
namespace {

constexpr double kSingularDet = 1e-6;

Image to_gray(const Image& img) { return img.channels == 1 ? img : luminance(img); }

// Central differences, one-sided at the border.
void gradients(const Image& img, std::vector<float>& gx, std::vector<float>& gy) {
  const int w = img.width, h = img.height;
  gx.assign(img.plane_size(), 0.0f);
  gy.assign(img.plane_size(), 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = (img.at(0, xr, y) - img.at(0, xl, y)) / static_cast<float>(xr - xl);
      gy[i] = (img.at(0, x, yd) - img.at(0, x, yu)) / static_cast<float>(yd - yu);
    }
}

struct PatchResult {
  float u, v;
  float residual;
};

// Inverse-compositional Gauss-Newton on a translation for every patch of the grid,
// followed by residual-weighted densification into `flow` (in: initialisation, out: result).
void refine_level(const Image& I0, const Image& I1, FlowField& flow, const DisParams& params) {
  const int w = I0.width, h = I0.height;
  const int ps = params.patch_size;
  std::vector<float> gx, gy;
  gradients(I0, gx, gy);
  const auto xs = patch_origins(w, ps, params.patch_stride);
  const auto ys = patch_origins(h, ps, params.patch_stride);

  // Pixels whose warped position leaves frame t+1 carry no information and are skipped.
  auto inside = [&](float x, float y) { return x >= 0 && y >= 0 && x <= w - 1 && y <= h - 1; };

  auto residual_of = [&](int px, int py, float u, float v) {
    double acc = 0;
    int n = 0;
    for (int y = py; y < py + ps; ++y)
      for (int x = px; x < px + ps; ++x) {
        if (!inside(x + u, y + v)) continue;
        acc += std::abs(sample_bilinear(I1, 0, x + u, y + v) - I0.at(0, x, y));
        ++n;
      }
    return n == 0 ? 1.0f : static_cast<float>(acc / n);
  };

  Image init_u(w, h, 1), init_v(w, h, 1);
  init_u.data = flow.u;
  init_v.data = flow.v;

  std::vector<PatchResult> patches;
  patches.reserve(xs.size() * ys.size());
  for (int py : ys) {
    for (int px : xs) {
      double hxx = 0, hxy = 0, hyy = 0;
      for (int y = py; y < py + ps; ++y)
        for (int x = px; x < px + ps; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          hxx += gx[i] * gx[i];
          hxy += gx[i] * gy[i];
          hyy += gy[i] * gy[i];
        }
      const float cx = px + 0.5f * (ps - 1), cy = py + 0.5f * (ps - 1);
      const float u0 = sample_bilinear(init_u, 0, cx, cy), v0 = sample_bilinear(init_v, 0, cx, cy);
      float u = u0, v = v0;
      const double det = hxx * hyy - hxy * hxy;
      if (det >= kSingularDet) {
        for (int it = 0; it < params.iterations; ++it) {
          double bx = 0, by = 0, mxx = 0, mxy = 0, myy = 0;
          int n = 0;
          for (int y = py; y < py + ps; ++y)
            for (int x = px; x < px + ps; ++x) {
              if (!inside(x + u, y + v)) continue;
              const std::size_t i = static_cast<std::size_t>(y) * w + x;
              const double r = sample_bilinear(I1, 0, x + u, y + v) - I0.at(0, x, y);
              bx += r * gx[i];
              by += r * gy[i];
              mxx += gx[i] * gx[i];
              mxy += gx[i] * gy[i];
              myy += gy[i] * gy[i];
              ++n;
            }
          const double mdet = mxx * myy - mxy * mxy;
          if (n < ps || mdet < kSingularDet) break;
          u -= static_cast<float>((myy * bx - mxy * by) / mdet);
          v -= static_cast<float>((mxx * by - mxy * bx) / mdet);
        }
        // A patch that wandered further than its own size has diverged.
        if (std::hypot(u - u0, v - v0) > static_cast<float>(ps)) {
          u = u0;
          v = v0;
        }
      }
      patches.push_back({u, v, residual_of(px, py, u, v)});
    }
  }

  std::vector<double> su(flow.size(), 0.0), sv(flow.size(), 0.0), sw(flow.size(), 0.0);
  std::size_t k = 0;
  for (int py : ys) {
    for (int px : xs) {
      const PatchResult& p = patches[k++];
      const double weight = 1.0 / std::max(params.densify_eps, static_cast<double>(p.residual));
      for (int y = py; y < py + ps; ++y)
        for (int x = px; x < px + ps; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          su[i] += weight * p.u;
          sv[i] += weight * p.v;
          sw[i] += weight;
        }
    }
  }
  for (std::size_t i = 0; i < flow.size(); ++i) {
    flow.u[i] = static_cast<float>(su[i] / sw[i]);
    flow.v[i] = static_cast<float>(sv[i] / sw[i]);
  }
}

}  // namespace

FlowField dis_flow(const Image& frame_t, const Image& frame_t1, const DisParams& params) {
  params.validate();
  if (!frame_t.same_size(frame_t1)) throw std::invalid_argument("dis_flow: frame size mismatch");
  const auto pyr0 = build_pyramid(to_gray(frame_t), params);
  const auto pyr1 = build_pyramid(to_gray(frame_t1), params);

  FlowField flow(pyr0.front().width, pyr0.front().height);
  for (std::size_t level = 0; level < pyr0.size(); ++level) {
    if (level > 0) {
      const double k = params.pyramid_factor;
      flow = resize_flow(flow, pyr0[level].width, pyr0[level].height, k);
    }
    refine_level(pyr0[level], pyr1[level], flow, params);
  }
  return flow;
}

}  // namespace bipath
