#include "bipath/density_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bipath {

double snap_coordinate(double value) {
  constexpr double kLattice = 1048576.0;  // 2^20
  return std::floor(value * kLattice) / kLattice;
}

DotMap::DotMap(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("DotMap: negative frame size");
}

DotMap::DotMap(int width, int height, const std::vector<Dot>& dots) : DotMap(width, height) {
  dots_.reserve(dots.size());
  for (const Dot& d : dots) add(d.x, d.y);
}

void DotMap::add(double x, double y) {
  x = snap_coordinate(x);
  y = snap_coordinate(y);
  if (!(x >= 0 && x < width_ && y >= 0 && y < height_)) {
    throw std::out_of_range("dot (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                            std::to_string(width_) + "x" + std::to_string(height_) + " frame");
  }
  dots_.push_back({x, y});
}

DensityMap rasterize_density(const DotMap& dots, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("rasterize_density: sigma must be positive");
  const int w = dots.width(), h = dots.height();
  std::vector<double> acc(static_cast<std::size_t>(w) * h, 0.0);
  const double radius = 4.0 * sigma;
  const int reach = static_cast<int>(std::ceil(radius)) + 1;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> weights;
  std::vector<std::size_t> cells;
  for (const Dot& d : dots.dots()) {
    // Offsets are built from the integer cell and the fractional part separately
    // so that integer translations of a dot reproduce identical weights.
    const double cx = std::floor(d.x), cy = std::floor(d.y);
    const double fx = 0.5 - (d.x - cx), fy = 0.5 - (d.y - cy);
    const int ix = static_cast<int>(cx), iy = static_cast<int>(cy);
    weights.clear();
    cells.clear();
    double total = 0;
    for (int ky = -reach; ky <= reach; ++ky) {
      const int y = iy + ky;
      if (y < 0 || y >= h) continue;
      const double dy = ky + fy;
      for (int kx = -reach; kx <= reach; ++kx) {
        const int x = ix + kx;
        if (x < 0 || x >= w) continue;
        const double dx = kx + fx;
        const double r2 = dx * dx + dy * dy;
        if (r2 > radius * radius) continue;
        const double wgt = std::exp(-r2 * inv2s2);
        weights.push_back(wgt);
        cells.push_back(static_cast<std::size_t>(y) * w + x);
        total += wgt;
      }
    }
    if (total <= 0) {
      acc[static_cast<std::size_t>(iy) * w + ix] += 1.0;
      continue;
    }
    for (std::size_t k = 0; k < weights.size(); ++k) acc[cells[k]] += weights[k] / total;
  }
  DensityMap out(w, h);
  for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = static_cast<float>(acc[i]);
  return out;
}

double count(const DensityMap& map) {
  double total = 0;
  for (float v : map.values) total += v;
  return total;
}

ErrorPair pixel_mae_mse(const DensityMap& pred, const DensityMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw std::invalid_argument("pixel_mae_mse: map sizes differ");
  }
  double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = std::abs(static_cast<double>(gt.values[i]) - static_cast<double>(pred.values[i]));
    abs_sum += d;
    sq_sum += d * d;
  }
  const double hw = static_cast<double>(pred.width) * pred.height;
  return {abs_sum / hw, std::sqrt(sq_sum / hw)};
}

ErrorPair count_mae_mse(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("count_mae_mse: empty list");
  double abs_sum = 0, sq_sum = 0;
  for (const auto& [pred, gt] : pairs) {
    const double d = pred - gt;
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(pairs.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

}  // namespace bipath
