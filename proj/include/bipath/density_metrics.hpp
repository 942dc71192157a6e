#pragma once

#include <utility>
#include <vector>

namespace bipath {

struct Dot {
  double x = 0;
  double y = 0;
  friend bool operator==(const Dot&, const Dot&) = default;
};

/// Floors a coordinate onto the 2^-20 px lattice dot maps are stored on.
/// Flooring keeps every comparison against an integer boundary unchanged.
double snap_coordinate(double value);

/// Head annotations for one frame, in continuous pixel coordinates:
/// pixel (i, j) covers [i, i+1) x [j, j+1), so 0 <= x < width, 0 <= y < height.
class DotMap {
 public:
  DotMap() = default;
  DotMap(int width, int height);
  DotMap(int width, int height, const std::vector<Dot>& dots);

  /// Snaps and appends a dot; throws std::out_of_range when outside the frame.
  void add(double x, double y);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return dots_.size(); }
  bool empty() const noexcept { return dots_.empty(); }
  const std::vector<Dot>& dots() const noexcept { return dots_; }

  friend bool operator==(const DotMap&, const DotMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Dot> dots_;
};

/// Nonnegative persons-per-pixel map.
struct DensityMap {
  DensityMap() = default;
  DensityMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const DensityMap&, const DensityMap&) = default;

  int width = 0;
  int height = 0;
  std::vector<float> values;
};

/// Sum of truncated (radius 4 sigma) isotropic Gaussians, each renormalised over
/// its in-image support so every dot contributes exactly unit mass.
DensityMap rasterize_density(const DotMap& dots, double sigma);

double count(const DensityMap& map);

struct ErrorPair {
  double mae = 0;
  double mse = 0;  // root of the mean squared error
};

/// Per-pixel MAE and root-mean-square error between two maps.
ErrorPair pixel_mae_mse(const DensityMap& pred, const DensityMap& gt);

/// Per-frame count MAE and root-mean-square error over (pred, gt) pairs.
ErrorPair count_mae_mse(const std::vector<std::pair<double, double>>& pairs);

}  // namespace bipath
