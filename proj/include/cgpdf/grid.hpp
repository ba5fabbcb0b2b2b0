#pragma once

#include <functional>
#include <vector>

#include "cgpdf/common.hpp"

namespace cgpdf {

// Density values on a tensor grid, row-major (last axis fastest), with
// trapezoidal quadrature weights.
class GridDensity {
 public:
  GridDensity() = default;
  GridDensity(std::vector<Vec> axes, Vec values);

  Index dims() const { return static_cast<Index>(axes_.size()); }
  Index size() const { return values_.size(); }
  const std::vector<Vec>& axes() const { return axes_; }
  const Vec& values() const { return values_; }
  Vec& values() { return values_; }
  const Vec& weights() const { return weights_; }

  double integral() const { return weights_.dot(values_); }
  bool same_grid(const GridDensity& other) const;
  std::vector<Index> shape() const;
  Mat points() const;  // dims x size

 private:
  std::vector<Vec> axes_;
  Vec values_;
  Vec weights_;
};

Vec linspace(double a, double b, Index n);
Vec trapezoid_weights(const Vec& axis);

// n points per axis over mean ± half_width·std.
std::vector<Vec> make_axes(const Vec& mean, const Vec& std, double half_width,
                           Index n);

using PointEvaluator = std::function<Vec(const Mat&)>;

// Evaluates at every grid point (dims x size matrix handed to `f`).
GridDensity eval_on_grid(const PointEvaluator& f, std::vector<Vec> axes);

// ∫ (a - b)² on a shared grid.
double l2_distance_squared(const GridDensity& a, const GridDensity& b);
double l2_norm_squared(const GridDensity& a);

// Quadrature marginal over all axes not listed in keep (kept in order).
GridDensity marginalize(const GridDensity& g, const std::vector<Index>& keep);

// Reorders axes: result axis j is input axis order[j].
GridDensity permute_axes(const GridDensity& g, const std::vector<Index>& order);

// Gaussian KDE of the columns of `samples` on a uniform grid, by linear
// binning and separable convolution truncated at 6 kernel std. Samples
// outside the grid are dropped. kernel_std is per axis.
GridDensity binned_kde(const Mat& samples, const Vec& kernel_std,
                       std::vector<Vec> axes);

}  // namespace cgpdf
