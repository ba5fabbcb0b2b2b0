#include "cgpdf/grid.hpp"

#include <cmath>
#include <numbers>

namespace cgpdf {

namespace {

Index product(const std::vector<Index>& s) {
  Index n = 1;
  for (Index k : s) n *= k;
  return n;
}

std::vector<Index> strides_of(const std::vector<Index>& shape) {
  std::vector<Index> st(shape.size(), 1);
  for (Index a = static_cast<Index>(shape.size()) - 2; a >= 0; --a)
    st[a] = st[a + 1] * shape[a + 1];
  return st;
}

}  // namespace

Vec linspace(double a, double b, Index n) {
  if (n < 2) throw ConfigError("linspace needs at least two points");
  return Vec::LinSpaced(n, a, b);
}

Vec trapezoid_weights(const Vec& axis) {
  const Index n = axis.size();
  Vec w = Vec::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (axis(i + 1) - axis(i));
    w(i) += h;
    w(i + 1) += h;
  }
  return w;
}

GridDensity::GridDensity(std::vector<Vec> axes, Vec values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  if (axes_.empty()) throw ConfigError("grid needs at least one axis");
  for (const Vec& a : axes_) {
    if (a.size() < 2) throw ConfigError("grid axes need at least two points");
    for (Index i = 0; i + 1 < a.size(); ++i)
      if (!(a(i + 1) > a(i))) throw ConfigError("grid axes must be increasing");
  }
  const auto sh = shape();
  if (values_.size() != product(sh))
    throw ConfigError("grid values do not match the axes");
  weights_.resize(values_.size());
  const auto st = strides_of(sh);
  std::vector<Vec> w;
  for (const Vec& a : axes_) w.push_back(trapezoid_weights(a));
  for (Index f = 0; f < values_.size(); ++f) {
    double p = 1.0;
    for (std::size_t a = 0; a < sh.size(); ++a) p *= w[a]((f / st[a]) % sh[a]);
    weights_(f) = p;
  }
}

bool GridDensity::same_grid(const GridDensity& o) const {
  if (axes_.size() != o.axes_.size()) return false;
  for (std::size_t a = 0; a < axes_.size(); ++a)
    if (axes_[a].size() != o.axes_[a].size() || axes_[a] != o.axes_[a])
      return false;
  return true;
}

std::vector<Index> GridDensity::shape() const {
  std::vector<Index> s;
  for (const Vec& a : axes_) s.push_back(a.size());
  return s;
}

Mat GridDensity::points() const {
  const auto sh = shape();
  const auto st = strides_of(sh);
  Mat p(dims(), size());
  for (Index f = 0; f < size(); ++f)
    for (Index a = 0; a < dims(); ++a) p(a, f) = axes_[a]((f / st[a]) % sh[a]);
  return p;
}

std::vector<Vec> make_axes(const Vec& mean, const Vec& std, double half_width,
                           Index n) {
  if (mean.size() != std.size()) throw ConfigError("mean/std size mismatch");
  std::vector<Vec> axes;
  for (Index k = 0; k < mean.size(); ++k) {
    if (!(std(k) > 0)) throw ConfigError("grid std must be positive");
    axes.push_back(linspace(mean(k) - half_width * std(k),
                            mean(k) + half_width * std(k), n));
  }
  return axes;
}

GridDensity eval_on_grid(const PointEvaluator& f, std::vector<Vec> axes) {
  GridDensity g(axes, Vec::Zero(product([&] {
                  std::vector<Index> s;
                  for (const Vec& a : axes) s.push_back(a.size());
                  return s;
                }())));
  Vec v = f(g.points());
  if (v.size() != g.size()) throw ConfigError("evaluator returned wrong size");
  g.values() = std::move(v);
  return g;
}

double l2_distance_squared(const GridDensity& a, const GridDensity& b) {
  if (!a.same_grid(b)) throw ConfigError("densities live on different grids");
  return a.weights().dot((a.values() - b.values()).array().square().matrix());
}

double l2_norm_squared(const GridDensity& a) {
  return a.weights().dot(a.values().array().square().matrix());
}

GridDensity marginalize(const GridDensity& g, const std::vector<Index>& keep) {
  if (keep.empty()) throw ConfigError("marginal must keep at least one axis");
  const auto sh = g.shape();
  const auto st = strides_of(sh);
  std::vector<bool> kept(sh.size(), false);
  std::vector<Vec> axes, w(sh.size());
  std::vector<Index> ksh;
  for (Index a : keep) {
    if (a < 0 || a >= g.dims() || kept[a]) throw ConfigError("bad marginal axes");
    kept[a] = true;
    axes.push_back(g.axes()[a]);
    ksh.push_back(sh[a]);
  }
  for (std::size_t a = 0; a < sh.size(); ++a) w[a] = trapezoid_weights(g.axes()[a]);
  const auto kst = strides_of(ksh);
  Vec out = Vec::Zero(product(ksh));
  for (Index f = 0; f < g.size(); ++f) {
    Index kf = 0;
    double wt = 1.0;
    for (std::size_t a = 0; a < sh.size(); ++a) {
      const Index ia = (f / st[a]) % sh[a];
      if (!kept[a]) wt *= w[a](ia);
    }
    for (std::size_t j = 0; j < keep.size(); ++j)
      kf += ((f / st[keep[j]]) % sh[keep[j]]) * kst[j];
    out(kf) += wt * g.values()(f);
  }
  return GridDensity(std::move(axes), std::move(out));
}

GridDensity permute_axes(const GridDensity& g, const std::vector<Index>& order) {
  if (static_cast<Index>(order.size()) != g.dims())
    throw ConfigError("permutation has the wrong length");
  GridDensity m = marginalize(g, order);  // keeps everything, reorders
  return m;
}

namespace {

void convolve_axis(Vec& data, const std::vector<Index>& sh, Index axis,
                   const Vec& kernel) {
  const auto st = strides_of(sh);
  const Index n = sh[axis], s = st[axis];
  const Index half = (kernel.size() - 1) / 2;
  Vec line(n), out(n);
  const Index outer = data.size() / n;
  for (Index o = 0; o < outer; ++o) {
    // Base offset of the o-th line along `axis`.
    const Index hi = o / s, lo = o % s;
    const Index base = hi * s * n + lo;
    for (Index i = 0; i < n; ++i) line(i) = data(base + i * s);
    out.setZero();
    for (Index i = 0; i < n; ++i) {
      if (line(i) == 0.0) continue;
      const Index j0 = std::max<Index>(0, i - half);
      const Index j1 = std::min<Index>(n - 1, i + half);
      for (Index j = j0; j <= j1; ++j) out(j) += line(i) * kernel(j - i + half);
    }
    for (Index i = 0; i < n; ++i) data(base + i * s) = out(i);
  }
}

}  // namespace

GridDensity binned_kde(const Mat& samples, const Vec& kernel_std,
                       std::vector<Vec> axes) {
  const Index d = static_cast<Index>(axes.size());
  if (samples.rows() != d || kernel_std.size() != d)
    throw ConfigError("binned_kde: dimension mismatch");
  if (samples.cols() < 1) throw ConfigError("binned_kde: no samples");
  std::vector<Index> sh;
  std::vector<double> lo, step;
  for (const Vec& a : axes) {
    if (a.size() < 2) throw ConfigError("grid axes need at least two points");
    const double h = (a(a.size() - 1) - a(0)) / static_cast<double>(a.size() - 1);
    for (Index i = 0; i < a.size(); ++i)
      if (std::abs(a(i) - (a(0) + h * i)) > 1e-9 * std::max(1.0, std::abs(h) * a.size()))
        throw ConfigError("binned_kde needs uniform axes");
    sh.push_back(a.size());
    lo.push_back(a(0));
    step.push_back(h);
  }
  const auto st = strides_of(sh);
  Vec bins = Vec::Zero(product(sh));
  const double w = 1.0 / static_cast<double>(samples.cols());
  std::vector<Index> base(d);
  std::vector<double> frac(d);
  for (Index j = 0; j < samples.cols(); ++j) {
    bool inside = true;
    for (Index a = 0; a < d && inside; ++a) {
      const double x = (samples(a, j) - lo[a]) / step[a];
      if (!(x >= 0) || x > static_cast<double>(sh[a] - 1)) inside = false;
      Index b = static_cast<Index>(std::floor(x));
      if (b >= sh[a] - 1) b = sh[a] - 2;
      base[a] = b;
      frac[a] = x - static_cast<double>(b);
    }
    if (!inside) continue;
    for (Index corner = 0; corner < (Index{1} << d); ++corner) {
      double cw = w;
      Index f = 0;
      for (Index a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1;
        cw *= up ? frac[a] : 1.0 - frac[a];
        f += (base[a] + (up ? 1 : 0)) * st[a];
      }
      bins(f) += cw;
    }
  }
  for (Index a = 0; a < d; ++a) {
    if (!(kernel_std(a) > 0)) throw ConfigError("kernel std must be positive");
    const Index half = static_cast<Index>(std::ceil(6.0 * kernel_std(a) / step[a]));
    Vec k(2 * half + 1);
    for (Index m = -half; m <= half; ++m) {
      const double z = static_cast<double>(m) * step[a] / kernel_std(a);
      k(m + half) = std::exp(-0.5 * z * z) /
                    (std::sqrt(2.0 * std::numbers::pi) * kernel_std(a));
    }
    convolve_axis(bins, sh, a, k);
  }
  return GridDensity(std::move(axes), std::move(bins));
}

}  // namespace cgpdf
