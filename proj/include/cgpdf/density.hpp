#pragma once

#include <vector>

#include "cgpdf/grid.hpp"

namespace cgpdf {

// Kernel covariance H·diag(c²).
struct Bandwidth {
  double H = 1.0;
  Vec c;

  Vec kernel_variance() const { return H * c.array().square().matrix(); }
  void validate() const;
};

// H = kappa·L^{-2/(4+n_dims)}.
Bandwidth scaling_bandwidth(Index L, Index n_dims, const Vec& c,
                            double kappa = 1.0);

// c = per-row sample std, H = (4/(n+2))^{2/(n+4)}·L^{-2/(n+4)}.
Bandwidth silverman_bandwidth(const Mat& samples);

// Per-row unbiased sample standard deviation.
Vec sample_std(const Mat& samples);

// Equal-weight mixture of products N(x_I; center_i, H·diag(c²)) ·
// N(x_II; mean_i, cov_i). Either block may be empty: n_hidden = 0 is a
// plain Gaussian KDE, n_obs = 0 a Gaussian mixture.
class HybridMixture {
 public:
  HybridMixture(Mat centers, Bandwidth bw, Mat means, std::vector<Mat> covs);

  Index size() const { return L_; }
  Index n_obs() const { return centers_.rows(); }
  Index n_hidden() const { return means_.rows(); }
  Index dim() const { return n_obs() + n_hidden(); }
  double weight() const { return 1.0 / static_cast<double>(L_); }

  const Mat& centers() const { return centers_; }
  const Bandwidth& bandwidth() const { return bw_; }
  const Mat& means() const { return means_; }
  const std::vector<Mat>& covariances() const { return covs_; }

  // points: dim x P, ordered [x_I; x_II].
  Vec evaluate(const Mat& points) const;
  // Per-component log density of the hidden block at hidden-space points.
  void hidden_log_density(Index i, const Eigen::Ref<const Mat>& pts,
                          Eigen::Ref<Vec> out) const;

  Vec mean() const;
  Mat covariance() const;  // exact second moments of the mixture

 private:
  Index L_;
  Mat centers_;
  Bandwidth bw_;
  Mat means_;
  std::vector<Mat> covs_;
  std::vector<Mat> chol_;     // lower Cholesky factors
  std::vector<double> lnorm_; // -½ log det(2π cov)
  Vec kvar_;                  // kernel variances
  double klnorm_ = 0.0;
};

// Hidden covariance of component i is R_i + δI when its smallest eigenvalue
// is below eig_floor, else R_i.
HybridMixture build_hybrid(const Mat& uI, const Mat& post_means,
                           const std::vector<Mat>& post_covs,
                           const Bandwidth& bw, double delta = 1e-6,
                           double eig_floor = 1e-10);

Vec eval_hybrid(const HybridMixture& mix, const Mat& points);

HybridMixture make_direct_kde(const Mat& samples, const Bandwidth& bw);
Vec eval_direct_kde(const Mat& samples, const Bandwidth& bw, const Mat& points);

HybridMixture marginal_hidden(const HybridMixture& mix);
HybridMixture marginal_observed(const HybridMixture& mix);
// Keeps the listed observed coordinates (kernel factors are independent).
HybridMixture select_observed(const HybridMixture& mix,
                              const std::vector<Index>& keep);
// Hidden block mapped through P (full row rank).
HybridMixture project_mixture(const HybridMixture& mix, const Mat& P);

// Fast tensor-grid evaluation; axes ordered [x_I; x_II] as the mixture.
GridDensity eval_on_grid(const HybridMixture& mix, std::vector<Vec> axes);

// Exact marginal on the joint coordinates `coords` (indices into
// [x_I; x_II]); axes and result follow the order of `coords`.
GridDensity marginal_on_grid(const HybridMixture& mix,
                             const std::vector<Index>& coords,
                             std::vector<Vec> axes);

// ∫ N(x; m, Σ)² dx = det(4πΣ)^{-1/2}.
double gaussian_l2_norm(const Mat& cov);

double gaussian_pdf(const Vec& x, const Vec& mean, const Mat& cov);

}  // namespace cgpdf
