#include "cgpdf/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cgpdf {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2π)
constexpr double kTiny = 1e-300;

}  // namespace

void Bandwidth::validate() const {
  if (!(H > 0)) throw ConfigError("bandwidth H must be positive");
  for (Index k = 0; k < c.size(); ++k)
    if (!(c(k) > 0)) throw ConfigError("bandwidth factors c must be positive");
}

Bandwidth scaling_bandwidth(Index L, Index n_dims, const Vec& c, double kappa) {
  if (L < 2) throw ConfigError("scaling_bandwidth needs L >= 2");
  if (n_dims < 0) throw ConfigError("n_dims must be >= 0");
  if (!(kappa > 0)) throw ConfigError("kappa must be positive");
  Bandwidth b{kappa * std::pow(static_cast<double>(L),
                               -2.0 / (4.0 + static_cast<double>(n_dims))),
              c};
  b.validate();
  return b;
}

Vec sample_std(const Mat& samples) {
  const Index L = samples.cols();
  if (L < 2) throw ConfigError("need at least two samples");
  const Vec m = samples.rowwise().mean();
  return ((samples.colwise() - m).rowwise().squaredNorm() /
          static_cast<double>(L - 1))
      .cwiseSqrt();
}

Bandwidth silverman_bandwidth(const Mat& samples) {
  const Vec c = sample_std(samples);
  for (Index k = 0; k < c.size(); ++k)
    if (!(c(k) > 0))
      throw ConfigError(
          "zero-variance direction in samples; supply explicit bandwidth "
          "factors c");
  const double n = static_cast<double>(samples.rows());
  const double L = static_cast<double>(samples.cols());
  return {std::pow(4.0 / (n + 2.0), 2.0 / (n + 4.0)) * std::pow(L, -2.0 / (n + 4.0)),
          c};
}

HybridMixture::HybridMixture(Mat centers, Bandwidth bw, Mat means,
                             std::vector<Mat> covs)
    : L_(std::max(centers.cols(), means.cols())),
      centers_(std::move(centers)),
      bw_(std::move(bw)),
      means_(std::move(means)),
      covs_(std::move(covs)) {
  if (L_ < 1) throw ConfigError("mixture needs at least one component");
  if (centers_.rows() == 0) centers_.resize(0, L_);
  if (means_.rows() == 0) means_.resize(0, L_);
  if (centers_.cols() != L_ || means_.cols() != L_)
    throw ConfigError("mismatched sample counts");
  if (dim() == 0) throw ConfigError("mixture has zero dimension");
  if (n_obs() > 0) {
    if (bw_.c.size() != n_obs())
      throw ConfigError("bandwidth factors do not match observed dimension");
    bw_.validate();
    kvar_ = bw_.kernel_variance();
    klnorm_ = -0.5 * (static_cast<double>(n_obs()) * kLog2Pi +
                      kvar_.array().log().sum());
  }
  if (n_hidden() > 0) {
    if (static_cast<Index>(covs_.size()) != L_)
      throw ConfigError("mismatched sample counts");
    chol_.resize(L_);
    lnorm_.resize(L_);
    for (Index i = 0; i < L_; ++i) {
      const Mat& C = covs_[i];
      if (C.rows() != n_hidden() || C.cols() != n_hidden())
        throw ConfigError("component covariance has the wrong shape");
      Eigen::LLT<Mat> llt(C);
      if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0))
        throw ConfigError("component covariance is not positive definite");
      chol_[i] = llt.matrixL();
      lnorm_[i] = -0.5 * static_cast<double>(n_hidden()) * kLog2Pi -
                  chol_[i].diagonal().array().log().sum();
    }
  } else {
    covs_.clear();
  }
}

void HybridMixture::hidden_log_density(Index i,
                                       const Eigen::Ref<const Mat>& pts,
                                       Eigen::Ref<Vec> out) const {
  if (n_hidden() == 1) {
    const double s = chol_[i](0, 0), m = means_(0, i);
    for (Index p = 0; p < pts.cols(); ++p) {
      const double z = (pts(0, p) - m) / s;
      out(p) = lnorm_[i] - 0.5 * z * z;
    }
    return;
  }
  const Mat z = chol_[i].triangularView<Eigen::Lower>().solve(
      pts.colwise() - means_.col(i));
  out = (lnorm_[i] - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
}

Vec HybridMixture::evaluate(const Mat& points) const {
  if (points.rows() != dim()) throw ConfigError("points have the wrong dimension");
  const Index P = points.cols();
  Vec out(P);
  const double logw = -std::log(static_cast<double>(L_));
#pragma omp parallel
  {
    Vec lp(L_);
    Vec hid(1);
#pragma omp for schedule(static)
    for (Index p = 0; p < P; ++p) {
      for (Index i = 0; i < L_; ++i) {
        double v = 0.0;
        if (n_obs() > 0) {
          v = klnorm_ - 0.5 * ((points.col(p).head(n_obs()) - centers_.col(i))
                                   .array()
                                   .square() /
                               kvar_.array())
                                  .sum();
        }
        if (n_hidden() > 0) {
          hidden_log_density(i, points.col(p).tail(n_hidden()), hid);
          v += hid(0);
        }
        lp(i) = v;
      }
      const double mx = lp.maxCoeff();
      double val = 0.0;
      if (std::isfinite(mx)) {
        val = std::exp(mx + logw + std::log((lp.array() - mx).exp().sum()));
      }
      out(p) = val < kTiny ? 0.0 : val;
    }
  }
  return out;
}

Vec HybridMixture::mean() const {
  Vec m(dim());
  m << centers_.rowwise().mean(), means_.rowwise().mean();
  return m;
}

Mat HybridMixture::covariance() const {
  Mat z(dim(), L_);
  z << centers_, means_;
  const Mat zc = z.colwise() - z.rowwise().mean();
  Mat C = zc * zc.transpose() / static_cast<double>(L_);
  if (n_obs() > 0) C.topLeftCorner(n_obs(), n_obs()).diagonal() += kvar_;
  if (n_hidden() > 0) {
    Mat R = Mat::Zero(n_hidden(), n_hidden());
    for (const Mat& c : covs_) R += c;
    C.bottomRightCorner(n_hidden(), n_hidden()) += R / static_cast<double>(L_);
  }
  return C;
}

HybridMixture build_hybrid(const Mat& uI, const Mat& post_means,
                           const std::vector<Mat>& post_covs,
                           const Bandwidth& bw, double delta, double eig_floor) {
  if (uI.cols() != post_means.cols() ||
      static_cast<Index>(post_covs.size()) != uI.cols())
    throw ConfigError("mismatched sample counts");
  if (!(delta >= 0)) throw ConfigError("regularization must be >= 0");
  std::vector<Mat> covs(post_covs.size());
  for (std::size_t i = 0; i < covs.size(); ++i) {
    const Mat& R = post_covs[i];
    const double lo =
        R.rows() == 1 ? R(0, 0)
                      : Eigen::SelfAdjointEigenSolver<Mat>(R, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    covs[i] = R;
    if (lo < eig_floor) covs[i].diagonal().array() += delta;
  }
  return HybridMixture(uI, bw, post_means, std::move(covs));
}

Vec eval_hybrid(const HybridMixture& mix, const Mat& points) {
  return mix.evaluate(points);
}

HybridMixture make_direct_kde(const Mat& samples, const Bandwidth& bw) {
  return HybridMixture(samples, bw, Mat(0, samples.cols()), {});
}

Vec eval_direct_kde(const Mat& samples, const Bandwidth& bw, const Mat& points) {
  return make_direct_kde(samples, bw).evaluate(points);
}

HybridMixture marginal_hidden(const HybridMixture& mix) {
  if (mix.n_hidden() == 0) throw ConfigError("mixture has no hidden block");
  return HybridMixture(Mat(0, mix.size()), Bandwidth{}, mix.means(),
                       mix.covariances());
}

HybridMixture marginal_observed(const HybridMixture& mix) {
  if (mix.n_obs() == 0) throw ConfigError("mixture has no observed block");
  return HybridMixture(mix.centers(), mix.bandwidth(), Mat(0, mix.size()), {});
}

HybridMixture select_observed(const HybridMixture& mix,
                              const std::vector<Index>& keep) {
  Mat centers(keep.size(), mix.size());
  Vec c(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j] < 0 || keep[j] >= mix.n_obs())
      throw ConfigError("observed index out of range");
    centers.row(j) = mix.centers().row(keep[j]);
    c(j) = mix.bandwidth().c(keep[j]);
  }
  return HybridMixture(std::move(centers), Bandwidth{mix.bandwidth().H, c},
                       mix.means(), mix.covariances());
}

HybridMixture project_mixture(const HybridMixture& mix, const Mat& P) {
  if (P.cols() != mix.n_hidden() || P.rows() < 1)
    throw ConfigError("projection has the wrong shape");
  Eigen::ColPivHouseholderQR<Mat> qr(P);
  if (qr.rank() != P.rows()) throw ConfigError("projection is rank deficient");
  std::vector<Mat> covs;
  covs.reserve(mix.size());
  for (const Mat& C : mix.covariances()) {
    Mat pc = P * C * P.transpose();
    covs.push_back(0.5 * (pc + pc.transpose()));
  }
  return HybridMixture(mix.centers(), mix.bandwidth(), P * mix.means(),
                       std::move(covs));
}

GridDensity marginal_on_grid(const HybridMixture& mix,
                             const std::vector<Index>& coords,
                             std::vector<Vec> axes) {
  const Index nI = mix.n_obs();
  if (coords.empty() || coords.size() != axes.size())
    throw ConfigError("marginal needs one axis per coordinate");
  std::vector<Index> obs, hid;
  for (Index k : coords) {
    if (k < 0 || k >= mix.dim()) throw ConfigError("coordinate out of range");
    (k < nI ? obs : hid).push_back(k);
  }
  std::sort(obs.begin(), obs.end());
  std::sort(hid.begin(), hid.end());
  if (std::adjacent_find(obs.begin(), obs.end()) != obs.end() ||
      std::adjacent_find(hid.begin(), hid.end()) != hid.end())
    throw ConfigError("repeated coordinate");

  HybridMixture m = select_observed(mix, obs);
  if (hid.empty()) {
    m = marginal_observed(m);
  } else if (static_cast<Index>(hid.size()) < mix.n_hidden()) {
    Mat P = Mat::Zero(static_cast<Index>(hid.size()), mix.n_hidden());
    for (std::size_t j = 0; j < hid.size(); ++j) P(j, hid[j] - nI) = 1.0;
    m = project_mixture(m, P);
  }

  // Mixture order is sorted observed then sorted hidden coordinates.
  std::vector<Index> morder(obs);
  morder.insert(morder.end(), hid.begin(), hid.end());
  auto where = [&](const std::vector<Index>& v, Index k) {
    return static_cast<Index>(std::find(v.begin(), v.end(), k) - v.begin());
  };
  std::vector<Vec> maxes;
  for (Index k : morder) maxes.push_back(std::move(axes[where(coords, k)]));
  GridDensity g = eval_on_grid(m, std::move(maxes));
  std::vector<Index> order;
  for (Index k : coords) order.push_back(where(morder, k));
  return permute_axes(g, order);
}

GridDensity eval_on_grid(const HybridMixture& mix, std::vector<Vec> axes) {
  const Index d = mix.dim(), nI = mix.n_obs(), nII = mix.n_hidden();
  if (static_cast<Index>(axes.size()) != d)
    throw ConfigError("grid dimension does not match the mixture");
  const Index L = mix.size();
  const double w = mix.weight();

  // Outer axes carry per-component 1D kernel factors; the inner block is the
  // hidden subgrid (or the last kernel axis for a pure KDE).
  const Index n_outer = nII > 0 ? nI : nI - 1;
  std::vector<Mat> factors(nI);  // n_k x L
  const Vec kvar = nI > 0 ? mix.bandwidth().kernel_variance() : Vec();
  for (Index k = 0; k < nI; ++k) {
    const Vec& a = axes[k];
    factors[k].resize(a.size(), L);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * kvar(k));
    for (Index i = 0; i < L; ++i) {
      const double c = mix.centers()(k, i);
      factors[k].col(i) =
          (norm * (-0.5 * (a.array() - c).square() / kvar(k)).exp()).matrix();
    }
  }
  Mat inner;  // P_in x L
  if (nII > 0) {
    std::vector<Vec> hax(axes.begin() + nI, axes.end());
    Index P = 1;
    for (const Vec& a : hax) P *= a.size();
    Mat pts(nII, P);
    for (Index f = 0, rem; f < P; ++f) {
      rem = f;
      for (Index a = nII - 1; a >= 0; --a) {
        pts(a, f) = hax[a](rem % hax[a].size());
        rem /= hax[a].size();
      }
    }
    inner.resize(P, L);
    Vec lp(P);
    for (Index i = 0; i < L; ++i) {
      mix.hidden_log_density(i, pts, lp);
      inner.col(i) = lp.array().exp().matrix();
    }
  } else {
    inner = factors[nI - 1];
  }
  const Index P_in = inner.rows();
  Index G_out = 1;
  std::vector<Index> osh;
  for (Index k = 0; k < n_outer; ++k) {
    osh.push_back(axes[k].size());
    G_out *= axes[k].size();
  }
  Vec values = Vec::Zero(G_out * P_in);

#pragma omp parallel
  {
    std::vector<Index> idx(n_outer);
#pragma omp for schedule(static)
    for (Index o = 0; o < G_out; ++o) {
      Index rem = o;
      for (Index k = n_outer - 1; k >= 0; --k) {
        idx[k] = rem % osh[k];
        rem /= osh[k];
      }
      auto row = values.segment(o * P_in, P_in);
      for (Index i = 0; i < L; ++i) {
        double f = w;
        for (Index k = 0; k < n_outer && f > 0; ++k) f *= factors[k](idx[k], i);
        if (f < kTiny) continue;
        row.noalias() += f * inner.col(i);
      }
    }
  }
  values = values.unaryExpr([](double v) { return v < kTiny ? 0.0 : v; });
  return GridDensity(std::move(axes), std::move(values));
}

double gaussian_l2_norm(const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (cov.rows() != cov.cols() || cov.rows() == 0 ||
      llt.info() != Eigen::Success || !cov.isApprox(cov.transpose()))
    throw ConfigError("gaussian_l2_norm needs a positive definite covariance");
  const double n = static_cast<double>(cov.rows());
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return std::exp(-0.5 * (n * std::log(4.0 * std::numbers::pi) + logdet));
}

double gaussian_pdf(const Vec& x, const Vec& mean, const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ConfigError("gaussian_pdf needs a positive definite covariance");
  const Mat Lc = llt.matrixL();
  const Vec z = Lc.triangularView<Eigen::Lower>().solve(x - mean);
  const double n = static_cast<double>(x.size());
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * n * kLog2Pi -
                  Lc.diagonal().array().log().sum());
}

}  // namespace cgpdf
