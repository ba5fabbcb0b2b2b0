#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "cgpdf/diagnostics.hpp"

namespace cgpdf {

namespace {

struct Window {
  Index k0, k1;
  double dt;
};

Window window_of(const ObservedPath& path, double s, double t) {
  const Index n = static_cast<Index>(path.t.size());
  if (n < 2 || path.uI.cols() != n) throw ConfigError("trajectory too short");
  if (!(t > s)) throw ConfigError("window needs t > s");
  const double dt = path.t[1] - path.t[0];
  const double t0 = path.t[0];
  const Index k0 = static_cast<Index>(std::llround((s - t0) / dt));
  const Index k1 = static_cast<Index>(std::llround((t - t0) / dt));
  if (k0 < 0 || k1 >= n || std::abs(t0 + k0 * dt - s) > 1e-6 * dt + 1e-12 ||
      std::abs(t0 + k1 * dt - t) > 1e-6 * dt + 1e-12)
    throw ConfigError("trajectory gap: window is not covered by the path samples");
  return {k0, k1, dt};
}

// Forward flow Φ_k = E_{s, r_k}, frozen coefficients over each step.
std::vector<Mat> forward_flow(const ConditionalGaussianModel& model,
                              const ObservedPath& path, const Window& w,
                              std::vector<Coefficients>* coefs) {
  const Index nII = model.n_hidden();
  std::vector<Mat> phi;
  phi.reserve(w.k1 - w.k0 + 1);
  phi.push_back(Mat::Identity(nII, nII));
  for (Index k = w.k0; k <= w.k1; ++k) {
    Coefficients c = model.coefficients(path.t[k], path.uI.col(k));
    if (k < w.k1) {
      const Mat step = (c.a1 * w.dt).exp();
      phi.push_back(step * phi.back());
    }
    if (coefs) coefs->push_back(std::move(c));
  }
  return phi;
}

}  // namespace

Mat flow_matrix(const ConditionalGaussianModel& model, const ObservedPath& path,
                double s, double t) {
  const Window w = window_of(path, s, t);
  return forward_flow(model, path, w, nullptr).back();
}

GramianReport controllability_gramian(const ConditionalGaussianModel& model,
                                      const ObservedPath& path, double s,
                                      double t) {
  const Window w = window_of(path, s, t);
  std::vector<Coefficients> cs;
  const auto phi = forward_flow(model, path, w, &cs);
  const Index nII = model.n_hidden();
  GramianReport rep;
  rep.s = s;
  rep.t = t;
  rep.E = phi.back();
  rep.C = Mat::Zero(nII, nII);
  rep.O = Mat::Zero(nII, nII);
  const Index n = static_cast<Index>(phi.size());
  for (Index j = 0; j < n; ++j) {
    const double wt = (j == 0 || j == n - 1) ? 0.5 * w.dt : w.dt;
    // E_{r,t} = E_{s,t} E_{s,r}^{-1}
    const Mat Ert = phi.back() * phi[j].inverse();
    const Coefficients& c = cs[j];
    rep.C.noalias() += wt * Ert * c.sigma_II * c.sigma_II.transpose() * Ert.transpose();
    const Mat S = c.sigma_I * c.sigma_I.transpose();
    const Mat M = c.A1.transpose() * S.llt().solve(c.A1);
    const Mat Einv = Ert.inverse();
    rep.O.noalias() += wt * Einv.transpose() * M * Einv;
  }
  rep.C = 0.5 * (rep.C + rep.C.transpose()).eval();
  rep.O = 0.5 * (rep.O + rep.O.transpose()).eval();
  const Vec sv = Eigen::JacobiSVD<Mat>(rep.E).singularValues();
  rep.flow_cond = sv(0) / sv(sv.size() - 1);
  return rep;
}

double path_moment_integral(const ObservedPath& path, double t, double v, int m) {
  const Window w = window_of(path, t - v, t);
  double acc = 0.0;
  for (Index k = w.k0; k <= w.k1; ++k) {
    const double wt = (k == w.k0 || k == w.k1) ? 0.5 * w.dt : w.dt;
    acc += wt * std::pow(path.uI.col(k).squaredNorm(), m);
  }
  return acc;
}

std::vector<double> sigma_A_lower(const ConditionalGaussianModel& model,
                                  const ObservedPath& path) {
  std::vector<double> out;
  out.reserve(path.t.size());
  Coefficients c;
  c.resize(model.n_obs(), model.n_hidden());
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    model.evaluate(path.t[k], path.uI.col(static_cast<Index>(k)), c);
    const Mat S = c.sigma_I * c.sigma_I.transpose();
    const Mat M = c.A1.transpose() * S.llt().solve(c.A1);
    const double lo =
        M.rows() == 1 ? M(0, 0)
                      : Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    out.push_back(std::max(0.0, lo));
  }
  return out;
}

BoundValue r2_lower_bound(const BoundInputs& in, const ObservedPath& path,
                          double t) {
  if (!(in.v > 0)) throw ConfigError("v must be positive");
  if (t < path.t.front() + in.v - 1e-12) throw ConfigError("need t >= v");
  BoundValue b;
  if (!(in.sigma_II_minus > 0) || !std::isfinite(in.Dc)) {
    b.note = "not applicable: hidden noise is degenerate or D_c is infinite";
    return b;
  }
  const double I = path_moment_integral(path, t, in.v, in.m);
  const double sm2 = in.sigma_II_minus * in.sigma_II_minus;
  const double sp2 = in.sigma_II_plus * in.sigma_II_plus;
  b.value = in.v * in.v * sp2 / sm2 * std::pow(in.Dc, 6) * (in.v + I) +
            in.Dc / (in.v * sm2);
  b.applicable = true;
  return b;
}

BoundValue r2_upper_bound(const BoundInputs& in, const ObservedPath& path,
                          double t, const std::vector<double>& sigma_A) {
  if (!(in.v > 0)) throw ConfigError("v must be positive");
  if (sigma_A.size() != path.t.size())
    throw ConfigError("sigma_A must be sampled on the path");
  BoundValue b;
  if (!std::isfinite(in.Dc)) {
    b.note = "not applicable: D_c is infinite";
    return b;
  }
  const Window w = window_of(path, t - in.v, t);
  double sa = 0.0;
  for (Index k = w.k0; k <= w.k1; ++k)
    sa += ((k == w.k0 || k == w.k1) ? 0.5 : 1.0) * w.dt * sigma_A[k];
  if (!(sa > 0)) {
    b.note = "vacuous: sigma_A vanishes on the window";
    return b;
  }
  const double I = in.v + path_moment_integral(path, t, in.v, in.m);
  const double sp2 = in.sigma_II_plus * in.sigma_II_plus;
  b.value = in.Dc * in.Dc * I + in.v * std::pow(in.Dc, 5) * sp2 * I * I / (sa * sa);
  b.applicable = true;
  return b;
}

}  // namespace cgpdf
