#include "cgpdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace cgpdf {

void Coefficients::resize(Index n_obs, Index n_hidden) {
  A0.setZero(n_obs);
  A1.setZero(n_obs, n_hidden);
  a0.setZero(n_hidden);
  a1.setZero(n_hidden, n_hidden);
  sigma_I.setZero(n_obs, n_obs);
  sigma_II.setZero(n_hidden, n_hidden);
}

ConditionalGaussianModel::ConditionalGaussianModel(Index n_obs, Index n_hidden,
                                                   Fields fields,
                                                   std::string name)
    : n_obs_(n_obs), n_hidden_(n_hidden), f_(std::move(fields)),
      name_(std::move(name)) {
  if (n_obs < 1 || n_hidden < 1)
    throw ConfigError("model dimensions must be positive");
  if (!f_.A0 || !f_.A1 || !f_.a0 || !f_.a1 || !f_.sigma_I || !f_.sigma_II)
    throw ConfigError("model is missing a coefficient evaluator");
}

void ConditionalGaussianModel::evaluate(double t, const ConstVecRef& uI,
                                        Coefficients& out) const {
  f_.A0(t, uI, out.A0);
  f_.A1(t, uI, out.A1);
  f_.a0(t, uI, out.a0);
  f_.a1(t, uI, out.a1);
  f_.sigma_I(t, uI, out.sigma_I);
  f_.sigma_II(t, uI, out.sigma_II);
}

Coefficients ConditionalGaussianModel::coefficients(double t,
                                                    const ConstVecRef& uI) const {
  Coefficients c;
  c.resize(n_obs_, n_hidden_);
  evaluate(t, uI, c);
  return c;
}

Vec ConditionalGaussianModel::drift(double t, const ConstVecRef& u) const {
  const Vec uI = u.head(n_obs_);
  const Vec uII = u.tail(n_hidden_);
  const Coefficients c = coefficients(t, uI);
  Vec d(dim());
  d.head(n_obs_) = c.A0 + c.A1 * uII;
  d.tail(n_hidden_) = c.a0 + c.a1 * uII;
  return d;
}

Mat EnergyConservingModel::lambda() const {
  Mat L(n_obs + n_hidden, n_obs + n_hidden);
  L << lambda_I0, lambda_I1, lambda_II0, lambda_II1;
  return L;
}

ConditionalGaussianModel EnergyConservingModel::to_conditional_gaussian(
    std::string name) const {
  // Captures a copy so the returned model owns its data.
  auto m = std::make_shared<const EnergyConservingModel>(*this);
  using CV = ConditionalGaussianModel::ConstVecRef;
  ConditionalGaussianModel::Fields f;
  f.A0 = [m](double, const CV& uI, Eigen::Ref<Vec> out) {
    const Vec u = uI;
    out = -m->lambda_I0 * u + m->B_I0(u) + m->F_I;
  };
  f.A1 = [m](double, const CV& uI, Eigen::Ref<Mat> out) {
    out = -m->lambda_I1 + m->B_I1(Vec(uI));
  };
  f.a0 = [m](double, const CV& uI, Eigen::Ref<Vec> out) {
    const Vec u = uI;
    out = -m->lambda_II0 * u + m->B_II0(u) + m->F_II;
  };
  f.a1 = [m](double, const CV& uI, Eigen::Ref<Mat> out) {
    out = -m->lambda_II1 + m->B_II1(Vec(uI));
  };
  f.sigma_I = [m](double, const CV&, Eigen::Ref<Mat> out) {
    out = m->sigma_I;
  };
  f.sigma_II = [m](double, const CV&, Eigen::Ref<Mat> out) {
    out = m->sigma_II;
  };
  return ConditionalGaussianModel(n_obs, n_hidden, std::move(f),
                                  std::move(name));
}

EnergyReport check_energy_conservation(const EnergyConservingModel& model,
                                       Index n_points, std::uint64_t seed) {
  if (n_points < 1) throw ConfigError("n_points must be >= 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  EnergyReport rep;
  rep.n_points = n_points;
  auto draw = [&](Index n) {
    Vec v(n);
    for (Index k = 0; k < n; ++k) v(k) = normal(gen);
    return v;
  };
  for (Index p = 0; p < n_points; ++p) {
    const Vec uI = draw(model.n_obs);
    const Vec uII = draw(model.n_hidden);
    // Violations are relative to the cubic scale of the state.
    const double scale = std::max(
        1.0, std::pow(std::sqrt(uI.squaredNorm() + uII.squaredNorm()), 3));
    const double v1 = uI.dot(model.B_I0(uI));
    const double v2 = uII.dot(model.B_II1(uI) * uII);
    const double v3 = uI.dot(model.B_I1(uI) * uII) + uII.dot(model.B_II0(uI));
    for (double v : {v1, v2, v3})
      rep.max_violation = std::max(rep.max_violation, std::abs(v) / scale);
  }
  return rep;
}

DissipativityReport check_dissipativity(const ConditionalGaussianModel& model,
                                        Index n_points, double radius,
                                        std::uint64_t seed, Index n_shells,
                                        double rho_tol) {
  if (n_points < 1) throw ConfigError("n_points must be >= 1");
  if (!(radius > 0)) throw ConfigError("radius must be positive");
  if (n_shells < 2) throw ConfigError("need at least two shells");
  const Index n = model.dim();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;

  // Unit directions: ± axes, then random points on the sphere.
  std::vector<Vec> dirs;
  for (Index k = 0; k < n; ++k) {
    for (double s : {1.0, -1.0}) {
      Vec e = Vec::Zero(n);
      e(k) = s;
      dirs.push_back(e);
    }
  }
  for (Index p = 0; p < n_points; ++p) {
    Vec d(n);
    for (Index k = 0; k < n; ++k) d(k) = normal(gen);
    const double nd = d.norm();
    if (nd > 0) dirs.push_back(d / nd);
  }

  std::vector<double> s2(n_shells + 1), env(n_shells + 1);
  for (Index k = 0; k <= n_shells; ++k) {
    const double r = radius * static_cast<double>(k) / n_shells;
    s2[k] = r * r;
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& d : dirs) {
      const Vec u = r * d;
      best = std::max(best, model.drift(0.0, u).dot(u));
      if (k == 0) break;
    }
    env[k] = best;
  }
  const Index half = n_shells / 2;
  DissipativityReport rep;
  rep.rho_hat = -(env[n_shells] - env[half]) / (s2[n_shells] - s2[half]);
  rep.De_hat = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k <= n_shells; ++k)
    rep.De_hat = std::max(rep.De_hat, env[k] + rep.rho_hat * s2[k]);
  rep.satisfied = rep.rho_hat > rho_tol;
  return rep;
}

namespace {

// sup_{|u|=1} ||M(u)||_2 for a map linear in u, bounded above by the largest
// singular value of [vec M(e_1) ... vec M(e_n)]; exact for column outputs.
double linear_map_bound(const EnergyConservingModel::MatMap& M, Index n) {
  Mat G;
  for (Index k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = 1.0;
    const Mat Mk = M(e);
    if (k == 0) G.resize(Mk.size(), n);
    G.col(k) = Mk.reshaped();
  }
  if (G.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(G).singularValues()(0);
}

}  // namespace

StructuralConstants structural_constants(const EnergyConservingModel& m) {
  StructuralConstants c;
  const Mat L = m.lambda();
  const Mat Ls = 0.5 * (L + L.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(Ls);
  c.lambda_minus = es.eigenvalues().minCoeff();
  c.lambda_plus = es.eigenvalues().maxCoeff();
  c.lambda_B = std::max(linear_map_bound(m.B_I1, m.n_obs),
                        linear_map_bound(m.B_II1, m.n_obs));
  Eigen::SelfAdjointEigenSolver<Mat> sI(m.sigma_I * m.sigma_I.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> sII(m.sigma_II * m.sigma_II.transpose());
  c.sigma_I_minus = std::sqrt(std::max(0.0, sI.eigenvalues().minCoeff()));
  c.sigma_II_minus = std::sqrt(std::max(0.0, sII.eigenvalues().minCoeff()));
  c.sigma_II_plus = std::sqrt(std::max(0.0, sII.eigenvalues().maxCoeff()));

  if (!(c.lambda_minus > 0)) {
    c.note = "damping matrix is not positive definite";
  } else if (!(c.sigma_I_minus > 0) || !(c.sigma_II_minus > 0)) {
    c.note = "noise matrices are not full rank";
  } else {
    c.applicable = true;
  }
  if (c.lambda_minus > 0) {
    c.rho = 0.5 * c.lambda_minus;
    c.De = (m.F_I.squaredNorm() + m.F_II.squaredNorm()) / (2 * c.lambda_minus);
  }
  if (!c.applicable) {
    c.Dc = std::numeric_limits<double>::infinity();
    return c;
  }
  const double lp = c.lambda_plus, lm = c.lambda_minus;
  const double sIm2 = c.sigma_I_minus * c.sigma_I_minus;
  const double sIIm2 = c.sigma_II_minus * c.sigma_II_minus;
  const double sIIp2 = c.sigma_II_plus * c.sigma_II_plus;
  c.Dc = std::max({1.0, 2 * lp / sIIm2 / (1 - std::exp(-2 * lp)),
                   sIIp2 / (2 * lm), 2 * lp * lp / sIm2,
                   2 * c.lambda_B * c.lambda_B / sIm2, std::exp(2 * lp)});
  return c;
}

}  // namespace cgpdf
