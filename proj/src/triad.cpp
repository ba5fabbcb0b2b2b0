#include "cgpdf/triad.hpp"

#include <cmath>
#include <string>

namespace cgpdf {

TriadParams TriadParams::regime_I() {
  TriadParams p;
  p.A1 = -2.5; p.A2 = 1.0; p.A3 = 1.5;
  p.d2 = 1.0; p.d3 = 0.5;
  p.sigma2 = 1.0; p.sigma3 = 1.0;
  return p;
}

TriadParams TriadParams::regime_II() {
  TriadParams p;
  p.A1 = -0.5; p.A2 = -1.0; p.A3 = 1.5;
  p.d2 = 1.0; p.d3 = 0.5;
  p.sigma2 = 1.0; p.sigma3 = 1.0;
  return p;
}

void TriadParams::validate() const {
  if (!(d2 > 0) || !(d3 > 0)) throw ConfigError("triad: d2 and d3 must be > 0");
  if (!(d1 >= 0)) throw ConfigError("triad: d1 must be >= 0");
  if (!(epsilon >= 0)) throw ConfigError("triad: epsilon must be >= 0");
  if (!(sigma2 >= 0) || !(sigma3 >= 0))
    throw ConfigError("triad: sigma2 and sigma3 must be >= 0");
  if (A1 + A2 + A3 != 0.0)
    throw ConfigError("triad: A1 + A2 + A3 must be 0 (energy conservation)");
}

TriadParams triad_preset(std::string_view preset, std::string_view regime) {
  const bool damped = preset == "triad_damped";
  if (regime.empty()) regime = damped ? "II" : "I";
  TriadParams p;
  if (regime == "I") {
    p = TriadParams::regime_I();
  } else if (regime == "II") {
    p = TriadParams::regime_II();
  } else {
    throw ConfigError("unknown triad regime '" + std::string(regime) + "'");
  }
  if (preset == "triad") {
  } else if (preset == "triad_modified") {
    p.epsilon = 0.1;
  } else if (damped) {
    p.epsilon = 0.1;
    p.d1 = 0.1;
  } else {
    throw ConfigError("unknown model preset '" + std::string(preset) + "'");
  }
  return p;
}

ConditionalGaussianModel triad_model(const TriadParams& p) {
  p.validate();
  using CV = ConditionalGaussianModel::ConstVecRef;
  ConditionalGaussianModel::Fields f;
  f.A0 = [p](double, const CV& u, Eigen::Ref<Vec> out) {
    out(0) = -p.d2 * u(0);
    out(1) = -p.d3 * u(1);
  };
  f.A1 = [p](double, const CV& u, Eigen::Ref<Mat> out) {
    out(0, 0) = p.A2 * u(1);
    out(1, 0) = p.A3 * u(0);
  };
  f.a0 = [p](double, const CV& u, Eigen::Ref<Vec> out) {
    out(0) = p.A1 * u(0) * u(1);
  };
  f.a1 = [p](double, const CV&, Eigen::Ref<Mat> out) { out(0, 0) = -p.d1; };
  f.sigma_I = [p](double, const CV&, Eigen::Ref<Mat> out) {
    out << p.sigma2, 0.0, 0.0, p.sigma3;
  };
  f.sigma_II = [p](double, const CV&, Eigen::Ref<Mat> out) {
    out(0, 0) = p.epsilon;
  };
  return ConditionalGaussianModel(2, 1, std::move(f), "triad");
}

EnergyConservingModel triad_energy_form(const TriadParams& p) {
  p.validate();
  EnergyConservingModel m;
  m.n_obs = 2;
  m.n_hidden = 1;
  m.lambda_I0 = Eigen::Vector2d(p.d2, p.d3).asDiagonal();
  m.lambda_I1 = Mat::Zero(2, 1);
  m.lambda_II0 = Mat::Zero(1, 2);
  m.lambda_II1 = Mat::Constant(1, 1, p.d1);
  m.B_I0 = [](const Vec&) { return Vec(Vec::Zero(2)); };
  m.B_I1 = [p](const Vec& u) {
    Mat b(2, 1);
    b << p.A2 * u(1), p.A3 * u(0);
    return b;
  };
  m.B_II0 = [p](const Vec& u) { return Vec(Vec::Constant(1, p.A1 * u(0) * u(1))); };
  m.B_II1 = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  m.F_I = Vec::Zero(2);
  m.F_II = Vec::Zero(1);
  m.sigma_I = Eigen::Vector2d(p.sigma2, p.sigma3).asDiagonal();
  m.sigma_II = Mat::Constant(1, 1, p.epsilon);
  return m;
}

std::optional<GaussianSpec> triad_invariant_measure(const TriadParams& p) {
  if (p.d1 != 0.0 || p.epsilon != 0.0)
    throw ConfigError(
        "triad_invariant_measure applies to d1 = 0, epsilon = 0 only");
  if (!(p.d2 > 0) || !(p.d3 > 0))
    throw ConfigError("triad: d2 and d3 must be > 0");
  const double E2 = p.sigma2 * p.sigma2 / (2 * p.d2);
  const double E3 = p.sigma3 * p.sigma3 / (2 * p.d3);
  const double den = p.A2 * E3 + p.A3 * E2;
  if (!(E2 > 0) || !(E3 > 0) || den == 0.0) return std::nullopt;
  const double E1 = -p.A1 * E2 * E3 / den;
  if (!(E1 > 0)) return std::nullopt;
  GaussianSpec g;
  g.mean = Vec::Zero(3);
  g.covariance = Eigen::Vector3d(E1, E2, E3).asDiagonal();
  return g;
}

}  // namespace cgpdf
