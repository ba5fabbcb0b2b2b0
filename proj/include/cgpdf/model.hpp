#pragma once

#include <functional>
#include <string>

#include "cgpdf/common.hpp"

namespace cgpdf {

// Coefficients of
//   du_I  = (A0 + A1 u_II) dt + Σ_I dW_I
//   du_II = (a0 + a1 u_II) dt + Σ_II dW_II
// evaluated at one (t, u_I).
struct Coefficients {
  Vec A0;
  Mat A1;
  Vec a0;
  Mat a1;
  Mat sigma_I;
  Mat sigma_II;

  void resize(Index n_obs, Index n_hidden);
};

class ConditionalGaussianModel {
 public:
  using ConstVecRef = Eigen::Ref<const Vec>;
  using VectorField = std::function<void(double, const ConstVecRef&,
                                         Eigen::Ref<Vec>)>;
  using MatrixField = std::function<void(double, const ConstVecRef&,
                                         Eigen::Ref<Mat>)>;

  // Evaluators write into preallocated outputs of the declared shape and
  // must be pure and re-entrant.
  struct Fields {
    VectorField A0;
    MatrixField A1;
    VectorField a0;
    MatrixField a1;
    MatrixField sigma_I;
    MatrixField sigma_II;
  };

  ConditionalGaussianModel(Index n_obs, Index n_hidden, Fields fields,
                           std::string name = "custom");

  Index n_obs() const { return n_obs_; }
  Index n_hidden() const { return n_hidden_; }
  Index dim() const { return n_obs_ + n_hidden_; }
  const std::string& name() const { return name_; }

  // `out` must have been resized to this model's shapes.
  void evaluate(double t, const ConstVecRef& uI, Coefficients& out) const;
  Coefficients coefficients(double t, const ConstVecRef& uI) const;

  // Drift of the joint state u = [u_I; u_II].
  Vec drift(double t, const ConstVecRef& u) const;

 private:
  Index n_obs_;
  Index n_hidden_;
  Fields f_;
  std::string name_;
};

struct GaussianSpec {
  Vec mean;
  Mat covariance;
};

// Quadratic system in the form
//   du_I  = [-Λ_I0 u_I - Λ_I1 u_II + B_I0(u_I,u_I) + B_I1(u_I) u_II + F_I] dt
//           + Σ_I dW_I
//   du_II = [-Λ_II0 u_I - Λ_II1 u_II + B_II0(u_I,u_I) + B_II1(u_I) u_II
//           + F_II] dt + Σ_II dW_II
// with B_I1, B_II1 linear in u_I.
struct EnergyConservingModel {
  using VecMap = std::function<Vec(const Vec&)>;
  using MatMap = std::function<Mat(const Vec&)>;

  Index n_obs = 0;
  Index n_hidden = 0;
  Mat lambda_I0, lambda_I1, lambda_II0, lambda_II1;
  VecMap B_I0;
  MatMap B_I1;
  VecMap B_II0;
  MatMap B_II1;
  Vec F_I, F_II;
  Mat sigma_I, sigma_II;

  ConditionalGaussianModel to_conditional_gaussian(
      std::string name = "energy_conserving") const;
  Mat lambda() const;  // full block matrix [Λ_I0 Λ_I1; Λ_II0 Λ_II1]
};

struct EnergyReport {
  double max_violation = 0.0;
  Index n_points = 0;
};

EnergyReport check_energy_conservation(const EnergyConservingModel& model,
                                       Index n_points, std::uint64_t seed);

struct DissipativityReport {
  double rho_hat = 0.0;
  double De_hat = 0.0;
  bool satisfied = false;
};

// Samples the coordinate axes and random directions on spheres of radius
// r_k = radius k / n_shells. rho_hat is the secant slope of the envelope
// max(drift·u) in |u|² between radius/2 and radius; De_hat is the smallest
// constant making drift·u <= -rho_hat |u|² + De_hat at every sample.
DissipativityReport check_dissipativity(const ConditionalGaussianModel& model,
                                        Index n_points, double radius,
                                        std::uint64_t seed,
                                        Index n_shells = 16,
                                        double rho_tol = 1e-9);

// Constants of the energy-conserving dissipative case with v = 1, m = 1.
struct StructuralConstants {
  double lambda_minus = 0, lambda_plus = 0, lambda_B = 0;
  double sigma_I_minus = 0;  // smallest singular value of Σ_I
  double sigma_II_minus = 0, sigma_II_plus = 0;
  double rho = 0, De = 0, Dc = 0;
  double v = 1.0;
  int m = 1;
  bool applicable = false;
  std::string note;
};

StructuralConstants structural_constants(const EnergyConservingModel& model);

}  // namespace cgpdf
