#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgpdf/cg_filter.hpp"
#include "cgpdf/density.hpp"

namespace cgpdf {

struct MiseReport {
  double mise = 0.0;        // variance + bias
  double bias = 0.0;        // ∫ (p̄ - p_ref)²
  double variance = 0.0;    // mean_r ∫ (p̂_r - p̄)²
  double variance_stderr = 0.0;
  double mean_ise = 0.0;    // mean_r ∫ (p̂_r - p_ref)², computed separately
  Index n_repeats = 0;
  std::vector<double> ise;  // per repeat
  std::vector<Index> grid_shape;
  std::string reference;
};

MiseReport estimate_mise(std::span<const GridDensity> estimates,
                         const GridDensity& reference,
                         std::string reference_descriptor = {});

using EstimatorFactory = std::function<GridDensity(Index repeat)>;
MiseReport estimate_mise(const EstimatorFactory& factory,
                         const GridDensity& reference, Index n_repeats,
                         std::string reference_descriptor = {});

// (1/L)·mean_i [∏_k (π H c_k²) · det(π R_i)]^{-1/2}; an empty bw.c drops the
// kernel product, empty covs drop the hidden factor.
double variance_bound(const std::vector<Mat>& covs, const Bandwidth& bw, Index L);

// Same formula with every direction smoothed by the kernel.
double direct_kde_variance_bound(const Bandwidth& bw, Index L);

// (1+δ)/4 · H² · J(Σ_k c_k² ∂²p/∂x_k²) over the first bw.c.size() axes,
// with J(f) = ∫ f² and second differences on the grid.
double bias_bound_report(const GridDensity& reference, const Bandwidth& bw,
                         double delta);

// Least-squares slope of log y against log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Joint states [u_I; u_II] of n independent paths at time t_end.
Mat monte_carlo_states(const ConditionalGaussianModel& model, const Vec& uI0,
                       const Vec& uII0, double t_end, double dt, Index n,
                       std::uint64_t seed, double blowup_cap = 1e8);

// Same paths observed at each of the increasing `times` (multiples of dt).
std::vector<Mat> monte_carlo_states(const ConditionalGaussianModel& model,
                                    const Vec& uI0, const Vec& uII0,
                                    const std::vector<double>& times, double dt,
                                    Index n, std::uint64_t seed,
                                    double blowup_cap = 1e8);

// Binned Gaussian KDE with per-axis std kappa·std_k·n^{-1/(d+4)}.
GridDensity reference_from_samples(const Mat& samples, std::vector<Vec> axes,
                                   double kappa = 1.0);

struct ScalingOptions {
  std::vector<Index> Ls;
  double t_eval = 1.0;
  Index n_repeats = 20;
  double dt = 1e-3;
  double kappa = 1.0;
  double delta = 1e-6;
  std::uint64_t seed = 1;
  bool direct = true;
  bool hidden = true;
};

struct ScalingPoint {
  Index L = 0;
  MiseReport hybrid, direct, hidden;
  double hybrid_bound = 0.0;  // variance_bound plug-in, mean over repeats
  double direct_bound = 0.0;
  double hidden_bound = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double slope_hybrid = 0.0;
  double slope_direct = 0.0;
  double slope_hidden = 0.0;
};

// For each L, simulates n_repeats independent ensembles of size L from
// (uI0, uII0), filters them and scores the hybrid, direct-KDE and
// hidden-marginal estimators against the references (joint axes ordered
// [u_I; u_II]). Bandwidths follow H ∝ L^{-2/(4+n)} with c from the sample
// std of each ensemble.
ScalingResult mise_scaling_experiment(const ConditionalGaussianModel& model,
                                      const Vec& uI0, const Vec& uII0,
                                      const GridDensity& joint_reference,
                                      const GridDensity& hidden_reference,
                                      const ScalingOptions& opt);

// Gramians along one observed path (uniform spacing).
struct GramianReport {
  Mat C;  // controllability
  Mat O;  // observability
  Mat E;  // flow E_{s,t}
  double flow_cond = 1.0;
  double s = 0.0, t = 0.0;
};

Mat flow_matrix(const ConditionalGaussianModel& model, const ObservedPath& path,
                double s, double t);

GramianReport controllability_gramian(const ConditionalGaussianModel& model,
                                      const ObservedPath& path, double s,
                                      double t);

struct BoundInputs {
  double v = 1.0;
  int m = 1;
  double Dc = 1.0;
  double sigma_II_minus = 0.0;
  double sigma_II_plus = 0.0;
};

struct BoundValue {
  double value = std::numeric_limits<double>::infinity();
  bool applicable = false;
  std::string note;
};

// ∫_{t-v}^{t} |u_I(r)|^{2m} dr by the trapezoid rule on the path samples.
double path_moment_integral(const ObservedPath& path, double t, double v, int m);

// Smallest eigenvalue of A1*(Σ_IΣ_I*)^{-1}A1 along the path.
std::vector<double> sigma_A_lower(const ConditionalGaussianModel& model,
                                  const ObservedPath& path);

// h: R_II(t) ⪰ h^{-1} I.
BoundValue r2_lower_bound(const BoundInputs& in, const ObservedPath& path,
                          double t);

// g: ||R_II(t)|| <= g. sigma_A supplies σ²_{A,-} on the path samples.
BoundValue r2_upper_bound(const BoundInputs& in, const ObservedPath& path,
                          double t, const std::vector<double>& sigma_A);

}  // namespace cgpdf
