#pragma once

#include <vector>

#include "cgpdf/sde_sim.hpp"

namespace cgpdf {

struct FilterState {
  Vec mean;  // posterior mean of u_II
  Mat cov;   // posterior covariance R_II
};

struct FilterOptions {
  double eig_floor_report = 1e-10;
  bool floor_psd = true;
};

// Scratch space for filter steps of one sample.
struct FilterWorkspace {
  Mat S, S_cached, Sinv, G, RG, A1R, dR;
  Vec innov, dmean, tmpI, tmpII;
  bool factored = false;
  Eigen::LLT<Mat> llt;
  Eigen::SelfAdjointEigenSolver<Mat> eig;
  void resize(Index n_obs, Index n_hidden);
};

// Forward Euler step of the posterior equations from coefficients c
// evaluated at the pre-step observation. Returns the smallest eigenvalue of
// the updated covariance before flooring.
double filter_update(const Coefficients& c, const Eigen::Ref<const Vec>& dUI,
                     double dt, Eigen::Ref<Vec> mean, Eigen::Ref<Mat> cov,
                     FilterWorkspace& ws, const FilterOptions& opt,
                     Index sample = -1, double t = 0.0);

FilterState filter_step(const ConditionalGaussianModel& model, double t,
                        const Vec& uI, const Vec& dUI, const FilterState& state,
                        double dt, const FilterOptions& opt = {});

// Covariance-only step (the Riccati flow).
double riccati_update(const Coefficients& c, double dt, Eigen::Ref<Mat> cov,
                      FilterWorkspace& ws, const FilterOptions& opt);

class FilterRun {
 public:
  FilterRun() = default;
  FilterRun(Index n_hidden, Index n_samples)
      : n_hidden_(n_hidden), degenerate_(n_samples, 0),
        min_eig_(n_samples, std::numeric_limits<double>::infinity()) {}

  Index n_hidden() const { return n_hidden_; }
  Index n_samples() const { return static_cast<Index>(degenerate_.size()); }
  Index n_records() const { return static_cast<Index>(times_.size()); }
  const std::vector<double>& times() const { return times_; }

  // Record k: means (N_II x L) and covariances as vec(R) columns (N_II² x L).
  const Mat& means(Index k) const { return means_[k]; }
  const Mat& covs(Index k) const { return covs_[k]; }
  Mat& mutable_means(Index k) { return means_[k]; }
  Mat& mutable_covs(Index k) { return covs_[k]; }
  FilterState state(Index k, Index sample) const;
  std::vector<Mat> covariances(Index k) const;

  bool degenerate(Index sample) const { return degenerate_[sample] != 0; }
  Index degenerate_count() const;
  double min_eigenvalue(Index sample) const { return min_eig_[sample]; }
  // Largest magnitude of a negative eigenvalue removed by flooring.
  double max_psd_violation() const { return psd_violation_; }

  void push(double t, Mat means, Mat covs);
  void mark(Index sample, double min_eig, double eig_floor);
  void note_violation(double v) { psd_violation_ = std::max(psd_violation_, v); }

 private:
  Index n_hidden_ = 0;
  std::vector<double> times_;
  std::vector<Mat> means_;
  std::vector<Mat> covs_;
  std::vector<std::uint8_t> degenerate_;
  std::vector<double> min_eig_;
  double psd_violation_ = 0.0;
};

struct FilterInit {
  // Empty prior_mean: start at each sample's own u_II(0).
  Vec prior_mean;
  Mat prior_cov;  // empty: zero covariance

  static FilterInit from_ensemble() { return {}; }
  static FilterInit prior(Vec mean, Mat cov) { return {std::move(mean), std::move(cov)}; }
};

// Filters over a store recorded at every step (stride 1).
FilterRun run_filters(const ConditionalGaussianModel& model,
                      const TrajectoryStore& store, const FilterInit& init,
                      const FilterOptions& opt = {});

struct FilteredSimulation {
  TrajectoryStore store;
  FilterRun filter;
  Ensemble final;
};

// Simulation and filtering in lockstep: both use the coefficients evaluated
// once per step, and the filter sees the exact simulated increments.
FilteredSimulation simulate_filtered(const ConditionalGaussianModel& model,
                                     const Ensemble& init,
                                     const FilterInit& finit,
                                     const SimConfig& cfg, const RngPolicy& rng,
                                     const FilterOptions& opt = {});

struct ObservedPath {
  std::vector<double> t;
  Mat uI;  // N_I x n, uniform spacing
};

ObservedPath observed_path(const TrajectoryStore& store, Index sample);

struct ContractionResult {
  std::vector<double> times;
  std::vector<double> distance;  // spectral norm of R - R'
  double fitted_rate = 0.0;      // -slope of log distance vs t
};

ContractionResult riccati_contraction_experiment(
    const ConditionalGaussianModel& model, const ObservedPath& path,
    const Mat& R0, const Mat& R0_prime, double horizon,
    Index record_stride = 1, const FilterOptions& opt = {});

}  // namespace cgpdf
