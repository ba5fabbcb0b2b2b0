#pragma once

#include <vector>

#include "cgpdf/model.hpp"
#include "cgpdf/rng.hpp"

namespace cgpdf {

// L joint states stored column-wise. ids select the RNG substream of each
// column, so reordering columns together with ids reorders paths without
// changing them.
struct Ensemble {
  double t = 0.0;
  Mat uI;   // N_I x L
  Mat uII;  // N_II x L
  std::vector<std::uint64_t> ids;

  Index size() const { return uI.cols(); }
  void check() const;

  static Ensemble at_point(const Vec& uI0, const Vec& uII0, Index L,
                           double t0 = 0.0, std::uint64_t first_id = 0);
};

struct SimConfig {
  double t_end = 1.0;
  double dt = 1e-3;
  Index store_stride = 1;
  double blowup_cap = 1e8;
  bool store_hidden = true;
  // Counter of the first step; continuing a run from a returned final
  // ensemble needs the number of steps already taken.
  std::uint32_t step_offset = 0;

  Index n_steps(double t0) const;
};

struct Snapshot {
  double t = 0.0;
  Mat uI;
  Mat uII;  // empty when hidden states are not stored
};

class TrajectoryStore {
 public:
  TrajectoryStore() = default;
  TrajectoryStore(double dt, Index stride) : dt_(dt), stride_(stride) {}

  double dt() const { return dt_; }
  Index stride() const { return stride_; }
  Index n_records() const { return static_cast<Index>(snaps_.size()); }
  Index n_samples() const { return snaps_.empty() ? 0 : snaps_[0].uI.cols(); }
  bool has_hidden() const { return !snaps_.empty() && snaps_[0].uII.size() > 0; }
  std::vector<double> times() const;
  const Snapshot& record(Index k) const { return snaps_[k]; }
  Snapshot& record(Index k) { return snaps_[k]; }
  const std::vector<Snapshot>& records() const { return snaps_; }
  void push(Snapshot s) { snaps_.push_back(std::move(s)); }

  Mat observed_path(Index sample) const;  // N_I x n_records
  Mat hidden_path(Index sample) const;    // N_II x n_records

 private:
  double dt_ = 0.0;
  Index stride_ = 1;
  std::vector<Snapshot> snaps_;
};

struct SimulationResult {
  TrajectoryStore store;
  Ensemble final;
};

// Per-sample scratch space for one Euler-Maruyama step.
struct StepWorkspace {
  Coefficients c;
  Vec xi_I, xi_II, dI, dII;
  void resize(Index n_obs, Index n_hidden);
};

// Advances one sample by dt using the coefficients already evaluated in
// ws.c at the pre-step state. Writes the observed increment to dUI.
void em_advance(StepWorkspace& ws, Eigen::Ref<Vec> uI, Eigen::Ref<Vec> uII,
                double dt, NormalStream& noise, Eigen::Ref<Vec> dUI);

// Throws BlowUpError when a component is non-finite or exceeds cap.
void check_state(const Eigen::Ref<const Vec>& uI, const Eigen::Ref<const Vec>& uII,
                 double cap, Index sample, double t);

// One step for every sample; returns the observed increments (N_I x L).
Mat step_euler_maruyama(const ConditionalGaussianModel& model, Ensemble& ens,
                        double dt, const RngPolicy& rng, std::uint32_t step,
                        double blowup_cap = 1e8);

SimulationResult simulate(const ConditionalGaussianModel& model,
                          const Ensemble& init, const SimConfig& cfg,
                          const RngPolicy& rng);

struct Moments {
  Vec mean;
  Vec variance;  // unbiased
};

// Moments of the joint state ordered [u_I; u_II].
Moments ensemble_moments(const Ensemble& ens);
Moments ensemble_moments(const Snapshot& snap);

}  // namespace cgpdf
