#include "cgpdf/sde_sim.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace cgpdf {

void Ensemble::check() const {
  if (uI.cols() != uII.cols())
    throw ConfigError("ensemble: observed and hidden sample counts differ");
  if (static_cast<Index>(ids.size()) != uI.cols())
    throw ConfigError("ensemble: ids do not match sample count");
  if (!uI.allFinite() || !uII.allFinite())
    throw BlowUpError("ensemble holds non-finite states", -1, t);
}

Ensemble Ensemble::at_point(const Vec& uI0, const Vec& uII0, Index L,
                            double t0, std::uint64_t first_id) {
  if (L < 1) throw ConfigError("ensemble size must be >= 1");
  Ensemble e;
  e.t = t0;
  e.uI = uI0.replicate(1, L);
  e.uII = uII0.replicate(1, L);
  e.ids.resize(L);
  std::iota(e.ids.begin(), e.ids.end(), first_id);
  return e;
}

Index SimConfig::n_steps(double t0) const {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(t_end > t0)) throw ConfigError("t_end must exceed the initial time");
  if (store_stride < 1) throw ConfigError("store_stride must be >= 1");
  return static_cast<Index>(std::llround((t_end - t0) / dt));
}

std::vector<double> TrajectoryStore::times() const {
  std::vector<double> t;
  t.reserve(snaps_.size());
  for (const auto& s : snaps_) t.push_back(s.t);
  return t;
}

Mat TrajectoryStore::observed_path(Index sample) const {
  Mat p(snaps_.at(0).uI.rows(), n_records());
  for (Index k = 0; k < n_records(); ++k) p.col(k) = snaps_[k].uI.col(sample);
  return p;
}

Mat TrajectoryStore::hidden_path(Index sample) const {
  if (!has_hidden()) throw ConfigError("store holds no hidden states");
  Mat p(snaps_.at(0).uII.rows(), n_records());
  for (Index k = 0; k < n_records(); ++k) p.col(k) = snaps_[k].uII.col(sample);
  return p;
}

void StepWorkspace::resize(Index n_obs, Index n_hidden) {
  c.resize(n_obs, n_hidden);
  xi_I.setZero(n_obs);
  xi_II.setZero(n_hidden);
  dI.setZero(n_obs);
  dII.setZero(n_hidden);
}

void em_advance(StepWorkspace& ws, Eigen::Ref<Vec> uI, Eigen::Ref<Vec> uII,
                double dt, NormalStream& noise, Eigen::Ref<Vec> dUI) {
  const double sq = std::sqrt(dt);
  for (Index k = 0; k < ws.xi_I.size(); ++k) ws.xi_I(k) = noise.next();
  for (Index k = 0; k < ws.xi_II.size(); ++k) ws.xi_II(k) = noise.next();
  ws.dI = ws.c.A0;
  ws.dI.noalias() += ws.c.A1.lazyProduct(uII);
  ws.dI *= dt;
  ws.dII = ws.c.a0;
  ws.dII.noalias() += ws.c.a1.lazyProduct(uII);
  ws.dII *= dt;
  ws.xi_I *= sq;
  ws.xi_II *= sq;
  ws.dI.noalias() += ws.c.sigma_I.lazyProduct(ws.xi_I);
  ws.dII.noalias() += ws.c.sigma_II.lazyProduct(ws.xi_II);
  for (Index k = 0; k < uI.size(); ++k) {
    const double next = uI(k) + ws.dI(k);
    dUI(k) = next - uI(k);
    uI(k) = next;
  }
  uII += ws.dII;
}

void check_state(const Eigen::Ref<const Vec>& uI,
                 const Eigen::Ref<const Vec>& uII, double cap, Index sample,
                 double t) {
  const bool finite = uI.allFinite() && uII.allFinite();
  if (!finite || uI.cwiseAbs().maxCoeff() > cap ||
      (uII.size() && uII.cwiseAbs().maxCoeff() > cap)) {
    throw BlowUpError("sample " + std::to_string(sample) +
                          (finite ? " exceeded the magnitude cap"
                                  : " became non-finite") +
                          " at t=" + std::to_string(t),
                      sample, t);
  }
}

namespace {

// Runs body(i) over samples, capturing the numerical error of the lowest
// failing sample index so the reported error does not depend on scheduling.
template <class Body>
void parallel_samples(Index L, Body&& body) {
  std::vector<std::exception_ptr> errs(L);
  bool any = false;
#pragma omp parallel for schedule(dynamic, 16) reduction(|| : any)
  for (Index i = 0; i < L; ++i) {
    try {
      body(i);
    } catch (...) {
      errs[i] = std::current_exception();
      any = true;
    }
  }
  if (any) {
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Mat step_euler_maruyama(const ConditionalGaussianModel& model, Ensemble& ens,
                        double dt, const RngPolicy& rng, std::uint32_t step,
                        double blowup_cap) {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  ens.check();
  const Index L = ens.size();
  Mat dUI(model.n_obs(), L);
  parallel_samples(L, [&](Index i) {
    StepWorkspace ws;
    ws.resize(model.n_obs(), model.n_hidden());
    model.evaluate(ens.t, ens.uI.col(i), ws.c);
    NormalStream noise = rng.stream(ens.ids[i], step);
    em_advance(ws, ens.uI.col(i), ens.uII.col(i), dt, noise, dUI.col(i));
    check_state(ens.uI.col(i), ens.uII.col(i), blowup_cap, i, ens.t + dt);
  });
  ens.t += dt;
  return dUI;
}

SimulationResult simulate(const ConditionalGaussianModel& model,
                          const Ensemble& init, const SimConfig& cfg,
                          const RngPolicy& rng) {
  init.check();
  if (init.uI.rows() != model.n_obs() || init.uII.rows() != model.n_hidden())
    throw ConfigError("ensemble dimensions do not match the model");
  const Index n_steps = cfg.n_steps(init.t);
  const Index L = init.size();
  const Index n_rec = n_steps / cfg.store_stride + 1;

  SimulationResult res{TrajectoryStore(cfg.dt, cfg.store_stride), init};
  for (Index k = 0; k < n_rec; ++k) {
    Snapshot s;
    s.t = init.t + static_cast<double>(k * cfg.store_stride) * cfg.dt;
    s.uI.resize(model.n_obs(), L);
    if (cfg.store_hidden) s.uII.resize(model.n_hidden(), L);
    res.store.push(std::move(s));
  }
  Ensemble& ens = res.final;

  parallel_samples(L, [&](Index i) {
    StepWorkspace ws;
    ws.resize(model.n_obs(), model.n_hidden());
    Vec uI = ens.uI.col(i), uII = ens.uII.col(i), dUI(model.n_obs());
    for (Index k = 0; k <= n_steps; ++k) {
      const double t = init.t + static_cast<double>(k) * cfg.dt;
      if (k % cfg.store_stride == 0) {
        Snapshot& s = res.store.record(k / cfg.store_stride);
        s.uI.col(i) = uI;
        if (cfg.store_hidden) s.uII.col(i) = uII;
      }
      if (k == n_steps) break;
      model.evaluate(t, uI, ws.c);
      NormalStream noise = rng.stream(
          ens.ids[i], cfg.step_offset + static_cast<std::uint32_t>(k));
      em_advance(ws, uI, uII, cfg.dt, noise, dUI);
      check_state(uI, uII, cfg.blowup_cap, i, t + cfg.dt);
    }
    ens.uI.col(i) = uI;
    ens.uII.col(i) = uII;
  });
  ens.t = init.t + static_cast<double>(n_steps) * cfg.dt;
  return res;
}

namespace {

Moments moments_of(const Mat& uI, const Mat& uII) {
  const Index L = uI.cols();
  if (L < 2) throw ConfigError("moments need at least two samples");
  Mat u(uI.rows() + uII.rows(), L);
  u << uI, uII;
  Moments m;
  m.mean = u.rowwise().mean();
  m.variance =
      (u.colwise() - m.mean).rowwise().squaredNorm() / static_cast<double>(L - 1);
  return m;
}

}  // namespace

Moments ensemble_moments(const Ensemble& ens) {
  return moments_of(ens.uI, ens.uII);
}

Moments ensemble_moments(const Snapshot& snap) {
  return moments_of(snap.uI, snap.uII);
}

}  // namespace cgpdf
