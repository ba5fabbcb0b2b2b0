#include "cgpdf/cg_filter.hpp"

#include <cmath>
#include <string>

namespace cgpdf {

void FilterWorkspace::resize(Index n_obs, Index n_hidden) {
  S.setZero(n_obs, n_obs);
  S_cached.setZero(n_obs, n_obs);
  Sinv.setZero(n_obs, n_obs);
  G.setZero(n_hidden, n_obs);
  RG.setZero(n_hidden, n_obs);
  A1R.setZero(n_obs, n_hidden);
  dR.setZero(n_hidden, n_hidden);
  innov.setZero(n_obs);
  dmean.setZero(n_hidden);
  tmpI.setZero(n_obs);
  tmpII.setZero(n_hidden);
  factored = false;
}

namespace {

// Gain factor G = A1* (Σ_I Σ_I*)^{-1}.
void observation_gain(const Coefficients& c, FilterWorkspace& ws) {
  ws.S.noalias() = c.sigma_I.lazyProduct(c.sigma_I.transpose());
  // Constant observation noise is the common case; refactor only on change.
  if (!ws.factored || ws.S != ws.S_cached) {
    ws.llt.compute(ws.S);
    if (ws.llt.info() != Eigen::Success)
      throw ConfigError("Sigma_I Sigma_I* is singular");
    ws.Sinv = ws.llt.solve(Mat::Identity(ws.S.rows(), ws.S.cols()));
    ws.S_cached = ws.S;
    ws.factored = true;
  }
  // Lazy products: the operands are tiny and GEMM setup would dominate.
  ws.G.noalias() = c.A1.transpose().lazyProduct(ws.Sinv);
}

// Symmetrize, then clip negative eigenvalues. Returns the smallest
// eigenvalue seen before clipping.
double project_psd(Eigen::Ref<Mat> R, FilterWorkspace& ws, bool floor) {
  if (R.rows() == 1) {
    const double r = R(0, 0);
    if (floor && r < 0) R(0, 0) = 0.0;
    return r;
  }
  R = 0.5 * (R + R.transpose()).eval();
  ws.eig.compute(R);
  const double lo = ws.eig.eigenvalues().minCoeff();
  if (floor && lo < 0) {
    const Vec ev = ws.eig.eigenvalues().cwiseMax(0.0);
    R.noalias() = ws.eig.eigenvectors() * ev.asDiagonal() *
                  ws.eig.eigenvectors().transpose();
    R = 0.5 * (R + R.transpose()).eval();
  }
  return lo;
}

void add_riccati_rate(const Coefficients& c, const Eigen::Ref<const Mat>& R,
                      FilterWorkspace& ws, double dt) {
  ws.RG.noalias() = R.lazyProduct(ws.G);
  ws.dR.noalias() = c.a1.lazyProduct(R);
  ws.dR.noalias() += R.lazyProduct(c.a1.transpose());
  ws.dR.noalias() += c.sigma_II.lazyProduct(c.sigma_II.transpose());
  ws.A1R.noalias() = c.A1.lazyProduct(R);
  ws.dR.noalias() -= ws.RG.lazyProduct(ws.A1R);
  ws.dR *= dt;
}

}  // namespace

double filter_update(const Coefficients& c, const Eigen::Ref<const Vec>& dUI,
                     double dt, Eigen::Ref<Vec> mean, Eigen::Ref<Mat> cov,
                     FilterWorkspace& ws, const FilterOptions& opt,
                     Index sample, double t) {
  observation_gain(c, ws);
  add_riccati_rate(c, cov, ws, dt);  // also fills RG from the old cov
  ws.tmpI = c.A0;
  ws.tmpI.noalias() += c.A1.lazyProduct(mean);
  ws.innov = dUI - ws.tmpI * dt;
  ws.tmpII = c.a0;
  ws.tmpII.noalias() += c.a1.lazyProduct(mean);
  ws.dmean = ws.tmpII * dt;
  ws.dmean.noalias() += ws.RG.lazyProduct(ws.innov);
  mean += ws.dmean;
  cov += ws.dR;
  if (!mean.allFinite() || !cov.allFinite()) {
    throw FilterBlowUpError("filter became non-finite for sample " +
                                std::to_string(sample) + " at t=" +
                                std::to_string(t),
                            sample, t);
  }
  return project_psd(cov, ws, opt.floor_psd);
}

double riccati_update(const Coefficients& c, double dt, Eigen::Ref<Mat> cov,
                      FilterWorkspace& ws, const FilterOptions& opt) {
  observation_gain(c, ws);
  add_riccati_rate(c, cov, ws, dt);
  cov += ws.dR;
  if (!cov.allFinite())
    throw FilterBlowUpError("Riccati flow became non-finite", -1, 0.0);
  return project_psd(cov, ws, opt.floor_psd);
}

FilterState filter_step(const ConditionalGaussianModel& model, double t,
                        const Vec& uI, const Vec& dUI, const FilterState& state,
                        double dt, const FilterOptions& opt) {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (state.mean.size() != model.n_hidden() ||
      state.cov.rows() != model.n_hidden() || state.cov.cols() != model.n_hidden())
    throw ConfigError("filter state dimensions do not match the model");
  FilterWorkspace ws;
  ws.resize(model.n_obs(), model.n_hidden());
  const Coefficients c = model.coefficients(t, uI);
  FilterState next = state;
  filter_update(c, dUI, dt, next.mean, next.cov, ws, opt, -1, t);
  return next;
}

FilterState FilterRun::state(Index k, Index sample) const {
  FilterState s;
  s.mean = means_[k].col(sample);
  s.cov = covs_[k].col(sample).reshaped(n_hidden_, n_hidden_);
  return s;
}

std::vector<Mat> FilterRun::covariances(Index k) const {
  std::vector<Mat> out(n_samples());
  for (Index i = 0; i < n_samples(); ++i)
    out[i] = covs_[k].col(i).reshaped(n_hidden_, n_hidden_);
  return out;
}

Index FilterRun::degenerate_count() const {
  Index n = 0;
  for (auto d : degenerate_) n += d;
  return n;
}

void FilterRun::push(double t, Mat means, Mat covs) {
  times_.push_back(t);
  means_.push_back(std::move(means));
  covs_.push_back(std::move(covs));
}

void FilterRun::mark(Index sample, double min_eig, double eig_floor) {
  min_eig_[sample] = std::min(min_eig_[sample], min_eig);
  if (min_eig < eig_floor) degenerate_[sample] = 1;
}

namespace {

double min_eig_of(const Mat& R) {
  if (R.rows() == 1) return R(0, 0);
  return Eigen::SelfAdjointEigenSolver<Mat>(R, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

void initial_state(const FilterInit& init, const Eigen::Ref<const Vec>& uII0,
                   Index n_hidden, Vec& mean, Mat& cov) {
  if (init.prior_mean.size() == 0) {
    if (uII0.size() != n_hidden)
      throw ConfigError("filter initialization needs the initial hidden states");
    mean = uII0;
  } else {
    if (init.prior_mean.size() != n_hidden)
      throw ConfigError("prior mean has the wrong dimension");
    mean = init.prior_mean;
  }
  if (init.prior_cov.size() == 0) {
    cov = Mat::Zero(n_hidden, n_hidden);
  } else {
    if (init.prior_cov.rows() != n_hidden || init.prior_cov.cols() != n_hidden)
      throw ConfigError("prior covariance has the wrong dimension");
    if (!init.prior_cov.isApprox(init.prior_cov.transpose()))
      throw ConfigError("prior covariance must be symmetric");
    cov = init.prior_cov;
  }
}

void collect_errors(std::vector<std::exception_ptr>& errs) {
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

FilterRun run_filters(const ConditionalGaussianModel& model,
                      const TrajectoryStore& store, const FilterInit& init,
                      const FilterOptions& opt) {
  if (store.n_records() < 2) throw ConfigError("store holds fewer than two records");
  if (store.stride() != 1)
    throw ConfigError("run_filters needs a store recorded at every step");
  const Index L = store.n_samples(), nII = model.n_hidden();
  const double dt = store.dt();
  FilterRun run(nII, L);
  for (Index k = 0; k < store.n_records(); ++k)
    run.push(store.record(k).t, Mat(nII, L), Mat(nII * nII, L));
  std::vector<double> violation(L, 0.0);

  std::vector<std::exception_ptr> errs(L);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < L; ++i) {
    try {
      FilterWorkspace fw;
      fw.resize(model.n_obs(), nII);
      Coefficients c;
      c.resize(model.n_obs(), nII);
      Vec mean, dUI(model.n_obs());
      Mat cov;
      const Vec uII0 = store.has_hidden() ? Vec(store.record(0).uII.col(i)) : Vec();
      initial_state(init, uII0, nII, mean, cov);
      // The initial covariance is an input, not a filter output; only
      // evolved states count towards the degeneracy flag.
      double lo = std::numeric_limits<double>::infinity();
      run.mutable_means(0).col(i) = mean;
      run.mutable_covs(0).col(i) = cov.reshaped();
      for (Index k = 0; k + 1 < store.n_records(); ++k) {
        const Snapshot& s = store.record(k);
        dUI = store.record(k + 1).uI.col(i) - s.uI.col(i);
        model.evaluate(s.t, s.uI.col(i), c);
        const double m = filter_update(c, dUI, dt, mean, cov, fw, opt, i, s.t);
        if (m < 0) violation[i] = std::max(violation[i], -m);
        lo = std::min(lo, min_eig_of(cov));
        run.mutable_means(k + 1).col(i) = mean;
        run.mutable_covs(k + 1).col(i) = cov.reshaped();
      }
      run.mark(i, lo, opt.eig_floor_report);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  collect_errors(errs);
  for (double v : violation) run.note_violation(v);
  return run;
}

FilteredSimulation simulate_filtered(const ConditionalGaussianModel& model,
                                     const Ensemble& init,
                                     const FilterInit& finit,
                                     const SimConfig& cfg, const RngPolicy& rng,
                                     const FilterOptions& opt) {
  init.check();
  if (init.uI.rows() != model.n_obs() || init.uII.rows() != model.n_hidden())
    throw ConfigError("ensemble dimensions do not match the model");
  const Index n_steps = cfg.n_steps(init.t);
  const Index L = init.size(), nI = model.n_obs(), nII = model.n_hidden();
  const Index n_rec = n_steps / cfg.store_stride + 1;

  FilteredSimulation res{TrajectoryStore(cfg.dt, cfg.store_stride),
                         FilterRun(nII, L), init};
  for (Index k = 0; k < n_rec; ++k) {
    Snapshot s;
    s.t = init.t + static_cast<double>(k * cfg.store_stride) * cfg.dt;
    s.uI.resize(nI, L);
    if (cfg.store_hidden) s.uII.resize(nII, L);
    res.filter.push(s.t, Mat(nII, L), Mat(nII * nII, L));
    res.store.push(std::move(s));
  }
  std::vector<double> violation(L, 0.0);

  std::vector<std::exception_ptr> errs(L);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < L; ++i) {
    try {
      StepWorkspace ws;
      ws.resize(nI, nII);
      FilterWorkspace fw;
      fw.resize(nI, nII);
      Vec uI = init.uI.col(i), uII = init.uII.col(i), dUI(nI), mean;
      Mat cov;
      initial_state(finit, uII, nII, mean, cov);
      double lo = std::numeric_limits<double>::infinity();
      for (Index k = 0; k <= n_steps; ++k) {
        const double t = init.t + static_cast<double>(k) * cfg.dt;
        if (k % cfg.store_stride == 0) {
          const Index r = k / cfg.store_stride;
          Snapshot& s = res.store.record(r);
          s.uI.col(i) = uI;
          if (cfg.store_hidden) s.uII.col(i) = uII;
          res.filter.mutable_means(r).col(i) = mean;
          res.filter.mutable_covs(r).col(i) = cov.reshaped();
          if (k > 0) lo = std::min(lo, min_eig_of(cov));
        }
        if (k == n_steps) break;
        model.evaluate(t, uI, ws.c);
        NormalStream noise =
            rng.stream(init.ids[i], cfg.step_offset + static_cast<std::uint32_t>(k));
        em_advance(ws, uI, uII, cfg.dt, noise, dUI);
        check_state(uI, uII, cfg.blowup_cap, i, t + cfg.dt);
        const double m = filter_update(ws.c, dUI, cfg.dt, mean, cov, fw, opt, i, t);
        if (m < 0) violation[i] = std::max(violation[i], -m);
      }
      res.final.uI.col(i) = uI;
      res.final.uII.col(i) = uII;
      res.filter.mark(i, lo, opt.eig_floor_report);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  collect_errors(errs);
  for (double v : violation) res.filter.note_violation(v);
  res.final.t = init.t + static_cast<double>(n_steps) * cfg.dt;
  return res;
}

ObservedPath observed_path(const TrajectoryStore& store, Index sample) {
  if (store.stride() != 1)
    throw ConfigError("observed_path needs a store recorded at every step");
  return {store.times(), store.observed_path(sample)};
}

ContractionResult riccati_contraction_experiment(
    const ConditionalGaussianModel& model, const ObservedPath& path,
    const Mat& R0, const Mat& R0_prime, double horizon, Index record_stride,
    const FilterOptions& opt) {
  const Index nII = model.n_hidden();
  if (R0.rows() != nII || R0.cols() != nII || R0_prime.rows() != nII ||
      R0_prime.cols() != nII)
    throw ConfigError("initial covariances have the wrong dimension");
  for (const Mat* R : {&R0, &R0_prime}) {
    Eigen::LLT<Mat> llt(*R);
    if (llt.info() != Eigen::Success || !R->isApprox(R->transpose()))
      throw ConfigError("initial covariances must be symmetric positive definite");
  }
  const Index n = static_cast<Index>(path.t.size());
  if (n < 2 || path.uI.cols() != n) throw ConfigError("trajectory too short");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
  const double dt = path.t[1] - path.t[0];
  const Index n_steps =
      std::min<Index>(n - 1, static_cast<Index>(std::llround(horizon / dt)));
  if (std::abs(static_cast<double>(n_steps) * dt - horizon) > 0.5 * dt)
    throw ConfigError("trajectory does not cover the requested horizon");

  FilterWorkspace ws;
  ws.resize(model.n_obs(), nII);
  Coefficients c;
  c.resize(model.n_obs(), nII);
  Mat R = R0, Rp = R0_prime;
  ContractionResult out;
  for (Index k = 0; k <= n_steps; ++k) {
    if (k % record_stride == 0 || k == n_steps) {
      out.times.push_back(path.t[k] - path.t[0]);
      const Mat D = R - Rp;
      out.distance.push_back(
          nII == 1 ? std::abs(D(0, 0))
                   : Eigen::JacobiSVD<Mat>(D).singularValues()(0));
    }
    if (k == n_steps) break;
    model.evaluate(path.t[k], path.uI.col(k), c);
    riccati_update(c, dt, R, ws, opt);
    riccati_update(c, dt, Rp, ws, opt);
  }
  // Least-squares slope of log distance against time over positive entries.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t j = 0; j < out.times.size(); ++j) {
    if (!(out.distance[j] > 0)) continue;
    const double x = out.times[j], y = std::log(out.distance[j]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; m += 1;
  }
  if (m >= 2 && m * sxx - sx * sx > 0)
    out.fitted_rate = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

}  // namespace cgpdf
