#include "cgpdf/diagnostics.hpp"

#include <cmath>
#include <numbers>

namespace cgpdf {

MiseReport estimate_mise(std::span<const GridDensity> estimates,
                         const GridDensity& reference,
                         std::string reference_descriptor) {
  const Index R = static_cast<Index>(estimates.size());
  if (R < 2) throw ConfigError("estimate_mise needs at least two repeats");
  for (const auto& e : estimates)
    if (!e.same_grid(reference))
      throw ConfigError("estimate and reference grids differ");
  Vec pbar = Vec::Zero(reference.size());
  for (const auto& e : estimates) pbar += e.values();
  pbar /= static_cast<double>(R);

  const Vec& w = reference.weights();
  MiseReport rep;
  rep.n_repeats = R;
  rep.grid_shape = reference.shape();
  rep.reference = std::move(reference_descriptor);
  std::vector<double> v(R);
  for (Index r = 0; r < R; ++r) {
    const Vec& p = estimates[r].values();
    v[r] = w.dot((p - pbar).array().square().matrix());
    rep.ise.push_back(w.dot((p - reference.values()).array().square().matrix()));
  }
  double sv = 0, sv2 = 0, si = 0;
  for (Index r = 0; r < R; ++r) {
    sv += v[r];
    si += rep.ise[r];
  }
  rep.variance = sv / static_cast<double>(R);
  for (Index r = 0; r < R; ++r) sv2 += (v[r] - rep.variance) * (v[r] - rep.variance);
  rep.variance_stderr = std::sqrt(sv2 / static_cast<double>(R - 1) / static_cast<double>(R));
  rep.bias = w.dot((pbar - reference.values()).array().square().matrix());
  rep.mise = rep.variance + rep.bias;
  rep.mean_ise = si / static_cast<double>(R);
  return rep;
}

MiseReport estimate_mise(const EstimatorFactory& factory,
                         const GridDensity& reference, Index n_repeats,
                         std::string reference_descriptor) {
  if (n_repeats < 2) throw ConfigError("estimate_mise needs at least two repeats");
  std::vector<GridDensity> est;
  est.reserve(n_repeats);
  for (Index r = 0; r < n_repeats; ++r) est.push_back(factory(r));
  return estimate_mise(est, reference, std::move(reference_descriptor));
}

double variance_bound(const std::vector<Mat>& covs, const Bandwidth& bw, Index L) {
  if (L < 1) throw ConfigError("L must be positive");
  double kern = 1.0;
  for (Index k = 0; k < bw.c.size(); ++k)
    kern *= std::numbers::pi * bw.H * bw.c(k) * bw.c(k);
  if (!(kern > 0)) throw ConfigError("kernel bandwidth must be positive");
  if (covs.empty()) return 1.0 / (static_cast<double>(L) * std::sqrt(kern));
  double acc = 0.0;
  for (const Mat& R : covs) {
    const double det = (std::numbers::pi * R).determinant();
    if (!(det > 0))
      throw ConfigError("zero determinant in variance_bound; regularize R_II");
    acc += 1.0 / std::sqrt(kern * det);
  }
  return acc / static_cast<double>(covs.size()) / static_cast<double>(L);
}

double direct_kde_variance_bound(const Bandwidth& bw, Index L) {
  return variance_bound({}, bw, L);
}

double bias_bound_report(const GridDensity& ref, const Bandwidth& bw,
                         double delta) {
  const Index nk = bw.c.size();
  if (nk > ref.dims()) throw ConfigError("bandwidth has more directions than grid");
  for (const Vec& a : ref.axes())
    if (a.size() < 5) throw ConfigError("grid too coarse for second differences");
  const auto sh = ref.shape();
  std::vector<Index> st(sh.size(), 1);
  for (Index a = static_cast<Index>(sh.size()) - 2; a >= 0; --a)
    st[a] = st[a + 1] * sh[a + 1];
  const Vec& p = ref.values();
  Vec lap = Vec::Zero(p.size());
  for (Index k = 0; k < nk; ++k) {
    const Vec& ax = ref.axes()[k];
    const double c2 = bw.c(k) * bw.c(k);
    for (Index f = 0; f < p.size(); ++f) {
      Index i = (f / st[k]) % sh[k];
      // One-sided boundary rows reuse the nearest interior stencil.
      i = std::clamp<Index>(i, 1, sh[k] - 2);
      const Index base = f - ((f / st[k]) % sh[k]) * st[k];
      const double hm = ax(i) - ax(i - 1), hp = ax(i + 1) - ax(i);
      const double pm = p(base + (i - 1) * st[k]), p0 = p(base + i * st[k]),
                   pp = p(base + (i + 1) * st[k]);
      const double d2 = 2.0 * (hm * pp - (hm + hp) * p0 + hp * pm) /
                        (hm * hp * (hm + hp));
      lap(f) += c2 * d2;
    }
  }
  const double J = ref.weights().dot(lap.array().square().matrix());
  return 0.25 * (1.0 + delta) * bw.H * bw.H * J;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("degenerate fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ConfigError("degenerate fit");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(den > 0)) throw ConfigError("degenerate fit");
  return (n * sxy - sx * sy) / den;
}

Mat monte_carlo_states(const ConditionalGaussianModel& model, const Vec& uI0,
                       const Vec& uII0, double t_end, double dt, Index n,
                       std::uint64_t seed, double blowup_cap) {
  SimConfig cfg;
  cfg.t_end = t_end;
  cfg.dt = dt;
  cfg.blowup_cap = blowup_cap;
  cfg.store_hidden = false;
  cfg.store_stride = cfg.n_steps(0.0);
  const auto res = simulate(model, Ensemble::at_point(uI0, uII0, n), cfg,
                            RngPolicy{seed});
  Mat out(model.dim(), n);
  out << res.final.uI, res.final.uII;
  return out;
}

std::vector<Mat> monte_carlo_states(const ConditionalGaussianModel& model,
                                    const Vec& uI0, const Vec& uII0,
                                    const std::vector<double>& times, double dt,
                                    Index n, std::uint64_t seed,
                                    double blowup_cap) {
  std::vector<Mat> out;
  Ensemble ens = Ensemble::at_point(uI0, uII0, n);
  std::uint32_t steps = 0;
  for (double t : times) {
    if (!(t > ens.t) && !(t == 0.0 && out.empty()))
      throw ConfigError("observation times must be increasing");
    if (t > ens.t) {
      SimConfig cfg;
      cfg.t_end = t;
      cfg.dt = dt;
      cfg.blowup_cap = blowup_cap;
      cfg.store_hidden = false;
      cfg.step_offset = steps;
      const Index k = cfg.n_steps(ens.t);
      cfg.store_stride = k;
      ens = simulate(model, ens, cfg, RngPolicy{seed}).final;
      steps += static_cast<std::uint32_t>(k);
    }
    Mat s(model.dim(), n);
    s << ens.uI, ens.uII;
    out.push_back(std::move(s));
  }
  return out;
}

GridDensity reference_from_samples(const Mat& samples, std::vector<Vec> axes,
                                   double kappa) {
  const double d = static_cast<double>(samples.rows());
  const double n = static_cast<double>(samples.cols());
  const Vec std = sample_std(samples) * kappa * std::pow(n, -1.0 / (d + 4.0));
  return binned_kde(samples, std, std::move(axes));
}

ScalingResult mise_scaling_experiment(const ConditionalGaussianModel& model,
                                      const Vec& uI0, const Vec& uII0,
                                      const GridDensity& joint_ref,
                                      const GridDensity& hidden_ref,
                                      const ScalingOptions& opt) {
  if (opt.Ls.size() < 4) throw ConfigError("scaling needs at least four values of L");
  const auto [lo, hi] = std::minmax_element(opt.Ls.begin(), opt.Ls.end());
  if (*hi < 10 * *lo) throw ConfigError("values of L must span at least a decade");
  if (opt.n_repeats < 2) throw ConfigError("scaling needs at least two repeats");
  const Index nI = model.n_obs(), nII = model.n_hidden();
  if (joint_ref.dims() != nI + nII || hidden_ref.dims() != nII)
    throw ConfigError("reference grids do not match the model");

  ScalingResult out;
  std::uint64_t next_id = 0;
  for (Index L : opt.Ls) {
    if (L < 2) throw ConfigError("L must be >= 2");
    const Index R = opt.n_repeats;
    SimConfig cfg;
    cfg.t_end = opt.t_eval;
    cfg.dt = opt.dt;
    cfg.store_hidden = false;
    cfg.store_stride = cfg.n_steps(0.0);
    // Fresh sample ids per L keep every ensemble independent.
    auto ens = Ensemble::at_point(uI0, uII0, L * R, 0.0, next_id);
    next_id += static_cast<std::uint64_t>(L * R);
    const auto run = simulate_filtered(model, ens, FilterInit::from_ensemble(),
                                       cfg, RngPolicy{opt.seed});
    const Index last = run.filter.n_records() - 1;
    const auto covs = run.filter.covariances(last);

    ScalingPoint pt;
    pt.L = L;
    std::vector<GridDensity> hyb, dir, hid;
    for (Index r = 0; r < R; ++r) {
      const Mat uI = run.final.uI.middleCols(r * L, L);
      const Mat uII = run.final.uII.middleCols(r * L, L);
      const Mat mu = run.filter.means(last).middleCols(r * L, L);
      std::vector<Mat> cr(covs.begin() + r * L, covs.begin() + (r + 1) * L);
      const Bandwidth bw = scaling_bandwidth(L, nI, sample_std(uI), opt.kappa);
      const auto mix = build_hybrid(uI, mu, cr, bw, opt.delta);
      hyb.push_back(eval_on_grid(mix, joint_ref.axes()));
      pt.hybrid_bound += variance_bound(mix.covariances(), bw, L) / R;
      if (opt.direct) {
        Mat joint(nI + nII, L);
        joint << uI, uII;
        const Bandwidth bd =
            scaling_bandwidth(L, nI + nII, sample_std(joint), opt.kappa);
        dir.push_back(eval_on_grid(make_direct_kde(joint, bd), joint_ref.axes()));
        pt.direct_bound += direct_kde_variance_bound(bd, L) / R;
      }
      if (opt.hidden) {
        const auto mh = marginal_hidden(mix);
        hid.push_back(eval_on_grid(mh, hidden_ref.axes()));
        pt.hidden_bound += variance_bound(mh.covariances(), Bandwidth{1.0, Vec()}, L) / R;
      }
    }
    pt.hybrid = estimate_mise(hyb, joint_ref, "joint reference");
    if (opt.direct) pt.direct = estimate_mise(dir, joint_ref, "joint reference");
    if (opt.hidden) pt.hidden = estimate_mise(hid, hidden_ref, "hidden reference");
    out.points.push_back(std::move(pt));
  }
  std::vector<double> x, yh, yd, ym;
  for (const auto& p : out.points) {
    x.push_back(static_cast<double>(p.L));
    yh.push_back(p.hybrid.mise);
    yd.push_back(p.direct.mise);
    ym.push_back(p.hidden.mise);
  }
  out.slope_hybrid = fit_loglog_slope(x, yh);
  if (opt.direct) out.slope_direct = fit_loglog_slope(x, yd);
  if (opt.hidden) out.slope_hidden = fit_loglog_slope(x, ym);
  return out;
}

}  // namespace cgpdf
