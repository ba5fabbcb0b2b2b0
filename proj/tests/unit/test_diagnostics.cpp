#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "cgpdf/diagnostics.hpp"
#include "cgpdf/triad.hpp"
#include "test_models.hpp"

using namespace cgpdf;
using std::numbers::pi;
using testing_models::scalar_model;

namespace {

GridDensity normal_on(const Vec& axis, double m, double s) {
  Vec v(axis.size());
  for (Index j = 0; j < axis.size(); ++j) {
    const double z = (axis(j) - m) / s;
    v(j) = std::exp(-0.5 * z * z) / (s * std::sqrt(2 * pi));
  }
  return GridDensity({axis}, v);
}

ObservedPath flat_path(Index nI, double T, double dt) {
  ObservedPath p;
  const Index n = std::llround(T / dt) + 1;
  for (Index k = 0; k < n; ++k) p.t.push_back(k * dt);
  p.uI = Mat::Zero(nI, n);
  return p;
}

}  // namespace

TEST_CASE("MISE of an exact estimator is zero") {
  const Vec ax = linspace(-6, 6, 121);
  const GridDensity ref = normal_on(ax, 0, 1);
  const std::vector<GridDensity> est(4, ref);
  const auto r = estimate_mise(est, ref, "exact");
  CHECK(r.mise == 0.0);
  CHECK(r.bias == 0.0);
  CHECK(r.variance == 0.0);
  CHECK(r.reference == "exact");
  CHECK_THROWS_AS(estimate_mise(std::vector<GridDensity>(1, ref), ref), ConfigError);
}

TEST_CASE("MISE decomposition") {
  const Vec ax = linspace(-8, 8, 321);
  const GridDensity ref = normal_on(ax, 0, 1);
  std::vector<GridDensity> est;
  for (double m : {0.1, -0.3, 0.25, 0.0, 0.4}) est.push_back(normal_on(ax, m, 1.1));
  const auto r = estimate_mise(est, ref);
  CHECK(r.mise == doctest::Approx(r.bias + r.variance).epsilon(1e-15));
  // mean ISE = ∫ mean (p_r - p̄)² + ∫ (p̄ - p)²: the cross term cancels.
  CHECK(std::abs(r.mean_ise - r.mise) <= 1e-12 * r.mise);
  CHECK(r.ise.size() == 5);
  CHECK(r.grid_shape == std::vector<Index>{321});
}

TEST_CASE("L2 distance between two unit Gaussians") {
  const Vec ax = linspace(-12, 16, 2801);
  for (double D : {0.5, 2.0, 10.0}) {
    const double exact = 2.0 * (1.0 - std::exp(-D * D / 4.0)) / std::sqrt(4 * pi);
    CHECK(l2_distance_squared(normal_on(ax, 0, 1), normal_on(ax, D, 1)) ==
          doctest::Approx(exact).epsilon(1e-8));
  }
  CHECK(2.0 / std::sqrt(4 * pi) == doctest::Approx(0.5642).epsilon(1e-4));
}

TEST_CASE("variance bound") {
  const Bandwidth bw{0.1, Vec::Ones(2)};
  const double b = variance_bound({Mat::Identity(1, 1)}, bw, 100);
  CHECK(b == doctest::Approx(0.01 / std::sqrt(0.01 * pi * pi * pi)).epsilon(1e-14));
  CHECK(b == doctest::Approx(0.01796).epsilon(1e-3));
  CHECK(variance_bound({4.0 * Mat::Identity(1, 1)}, bw, 100) == doctest::Approx(b / 2));

  // Direct KDE bound with the hidden direction smoothed by the kernel.
  const Bandwidth full{0.1, Eigen::Vector3d(1.0, 1.0, 0.8)};
  const std::vector<Mat> covs{Mat::Constant(1, 1, 0.3), Mat::Constant(1, 1, 0.6)};
  const double ratio = direct_kde_variance_bound(full, 100) / variance_bound(covs, bw, 100);
  const double mean_det = 0.5 * (1 / std::sqrt(0.3) + 1 / std::sqrt(0.6));
  CHECK(ratio == doctest::Approx(std::pow(0.1, -0.5) / 0.8 / mean_det).epsilon(1e-12));
  CHECK_THROWS_AS(variance_bound({Mat::Zero(1, 1)}, bw, 100), ConfigError);
}

TEST_CASE("bias bound") {
  const Vec ax = linspace(-10, 10, 2001);
  const GridDensity p = normal_on(ax, 0, 1);
  // ∫ (p'')² = 3/(8√π) for the standard normal.
  const double J = 3.0 / (8.0 * std::sqrt(pi));
  const Bandwidth bw{0.2, Vec::Ones(1)};
  CHECK(bias_bound_report(p, bw, 0.0) == doctest::Approx(0.25 * 0.04 * J).epsilon(1e-4));
  CHECK(bias_bound_report(p, Bandwidth{0.4, Vec::Ones(1)}, 0.0) ==
        doctest::Approx(4.0 * bias_bound_report(p, bw, 0.0)));
  CHECK(bias_bound_report(p, bw, 0.5) ==
        doctest::Approx(1.5 * bias_bound_report(p, bw, 0.0)));
  const GridDensity flat({ax}, Vec::Constant(ax.size(), 0.05));
  CHECK(bias_bound_report(flat, bw, 0.0) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{125, 250, 500, 1000, 2000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -2.0 / 3.0));
  CHECK(fit_loglog_slope(x, y) == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(fit_loglog_slope({1.0, 2.0}, {1.0, 0.0}), ConfigError);
}

TEST_CASE("Monte Carlo states at several times continue the same paths") {
  const auto m = triad_model(triad_preset("triad_modified"));
  const auto multi = monte_carlo_states(m, Vec::Zero(2), Vec::Zero(1), {0.2, 0.5}, 1e-3, 30, 4);
  const Mat single = monte_carlo_states(m, Vec::Zero(2), Vec::Zero(1), 0.5, 1e-3, 30, 4);
  CHECK(multi.size() == 2);
  CHECK((multi[1] - single).cwiseAbs().maxCoeff() == 0.0);
  CHECK((multi[0] - single).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(monte_carlo_states(m, Vec::Zero(2), Vec::Zero(1), {0.5, 0.2}, 1e-3, 3, 4),
                  ConfigError);
}

TEST_CASE("sample-based reference is a density") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n;
  Mat x(1, 50000);
  for (Index j = 0; j < x.cols(); ++j) x(0, j) = n(gen);
  const Vec ax = linspace(-6, 6, 241);
  const GridDensity r = reference_from_samples(x, {ax});
  CHECK(r.integral() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(l2_distance_squared(r, normal_on(ax, 0, 1)) < 1e-4);
}

TEST_CASE("scaling experiment input checks") {
  const auto m = triad_model(triad_preset("triad_modified"));
  const GridDensity joint({linspace(-1, 1, 5), linspace(-1, 1, 5), linspace(-1, 1, 5)},
                          Vec::Zero(125));
  const GridDensity hid({linspace(-1, 1, 5)}, Vec::Zero(5));
  ScalingOptions opt;
  opt.Ls = {100};
  CHECK_THROWS_AS(mise_scaling_experiment(m, Vec::Zero(2), Vec::Zero(1), joint, hid, opt),
                  ConfigError);
  opt.Ls = {10, 20, 40, 50};
  CHECK_THROWS_AS(mise_scaling_experiment(m, Vec::Zero(2), Vec::Zero(1), joint, hid, opt),
                  ConfigError);
}

TEST_CASE("controllability and observability Gramians, constant coefficients") {
  // a1 = -λ, Σ_II = σ: C = σ²(1 - e^{-2λ})/(2λ); A1 = c, Σ_I = 1:
  // O = c²(e^{2λ} - 1)/(2λ).
  for (double lam : {1.0, 0.3}) {
    const double sigma = 1.0, c = 2.0;
    const auto m = scalar_model(0, c, 0, -lam, 1, sigma);
    const auto g = controllability_gramian(m, flat_path(1, 2.0, 1e-3), 1.0, 2.0);
    CHECK(g.C(0, 0) ==
          doctest::Approx(sigma * sigma * (1 - std::exp(-2 * lam)) / (2 * lam)).epsilon(1e-6));
    CHECK(g.O(0, 0) == doctest::Approx(c * c * (std::exp(2 * lam) - 1) / (2 * lam)).epsilon(1e-6));
    CHECK(g.E(0, 0) == doctest::Approx(std::exp(-lam)).epsilon(1e-12));
  }
  const auto g1 = controllability_gramian(scalar_model(0, 1, 0, -1, 1, 1),
                                          flat_path(1, 1.0, 1e-3), 0.0, 1.0);
  CHECK(g1.C(0, 0) == doctest::Approx(0.43233).epsilon(1e-4));
  const auto g0 = controllability_gramian(scalar_model(0, 1, 0, -1, 1, 0),
                                          flat_path(1, 1.0, 1e-3), 0.0, 1.0);
  CHECK(g0.C(0, 0) == 0.0);
  CHECK_THROWS_AS(controllability_gramian(scalar_model(0, 1, 0, -1, 1, 1),
                                          flat_path(1, 1.0, 1e-3), 0.0, 2.0),
                  ConfigError);
}

TEST_CASE("Gramian along a triad path") {
  const auto m = triad_model(triad_preset("triad_damped", "I"));
  SimConfig cfg;
  cfg.t_end = 3.0;
  cfg.dt = 1e-3;
  const auto s = simulate(m, Ensemble::at_point(Vec::Zero(2), Vec::Zero(1), 1), cfg,
                          RngPolicy{7});
  const ObservedPath path = observed_path(s.store, 0);

  // Flow cocycle E_{s,t} = E_{r,t} E_{s,r}.
  const Mat E02 = flow_matrix(m, path, 0.5, 2.5);
  const Mat E01 = flow_matrix(m, path, 0.5, 1.5), E12 = flow_matrix(m, path, 1.5, 2.5);
  CHECK((E02 - E12 * E01).norm() < 1e-10 * E02.norm());

  // Scalar hidden state: E_{r,t} = exp(-d1 (t - r)), C = ε²(1 - e^{-2 d1})/(2 d1).
  const auto g = controllability_gramian(m, path, 1.0, 2.0);
  CHECK(g.C(0, 0) == doctest::Approx(0.01 * (1 - std::exp(-0.2)) / 0.2).epsilon(1e-6));

  // Observability by the trapezoid rule on the hidden flow.
  const auto sa = sigma_A_lower(m, path);
  double O = 0;
  for (Index k = 1000; k <= 2000; ++k) {
    const double w = (k == 1000 || k == 2000) ? 0.5e-3 : 1e-3;
    const double u2 = path.uI(0, k), u3 = path.uI(1, k);
    CHECK(sa[k] == doctest::Approx(u3 * u3 + 2.25 * u2 * u2).epsilon(1e-12));
    O += w * std::exp(0.2 * (2.0 - path.t[k])) * sa[k];
  }
  CHECK(g.O(0, 0) == doctest::Approx(O).epsilon(1e-9));
}

TEST_CASE("posterior covariance bounds") {
  const ObservedPath zero = flat_path(2, 2.0, 1e-2);
  BoundInputs in;
  in.Dc = 3.0;
  in.sigma_II_minus = 0.5;
  in.sigma_II_plus = 0.8;
  const auto h = r2_lower_bound(in, zero, 1.5);
  REQUIRE(h.applicable);
  const double exp =
      0.64 / 0.25 * std::pow(3.0, 6) * 1.0 + 3.0 / 0.25;  // integral term vanishes
  CHECK(h.value == doctest::Approx(exp).epsilon(1e-14));

  // The moment integral enters linearly.
  ObservedPath one = zero;
  one.uI.setOnes();
  CHECK(path_moment_integral(one, 1.5, 1.0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(path_moment_integral(one, 1.5, 1.0, 2) == doctest::Approx(4.0).epsilon(1e-12));

  BoundInputs deg = in;
  deg.sigma_II_minus = 0.0;
  CHECK_FALSE(r2_lower_bound(deg, zero, 1.5).applicable);

  const auto g0 = r2_upper_bound(in, zero, 1.5, std::vector<double>(zero.t.size(), 0.0));
  CHECK_FALSE(g0.applicable);
  CHECK(std::isinf(g0.value));

  // Constant scalar case: R* = √2 - 1 lies below g.
  const auto m = scalar_model(0, 1, 0, -1, 1, 1);
  const auto sa = sigma_A_lower(m, zero);
  CHECK(sa[0] == 1.0);
  BoundInputs ci;
  ci.Dc = 1.0;
  ci.sigma_II_minus = ci.sigma_II_plus = 1.0;
  const auto g = r2_upper_bound(ci, zero, 1.5, sa);
  REQUIRE(g.applicable);
  CHECK(g.value >= std::sqrt(2.0) - 1.0);
  CHECK_THROWS_AS(r2_lower_bound(in, zero, 0.5), ConfigError);
}
