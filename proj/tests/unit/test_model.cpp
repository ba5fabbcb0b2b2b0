#include <cmath>
#include <random>

#include "doctest.h"

#include "cgpdf/triad.hpp"
#include "triad_oracle.hpp"
#include "test_models.hpp"

using namespace cgpdf;

TEST_CASE("regime presets") {
  const TriadParams I = TriadParams::regime_I();
  CHECK(I.A1 == -2.5);
  CHECK(I.A2 == 1.0);
  CHECK(I.A3 == 1.5);
  CHECK(I.d2 == 1.0);
  CHECK(I.d3 == 0.5);
  const TriadParams II = TriadParams::regime_II();
  CHECK(II.A1 == -0.5);
  CHECK(II.A2 == -1.0);

  const auto m = triad_model(I);
  CHECK(m.n_obs() == 2);
  CHECK(m.n_hidden() == 1);

  CHECK(triad_preset("triad").epsilon == 0.0);
  CHECK(triad_preset("triad_modified", "II").epsilon == 0.1);
  const TriadParams damped = triad_preset("triad_damped");
  CHECK(damped.d1 == 0.1);
  CHECK(damped.A1 == -0.5);  // regime II unless asked otherwise
  CHECK_THROWS_AS(triad_preset("triad", "III"), ConfigError);
  CHECK_THROWS_AS(triad_preset("lorenz"), ConfigError);
}

TEST_CASE("triad validation") {
  TriadParams p = TriadParams::regime_I();
  p.d2 = 0;
  CHECK_THROWS_AS(triad_model(p), ConfigError);
  p = TriadParams::regime_I();
  p.d3 = -1;
  CHECK_THROWS_AS(triad_model(p), ConfigError);
  p = TriadParams::regime_I();
  p.A3 = 1.6;
  CHECK_THROWS_AS(triad_model(p), ConfigError);
  p = TriadParams::regime_II();
  p.epsilon = 0.1;
  CHECK_NOTHROW(triad_model(p));
}

TEST_CASE("triad drift matches the hand-written equations") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0, 2);
  for (auto p : {TriadParams::regime_I(), TriadParams::regime_II(),
                 triad_preset("triad_damped", "I")}) {
    const auto m = triad_model(p);
    for (int k = 0; k < 50; ++k) {
      const double u1 = n(gen), u2 = n(gen), u3 = n(gen);
      const Vec d = m.drift(0.0, Eigen::Vector3d(u2, u3, u1));
      const Eigen::Vector3d ref = oracle::triad_rhs(p, u1, u2, u3);
      CHECK(d(0) == doctest::Approx(ref(1)).epsilon(1e-14));
      CHECK(d(1) == doctest::Approx(ref(2)).epsilon(1e-14));
      CHECK(d(2) == doctest::Approx(ref(0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("triad coefficient partition") {
  TriadParams p = triad_preset("triad_damped", "I");
  const auto c = triad_model(p).coefficients(0.0, Eigen::Vector2d(2.0, 3.0));
  CHECK(c.A0(0) == -p.d2 * 2.0);
  CHECK(c.A0(1) == -p.d3 * 3.0);
  CHECK(c.A1(0, 0) == p.A2 * 3.0);
  CHECK(c.A1(1, 0) == p.A3 * 2.0);
  CHECK(c.a0(0) == p.A1 * 6.0);
  CHECK(c.a1(0, 0) == -p.d1);
  CHECK(c.sigma_I(0, 1) == 0.0);
  CHECK(c.sigma_II(0, 0) == p.epsilon);
}

TEST_CASE("zero interactions give a linear diagonal drift") {
  TriadParams p;
  p.d2 = p.d3 = 1.0;
  const auto m = triad_model(p);
  const Vec d = m.drift(0.0, Eigen::Vector3d(1.0, -2.0, 3.0));
  CHECK(d(0) == -1.0);
  CHECK(d(1) == 2.0);
  CHECK(d(2) == 0.0);
}

TEST_CASE("evaluators are pure") {
  const auto m = triad_model(triad_preset("triad_modified"));
  const Eigen::Vector2d u(0.3, -1.7);
  const auto a = m.coefficients(1.0, u), b = m.coefficients(1.0, u);
  CHECK(a.A1 == b.A1);
  CHECK(a.a0 == b.a0);
}

TEST_CASE("energy conservation of the quadratic terms") {
  for (auto p : {TriadParams::regime_I(), TriadParams::regime_II(),
                 triad_preset("triad_damped", "I")}) {
    const auto rep = check_energy_conservation(triad_energy_form(p), 1000, 3);
    CHECK(rep.max_violation <= 1e-12);
    CHECK(rep.n_points == 1000);
  }

  EnergyConservingModel zero = triad_energy_form(TriadParams::regime_I());
  zero.B_I1 = [](const Vec&) { return Mat(Mat::Zero(2, 1)); };
  zero.B_II0 = [](const Vec&) { return Vec(Vec::Zero(1)); };
  CHECK(check_energy_conservation(zero, 100, 1).max_violation == 0.0);

  // A3 = 1.6: u·B(u,u) = 0.1 u1 u2 u3.
  EnergyConservingModel bad = triad_energy_form(TriadParams::regime_I());
  bad.B_I1 = [](const Vec& u) {
    Mat b(2, 1);
    b << 1.0 * u(1), 1.6 * u(0);
    return b;
  };
  CHECK(check_energy_conservation(bad, 100, 1).max_violation > 1e-3);
  const Vec uI = Eigen::Vector2d(1, 1), uII = Vec::Constant(1, 1.0);
  const double direct = uI.dot(bad.B_I1(uI) * uII) + uII.dot(bad.B_II0(uI));
  CHECK(direct == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("energy form and conditional Gaussian form agree") {
  const TriadParams p = triad_preset("triad_damped", "I");
  const auto a = triad_model(p);
  const auto b = triad_energy_form(p).to_conditional_gaussian();
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d u(n(gen), n(gen), n(gen));
    CHECK((a.drift(0, u) - b.drift(0, u)).norm() < 1e-13);
  }
}

TEST_CASE("dissipativity") {
  const auto damped = check_dissipativity(
      triad_model(triad_preset("triad_damped", "I")), 2000, 50.0, 4);
  CHECK(damped.satisfied);
  CHECK(damped.rho_hat == doctest::Approx(0.1).epsilon(1e-6));

  const auto ou = check_dissipativity(testing_models::ou_model(1, 1, 1.0), 200,
                                      10.0, 4);
  CHECK(ou.rho_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(ou.De_hat) < 1e-9);

  // Regime II, d1 = 0: drift·u vanishes along u1.
  TriadParams p = TriadParams::regime_II();
  p.epsilon = 0.1;
  CHECK_FALSE(check_dissipativity(triad_model(p), 2000, 50.0, 4).satisfied);
}

TEST_CASE("structural constants of the damped triad") {
  const auto c = structural_constants(triad_energy_form(triad_preset("triad_damped", "I")));
  CHECK(c.applicable);
  CHECK(c.lambda_minus == doctest::Approx(0.1));
  CHECK(c.lambda_plus == doctest::Approx(1.0));
  CHECK(c.lambda_B == doctest::Approx(1.5));
  CHECK(c.sigma_I_minus == doctest::Approx(1.0));
  CHECK(c.sigma_II_minus == doctest::Approx(0.1));
  CHECK(c.rho == doctest::Approx(0.05));
  CHECK(c.De == 0.0);
  // max(1, 2λ₊/(σ²(1-e^{-2λ₊})), ...) is attained by the second term.
  CHECK(c.Dc == doctest::Approx(200.0 / (1.0 - std::exp(-2.0))).epsilon(1e-12));
  CHECK(c.Dc == doctest::Approx(231.3035).epsilon(1e-6));

  const auto undamped = structural_constants(triad_energy_form(triad_preset("triad", "I")));
  CHECK_FALSE(undamped.applicable);
  CHECK(std::isinf(undamped.Dc));
}

TEST_CASE("invariant measure of the undamped triad") {
  const auto I = triad_invariant_measure(TriadParams::regime_I());
  REQUIRE(I.has_value());
  CHECK(I->covariance(0, 0) == doctest::Approx(5.0 / 7.0));
  CHECK(I->covariance(1, 1) == doctest::Approx(0.5));
  CHECK(I->covariance(2, 2) == doctest::Approx(1.0));
  CHECK(I->mean.norm() == 0.0);
  CHECK_FALSE(triad_invariant_measure(TriadParams::regime_II()).has_value());
  TriadParams p = TriadParams::regime_I();
  p.sigma2 = p.sigma3 = 0.0;
  CHECK_FALSE(triad_invariant_measure(p).has_value());
}

TEST_CASE("invariant measure sign rule") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-3, 3), pos(0.2, 2);
  for (int k = 0; k < 200; ++k) {
    TriadParams p;
    p.A1 = u(gen);
    p.A2 = u(gen);
    p.A3 = -p.A1 - p.A2;
    if (p.A1 + p.A2 + p.A3 != 0.0) continue;
    p.d2 = pos(gen);
    p.d3 = pos(gen);
    p.sigma2 = pos(gen);
    p.sigma3 = pos(gen);
    const double E2 = p.sigma2 * p.sigma2 / (2 * p.d2);
    const double E3 = p.sigma3 * p.sigma3 / (2 * p.d3);
    const double den = p.A2 * E3 + p.A3 * E2, num = -p.A1 * E2 * E3;
    const auto m = triad_invariant_measure(p);
    CHECK(m.has_value() == (num / den > 0));
  }
}
