#pragma once

// Independent Monte Carlo oracle for the triad: hand-written drift, its own
// generator (std::mt19937_64), no code shared with the library simulator.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cgpdf/triad.hpp"

namespace oracle {

// Right-hand side written straight from the triad equations.
inline Eigen::Vector3d triad_rhs(const cgpdf::TriadParams& p, double u1,
                                 double u2, double u3) {
  return {p.A1 * u2 * u3 - p.d1 * u1, p.A2 * u3 * u1 - p.d2 * u2,
          p.A3 * u1 * u2 - p.d3 * u3};
}

// States (u1, u2, u3) of n paths from the origin at each checkpoint time.
// Checkpoints must be multiples of dt. Result[c] is 3 x n.
inline std::vector<Eigen::MatrixXd> triad_paths(const cgpdf::TriadParams& p,
                                                long n, double dt,
                                                const std::vector<double>& checkpoints,
                                                unsigned long long seed) {
  std::vector<long> at;
  for (double t : checkpoints) at.push_back(std::lround(t / dt));
  std::vector<Eigen::MatrixXd> out(at.size(), Eigen::MatrixXd(3, n));
  std::mt19937_64 gen(seed);
  // Marsaglia polar method on raw 53-bit uniforms; faster than
  // std::normal_distribution and still independent of the library RNG.
  double spare = 0.0;
  bool has_spare = false;
  auto z = [&](std::mt19937_64& g) {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double x, y, r;
    do {
      x = 2.0 * static_cast<double>(g() >> 11) * 0x1.0p-53 - 1.0;
      y = 2.0 * static_cast<double>(g() >> 11) * 0x1.0p-53 - 1.0;
      r = x * x + y * y;
    } while (r >= 1.0 || r == 0.0);
    const double f = std::sqrt(-2.0 * std::log(r) / r);
    spare = y * f;
    has_spare = true;
    return x * f;
  };
  const double sq = std::sqrt(dt);
  const double e = p.epsilon * sq, s2 = p.sigma2 * sq, s3 = p.sigma3 * sq;
  const long last = at.empty() ? 0 : at.back();
  for (long j = 0; j < n; ++j) {
    double u1 = 0, u2 = 0, u3 = 0;
    std::size_t c = 0;
    for (long k = 1; k <= last; ++k) {
      const double f1 = p.A1 * u2 * u3 - p.d1 * u1;
      const double f2 = p.A2 * u3 * u1 - p.d2 * u2;
      const double f3 = p.A3 * u1 * u2 - p.d3 * u3;
      u1 += f1 * dt + e * z(gen);
      u2 += f2 * dt + s2 * z(gen);
      u3 += f3 * dt + s3 * z(gen);
      while (c < at.size() && at[c] == k) {
        out[c].col(j) << u1, u2, u3;
        ++c;
      }
    }
  }
  return out;
}

}  // namespace oracle
