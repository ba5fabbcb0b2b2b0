#include <cmath>
#include <vector>

#include "doctest.h"

#include "cgpdf/rng.hpp"

using cgpdf::NormalStream;
using cgpdf::philox4x32;

TEST_CASE("philox4x32 known-answer vectors") {
  using A = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        A{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        A{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                   {0xa4093822u, 0x299f31d0u}) ==
        A{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream is a pure function of (seed, sample, step)") {
  NormalStream a(7, 3, 11), b(7, 3, 11), c(7, 4, 11), d(8, 3, 11);
  double diff_c = 0, diff_d = 0;
  for (int j = 0; j < 100; ++j) {
    const double x = a.next();
    CHECK(x == b.next());
    diff_c += std::abs(x - c.next());
    diff_d += std::abs(x - d.next());
  }
  CHECK(diff_c > 1.0);
  CHECK(diff_d > 1.0);
}

TEST_CASE("uniforms lie in (0, 1]") {
  NormalStream s(1, 0, 0);
  double lo = 1, hi = 0, sum = 0;
  const int n = 200000;
  for (int j = 0; j < n; ++j) {
    const double u = s.next_uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi <= 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("ziggurat normals have standard moments and tails") {
  const int n = 2000000;
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  long beyond2 = 0, beyond4 = 0;
  for (int blk = 0; blk < 200; ++blk) {
    NormalStream s(42, blk, 0);
    for (int j = 0; j < n / 200; ++j) {
      const double z = s.next();
      const double z2 = z * z;
      m1 += z;
      m2 += z2;
      m3 += z2 * z;
      m4 += z2 * z2;
      beyond2 += std::abs(z) > 2.0;
      beyond4 += std::abs(z) > 4.0;
    }
  }
  m1 /= n, m2 /= n, m3 /= n, m4 /= n;
  CHECK(std::abs(m1) < 5.0 / std::sqrt(n));
  CHECK(m2 == doctest::Approx(1.0).epsilon(5.0 * std::sqrt(2.0 / n)));
  CHECK(std::abs(m3) < 5.0 * std::sqrt(15.0 / n));
  CHECK(m4 == doctest::Approx(3.0).epsilon(5.0 * std::sqrt(96.0 / n) / 3.0));
  // P(|Z| > 2) = 0.0455003, P(|Z| > 4) = 6.334e-5.
  const double e2 = 0.0455003 * n, e4 = 6.334e-5 * n;
  CHECK(std::abs(beyond2 - e2) < 5.0 * std::sqrt(e2));
  CHECK(std::abs(beyond4 - e4) < 5.0 * std::sqrt(e4));
}
