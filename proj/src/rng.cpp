#include "cgpdf/rng.hpp"

#include <cmath>

namespace cgpdf {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::uint64_t NormalStream::next_word() {
  if (pos_ == 2) {
    const auto r = philox4x32({block_++, step_, static_cast<std::uint32_t>(sample_),
                               static_cast<std::uint32_t>(sample_ >> 32)},
                              key_);
    words_[0] = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    words_[1] = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    pos_ = 0;
  }
  return words_[pos_++];
}

double NormalStream::next_uniform() {
  return (static_cast<double>(next_word() >> 11) + 1.0) * 0x1.0p-53;
}

namespace {

// Ziggurat tables (Marsaglia and Tsang 2000, in the form of Doornik 2005).
constexpr int kLayers = 128;
constexpr double kR = 3.442619855899;
constexpr double kV = 9.91256303526217e-3;

struct Ziggurat {
  double x[kLayers + 1];
  double ratio[kLayers];

  Ziggurat() {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const Ziggurat& ziggurat() {
  static const Ziggurat z;
  return z;
}

}  // namespace

double NormalStream::next() {
  const Ziggurat& z = ziggurat();
  for (;;) {
    // Low 7 bits pick the layer; the top 53 bits give u in [-1, 1).
    const std::uint64_t w = next_word();
    const int i = static_cast<int>(w & (kLayers - 1));
    const double u = 2.0 * (static_cast<double>(w >> 11) * 0x1.0p-53) - 1.0;
    if (std::abs(u) < z.ratio[i]) return u * z.x[i];
    if (i == 0) {
      double a, b;
      do {
        a = std::log(next_uniform()) / kR;
        b = std::log(next_uniform());
      } while (-2.0 * b < a * a);
      return u < 0 ? a - kR : kR - a;
    }
    const double xv = u * z.x[i];
    const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - xv * xv));
    const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - xv * xv));
    if (f1 + next_uniform() * (f0 - f1) < 1.0) return xv;
  }
}

}  // namespace cgpdf
