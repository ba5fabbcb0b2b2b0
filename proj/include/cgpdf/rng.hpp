#pragma once

#include <array>
#include <cstdint>

namespace cgpdf {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure
// function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Standard normals for one (sample, step) cell, by a 128-layer ziggurat fed
// with 64-bit words of Philox output. Draw j of the cell is a function of
// (seed, sample, step, j) only, so samples can be processed in any order or
// on any thread.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t sample, std::uint32_t step)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        sample_(sample),
        step_(step) {}

  double next();
  std::uint64_t next_word();
  double next_uniform();  // in (0, 1]

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t sample_;
  std::uint32_t step_;
  std::uint32_t block_ = 0;
  std::uint64_t words_[2] = {0, 0};
  int pos_ = 2;
};

struct RngPolicy {
  std::uint64_t master_seed = 0;

  NormalStream stream(std::uint64_t sample, std::uint32_t step) const {
    return NormalStream(master_seed, sample, step);
  }
};

}  // namespace cgpdf
