#pragma once

#include <optional>
#include <string_view>

#include "cgpdf/model.hpp"

namespace cgpdf {

//   du1 = (A1 u2 u3 - d1 u1) dt + ε dW1
//   du2 = (A2 u3 u1 - d2 u2) dt + σ2 dW2
//   du3 = (A3 u1 u2 - d3 u3) dt + σ3 dW3
// Observed u_I = (u2, u3), hidden u_II = u1.
struct TriadParams {
  double A1 = 0, A2 = 0, A3 = 0;
  double d1 = 0, d2 = 1, d3 = 1;
  double sigma2 = 1, sigma3 = 1;
  double epsilon = 0;

  static TriadParams regime_I();   // (-2.5, 1, 1.5, 1, 0.5, 1, 1)
  static TriadParams regime_II();  // (-0.5, -1, 1.5, 1, 0.5, 1, 1)

  // Throws ConfigError on d2 <= 0, d3 <= 0, d1 < 0, ε < 0, σ2 < 0,
  // σ3 < 0 or A1 + A2 + A3 != 0. Zero σ2 or σ3 simulates fine but cannot
  // be filtered.
  void validate() const;
};

// preset: "triad" (ε = 0, d1 = 0), "triad_modified" (ε = 0.1) or
// "triad_damped" (ε = 0.1, d1 = 0.1). regime: "I" or "II"; an empty regime
// selects I for the first two presets and II for the damped one.
TriadParams triad_preset(std::string_view preset, std::string_view regime = {});

ConditionalGaussianModel triad_model(const TriadParams& p);
EnergyConservingModel triad_energy_form(const TriadParams& p);

// Gaussian invariant measure of the undamped, ε = 0 triad, ordered
// (u1, u2, u3). Absent when E1 <= 0 or the noise is degenerate.
std::optional<GaussianSpec> triad_invariant_measure(const TriadParams& p);

}  // namespace cgpdf
