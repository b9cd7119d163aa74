#pragma once

#include "cholera/lattice.hpp"

#include <cstdint>
#include <vector>

namespace cholera {

/// Biological and transport rates, all per unit time.
struct EpidemicParams {
  double mu = 0.0;        // natural human birth/death
  double alpha = 0.0;     // cholera-induced mortality
  double gamma = 0.0;     // recovery
  double rho = 0.0;       // loss of immunity
  double beta = 0.0;      // contact with contaminated water
  double p_over_W = 0.0;  // shedding into a reservoir of volume W
  double mu_B = 0.0;      // bacterial death
  TransportCoefficients transport;

  /// Throws std::invalid_argument if any rate is negative or not finite.
  void validate() const;
};

/// Lattice size and the renormalisation constants for humans (H) and
/// bacteria (K).
struct ScalingParams {
  std::int64_t N = 3;
  std::int64_t H = 1;
  std::int64_t K = 1;

  void validate() const;

  double hk_ratio() const { return static_cast<double>(H) / static_cast<double>(K); }

  friend bool operator==(const ScalingParams&, const ScalingParams&) = default;
};

/// `count` equally spaced times from 0 to horizon inclusive ({0} when
/// horizon is 0).
std::vector<double> uniform_times(double horizon, int count);

/// Throws unless times start at 0, increase strictly and end by horizon.
void validate_sample_grid(const std::vector<double>& times, double horizon);

}  // namespace cholera
