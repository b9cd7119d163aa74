#pragma once

// Verification machinery: sup-norm distances, martingale residuals along
// simulated paths, quadratic-variation compensators and the law-of-large-
// numbers ladder experiments.

#include "cholera/deterministic.hpp"
#include "cholera/stochastic.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cholera {

using CompartmentMask = std::array<bool, kCompartments>;
inline constexpr CompartmentMask kAllCompartments = {true, true, true, true};
inline constexpr CompartmentMask kBacteriaOnly = {false, false, false, true};

/// Largest |a - b| over sample times, selected compartments and sites, in
/// densities. Grids and lattice sizes must match exactly.
double sup_distance(const Trajectory& a, const DeterministicTrajectory& b, CompartmentMask mask = kAllCompartments);
double sup_distance(const DeterministicTrajectory& a, const DeterministicTrajectory& b,
                    CompartmentMask mask = kAllCompartments);

/// Z(t) = u(t) - u(0) - int_0^t psi(u(s)) ds at each sample time, where psi is
/// the drift. The path is piecewise constant, so the integral is an exact sum
/// over inter-event intervals.
struct MartingaleResidual {
  std::vector<double> times;
  std::vector<StateMatrix<double>> z;
};

MartingaleResidual martingale_residual(const Trajectory& traj, const EpidemicParams& params,
                                       const ScalingParams& scaling);

/// Quadratic-variation rates in density units. The compensator of the summed
/// squared jumps of u_X at site i is (1/H) or (1/K) times these.
struct SquareAmplitudes {
  StateMatrix<double> squares;  // |psi_S|^2, |psi_I|^2, |psi_R|^2, |psi_B|^2
  LatticeField cross_next;      // B_i with B_{i+1}
  LatticeField cross_prev;      // B_i with B_{i-1}
};

SquareAmplitudes square_amplitudes(const SystemState& state, const EpidemicParams& params,
                                   const ScalingParams& scaling);

/// Jump-rate of (<u_X, f>_2)^2 for a lattice test function f, i.e. the
/// compensator density of the squared projected martingale.
double projected_compensator(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling,
                             Compartment compartment, const LatticeField& f);

/// One (time, site, quantity) cell of a replica-mean zero test.
struct CellStat {
  double time = 0.0;
  Eigen::Index site = 0;
  std::string quantity;
  double observed_mean = 0.0;
  double predicted_mean = 0.0;
  double residual_mean = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct MeanZeroReport {
  std::vector<CellStat> cells;
  std::size_t replicas = 0;

  double pass_fraction() const;
};

inline constexpr double kSigmaThreshold = 3.0;

/// Two-sided 3-sigma test of replica mean zero for every Z cell after t = 0.
MeanZeroReport martingale_mean_test(const std::vector<MartingaleResidual>& residuals);

/// Observed sums of squared (or neighbor cross) jumps against their exact
/// compensator integrals, per (time, site) for S, I, R, B, B_next, B_prev.
MeanZeroReport compensator_check(const std::vector<Trajectory>& replicas, const EpidemicParams& params,
                                 const ScalingParams& scaling);

// ---------------------------------------------------------------------------
// Law of large numbers ladders

enum class Regime { theorem1, theorem2 };

/// Theorem-1 ladders keep H/K fixed with K growing; theorem-2 ladders need
/// H/K < 1 and nonincreasing with K growing. N may not shrink in either.
void validate_ladder(const std::vector<ScalingParams>& ladder, Regime regime);

struct LlnOptions {
  int samples = 101;
  unsigned workers = 1;
  int quadrature = kDefaultQuadraturePoints;
};

struct RungResult {
  ScalingParams scaling;
  std::vector<double> distances;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  // Replicas whose summed sup-densities left the a-priori ball c_T + 1.
  std::uint64_t exits = 0;
  double exit_radius = 0.0;
  double rounding_error = 0.0;
};

struct ConvergenceReport {
  Regime regime = Regime::theorem1;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<RungResult> rungs;
};

/// Linear-interpolation quantile (the common "type 7" definition).
double quantile(std::vector<double> values, double q);

/// Per rung: project the profile, round to counts, simulate replicas and
/// compare against the lattice ODE started from the unrounded projection.
/// Theorem-2 mode compares only B against the decoupled system.
ConvergenceReport lln_experiment(const std::vector<ScalingParams>& ladder, const InitialProfile& profile,
                                 const EpidemicParams& params, double horizon, int replicas, std::uint64_t seed,
                                 Regime regime, LlnOptions options = {});

}  // namespace cholera
