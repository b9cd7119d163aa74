#pragma once

// Shared fixtures and independent oracles for the test binaries. The oracles
// only use the event table (event_rate + event_delta); they never call the
// closed forms they are checking.

#include "cholera/diagnostics.hpp"
#include "cholera/stochastic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cholera::testing {

/// Generic rates, all in [0.1, 2].
inline EpidemicParams generic_params(Eigen::Index sites)
{
  EpidemicParams p;
  p.mu = 0.2;
  p.alpha = 0.1;
  p.gamma = 0.5;
  p.rho = 0.3;
  p.beta = 1.5;
  p.p_over_W = 1.0;
  p.mu_B = 0.4;
  p.transport = TransportCoefficients(2.0, 0.7, sites);
  return p;
}

inline InitialProfile generic_profile()
{
  return [](double x) { return Vector4(0.9 + 0.1 * std::sin(2.0 * std::numbers::pi * x), 0.1, 0.0, 0.5); };
}

inline EpidemicParams random_params(std::mt19937_64& rng, Eigen::Index sites)
{
  std::uniform_real_distribution<double> rate(0.0, 2.0);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  EpidemicParams p;
  p.mu = rate(rng);
  p.alpha = rate(rng);
  p.gamma = rate(rng);
  p.rho = rate(rng);
  p.beta = rate(rng);
  p.p_over_W = rate(rng);
  p.mu_B = rate(rng);
  p.transport = TransportCoefficients(rate(rng), prob(rng), sites);
  return p;
}

inline SystemState random_state(std::mt19937_64& rng, const ScalingParams& s)
{
  SystemState state(s.N);
  for (Eigen::Index i = 0; i < s.N; ++i) {
    for (int c = 0; c < kCompartments; ++c) {
      const std::int64_t scale = c == kB ? s.K : s.H;
      state.counts(i, c) = std::uniform_int_distribution<std::int64_t>(0, 3 * scale)(rng);
    }
  }
  return state;
}

/// Per-site renormalised jump vector of an event, as an N x 4 matrix.
inline StateMatrix<double> jump_of(const Event& e, Eigen::Index n, const ScalingParams& s)
{
  StateMatrix<double> d = StateMatrix<double>::Zero(n, kCompartments);
  const EventDelta delta = event_delta(e.kind);
  for (int c = 0; c < kCompartments; ++c) {
    d(e.site, c) += delta.local[static_cast<std::size_t>(c)] / static_cast<double>(c == kB ? s.K : s.H);
  }
  if (delta.neighbor_offset != 0) {
    d(wrap(e.site + delta.neighbor_offset, n), kB) += 1.0 / static_cast<double>(s.K);
  }
  return d;
}

/// Sum over every (site, kind) of rate x product of jumps, rescaled by H or K
/// so the result is comparable with square_amplitudes.
inline SquareAmplitudes brute_force_amplitudes(const SystemState& state, const EpidemicParams& p,
                                               const ScalingParams& s)
{
  const Eigen::Index n = state.sites();
  SquareAmplitudes out{StateMatrix<double>::Zero(n, kCompartments), LatticeField::Zero(n), LatticeField::Zero(n)};
  for (Eigen::Index site = 0; site < n; ++site) {
    for (int kind = 0; kind < kEventKinds; ++kind) {
      const Event e{static_cast<EventKind>(kind), site};
      const double rate = event_rate(state, p, s, e.kind, site);
      const StateMatrix<double> d = jump_of(e, n, s);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < kCompartments; ++c) {
          out.squares(i, c) += rate * d(i, c) * d(i, c) * static_cast<double>(c == kB ? s.K : s.H);
        }
        const double k = static_cast<double>(s.K);
        out.cross_next(i) += rate * d(i, kB) * d(wrap(i + 1, n), kB) * k;
        out.cross_prev(i) += rate * d(i, kB) * d(wrap(i - 1, n), kB) * k;
      }
    }
  }
  return out;
}

/// Jump rate of (<u_X, f>_2)^2 by brute force over the event table.
inline double brute_force_projected(const SystemState& state, const EpidemicParams& p, const ScalingParams& s,
                                    Compartment c, const LatticeField& f)
{
  const Eigen::Index n = state.sites();
  double acc = 0.0;
  for (Eigen::Index site = 0; site < n; ++site) {
    for (int kind = 0; kind < kEventKinds; ++kind) {
      const Event e{static_cast<EventKind>(kind), site};
      const double rate = event_rate(state, p, s, e.kind, site);
      const double proj = inner(jump_of(e, n, s).col(c), f);
      acc += rate * proj * proj;
    }
  }
  return acc;
}

inline bool close_rel(double a, double b, double tol)
{
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) || a == b;
}

}  // namespace cholera::testing
