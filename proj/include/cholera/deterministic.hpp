#pragma once

// Deterministic limits: the homogeneous SIRB ODE, its lattice companion
// (method of lines) and the closed-form travelling wave of the linear
// bacterial equation.

#include "cholera/lattice.hpp"
#include "cholera/params.hpp"
#include "cholera/stochastic.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cholera {

/// Coupled keeps the I -> B shedding source. Decoupled drops it, which is the
/// H/K -> 0 limit where bacteria no longer feel the human compartments.
enum class Coupling { coupled, decoupled };

struct ReactionField {
  EpidemicParams params;
  double hk_ratio = 1.0;
  Coupling mode = Coupling::coupled;

  void validate() const;

  /// Coefficient in front of y_I in the B equation.
  double shedding() const { return mode == Coupling::decoupled ? 0.0 : hk_ratio * params.p_over_W; }
};

using Vector4 = Eigen::Matrix<double, 4, 1>;

/// The reaction vector field F(y). Throws std::domain_error on negative input.
Vector4 reaction(const Vector4& y, const ReactionField& rf);

/// Same as `reaction` without the sign check; used inside integrator stages
/// where roundoff may leave values a hair below zero.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> reaction_kernel(const Eigen::Matrix<Scalar, 4, 1>& y, const ReactionField& rf)
{
  const auto& p = rf.params;
  const Scalar lambda = y(3) / (Scalar(1) + y(3));
  const Scalar infection = Scalar(p.beta) * lambda * y(0);
  Eigen::Matrix<Scalar, 4, 1> f;
  f(0) = Scalar(p.mu) * y(1) + Scalar(p.mu + p.rho) * y(2) - infection;
  f(1) = infection - Scalar(p.gamma + p.alpha + p.mu) * y(1);
  f(2) = Scalar(p.gamma) * y(1) - Scalar(p.mu + p.rho) * y(2);
  f(3) = Scalar(-p.mu_B) * y(3) + Scalar(rf.shedding()) * y(1);
  return f;
}

/// Constant M with |F(y)|_1 <= M |y|_1 on the positive cone, as the sum of
/// the per-component bounds.
double growth_constant(const ReactionField& rf);

/// Densities on an M-site lattice, columns S, I, R, B.
using DeterministicState = StateMatrix<double>;

/// Right-hand side of the lattice system: F sitewise plus transport on B.
DeterministicState rhs_discrete(const DeterministicState& v, const ReactionField& rf,
                                const TransportCoefficients& tc);

/// Step used when none is given: 0.5 / (4 D M^2 + |nu| M + L).
double auto_step(const ReactionField& rf, const TransportCoefficients& tc);

class BlowUpError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DeterministicTrajectory {
  std::vector<double> times;
  std::vector<DeterministicState> states;
  double dt = 0.0;  // largest step actually taken
  std::uint64_t steps = 0;
  // Negative roundoff reset to zero after a step.
  std::uint64_t clamped = 0;
  std::uint64_t entries_visited = 0;
  double most_negative = 0.0;
};

/// Classical RK4. Each sample interval is split into equal steps no longer
/// than dt, so samples are hit exactly.
DeterministicTrajectory integrate(const DeterministicState& initial, double horizon, const ReactionField& rf,
                                  const TransportCoefficients& tc, const std::vector<double>& sample_times,
                                  std::optional<double> dt = std::nullopt);

struct HomogeneousTrajectory {
  std::vector<double> times;
  std::vector<Vector4> states;
};

HomogeneousTrajectory homogeneous_ode(const Vector4& initial, double horizon, const ReactionField& rf,
                                      const std::vector<double>& sample_times, std::optional<double> dt = std::nullopt);

/// Exact solution of B_t = D B_xx - nu B_x - mu_B B on the circle for
/// B(0, x) = amplitude sin(2 pi m x).
double linear_oracle(int m, double amplitude, const TransportCoefficients& tc, double mu_B, double t, double x);

/// Initial densities (S, I, R, B) as functions of x in [0, 1).
using InitialProfile = std::function<Vector4(double)>;

DeterministicState project_profile(const InitialProfile& profile, Eigen::Index sites,
                                   int quadrature_points = kDefaultQuadraturePoints);

/// Integrates at M and 2M sites from projected data, block-averages the fine
/// solution onto M sites and returns the largest difference over samples,
/// compartments and sites. `tc` fixes the continuum diffusion and velocity.
double refine_compare(const InitialProfile& profile, Eigen::Index coarse_sites, const ReactionField& rf,
                      const TransportCoefficients& tc, double horizon, int samples = 11);

}  // namespace cholera
