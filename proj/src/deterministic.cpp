#include "cholera/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cholera {

void ReactionField::validate() const
{
  params.validate();
  if (!std::isfinite(hk_ratio) || hk_ratio < 0.0) {
    throw std::invalid_argument("hk_ratio must be finite and >= 0");
  }
}

Vector4 reaction(const Vector4& y, const ReactionField& rf)
{
  if (!y.allFinite() || (y.array() < 0.0).any()) {
    throw std::domain_error("reaction field is only defined on the nonnegative cone");
  }
  return reaction_kernel<double>(y, rf);
}

double growth_constant(const ReactionField& rf)
{
  const auto& p = rf.params;
  // Each component satisfies |F_X(y)| <= M_X |y|_1 because every term is a
  // rate times one coordinate and y4 / (1 + y4) <= 1; summing gives the bound.
  const double m_s = std::max(p.beta, p.mu + p.rho);
  const double m_i = std::max(p.beta, p.gamma + p.alpha + p.mu);
  const double m_r = std::max(p.gamma, p.mu + p.rho);
  const double m_b = std::max(p.mu_B, rf.shedding());
  return m_s + m_i + m_r + m_b;
}

namespace {

void require_matching(const DeterministicState& v, const TransportCoefficients& tc)
{
  if (v.rows() != tc.sites()) {
    throw std::invalid_argument("state has " + std::to_string(v.rows()) + " sites but transport was built for " +
                                std::to_string(tc.sites()));
  }
}

DeterministicState rhs_unchecked(const DeterministicState& v, const ReactionField& rf,
                                 const TransportCoefficients& tc)
{
  DeterministicState out(v.rows(), kCompartments);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out.row(i) = reaction_kernel<double>(v.row(i).transpose(), rf).transpose();
  }
  out.col(kB) += transport_apply(v.col(kB), tc);
  return out;
}

// Steps `y` across every sample interval with classical RK4, calling
// `after_step` on the new state and `record` at each sample time.
template <typename State, typename Rhs, typename AfterStep, typename Record>
void rk4_over_samples(State y, const std::vector<double>& samples, double dt, Rhs rhs, AfterStep after_step,
                      Record record, double& largest_step, std::uint64_t& steps)
{
  record(y);
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double span = samples[k] - samples[k - 1];
    const auto n = static_cast<std::uint64_t>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(std::max<std::uint64_t>(n, 1));
    largest_step = std::max(largest_step, h);
    for (std::uint64_t s = 0; s < std::max<std::uint64_t>(n, 1); ++s) {
      const State k1 = rhs(y);
      const State k2 = rhs(State(y + 0.5 * h * k1));
      const State k3 = rhs(State(y + 0.5 * h * k2));
      const State k4 = rhs(State(y + h * k3));
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      after_step(y);
      ++steps;
    }
    record(y);
  }
}

template <typename State>
void check_finite(const State& y, double limit)
{
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > limit) {
    throw BlowUpError("deterministic solution blew up (non-finite or above " + std::to_string(limit) +
                      "); the step is too large or the parameters are invalid");
  }
}

constexpr double kBlowUpLimit = 1e12;

void require_horizon(double horizon, const std::vector<double>& samples)
{
  if (!std::isfinite(horizon) || horizon < 0.0) {
    throw std::invalid_argument("horizon must be finite and >= 0");
  }
  validate_sample_grid(samples, horizon);
}

double resolve_step(std::optional<double> dt, double fallback)
{
  if (!dt) {
    return fallback;
  }
  if (!(*dt > 0.0) || !std::isfinite(*dt)) {
    throw std::invalid_argument("dt must be positive and finite");
  }
  return *dt;
}

}  // namespace

DeterministicState rhs_discrete(const DeterministicState& v, const ReactionField& rf, const TransportCoefficients& tc)
{
  require_matching(v, tc);
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw std::domain_error("reaction field is only defined on the nonnegative cone");
  }
  return rhs_unchecked(v, rf, tc);
}

double auto_step(const ReactionField& rf, const TransportCoefficients& tc)
{
  const double m = static_cast<double>(tc.sites());
  const double stiffness = 4.0 * tc.diffusion() * m * m + std::abs(tc.velocity()) * m + growth_constant(rf);
  return stiffness > 0.0 ? 0.5 / stiffness : 1.0;
}

DeterministicTrajectory integrate(const DeterministicState& initial, double horizon, const ReactionField& rf,
                                  const TransportCoefficients& tc, const std::vector<double>& sample_times,
                                  std::optional<double> dt)
{
  rf.validate();
  require_matching(initial, tc);
  require_horizon(horizon, sample_times);
  if (!initial.allFinite() || (initial.array() < 0.0).any()) {
    throw std::domain_error("initial data must be finite and nonnegative");
  }
  const double step = resolve_step(dt, auto_step(rf, tc));

  DeterministicTrajectory out;
  out.times = sample_times;
  out.states.reserve(sample_times.size());
  auto rhs = [&](const DeterministicState& y) { return rhs_unchecked(y, rf, tc); };
  auto after = [&](DeterministicState& y) {
    check_finite(y, kBlowUpLimit);
    out.entries_visited += static_cast<std::uint64_t>(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      double& x = y.data()[j];
      if (x < 0.0) {
        out.most_negative = std::min(out.most_negative, x);
        x = 0.0;
        ++out.clamped;
      }
    }
  };
  auto record = [&](const DeterministicState& y) { out.states.push_back(y); };
  rk4_over_samples<DeterministicState>(initial, sample_times, step, rhs, after, record, out.dt, out.steps);
  return out;
}

HomogeneousTrajectory homogeneous_ode(const Vector4& initial, double horizon, const ReactionField& rf,
                                      const std::vector<double>& sample_times, std::optional<double> dt)
{
  rf.validate();
  require_horizon(horizon, sample_times);
  if (!initial.allFinite() || (initial.array() < 0.0).any()) {
    throw std::domain_error("initial data must be finite and nonnegative");
  }
  const double m = growth_constant(rf);
  const double step = resolve_step(dt, m > 0.0 ? 0.5 / m : 1.0);

  HomogeneousTrajectory out;
  out.times = sample_times;
  double largest = 0.0;
  std::uint64_t steps = 0;
  auto rhs = [&](const Vector4& y) { return reaction_kernel<double>(y, rf); };
  auto after = [&](Vector4& y) {
    check_finite(y, kBlowUpLimit);
    y = y.cwiseMax(0.0);
  };
  auto record = [&](const Vector4& y) { out.states.push_back(y); };
  rk4_over_samples<Vector4>(initial, sample_times, step, rhs, after, record, largest, steps);
  return out;
}

double linear_oracle(int m, double amplitude, const TransportCoefficients& tc, double mu_B, double t, double x)
{
  const double k = 2.0 * std::numbers::pi * static_cast<double>(m);
  return amplitude * std::exp(-(mu_B + tc.diffusion() * k * k) * t) * std::sin(k * (x - tc.velocity() * t));
}

DeterministicState project_profile(const InitialProfile& profile, Eigen::Index sites, int quadrature_points)
{
  DeterministicState v(sites, kCompartments);
  for (int c = 0; c < kCompartments; ++c) {
    v.col(c) = project([&](double x) { return profile(x)(c); }, sites, quadrature_points);
  }
  return v;
}

double refine_compare(const InitialProfile& profile, Eigen::Index coarse_sites, const ReactionField& rf,
                      const TransportCoefficients& tc, double horizon, int samples)
{
  const std::vector<double> times = uniform_times(horizon, samples);
  const TransportCoefficients tc_coarse = tc.at_resolution(coarse_sites);
  const TransportCoefficients tc_fine = tc.at_resolution(2 * coarse_sites);
  // One step size for both runs keeps time error out of the comparison.
  const double dt = std::min(auto_step(rf, tc_coarse), auto_step(rf, tc_fine));
  const auto coarse = integrate(project_profile(profile, coarse_sites), horizon, rf, tc_coarse, times, dt);
  const auto fine = integrate(project_profile(profile, 2 * coarse_sites), horizon, rf, tc_fine, times, dt);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (int c = 0; c < kCompartments; ++c) {
      const LatticeField restricted = restrict_to(fine.states[k].col(c), coarse_sites);
      worst = std::max(worst, (restricted - coarse.states[k].col(c)).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace cholera
