#include "cholera/stochastic.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cholera {

std::string_view event_name(EventKind kind)
{
  switch (kind) {
    case EventKind::BirthFromS: return "BirthFromS";
    case EventKind::BirthFromI: return "BirthFromI";
    case EventKind::BirthFromR: return "BirthFromR";
    case EventKind::DeathS: return "DeathS";
    case EventKind::Infection: return "Infection";
    case EventKind::DeathINatural: return "DeathI_natural";
    case EventKind::DeathICholera: return "DeathI_cholera";
    case EventKind::Recovery: return "Recovery";
    case EventKind::DeathR: return "DeathR";
    case EventKind::ImmunityLoss: return "ImmunityLoss";
    case EventKind::BacteriaDeath: return "BacteriaDeath";
    case EventKind::Contamination: return "Contamination";
    case EventKind::TransportOut: return "TransportOut";
    case EventKind::TransportIn: return "TransportIn";
  }
  return "unknown";
}

EventDelta event_delta(EventKind kind)
{
  //                                      S   I   R   B
  switch (kind) {
    case EventKind::BirthFromS: return {{+1, 0, 0, 0}, 0};
    case EventKind::BirthFromI: return {{+1, 0, 0, 0}, 0};
    case EventKind::BirthFromR: return {{+1, 0, 0, 0}, 0};
    case EventKind::DeathS: return {{-1, 0, 0, 0}, 0};
    case EventKind::Infection: return {{-1, +1, 0, 0}, 0};
    case EventKind::DeathINatural: return {{0, -1, 0, 0}, 0};
    case EventKind::DeathICholera: return {{0, -1, 0, 0}, 0};
    case EventKind::Recovery: return {{0, -1, +1, 0}, 0};
    case EventKind::DeathR: return {{0, 0, -1, 0}, 0};
    case EventKind::ImmunityLoss: return {{+1, 0, -1, 0}, 0};
    case EventKind::BacteriaDeath: return {{0, 0, 0, -1}, 0};
    case EventKind::Contamination: return {{0, 0, 0, +1}, 0};
    case EventKind::TransportOut: return {{0, 0, 0, -1}, +1};
    case EventKind::TransportIn: return {{0, 0, 0, -1}, -1};
  }
  throw std::invalid_argument("unknown event kind");
}

StateMatrix<double> rescaled(const SystemState& state, const ScalingParams& scaling)
{
  StateMatrix<double> u = state.counts.cast<double>();
  const double h = static_cast<double>(scaling.H);
  const double k = static_cast<double>(scaling.K);
  u.leftCols<3>() /= h;
  u.col(kB) /= k;
  return u;
}

SystemState from_densities(const StateMatrix<double>& densities, const ScalingParams& scaling, double* max_rounding)
{
  if (!densities.allFinite() || (densities.array() < 0.0).any()) {
    throw std::domain_error("initial densities must be finite and nonnegative");
  }
  SystemState state(densities.rows());
  double worst = 0.0;
  for (Eigen::Index c = 0; c < kCompartments; ++c) {
    const double scale = static_cast<double>(c == kB ? scaling.K : scaling.H);
    for (Eigen::Index i = 0; i < densities.rows(); ++i) {
      const double exact = densities(i, c) * scale;
      const double rounded = std::nearbyint(exact);
      state.counts(i, c) = static_cast<std::int64_t>(rounded);
      worst = std::max(worst, std::abs(rounded - exact) / scale);
    }
  }
  if (max_rounding != nullptr) {
    *max_rounding = worst;
  }
  return state;
}

void validate_state(const SystemState& state, const ScalingParams& scaling)
{
  if (state.sites() != scaling.N) {
    throw std::invalid_argument("state has " + std::to_string(state.sites()) + " sites but scaling.N = " +
                                std::to_string(scaling.N));
  }
  if ((state.counts.array() < 0).any()) {
    throw InvariantViolation("negative compartment count in state");
  }
}

double event_rate(const SystemState& state, const EpidemicParams& p, const ScalingParams& scaling, EventKind kind,
                  Eigen::Index site)
{
  const auto s = static_cast<double>(state.counts(site, kS));
  const auto i = static_cast<double>(state.counts(site, kI));
  const auto r = static_cast<double>(state.counts(site, kR));
  const auto b = static_cast<double>(state.counts(site, kB));
  switch (kind) {
    case EventKind::BirthFromS: return p.mu * s;
    case EventKind::BirthFromI: return p.mu * i;
    case EventKind::BirthFromR: return p.mu * r;
    case EventKind::DeathS: return p.mu * s;
    case EventKind::Infection: return b > 0.0 ? p.beta * s * b / (static_cast<double>(scaling.K) + b) : 0.0;
    case EventKind::DeathINatural: return p.mu * i;
    case EventKind::DeathICholera: return p.alpha * i;
    case EventKind::Recovery: return p.gamma * i;
    case EventKind::DeathR: return p.mu * r;
    case EventKind::ImmunityLoss: return p.rho * r;
    case EventKind::BacteriaDeath: return p.mu_B * b;
    case EventKind::Contamination: return p.p_over_W * i;
    case EventKind::TransportOut: return p.transport.ell() * p.transport.p_out() * b;
    case EventKind::TransportIn: return p.transport.ell() * p.transport.p_in() * b;
  }
  return 0.0;
}

void apply_event_inplace(SystemState& state, const Event& e)
{
  const Eigen::Index n = state.sites();
  if (e.site < 0 || e.site >= n) {
    throw InvariantViolation("event site " + std::to_string(e.site) + " outside lattice of " + std::to_string(n));
  }
  const EventDelta d = event_delta(e.kind);
  for (int c = 0; c < kCompartments; ++c) {
    if (state.counts(e.site, c) + d.local[static_cast<std::size_t>(c)] < 0) {
      throw InvariantViolation(std::string(event_name(e.kind)) + " at site " + std::to_string(e.site) +
                               " would make compartment " + kCompartmentNames[static_cast<std::size_t>(c)] +
                               " negative");
    }
  }
  for (int c = 0; c < kCompartments; ++c) {
    state.counts(e.site, c) += d.local[static_cast<std::size_t>(c)];
  }
  if (d.neighbor_offset != 0) {
    state.counts(wrap(e.site + d.neighbor_offset, n), kB) += 1;
  }
}

SystemState apply_event(SystemState state, const Event& e)
{
  apply_event_inplace(state, e);
  return state;
}

StateMatrix<double> expected_drift(const SystemState& state, const EpidemicParams& params,
                                   const ScalingParams& scaling)
{
  const Eigen::Index n = state.sites();
  const double h = static_cast<double>(scaling.H);
  const double k = static_cast<double>(scaling.K);
  StateMatrix<double> drift = StateMatrix<double>::Zero(n, kCompartments);
  for (Eigen::Index site = 0; site < n; ++site) {
    for (int kind = 0; kind < kEventKinds; ++kind) {
      const auto ek = static_cast<EventKind>(kind);
      const double rate = event_rate(state, params, scaling, ek, site);
      if (rate == 0.0) {
        continue;
      }
      const EventDelta d = event_delta(ek);
      for (int c = 0; c < kCompartments; ++c) {
        drift(site, c) += rate * d.local[static_cast<std::size_t>(c)] / (c == kB ? k : h);
      }
      if (d.neighbor_offset != 0) {
        drift(wrap(site + d.neighbor_offset, n), kB) += rate / k;
      }
    }
  }
  return drift;
}

// ---------------------------------------------------------------------------
// SSA engine

namespace {

void require_consistent(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling)
{
  scaling.validate();
  params.validate();
  validate_state(state, scaling);
  if (params.transport.sites() != scaling.N) {
    throw std::invalid_argument("transport coefficients built for " + std::to_string(params.transport.sites()) +
                                " sites but scaling.N = " + std::to_string(scaling.N));
  }
}

}  // namespace

SsaEngine::SsaEngine(SystemState initial, const EpidemicParams& params, const ScalingParams& scaling)
    : state_(std::move(initial)), params_(params), scaling_(scaling)
{
  require_consistent(state_, params_, scaling_);
  tree_.resize(static_cast<std::size_t>(state_.sites()) * kEventKinds);
  for (Eigen::Index site = 0; site < state_.sites(); ++site) {
    for (int kind = 0; kind < kEventKinds; ++kind) {
      tree_.set_leaf_only(static_cast<std::size_t>(site) * kEventKinds + static_cast<std::size_t>(kind),
                          event_rate(state_, params_, scaling_, static_cast<EventKind>(kind), site));
    }
  }
  tree_.rebuild();
}

void SsaEngine::refresh_site(Eigen::Index site)
{
  const std::size_t base = static_cast<std::size_t>(site) * kEventKinds;
  for (int kind = 0; kind < kEventKinds; ++kind) {
    tree_.set(base + static_cast<std::size_t>(kind),
              event_rate(state_, params_, scaling_, static_cast<EventKind>(kind), site));
  }
}

SsaStep SsaEngine::step(Rng& rng) const
{
  const double total = tree_.total();
  if (!(total > 0.0)) {
    return {std::nullopt, std::numeric_limits<double>::infinity()};
  }
  std::exponential_distribution<double> wait(total);
  double dt = 0.0;
  while (dt <= 0.0) {
    dt = wait(rng);
  }
  std::uniform_real_distribution<double> pick(0.0, total);
  const std::size_t leaf = tree_.find(pick(rng));
  Event e{static_cast<EventKind>(leaf % kEventKinds), static_cast<std::int64_t>(leaf / kEventKinds)};
  return {e, dt};
}

void SsaEngine::apply(const Event& e)
{
  apply_event_inplace(state_, e);
  refresh_site(e.site);
  const int offset = event_delta(e.kind).neighbor_offset;
  if (offset != 0) {
    refresh_site(wrap(e.site + offset, state_.sites()));
  }
}

SsaStep step_ssa(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling, Rng& rng)
{
  return SsaEngine(state, params, scaling).step(rng);
}

Trajectory simulate_ssa(const SystemState& initial, double horizon, const std::vector<double>& sample_grid,
                        const EpidemicParams& params, const ScalingParams& scaling, std::uint64_t seed,
                        std::uint64_t stream, SimulationOptions options)
{
  if (!std::isfinite(horizon) || horizon < 0.0) {
    throw std::invalid_argument("horizon must be finite and >= 0");
  }
  validate_sample_grid(sample_grid, horizon);
  SsaEngine engine(initial, params, scaling);
  Rng rng = make_stream(seed, stream);

  Trajectory traj;
  traj.sample_times = sample_grid;
  traj.states.reserve(sample_grid.size());
  traj.seed = seed;
  traj.stream = stream;
  traj.scaling = scaling;
  if (options.record_events) {
    traj.event_log.emplace();
  }

  double t = 0.0;
  std::size_t next = 0;
  while (next < sample_grid.size()) {
    const SsaStep st = engine.step(rng);
    const double t_next = st.absorbing() ? std::numeric_limits<double>::infinity() : t + st.waiting_time;
    // Snapshots see the state in force on [t, t_next).
    while (next < sample_grid.size() && sample_grid[next] < t_next) {
      traj.states.push_back(engine.state());
      ++next;
    }
    if (t_next > horizon) {
      break;
    }
    engine.apply(*st.event);
    t = t_next;
    ++traj.event_count;
    if (traj.event_log) {
      traj.event_log->push_back({t, *st.event});
    }
  }
  return traj;
}

Trajectory simulate_tau_leap(const SystemState& initial, double horizon, double tau,
                             const std::vector<double>& sample_grid, const EpidemicParams& params,
                             const ScalingParams& scaling, std::uint64_t seed, std::uint64_t stream)
{
  if (!std::isfinite(horizon) || horizon < 0.0) {
    throw std::invalid_argument("horizon must be finite and >= 0");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("tau must be positive and finite");
  }
  validate_sample_grid(sample_grid, horizon);
  require_consistent(initial, params, scaling);
  Rng rng = make_stream(seed, stream);

  Trajectory traj;
  traj.sample_times = sample_grid;
  traj.seed = seed;
  traj.stream = stream;
  traj.scaling = scaling;

  const Eigen::Index n = initial.sites();
  SystemState state = initial;
  std::vector<double> rates(static_cast<std::size_t>(n) * kEventKinds);
  CountMatrix proposal;
  constexpr int kMaxHalvings = 64;

  double t = 0.0;
  std::size_t next = 0;
  traj.states.push_back(state);
  ++next;
  while (next < sample_grid.size()) {
    const double target = sample_grid[next];
    for (Eigen::Index site = 0; site < n; ++site) {
      for (int kind = 0; kind < kEventKinds; ++kind) {
        rates[static_cast<std::size_t>(site * kEventKinds + kind)] =
            event_rate(state, params, scaling, static_cast<EventKind>(kind), site);
      }
    }
    double dt = std::min(tau, target - t);
    bool lands_on_target = dt == target - t;
    for (int halvings = 0;; ++halvings) {
      if (halvings > kMaxHalvings) {
        throw std::runtime_error("tau-leap step could not avoid negative counts");
      }
      proposal = state.counts;
      std::uint64_t fired = 0;
      for (Eigen::Index site = 0; site < n; ++site) {
        for (int kind = 0; kind < kEventKinds; ++kind) {
          const double mean = rates[static_cast<std::size_t>(site * kEventKinds + kind)] * dt;
          if (mean <= 0.0) {
            continue;
          }
          const std::int64_t k = std::poisson_distribution<std::int64_t>(mean)(rng);
          if (k == 0) {
            continue;
          }
          fired += static_cast<std::uint64_t>(k);
          const EventDelta d = event_delta(static_cast<EventKind>(kind));
          for (int c = 0; c < kCompartments; ++c) {
            proposal(site, c) += k * d.local[static_cast<std::size_t>(c)];
          }
          if (d.neighbor_offset != 0) {
            proposal(wrap(site + d.neighbor_offset, n), kB) += k;
          }
        }
      }
      if ((proposal.array() >= 0).all()) {
        state.counts = proposal;
        traj.event_count += fired;
        break;
      }
      ++traj.rejected_leaps;
      dt *= 0.5;
      lands_on_target = false;
    }
    t = lands_on_target ? target : t + dt;
    while (next < sample_grid.size() && sample_grid[next] <= t) {
      traj.states.push_back(state);
      ++next;
    }
  }
  return traj;
}

}  // namespace cholera
