#include "cholera/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace cholera {

namespace {

void require_same_grid(const std::vector<double>& a, const std::vector<double>& b)
{
  if (a != b) {
    throw std::invalid_argument("sup_distance needs identical sample grids");
  }
}

template <typename GetA, typename GetB>
double sup_over(std::size_t samples, Eigen::Index sites_a, Eigen::Index sites_b, CompartmentMask mask, GetA get_a,
                GetB get_b)
{
  if (sites_a != sites_b) {
    throw std::invalid_argument("sup_distance needs equal lattice sizes");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const StateMatrix<double> a = get_a(k);
    const StateMatrix<double> b = get_b(k);
    for (int c = 0; c < kCompartments; ++c) {
      if (mask[static_cast<std::size_t>(c)]) {
        worst = std::max(worst, (a.col(c) - b.col(c)).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

}  // namespace

double sup_distance(const Trajectory& a, const DeterministicTrajectory& b, CompartmentMask mask)
{
  require_same_grid(a.sample_times, b.times);
  if (a.states.size() != b.states.size() || a.states.empty()) {
    throw std::invalid_argument("sup_distance needs the same nonzero number of snapshots");
  }
  return sup_over(
      a.states.size(), a.states.front().sites(), b.states.front().rows(), mask,
      [&](std::size_t k) { return rescaled(a.states[k], a.scaling); }, [&](std::size_t k) { return b.states[k]; });
}

double sup_distance(const DeterministicTrajectory& a, const DeterministicTrajectory& b, CompartmentMask mask)
{
  require_same_grid(a.times, b.times);
  if (a.states.size() != b.states.size() || a.states.empty()) {
    throw std::invalid_argument("sup_distance needs the same nonzero number of snapshots");
  }
  return sup_over(
      a.states.size(), a.states.front().rows(), b.states.front().rows(), mask,
      [&](std::size_t k) { return a.states[k]; }, [&](std::size_t k) { return b.states[k]; });
}

// ---------------------------------------------------------------------------
// Path functionals

namespace {

const std::vector<TimedEvent>& require_log(const Trajectory& traj)
{
  if (!traj.event_log) {
    throw std::invalid_argument("trajectory has no event log; simulate with record_events");
  }
  if (traj.states.empty()) {
    throw std::invalid_argument("trajectory has no snapshots");
  }
  return *traj.event_log;
}

// Walks a logged path, calling `on_interval(state, dt)` for every stretch of
// constant state, `on_event(state_before, event)` for each event and
// `on_sample(k, state)` at each sample time. Snapshots are cross-checked.
template <typename OnInterval, typename OnEvent, typename OnSample>
void walk_path(const Trajectory& traj, OnInterval on_interval, OnEvent on_event, OnSample on_sample)
{
  const auto& log = require_log(traj);
  SystemState state = traj.states.front();
  double t = 0.0;
  std::size_t next_event = 0;
  for (std::size_t k = 0; k < traj.sample_times.size(); ++k) {
    const double s = traj.sample_times[k];
    while (next_event < log.size() && log[next_event].time <= s) {
      const TimedEvent& te = log[next_event++];
      on_interval(state, te.time - t);
      on_event(state, te.event);
      apply_event_inplace(state, te.event);
      t = te.time;
    }
    on_interval(state, s - t);
    t = s;
    if (k < traj.states.size() && !(state == traj.states[k])) {
      throw InvariantViolation("event log does not reproduce the snapshot at t = " + std::to_string(s));
    }
    on_sample(k, state);
  }
}

}  // namespace

MartingaleResidual martingale_residual(const Trajectory& traj, const EpidemicParams& params,
                                       const ScalingParams& scaling)
{
  require_log(traj);
  const StateMatrix<double> u0 = rescaled(traj.states.front(), scaling);
  StateMatrix<double> integral = StateMatrix<double>::Zero(u0.rows(), kCompartments);
  StateMatrix<double> drift = expected_drift(traj.states.front(), params, scaling);
  bool stale = false;

  MartingaleResidual out;
  out.times = traj.sample_times;
  out.z.reserve(traj.sample_times.size());
  walk_path(
      traj,
      [&](const SystemState& state, double dt) {
        if (stale) {
          drift = expected_drift(state, params, scaling);
          stale = false;
        }
        integral += dt * drift;
      },
      [&](const SystemState&, const Event&) { stale = true; },
      [&](std::size_t, const SystemState& state) { out.z.push_back(rescaled(state, scaling) - u0 - integral); });
  return out;
}

SquareAmplitudes square_amplitudes(const SystemState& state, const EpidemicParams& params,
                                   const ScalingParams& scaling)
{
  const StateMatrix<double> u = rescaled(state, scaling);
  const Eigen::Index n = u.rows();
  const auto& p = params;
  const double ell = p.transport.ell();
  const double p_out = p.transport.p_out();
  const double p_in = p.transport.p_in();
  const double shed = scaling.hk_ratio() * p.p_over_W;

  SquareAmplitudes out{StateMatrix<double>(n, kCompartments), LatticeField(n), LatticeField(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = u(i, kS);
    const double inf = u(i, kI);
    const double r = u(i, kR);
    const double b = u(i, kB);
    const double lambda = b / (1.0 + b);
    const double b_next = u(wrap(i + 1, n), kB);
    const double b_prev = u(wrap(i - 1, n), kB);
    out.squares(i, kS) = 2.0 * p.mu * s + p.mu * inf + (p.mu + p.rho) * r + p.beta * lambda * s;
    out.squares(i, kI) = p.beta * lambda * s + (p.mu + p.alpha + p.gamma) * inf;
    out.squares(i, kR) = p.gamma * inf + (p.mu + p.rho) * r;
    out.squares(i, kB) = ell * (p_in * b_next + b + p_out * b_prev) + p.mu_B * b + shed * inf;
    out.cross_next(i) = -ell * (p_out * b + p_in * b_next);
    out.cross_prev(i) = -ell * (p_in * b + p_out * b_prev);
  }
  return out;
}

double projected_compensator(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling,
                             Compartment compartment, const LatticeField& f)
{
  const Eigen::Index n = state.sites();
  if (f.size() != n) {
    throw std::invalid_argument("test function size does not match the lattice");
  }
  const double nd = static_cast<double>(n);
  const SquareAmplitudes amp = square_amplitudes(state, params, scaling);
  const LatticeField f2 = f.cwiseAbs2();
  if (compartment != kB) {
    return inner(amp.squares.col(compartment), f2) / (nd * static_cast<double>(scaling.H));
  }
  const StateMatrix<double> u = rescaled(state, scaling);
  const double two_d = params.transport.ell() / (nd * nd);
  const LatticeField gp = grad_plus(f).cwiseAbs2();
  const LatticeField gm = grad_minus(f).cwiseAbs2();
  const LatticeField transport_weight = two_d * (params.transport.p_out() * gp + params.transport.p_in() * gm);
  const LatticeField reaction_sq =
      params.mu_B * u.col(kB) + scaling.hk_ratio() * params.p_over_W * u.col(kI);
  return (inner(u.col(kB), transport_weight) + inner(reaction_sq, f2)) / (nd * static_cast<double>(scaling.K));
}

// ---------------------------------------------------------------------------
// Mean-zero tests

double MeanZeroReport::pass_fraction() const
{
  if (cells.empty()) {
    return 1.0;
  }
  const auto passed = std::count_if(cells.begin(), cells.end(), [](const CellStat& c) { return c.pass; });
  return static_cast<double>(passed) / static_cast<double>(cells.size());
}

namespace {

CellStat score_cell(const std::vector<double>& observed, const std::vector<double>& predicted)
{
  const auto n = static_cast<double>(observed.size());
  CellStat cell;
  double sum_r = 0.0;
  double sum_o = 0.0;
  double sum_p = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    sum_o += observed[j];
    sum_p += predicted[j];
    sum_r += observed[j] - predicted[j];
  }
  cell.observed_mean = sum_o / n;
  cell.predicted_mean = sum_p / n;
  cell.residual_mean = sum_r / n;
  double ss = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    const double d = observed[j] - predicted[j] - cell.residual_mean;
    ss += d * d;
  }
  cell.standard_error = observed.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  if (cell.standard_error > 0.0) {
    cell.z = cell.residual_mean / cell.standard_error;
    cell.pass = std::abs(cell.z) <= kSigmaThreshold;
  } else {
    // Every replica agrees; the mean must then be zero up to roundoff.
    const double scale = std::max({1.0, std::abs(cell.observed_mean), std::abs(cell.predicted_mean)});
    cell.pass = std::abs(cell.residual_mean) <= 1e-12 * scale;
  }
  return cell;
}

}  // namespace

MeanZeroReport martingale_mean_test(const std::vector<MartingaleResidual>& residuals)
{
  MeanZeroReport report;
  report.replicas = residuals.size();
  if (residuals.empty()) {
    return report;
  }
  const auto& times = residuals.front().times;
  for (const auto& r : residuals) {
    if (r.times != times) {
      throw std::invalid_argument("residuals sampled on different grids");
    }
  }
  const Eigen::Index n = residuals.front().z.front().rows();
  std::vector<double> obs(residuals.size());
  const std::vector<double> zero(residuals.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    for (int c = 0; c < kCompartments; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < residuals.size(); ++j) {
          obs[j] = residuals[j].z[k](i, c);
        }
        CellStat cell = score_cell(obs, zero);
        cell.time = times[k];
        cell.site = i;
        cell.quantity = std::string("Z_") + kCompartmentNames[static_cast<std::size_t>(c)];
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

namespace {

constexpr int kBracketQuantities = 6;
constexpr std::array<const char*, kBracketQuantities> kBracketNames = {"S", "I", "R", "B", "B_next", "B_prev"};
using BracketMatrix = Eigen::Matrix<double, Eigen::Dynamic, kBracketQuantities>;

struct BracketPath {
  std::vector<BracketMatrix> observed;
  std::vector<BracketMatrix> predicted;
};

BracketPath bracket_path(const Trajectory& traj, const EpidemicParams& params, const ScalingParams& scaling)
{
  const Eigen::Index n = traj.states.front().sites();
  const double inv_h = 1.0 / static_cast<double>(scaling.H);
  const double inv_k = 1.0 / static_cast<double>(scaling.K);
  BracketMatrix obs = BracketMatrix::Zero(n, kBracketQuantities);
  BracketMatrix pred = BracketMatrix::Zero(n, kBracketQuantities);
  BracketPath out;
  walk_path(
      traj,
      [&](const SystemState& state, double dt) {
        if (dt <= 0.0) {
          return;
        }
        const SquareAmplitudes amp = square_amplitudes(state, params, scaling);
        pred.leftCols<3>() += (dt * inv_h) * amp.squares.leftCols<3>();
        pred.col(3) += (dt * inv_k) * amp.squares.col(kB);
        pred.col(4) += (dt * inv_k) * amp.cross_next;
        pred.col(5) += (dt * inv_k) * amp.cross_prev;
      },
      [&](const SystemState&, const Event& e) {
        const EventDelta d = event_delta(e.kind);
        const Eigen::Index i = e.site;
        for (int c = 0; c < 3; ++c) {
          const double jump = d.local[static_cast<std::size_t>(c)] * inv_h;
          obs(i, c) += jump * jump;
        }
        const double jump_b = d.local[kB] * inv_k;
        obs(i, 3) += jump_b * jump_b;
        if (d.neighbor_offset != 0) {
          const Eigen::Index j = wrap(i + d.neighbor_offset, n);
          obs(j, 3) += inv_k * inv_k;
          // Opposite unit moves at i and j.
          const double product = jump_b * inv_k;
          if (d.neighbor_offset > 0) {
            obs(i, 4) += product;
            obs(j, 5) += product;
          } else {
            obs(i, 5) += product;
            obs(j, 4) += product;
          }
        }
      },
      [&](std::size_t, const SystemState&) {
        out.observed.push_back(obs);
        out.predicted.push_back(pred);
      });
  return out;
}

}  // namespace

MeanZeroReport compensator_check(const std::vector<Trajectory>& replicas, const EpidemicParams& params,
                                 const ScalingParams& scaling)
{
  MeanZeroReport report;
  report.replicas = replicas.size();
  if (replicas.empty()) {
    return report;
  }
  std::vector<BracketPath> paths;
  paths.reserve(replicas.size());
  for (const auto& traj : replicas) {
    if (traj.sample_times != replicas.front().sample_times) {
      throw std::invalid_argument("replicas sampled on different grids");
    }
    paths.push_back(bracket_path(traj, params, scaling));
  }
  const auto& times = replicas.front().sample_times;
  const Eigen::Index n = replicas.front().states.front().sites();
  std::vector<double> obs(replicas.size());
  std::vector<double> pred(replicas.size());
  for (std::size_t k = 1; k < times.size(); ++k) {
    for (int q = 0; q < kBracketQuantities; ++q) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < paths.size(); ++j) {
          obs[j] = paths[j].observed[k](i, q);
          pred[j] = paths[j].predicted[k](i, q);
        }
        CellStat cell = score_cell(obs, pred);
        cell.time = times[k];
        cell.site = i;
        cell.quantity = kBracketNames[static_cast<std::size_t>(q)];
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ladders

void validate_ladder(const std::vector<ScalingParams>& ladder, Regime regime)
{
  if (ladder.empty()) {
    throw std::invalid_argument("ladder needs at least one rung");
  }
  for (const auto& rung : ladder) {
    rung.validate();
    if (regime == Regime::theorem2 && rung.H >= rung.K) {
      throw std::invalid_argument("theorem2 ladders need H/K < 1 on every rung (bacteria must dominate), got H=" +
                                  std::to_string(rung.H) + " K=" + std::to_string(rung.K));
    }
  }
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    const auto& a = ladder[k - 1];
    const auto& b = ladder[k];
    if (b.N < a.N) {
      throw std::invalid_argument("ladder N must be nondecreasing (rung " + std::to_string(k + 1) + ")");
    }
    if (b.K <= a.K) {
      throw std::invalid_argument("ladder K must increase strictly (rung " + std::to_string(k + 1) + ")");
    }
    const auto cross_ab = static_cast<__int128>(b.H) * a.K;
    const auto cross_ba = static_cast<__int128>(a.H) * b.K;
    if (regime == Regime::theorem1 && cross_ab != cross_ba) {
      throw std::invalid_argument("theorem1 ladders need the same H/K on every rung; rung " + std::to_string(k + 1) +
                                  " changes it");
    }
    if (regime == Regime::theorem2 && cross_ab > cross_ba) {
      throw std::invalid_argument("theorem2 ladders need H/K nonincreasing toward 0; rung " + std::to_string(k + 1) +
                                  " raises it");
    }
  }
}

double quantile(std::vector<double> values, double q)
{
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double ball_norm(const StateMatrix<double>& u)
{
  return u.colwise().maxCoeff().sum();
}

template <typename Task>
void run_parallel(std::size_t count, unsigned workers, Task task)
{
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t j = next++; j < count; j = next++) {
      try {
        task(j);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(body);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace

ConvergenceReport lln_experiment(const std::vector<ScalingParams>& ladder, const InitialProfile& profile,
                                 const EpidemicParams& params, double horizon, int replicas, std::uint64_t seed,
                                 Regime regime, LlnOptions options)
{
  validate_ladder(ladder, regime);
  params.validate();
  if (replicas < 1) {
    throw std::invalid_argument("replicas must be >= 1");
  }
  ConvergenceReport report;
  report.regime = regime;
  report.horizon = horizon;
  report.seed = seed;
  const std::vector<double> times = uniform_times(horizon, options.samples);
  const CompartmentMask mask = regime == Regime::theorem2 ? kBacteriaOnly : kAllCompartments;

  for (std::size_t r = 0; r < ladder.size(); ++r) {
    const ScalingParams& scaling = ladder[r];
    EpidemicParams p = params;
    p.transport = params.transport.at_resolution(scaling.N);
    const DeterministicState v0 = project_profile(profile, scaling.N, options.quadrature);

    RungResult rung;
    rung.scaling = scaling;
    const SystemState initial = from_densities(v0, scaling, &rung.rounding_error);

    const ReactionField coupled{p, scaling.hk_ratio(), Coupling::coupled};
    const ReactionField target{p, scaling.hk_ratio(),
                               regime == Regime::theorem2 ? Coupling::decoupled : Coupling::coupled};
    const DeterministicTrajectory det = integrate(v0, horizon, target, p.transport, times);
    rung.exit_radius = ball_norm(v0) * std::exp(growth_constant(coupled) * horizon) + 1.0;

    rung.distances.assign(static_cast<std::size_t>(replicas), 0.0);
    std::vector<char> exited(static_cast<std::size_t>(replicas), 0);
    run_parallel(static_cast<std::size_t>(replicas), options.workers, [&](std::size_t j) {
      const std::uint64_t stream = (static_cast<std::uint64_t>(r) << 32) | j;
      const Trajectory traj = simulate_ssa(initial, horizon, times, p, scaling, seed, stream);
      rung.distances[j] = sup_distance(traj, det, mask);
      for (const auto& s : traj.states) {
        if (ball_norm(rescaled(s, scaling)) > rung.exit_radius) {
          exited[j] = 1;
          break;
        }
      }
    });
    rung.exits = static_cast<std::uint64_t>(std::count(exited.begin(), exited.end(), 1));
    rung.median = quantile(rung.distances, 0.5);
    rung.q25 = quantile(rung.distances, 0.25);
    rung.q75 = quantile(rung.distances, 0.75);
    report.rungs.push_back(std::move(rung));
  }
  return report;
}

}  // namespace cholera
