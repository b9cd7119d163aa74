#pragma once

// Exact event-driven simulation of the spatial SIRB jump process, plus a
// tau-leaping accelerator. Integer counts are the source of truth; rescaled
// densities (counts / H for humans, counts / K for bacteria) are views.

#include "cholera/params.hpp"
#include "cholera/rng.hpp"
#include "cholera/sum_tree.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace cholera {

enum Compartment : int { kS = 0, kI = 1, kR = 2, kB = 3 };
inline constexpr int kCompartments = 4;
inline constexpr std::array<const char*, kCompartments> kCompartmentNames = {"S", "I", "R", "B"};

template <typename Scalar>
using StateMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, kCompartments>;

using CountMatrix = StateMatrix<std::int64_t>;

enum class EventKind : std::uint8_t {
  BirthFromS,
  BirthFromI,
  BirthFromR,
  DeathS,
  Infection,
  DeathINatural,
  DeathICholera,
  Recovery,
  DeathR,
  ImmunityLoss,
  BacteriaDeath,
  Contamination,
  TransportOut,
  TransportIn,
};

inline constexpr int kEventKinds = 14;

std::string_view event_name(EventKind kind);

struct Event {
  EventKind kind = EventKind::BirthFromS;
  std::int64_t site = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Fixed count change of an event: `local` at the event's site, and for
/// transport one bacterium added at site + neighbor_offset.
struct EventDelta {
  std::array<int, kCompartments> local{};
  int neighbor_offset = 0;
};

EventDelta event_delta(EventKind kind);

/// Thrown when an event would drive a count negative; indicates a bug in the
/// caller (engine or replayed log), never a modelling outcome.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

struct SystemState {
  CountMatrix counts;

  SystemState() = default;
  explicit SystemState(Eigen::Index sites) : counts(CountMatrix::Zero(sites, kCompartments)) {}
  explicit SystemState(CountMatrix c) : counts(std::move(c)) {}

  Eigen::Index sites() const { return counts.rows(); }

  friend bool operator==(const SystemState& a, const SystemState& b)
  {
    return a.counts.rows() == b.counts.rows() && a.counts == b.counts;
  }
};

/// Densities: columns S, I, R divided by H and B divided by K.
StateMatrix<double> rescaled(const SystemState& state, const ScalingParams& scaling);

/// Rounds densities to the nearest representable counts. The largest
/// absolute density change introduced by rounding is written to
/// `max_rounding` when given.
SystemState from_densities(const StateMatrix<double>& densities, const ScalingParams& scaling,
                           double* max_rounding = nullptr);

void validate_state(const SystemState& state, const ScalingParams& scaling);

/// Propensity (events per unit time) of `kind` at `site`, in count form.
double event_rate(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling,
                  EventKind kind, Eigen::Index site);

void apply_event_inplace(SystemState& state, const Event& e);
SystemState apply_event(SystemState state, const Event& e);

/// Sum over events of rate x rescaled jump: the drift of the density process.
StateMatrix<double> expected_drift(const SystemState& state, const EpidemicParams& params,
                                   const ScalingParams& scaling);

struct TimedEvent {
  double time = 0.0;
  Event event;

  friend bool operator==(const TimedEvent&, const TimedEvent&) = default;
};

struct Trajectory {
  std::vector<double> sample_times;
  std::vector<SystemState> states;
  std::optional<std::vector<TimedEvent>> event_log;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ScalingParams scaling;
  std::uint64_t event_count = 0;
  // Tau-leap steps rejected for overshooting below zero (each halves tau).
  std::uint64_t rejected_leaps = 0;
};

/// Outcome of one SSA step. An absent event marks an absorbing state (total
/// rate zero) with infinite waiting time.
struct SsaStep {
  std::optional<Event> event;
  double waiting_time = 0.0;

  bool absorbing() const { return !event.has_value(); }
};

/// Gillespie direct method with per-(site, kind) propensities kept in a sum
/// tree. Events only touch one site or two neighbors, so each step refreshes
/// at most 28 leaves.
class SsaEngine {
public:
  SsaEngine(SystemState initial, const EpidemicParams& params, const ScalingParams& scaling);

  SsaStep step(Rng& rng) const;
  void apply(const Event& e);

  const SystemState& state() const { return state_; }
  double total_rate() const { return tree_.total(); }
  double rate(EventKind kind, Eigen::Index site) const
  {
    return tree_.weight(static_cast<std::size_t>(site) * kEventKinds + static_cast<std::size_t>(kind));
  }

private:
  void refresh_site(Eigen::Index site);

  SystemState state_;
  EpidemicParams params_;
  ScalingParams scaling_;
  SumTree tree_;
};

SsaStep step_ssa(const SystemState& state, const EpidemicParams& params, const ScalingParams& scaling, Rng& rng);

struct SimulationOptions {
  bool record_events = false;
};

Trajectory simulate_ssa(const SystemState& initial, double horizon, const std::vector<double>& sample_grid,
                        const EpidemicParams& params, const ScalingParams& scaling, std::uint64_t seed,
                        std::uint64_t stream = 0, SimulationOptions options = {});

Trajectory simulate_tau_leap(const SystemState& initial, double horizon, double tau,
                             const std::vector<double>& sample_grid, const EpidemicParams& params,
                             const ScalingParams& scaling, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace cholera
