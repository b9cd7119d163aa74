// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// With an argument, runs only that criterion (ctest registers each one).

#include "cholera/deterministic.hpp"
#include "cholera/diagnostics.hpp"
#include "cholera/io.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace cholera;
using namespace cholera::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Law of large numbers with fixed H/K = 1.
Outcome lln_coupled()
{
  const std::vector<ScalingParams> ladder = {{8, 100, 100}, {8, 1000, 1000}, {8, 10000, 10000}};
  const auto report = lln_experiment(ladder, generic_profile(), generic_params(8), 1.0, 20, 20240601,
                                     Regime::theorem1, {101, 1, kDefaultQuadraturePoints});
  const double m1 = report.rungs[0].median;
  const double m2 = report.rungs[1].median;
  const double m3 = report.rungs[2].median;
  const bool decreasing = m1 > m2 && m2 > m3;
  return {decreasing && m3 < 0.25 * m1,
          fmt("medians %.4g > %.4g > %.4g, rung3/rung1 = %.3f (< 0.25), exits %llu/%llu/%llu", m1, m2, m3, m3 / m1,
              static_cast<unsigned long long>(report.rungs[0].exits),
              static_cast<unsigned long long>(report.rungs[1].exits),
              static_cast<unsigned long long>(report.rungs[2].exits))};
}

// H/K -> 0: bacteria against the decoupled system.
Outcome lln_decoupled()
{
  const std::vector<ScalingParams> ladder = {{8, 10, 1000}, {8, 100, 10000}, {8, 1000, 100000}};
  const auto report = lln_experiment(ladder, generic_profile(), generic_params(8), 1.0, 20, 20240602,
                                     Regime::theorem2, {101, 1, kDefaultQuadraturePoints});
  const double m1 = report.rungs[0].median;
  const double m2 = report.rungs[1].median;
  const double m3 = report.rungs[2].median;
  return {m1 > m2 && m2 > m3, fmt("B-field medians %.4g > %.4g > %.4g", m1, m2, m3)};
}

// Decoupled bacteria on 64 sites against the travelling-wave closed form.
Outcome linear_pde_oracle()
{
  constexpr Eigen::Index m_sites = 64;
  constexpr double mu_b = 1.0;
  constexpr double horizon = 1.0;
  const auto tc = TransportCoefficients::from_continuum(0.01, 0.05, m_sites);
  EpidemicParams p = generic_params(m_sites);
  p.mu_B = mu_b;
  p.transport = tc;
  const ReactionField rf{p, 1.0, Coupling::decoupled};

  // Nonnegative data: a constant carrier plus the m = 1 mode. The carrier
  // decays as exp(-mu_B t) on its own, which the comparison removes.
  constexpr double amp = 1.0;
  DeterministicState v0 = DeterministicState::Zero(m_sites, kCompartments);
  v0.col(kB) = project([&](double x) { return amp + linear_oracle(1, amp, tc, mu_b, 0.0, x); }, m_sites);
  const auto sol = integrate(v0, horizon, rf, tc, {0.0, horizon});

  const LatticeField exact = project([&](double x) { return linear_oracle(1, amp, tc, mu_b, horizon, x); }, m_sites);
  const LatticeField numeric = sol.states.back().col(kB).array() - amp * std::exp(-mu_b * horizon);
  const double rel = (numeric - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
  return {rel <= 1e-3, fmt("relative sup error %.3e at T=1 (bound 1e-3; D=0.01, nu=0.05, mu_B=1)", rel)};
}

// Lattice ODE converges under refinement.
Outcome refinement()
{
  const auto tc = TransportCoefficients::from_continuum(0.01, 0.1, 16);
  EpidemicParams p = generic_params(16);
  p.transport = tc;
  const ReactionField rf{p, 1.0, Coupling::decoupled};
  const InitialProfile profile = [](double x) {
    const double tau = 2.0 * std::numbers::pi;
    return Vector4(0.0, 0.0, 0.0, 1.0 + 0.5 * std::sin(tau * x) + 0.3 * std::cos(2.0 * tau * x));
  };
  const double d16 = refine_compare(profile, 16, rf, tc, 1.0);
  const double d32 = refine_compare(profile, 32, rf, tc, 1.0);
  const double d64 = refine_compare(profile, 64, rf, tc, 1.0);
  const double r1 = d16 / d32;
  const double r2 = d32 / d64;
  return {r1 >= 2.0 && r2 >= 2.0,
          fmt("distances %.3e, %.3e, %.3e; reductions %.2f, %.2f (>= 2)", d16, d32, d64, r1, r2)};
}

// Zero-type martingales and the square / cross compensators.
Outcome martingale_suite()
{
  const ScalingParams s{4, 100, 100};
  const EpidemicParams p = generic_params(4);
  const SystemState initial = from_densities(project_profile(generic_profile(), 4), s);
  const auto times = uniform_times(1.0, 11);
  std::vector<Trajectory> replicas;
  std::vector<MartingaleResidual> residuals;
  for (std::uint64_t r = 0; r < 200; ++r) {
    replicas.push_back(simulate_ssa(initial, 1.0, times, p, s, 777, r, {true}));
    residuals.push_back(martingale_residual(replicas.back(), p, s));
  }
  const MeanZeroReport z = martingale_mean_test(residuals);
  const MeanZeroReport q = compensator_check(replicas, p, s);

  std::map<std::string, std::pair<int, int>> per;  // quantity -> (passed, total)
  for (const auto* rep : {&z, &q}) {
    for (const auto& c : rep->cells) {
      per[c.quantity].first += c.pass ? 1 : 0;
      per[c.quantity].second += 1;
    }
  }
  bool pass = true;
  double worst = 2.0;
  std::string worst_name;
  for (const auto& [name, counts] : per) {
    const double frac = static_cast<double>(counts.first) / counts.second;
    if (frac < worst) {
      worst = frac;
      worst_name = name;
    }
    pass = pass && frac >= 0.95;
  }
  return {pass, fmt("%zu quantities, worst %s at %.3f of cells (>= 0.95); overall Z %.3f, brackets %.3f",
                    per.size(), worst_name.c_str(), worst, z.pass_fraction(), q.pass_fraction())};
}

// Closed-form square amplitudes against the event table.
Outcome compensator_identity()
{
  std::mt19937_64 rng(6);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ScalingParams s{std::uniform_int_distribution<std::int64_t>(3, 10)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, 10000)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, 10000)(rng)};
    const EpidemicParams p = random_params(rng, s.N);
    const SystemState state = random_state(rng, s);
    const SquareAmplitudes got = square_amplitudes(state, p, s);
    const SquareAmplitudes want = brute_force_amplitudes(state, p, s);
    auto check = [&](double a, double b) {
      const double scale = std::max(std::abs(a), std::abs(b));
      const double rel = scale > 0.0 ? std::abs(a - b) / scale : 0.0;
      worst = std::max(worst, rel);
      failures += rel > 1e-12 ? 1 : 0;
    };
    for (Eigen::Index i = 0; i < s.N; ++i) {
      for (int c = 0; c < kCompartments; ++c) {
        check(got.squares(i, c), want.squares(i, c));
      }
      check(got.cross_next(i), want.cross_next(i));
      check(got.cross_prev(i), want.cross_prev(i));
    }
  }
  return {failures == 0, fmt("1000 random states, worst relative difference %.2e (<= 1e-12), %d failures", worst,
                             failures)};
}

std::string events_bytes(const std::vector<TimedEvent>& log, const std::string& tag)
{
  const fs::path path = fs::temp_directory_path() / ("acceptance_events_" + tag + ".bin");
  write_events(path, log);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  fs::remove(path);
  return ss.str();
}

// Positivity, grid membership, jump bounds, transport conservation, determinism.
Outcome structural_invariants()
{
  std::mt19937_64 rng(7);
  std::uint64_t events_checked = 0;
  std::string failure;
  for (int run = 0; run < 100 && failure.empty(); ++run) {
    const ScalingParams s{std::uniform_int_distribution<std::int64_t>(3, 8)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, 200)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, 200)(rng)};
    const EpidemicParams p = random_params(rng, s.N);
    const SystemState initial = random_state(rng, s);
    const auto times = uniform_times(0.5, 6);
    const auto seed = static_cast<std::uint64_t>(run);
    const Trajectory traj = simulate_ssa(initial, 0.5, times, p, s, seed, 0, {true});

    for (const auto& st : traj.states) {
      if ((st.counts.array() < 0).any()) {
        failure = fmt("negative count in run %d", run);
      }
      const StateMatrix<double> u = rescaled(st, s);
      for (Eigen::Index i = 0; i < s.N; ++i) {
        for (int c = 0; c < kCompartments; ++c) {
          const double scale = static_cast<double>(c == kB ? s.K : s.H);
          if (std::nearbyint(u(i, c) * scale) != static_cast<double>(st.counts(i, c))) {
            failure = fmt("density off the 1/H, 1/K grid in run %d", run);
          }
        }
      }
    }
    SystemState state = initial;
    const double inv_h = 1.0 / static_cast<double>(s.H);
    const double inv_k = 1.0 / static_cast<double>(s.K);
    for (const auto& te : *traj.event_log) {
      const StateMatrix<double> before = rescaled(state, s);
      const std::int64_t b_before = state.counts.col(kB).sum();
      apply_event_inplace(state, te.event);
      const StateMatrix<double> jump = rescaled(state, s) - before;
      const double human = jump.leftCols<3>().cwiseAbs().maxCoeff();
      const double bact = jump.col(kB).cwiseAbs().maxCoeff();
      const auto touched = (jump.array() != 0.0).rowwise().any().count();
      if (human > inv_h * (1 + 1e-12) || bact > inv_k * (1 + 1e-12) || touched > 2) {
        failure = fmt("jump bound violated by %s in run %d", std::string(event_name(te.event.kind)).c_str(), run);
      }
      const bool transport = te.event.kind == EventKind::TransportOut || te.event.kind == EventKind::TransportIn;
      if (transport && state.counts.col(kB).sum() != b_before) {
        failure = fmt("transport changed total bacteria in run %d", run);
      }
      ++events_checked;
    }
    if (!(state == traj.states.back())) {
      failure = fmt("replay mismatch in run %d", run);
    }
    const Trajectory again = simulate_ssa(initial, 0.5, times, p, s, seed, 0, {true});
    if (events_bytes(*traj.event_log, "a") != events_bytes(*again.event_log, "b")) {
      failure = fmt("same seed gave different event logs in run %d", run);
    }
  }

  // Pure transport keeps the bacterial total fixed along the whole path.
  const ScalingParams s{6, 10, 500};
  EpidemicParams pt;
  pt.transport = TransportCoefficients(3.0, 0.8, 6);
  SystemState start(6);
  start.counts.col(kB) << 500, 0, 100, 0, 900, 10;
  const Trajectory tr = simulate_ssa(start, 2.0, uniform_times(2.0, 21), pt, s, 99);
  for (const auto& st : tr.states) {
    if (st.counts.col(kB).sum() != 1510) {
      failure = "pure transport run changed the bacterial total";
    }
  }
  return {failure.empty(),
          failure.empty() ? fmt("100 fuzzed runs, %llu logged events checked; pure transport conserved %llu "
                                "moves; seeded logs byte-identical",
                                static_cast<unsigned long long>(events_checked),
                                static_cast<unsigned long long>(tr.event_count))
                          : failure};
}

// Disease-free state is a fixed point; its infection rate is zero.
Outcome fixed_points()
{
  EpidemicParams p = generic_params(8);
  const ReactionField rf{p, 1.0, Coupling::coupled};
  const Vector4 dfe(1.0, 0.0, 0.0, 0.0);
  const auto times = uniform_times(10.0, 101);
  const auto hom = homogeneous_ode(dfe, 10.0, rf, times);
  double drift_h = 0.0;
  for (const auto& y : hom.states) {
    drift_h = std::max(drift_h, (y - dfe).cwiseAbs().maxCoeff());
  }
  DeterministicState v0 = DeterministicState::Zero(8, kCompartments);
  v0.col(kS).setOnes();
  const auto lat = integrate(v0, 10.0, rf, p.transport, times);
  double drift_l = 0.0;
  for (const auto& v : lat.states) {
    drift_l = std::max(drift_l, (v - v0).cwiseAbs().maxCoeff());
  }

  const ScalingParams s{8, 200, 200};
  SystemState st(8);
  st.counts.col(kS).setConstant(200);
  const Trajectory traj = simulate_ssa(st, 10.0, uniform_times(10.0, 11), p, s, 5, 0, {true});
  std::map<EventKind, std::uint64_t> fired;
  for (const auto& te : *traj.event_log) {
    ++fired[te.event.kind];
  }
  const bool quiet = fired[EventKind::Infection] == 0;
  const bool alive = fired[EventKind::BirthFromS] > 0 && fired[EventKind::DeathS] > 0;
  const bool pass = drift_h < 1e-12 && drift_l < 1e-12 && quiet && alive && p.beta > 0.0;
  return {pass, fmt("ODE drift %.1e, lattice drift %.1e (< 1e-12); SSA over T=10: %llu infections, %llu births, "
                    "%llu deaths",
                    drift_h, drift_l, static_cast<unsigned long long>(fired[EventKind::Infection]),
                    static_cast<unsigned long long>(fired[EventKind::BirthFromS]),
                    static_cast<unsigned long long>(fired[EventKind::DeathS]))};
}

}  // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"LLN, fixed H/K ladder", lln_coupled},
      {"LLN, vanishing H/K ladder (B field vs decoupled system)", lln_decoupled},
      {"linear PDE oracle at M=64", linear_pde_oracle},
      {"discrete-to-continuum refinement", refinement},
      {"martingale and compensator mean-zero suite", martingale_suite},
      {"square amplitudes vs event table", compensator_identity},
      {"structural invariants", structural_invariants},
      {"disease-free fixed point", fixed_points},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
      return 2;
    }
  }
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<int>(k) + 1 != only) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s - %s [%.1fs]\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
