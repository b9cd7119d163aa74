#include "cholera/run.hpp"

#include "cholera/io.hpp"

#include <cstdio>
#include <fstream>

namespace cholera {

namespace {

std::ofstream open_text(const fs::path& path)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

// Site-averaged densities over time, for quick plotting.
void write_plot_means(const fs::path& path, const std::vector<double>& times,
                      const std::vector<StateMatrix<double>>& states)
{
  auto out = open_text(path);
  out << "time,S,I,R,B\n";
  char line[160];
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto m = states[k].colwise().mean();
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", times[k], m(kS), m(kI), m(kR), m(kB));
    out << line;
  }
}

void write_plot_script(const fs::path& dir)
{
  auto out = open_text(dir / "plot.py");
  out << "# Plots the columnar outputs in this directory. Needs pandas and matplotlib.\n"
         "import glob\n"
         "import pandas as pd\n"
         "import matplotlib.pyplot as plt\n"
         "\n"
         "for path in sorted(glob.glob('plot_*.csv')):\n"
         "    df = pd.read_csv(path)\n"
         "    x = df.columns[0]\n"
         "    ax = df.plot(x=x, y=list(df.columns[1:]), title=path)\n"
         "    ax.figure.savefig(path.replace('.csv', '.png'))\n"
         "plt.close('all')\n";
}

DeterministicState initial_densities(const RunConfig& cfg, Eigen::Index sites)
{
  return project_profile(cfg.initial_profile(), sites, cfg.quadrature);
}

Trajectory simulate_one(const RunConfig& cfg, const SystemState& initial, const std::vector<double>& times,
                        std::uint64_t stream, bool record)
{
  EpidemicParams p = cfg.params;
  p.transport = cfg.transport_at(cfg.scaling.N);
  if (cfg.method == Method::tau_leap) {
    return simulate_tau_leap(initial, cfg.horizon, cfg.tau, times, p, cfg.scaling, cfg.seed, stream);
  }
  return simulate_ssa(initial, cfg.horizon, times, p, cfg.scaling, cfg.seed, stream, {record});
}

int run_simulate(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
  const auto times = uniform_times(cfg.horizon, cfg.samples);
  double rounding = 0.0;
  const SystemState initial = from_densities(initial_densities(cfg, cfg.scaling.N), cfg.scaling, &rounding);
  for (int r = 0; r < cfg.replicas; ++r) {
    const Trajectory traj = simulate_one(cfg, initial, times, static_cast<std::uint64_t>(r),
                                         cfg.record_events && cfg.method == Method::ssa);
    char name[32];
    std::snprintf(name, sizeof name, "replica_%03d", r);
    const fs::path dir = cfg.replicas == 1 ? out : out / name;
    write_trajectory(dir, traj);
    std::vector<StateMatrix<double>> dens;
    for (const auto& s : traj.states) {
      dens.push_back(rescaled(s, cfg.scaling));
    }
    write_plot_means(dir / "plot_means.csv", times, dens);
    log << "replica " << r << ": " << traj.event_count << " events";
    if (traj.rejected_leaps > 0) {
      log << ", " << traj.rejected_leaps << " rejected leaps";
    }
    log << '\n';
  }
  log << "initial rounding error " << rounding << '\n';
  return 0;
}

int run_pde(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
  const auto times = uniform_times(cfg.horizon, cfg.samples);
  const auto tc = cfg.transport_at(cfg.pde_sites);
  const auto det = integrate(initial_densities(cfg, cfg.pde_sites), cfg.horizon, cfg.reaction_field(), tc, times,
                             cfg.dt);
  write_trajectory_csv(out / "trajectory.csv", det);
  write_plot_means(out / "plot_means.csv", times, det.states);
  log << "M=" << cfg.pde_sites << " steps=" << det.steps << " dt=" << det.dt << " clamped=" << det.clamped << '\n';
  return 0;
}

int run_homogeneous(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
  const auto times = uniform_times(cfg.horizon, cfg.samples);
  const Vector4 y0 = initial_densities(cfg, cfg.scaling.N).colwise().mean().transpose();
  const auto sol = homogeneous_ode(y0, cfg.horizon, cfg.reaction_field(), times, cfg.dt);
  auto csv = open_text(out / "plot_homogeneous.csv");
  csv << "time,S,I,R,B\n";
  char line[160];
  for (std::size_t k = 0; k < sol.states.size(); ++k) {
    const Vector4& y = sol.states[k];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", times[k], y(0), y(1), y(2), y(3));
    csv << line;
  }
  const Vector4& last = sol.states.back();
  log << "final S=" << last(0) << " I=" << last(1) << " R=" << last(2) << " B=" << last(3) << '\n';
  return 0;
}

int run_converge(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
  const ConvergenceReport report = lln_experiment(cfg.ladder, cfg.initial_profile(), cfg.params, cfg.horizon,
                                                  cfg.replicas, cfg.seed, cfg.regime,
                                                  {cfg.samples, cfg.workers, cfg.quadrature});
  write_convergence_report(out, report);
  auto plot = open_text(out / "plot_convergence.csv");
  plot << "K,median,q25,q75\n";
  for (const auto& r : report.rungs) {
    plot << r.scaling.K << ',' << r.median << ',' << r.q25 << ',' << r.q75 << '\n';
    log << "N=" << r.scaling.N << " H=" << r.scaling.H << " K=" << r.scaling.K << "  median=" << r.median
        << "  q25=" << r.q25 << "  q75=" << r.q75 << "  exits=" << r.exits << '\n';
  }
  return 0;
}

int run_diagnose(const RunConfig& cfg, const fs::path& out, std::ostream& log)
{
  const auto times = uniform_times(cfg.horizon, cfg.samples);
  const SystemState initial = from_densities(initial_densities(cfg, cfg.scaling.N), cfg.scaling);
  EpidemicParams p = cfg.params;
  p.transport = cfg.transport_at(cfg.scaling.N);
  std::vector<Trajectory> replicas;
  std::vector<MartingaleResidual> residuals;
  for (int r = 0; r < cfg.replicas; ++r) {
    replicas.push_back(
        simulate_ssa(initial, cfg.horizon, times, p, cfg.scaling, cfg.seed, static_cast<std::uint64_t>(r), {true}));
    residuals.push_back(martingale_residual(replicas.back(), p, cfg.scaling));
  }
  const MeanZeroReport z = martingale_mean_test(residuals);
  const MeanZeroReport q = compensator_check(replicas, p, cfg.scaling);
  write_mean_zero_report(out / "report_martingale.csv", z);
  write_mean_zero_report(out / "report_compensator.csv", q);
  log << "martingale cells passing: " << z.pass_fraction() * 100.0 << "% of " << z.cells.size() << '\n';
  log << "compensator cells passing: " << q.pass_fraction() * 100.0 << "% of " << q.cells.size() << '\n';
  return 0;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log)
{
  const fs::path out(cfg.output);
  fs::create_directories(out);
  int status = 0;
  switch (cfg.mode) {
    case RunMode::simulate: status = run_simulate(cfg, out, log); break;
    case RunMode::pde: status = run_pde(cfg, out, log); break;
    case RunMode::homogeneous: status = run_homogeneous(cfg, out, log); break;
    case RunMode::converge: status = run_converge(cfg, out, log); break;
    case RunMode::diagnose: status = run_diagnose(cfg, out, log); break;
  }
  write_plot_script(out);
  write_manifest(out, cfg.echo(), cfg.seed);
  return status;
}

}  // namespace cholera
