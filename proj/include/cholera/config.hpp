#pragma once

// INI-style run configuration. See README for the key reference.

#include "cholera/deterministic.hpp"
#include "cholera/diagnostics.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cholera {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class RunMode { simulate, pde, homogeneous, converge, diagnose };
enum class Method { ssa, tau_leap };

std::string to_string(RunMode mode);
std::string to_string(Regime regime);
RunMode parse_run_mode(const std::string& text);
Regime parse_regime(const std::string& text);

/// Parses one initial-condition preset: constant(c), fourier(m, amplitude,
/// baseline) or bump(center, width, height). `key` names the setting in
/// error messages. Presets that can go negative are rejected.
std::function<double(double)> parse_preset(const std::string& text, const std::string& key);

/// "N:H:K, N:H:K, ..."
std::vector<ScalingParams> parse_ladder(const std::string& text);

struct RunConfig {
  RunMode mode = RunMode::simulate;
  double horizon = 1.0;
  int samples = 11;
  int replicas = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output = "out";
  bool record_events = true;
  Method method = Method::ssa;
  double tau = 0.01;

  // Transport rates refer to the lattice of `scaling.N` (or the first rung).
  double ell = 1.0;
  double p_out = 0.5;
  EpidemicParams params;
  ScalingParams scaling;

  std::vector<ScalingParams> ladder;
  Regime regime = Regime::theorem1;

  std::array<std::string, kCompartments> initial_text = {"constant(1)", "constant(0)", "constant(0)",
                                                         "constant(0)"};

  Eigen::Index pde_sites = 64;
  Coupling coupling = Coupling::coupled;
  std::optional<double> hk_ratio;
  std::optional<double> dt;
  int quadrature = kDefaultQuadraturePoints;

  /// Checks ranges and cross-field rules, then rebuilds params.transport.
  void finalize();

  InitialProfile initial_profile() const;
  TransportCoefficients transport_at(Eigen::Index sites) const { return params.transport.at_resolution(sites); }
  ReactionField reaction_field() const;

  /// Every setting plus the derived transport quantities.
  nlohmann::json echo() const;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text);

}  // namespace cholera
