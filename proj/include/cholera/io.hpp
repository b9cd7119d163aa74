#pragma once

// Persistence: human-readable CSV snapshots, exact binary snapshots and event
// logs, run manifests with content hashes, and deterministic replay.

#include "cholera/deterministic.hpp"
#include "cholera/diagnostics.hpp"
#include "cholera/stochastic.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cholera {

inline constexpr const char* kToolVersion = "0.1.0";

/// Raised when a file is truncated, has a bad header or fails its hash.
class CorruptFile : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path);

/// time,site,S,I,R,B with 1-based sites and densities at full precision.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
void write_trajectory_csv(const fs::path& path, const DeterministicTrajectory& traj);

/// Frames of (f64 time, u8 kind, u32 site), little-endian, after a short
/// magic + version header. Sites are 0-based.
void write_events(const fs::path& path, const std::vector<TimedEvent>& log);
std::vector<TimedEvent> read_events(const fs::path& path);

/// Integer snapshots with the scaling and seed needed to rebuild a
/// Trajectory exactly (event log excluded).
void write_snapshots(const fs::path& path, const Trajectory& traj);
Trajectory read_snapshots(const fs::path& path);

/// trajectory.csv + snapshots.bin (+ events.bin when the log is present).
void write_trajectory(const fs::path& dir, const Trajectory& traj);

/// Reads snapshots.bin and events.bin from `dir`. When the directory holds a
/// manifest, every file read is checked against its recorded hash first.
Trajectory read_trajectory(const fs::path& dir);

/// Folds apply_event over the log.
SystemState replay(const SystemState& initial, const std::vector<TimedEvent>& log);

struct RunManifest {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
  std::string rng = kRngAlgorithm;
  std::string created;
  std::map<std::string, std::string> hashes;  // relative path -> sha256 hex
};

/// Hashes every regular file under `dir` (except the manifest itself) and
/// writes manifest.json.
RunManifest write_manifest(const fs::path& dir, const nlohmann::json& config, std::uint64_t seed);
RunManifest read_manifest(const fs::path& dir);

/// Throws CorruptFile naming the first file whose hash no longer matches.
void verify_manifest(const fs::path& dir);

/// report_distances.csv (rung,N,H,K,replica,distance) and report_summary.csv.
void write_convergence_report(const fs::path& dir, const ConvergenceReport& report);

/// time,site,quantity,observed,predicted,residual,stderr,z,pass
void write_mean_zero_report(const fs::path& path, const MeanZeroReport& report);

}  // namespace cholera
