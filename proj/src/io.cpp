#include "cholera/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace cholera {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::array<char, 4> kEventMagic = {'C', 'H', 'E', 'V'};
constexpr std::array<char, 4> kSnapshotMagic = {'C', 'H', 'S', 'N'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::size_t kEventFrameBytes = 8 + 1 + 4;
constexpr const char* kManifestName = "manifest.json";

std::ofstream open_out(const fs::path& path)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

std::string read_all(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void put(std::string& buf, T value)
{
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
public:
  Reader(const std::string& data, const fs::path& path) : data_(data), path_(path) {}

  template <typename T>
  T get()
  {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void expect_magic(const std::array<char, 4>& magic)
  {
    need(5);
    if (std::memcmp(data_.data() + pos_, magic.data(), 4) != 0) {
      throw CorruptFile(path_.string() + ": bad magic bytes");
    }
    pos_ += 4;
    const auto version = get<std::uint8_t>();
    if (version != kFormatVersion) {
      throw CorruptFile(path_.string() + ": unsupported format version " + std::to_string(version));
    }
  }

  std::size_t remaining() const { return data_.size() - pos_; }

private:
  void need(std::size_t bytes) const
  {
    if (data_.size() - pos_ < bytes) {
      throw CorruptFile(path_.string() + ": truncated");
    }
  }

  const std::string& data_;
  fs::path path_;
  std::size_t pos_ = 0;
};

void write_csv_rows(std::ofstream& out, double t, const StateMatrix<double>& u)
{
  char line[160];
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%lld,%.17g,%.17g,%.17g,%.17g\n", t, static_cast<long long>(i + 1),
                  u(i, kS), u(i, kI), u(i, kR), u(i, kB));
    out << line;
  }
}

std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_file(const fs::path& path)
{
  const std::string data = read_all(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed for " + path.string());
  }
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  }
  return hex.str();
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj)
{
  auto out = open_out(path);
  out << "time,site,S,I,R,B\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    write_csv_rows(out, traj.sample_times[k], rescaled(traj.states[k], traj.scaling));
  }
}

void write_trajectory_csv(const fs::path& path, const DeterministicTrajectory& traj)
{
  auto out = open_out(path);
  out << "time,site,S,I,R,B\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    write_csv_rows(out, traj.times[k], traj.states[k]);
  }
}

void write_events(const fs::path& path, const std::vector<TimedEvent>& log)
{
  std::string buf(kEventMagic.begin(), kEventMagic.end());
  put<std::uint8_t>(buf, kFormatVersion);
  buf.reserve(buf.size() + log.size() * kEventFrameBytes);
  for (const auto& te : log) {
    put<double>(buf, te.time);
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(te.event.kind));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(te.event.site));
  }
  auto out = open_out(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<TimedEvent> read_events(const fs::path& path)
{
  const std::string data = read_all(path);
  Reader in(data, path);
  in.expect_magic(kEventMagic);
  if (in.remaining() % kEventFrameBytes != 0) {
    throw CorruptFile(path.string() + ": truncated (partial event frame)");
  }
  std::vector<TimedEvent> log(in.remaining() / kEventFrameBytes);
  for (auto& te : log) {
    te.time = in.get<double>();
    const auto kind = in.get<std::uint8_t>();
    if (kind >= kEventKinds) {
      throw CorruptFile(path.string() + ": unknown event kind " + std::to_string(kind));
    }
    te.event.kind = static_cast<EventKind>(kind);
    te.event.site = in.get<std::uint32_t>();
  }
  return log;
}

void write_snapshots(const fs::path& path, const Trajectory& traj)
{
  if (traj.states.size() != traj.sample_times.size()) {
    throw std::invalid_argument("trajectory has " + std::to_string(traj.states.size()) + " snapshots for " +
                                std::to_string(traj.sample_times.size()) + " sample times");
  }
  const Eigen::Index n = traj.states.empty() ? traj.scaling.N : traj.states.front().sites();
  std::string buf(kSnapshotMagic.begin(), kSnapshotMagic.end());
  put<std::uint8_t>(buf, kFormatVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(n));
  put<std::int64_t>(buf, traj.scaling.N);
  put<std::int64_t>(buf, traj.scaling.H);
  put<std::int64_t>(buf, traj.scaling.K);
  put<std::uint64_t>(buf, traj.seed);
  put<std::uint64_t>(buf, traj.stream);
  put<std::uint64_t>(buf, traj.event_count);
  put<std::uint64_t>(buf, traj.rejected_leaps);
  put<std::uint64_t>(buf, traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    put<double>(buf, traj.sample_times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < kCompartments; ++c) {
        put<std::int64_t>(buf, traj.states[k].counts(i, c));
      }
    }
  }
  auto out = open_out(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Trajectory read_snapshots(const fs::path& path)
{
  const std::string data = read_all(path);
  Reader in(data, path);
  in.expect_magic(kSnapshotMagic);
  const auto n = static_cast<Eigen::Index>(in.get<std::uint32_t>());
  Trajectory traj;
  traj.scaling.N = in.get<std::int64_t>();
  traj.scaling.H = in.get<std::int64_t>();
  traj.scaling.K = in.get<std::int64_t>();
  traj.seed = in.get<std::uint64_t>();
  traj.stream = in.get<std::uint64_t>();
  traj.event_count = in.get<std::uint64_t>();
  traj.rejected_leaps = in.get<std::uint64_t>();
  const auto count = in.get<std::uint64_t>();
  const std::size_t frame = 8 + static_cast<std::size_t>(n) * kCompartments * 8;
  if (in.remaining() != count * frame) {
    throw CorruptFile(path.string() + ": truncated (expected " + std::to_string(count) + " snapshots)");
  }
  for (std::uint64_t k = 0; k < count; ++k) {
    traj.sample_times.push_back(in.get<double>());
    SystemState s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < kCompartments; ++c) {
        s.counts(i, c) = in.get<std::int64_t>();
      }
    }
    traj.states.push_back(std::move(s));
  }
  return traj;
}

void write_trajectory(const fs::path& dir, const Trajectory& traj)
{
  fs::create_directories(dir);
  write_trajectory_csv(dir / "trajectory.csv", traj);
  write_snapshots(dir / "snapshots.bin", traj);
  if (traj.event_log) {
    write_events(dir / "events.bin", *traj.event_log);
  }
}

Trajectory read_trajectory(const fs::path& dir)
{
  const bool has_manifest = fs::exists(dir / kManifestName);
  const RunManifest manifest = has_manifest ? read_manifest(dir) : RunManifest{};
  auto checked = [&](const std::string& name) {
    const fs::path p = dir / name;
    if (has_manifest) {
      const auto it = manifest.hashes.find(name);
      if (it != manifest.hashes.end() && it->second != sha256_file(p)) {
        throw CorruptFile(p.string() + ": content hash does not match the manifest");
      }
    }
    return p;
  };
  Trajectory traj = read_snapshots(checked("snapshots.bin"));
  if (fs::exists(dir / "events.bin")) {
    traj.event_log = read_events(checked("events.bin"));
  }
  return traj;
}

SystemState replay(const SystemState& initial, const std::vector<TimedEvent>& log)
{
  SystemState state = initial;
  for (const auto& te : log) {
    apply_event_inplace(state, te.event);
  }
  return state;
}

RunManifest write_manifest(const fs::path& dir, const nlohmann::json& config, std::uint64_t seed)
{
  RunManifest m;
  m.config = config;
  m.seed = seed;
  m.created = utc_timestamp();
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != kManifestName) {
      m.hashes[rel] = sha256_file(entry.path());
    }
  }
  nlohmann::json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["rng"] = m.rng;
  j["created"] = m.created;
  j["config"] = m.config;
  j["sha256"] = m.hashes;
  auto out = open_out(dir / kManifestName);
  out << j.dump(2) << '\n';
  return m;
}

RunManifest read_manifest(const fs::path& dir)
{
  const fs::path path = dir / kManifestName;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_all(path));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
  RunManifest m;
  m.version = j.value("version", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.rng = j.value("rng", "");
  m.created = j.value("created", "");
  m.config = j.value("config", nlohmann::json::object());
  m.hashes = j.value("sha256", std::map<std::string, std::string>{});
  return m;
}

void verify_manifest(const fs::path& dir)
{
  const RunManifest m = read_manifest(dir);
  for (const auto& [rel, hash] : m.hashes) {
    const fs::path p = dir / rel;
    if (!fs::exists(p)) {
      throw CorruptFile(p.string() + ": listed in the manifest but missing");
    }
    if (sha256_file(p) != hash) {
      throw CorruptFile(p.string() + ": content hash does not match the manifest");
    }
  }
}

void write_convergence_report(const fs::path& dir, const ConvergenceReport& report)
{
  auto dist = open_out(dir / "report_distances.csv");
  auto summary = open_out(dir / "report_summary.csv");
  dist << "rung,N,H,K,replica,distance\n";
  summary << "rung,N,H,K,median,q25,q75,exits,exit_radius,rounding_error\n";
  char line[256];
  for (std::size_t r = 0; r < report.rungs.size(); ++r) {
    const auto& rung = report.rungs[r];
    const auto& s = rung.scaling;
    for (std::size_t j = 0; j < rung.distances.size(); ++j) {
      std::snprintf(line, sizeof line, "%zu,%lld,%lld,%lld,%zu,%.17g\n", r + 1, static_cast<long long>(s.N),
                    static_cast<long long>(s.H), static_cast<long long>(s.K), j, rung.distances[j]);
      dist << line;
    }
    std::snprintf(line, sizeof line, "%zu,%lld,%lld,%lld,%.17g,%.17g,%.17g,%llu,%.17g,%.17g\n", r + 1,
                  static_cast<long long>(s.N), static_cast<long long>(s.H), static_cast<long long>(s.K), rung.median,
                  rung.q25, rung.q75, static_cast<unsigned long long>(rung.exits), rung.exit_radius,
                  rung.rounding_error);
    summary << line;
  }
}

void write_mean_zero_report(const fs::path& path, const MeanZeroReport& report)
{
  auto out = open_out(path);
  out << "time,site,quantity,observed,predicted,residual,stderr,z,pass\n";
  char line[256];
  for (const auto& c : report.cells) {
    std::snprintf(line, sizeof line, "%.17g,%lld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", c.time,
                  static_cast<long long>(c.site + 1), c.quantity.c_str(), c.observed_mean, c.predicted_mean,
                  c.residual_mean, c.standard_error, c.z, c.pass ? 1 : 0);
    out << line;
  }
}

}  // namespace cholera
