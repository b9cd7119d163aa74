#include "cholera/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

namespace cholera {

std::string to_string(RunMode mode)
{
  switch (mode) {
    case RunMode::simulate: return "simulate";
    case RunMode::pde: return "pde";
    case RunMode::homogeneous: return "homogeneous";
    case RunMode::converge: return "converge";
    case RunMode::diagnose: return "diagnose";
  }
  return "?";
}

std::string to_string(Regime regime)
{
  return regime == Regime::theorem1 ? "theorem1" : "theorem2";
}

RunMode parse_run_mode(const std::string& text)
{
  for (auto m : {RunMode::simulate, RunMode::pde, RunMode::homogeneous, RunMode::converge, RunMode::diagnose}) {
    if (to_string(m) == text) {
      return m;
    }
  }
  throw ConfigError("[run] mode: unknown mode '" + text + "' (simulate|pde|homogeneous|converge|diagnose)");
}

Regime parse_regime(const std::string& text)
{
  if (text == "theorem1") {
    return Regime::theorem1;
  }
  if (text == "theorem2") {
    return Regime::theorem2;
  }
  throw ConfigError("[ladder] regime: unknown regime '" + text + "' (theorem1|theorem2)");
}

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& key)
{
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

std::int64_t to_int(const std::string& text, const std::string& key)
{
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& text, const std::string& key)
{
  const std::string t = trim(text);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = t.starts_with('-') ? 0 : std::stoull(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& text, const std::string& key)
{
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") {
    return true;
  }
  if (t == "false" || t == "0" || t == "no") {
    return false;
  }
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    parts.push_back(trim(item));
  }
  return parts;
}

using Setter = std::function<void(RunConfig&, const std::string& value, const std::string& key)>;

const std::map<std::string, std::map<std::string, Setter>>& schema()
{
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"run",
       {
           {"mode", [](RunConfig& c, const std::string& v, const std::string&) { c.mode = parse_run_mode(trim(v)); }},
           {"horizon", [](RunConfig& c, const std::string& v, const std::string& k) { c.horizon = to_double(v, k); }},
           {"samples",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              c.samples = static_cast<int>(to_int(v, k));
            }},
           {"replicas",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              c.replicas = static_cast<int>(to_int(v, k));
            }},
           {"seed", [](RunConfig& c, const std::string& v, const std::string& k) { c.seed = to_uint(v, k); }},
           {"workers",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              c.workers = static_cast<unsigned>(to_uint(v, k));
            }},
           {"output", [](RunConfig& c, const std::string& v, const std::string&) { c.output = trim(v); }},
           {"record_events",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.record_events = to_bool(v, k); }},
           {"method",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              const std::string t = trim(v);
              if (t == "ssa") {
                c.method = Method::ssa;
              } else if (t == "tau_leap") {
                c.method = Method::tau_leap;
              } else {
                throw ConfigError(k + ": unknown method '" + t + "' (ssa|tau_leap)");
              }
            }},
           {"tau", [](RunConfig& c, const std::string& v, const std::string& k) { c.tau = to_double(v, k); }},
       }},
      {"params",
       {
           {"mu", [](RunConfig& c, const std::string& v, const std::string& k) { c.params.mu = to_double(v, k); }},
           {"alpha",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.params.alpha = to_double(v, k); }},
           {"gamma",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.params.gamma = to_double(v, k); }},
           {"rho", [](RunConfig& c, const std::string& v, const std::string& k) { c.params.rho = to_double(v, k); }},
           {"beta",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.params.beta = to_double(v, k); }},
           {"p_over_W",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.params.p_over_W = to_double(v, k); }},
           {"mu_B",
            [](RunConfig& c, const std::string& v, const std::string& k) { c.params.mu_B = to_double(v, k); }},
           {"ell", [](RunConfig& c, const std::string& v, const std::string& k) { c.ell = to_double(v, k); }},
           {"p_out", [](RunConfig& c, const std::string& v, const std::string& k) { c.p_out = to_double(v, k); }},
       }},
      {"scaling",
       {
           {"N", [](RunConfig& c, const std::string& v, const std::string& k) { c.scaling.N = to_int(v, k); }},
           {"H", [](RunConfig& c, const std::string& v, const std::string& k) { c.scaling.H = to_int(v, k); }},
           {"K", [](RunConfig& c, const std::string& v, const std::string& k) { c.scaling.K = to_int(v, k); }},
       }},
      {"ladder",
       {
           {"rungs", [](RunConfig& c, const std::string& v, const std::string&) { c.ladder = parse_ladder(v); }},
           {"regime", [](RunConfig& c, const std::string& v, const std::string&) { c.regime = parse_regime(trim(v)); }},
       }},
      {"initial",
       {
           {"S", [](RunConfig& c, const std::string& v, const std::string&) { c.initial_text[kS] = trim(v); }},
           {"I", [](RunConfig& c, const std::string& v, const std::string&) { c.initial_text[kI] = trim(v); }},
           {"R", [](RunConfig& c, const std::string& v, const std::string&) { c.initial_text[kR] = trim(v); }},
           {"B", [](RunConfig& c, const std::string& v, const std::string&) { c.initial_text[kB] = trim(v); }},
       }},
      {"deterministic",
       {
           {"M", [](RunConfig& c, const std::string& v, const std::string& k) { c.pde_sites = to_int(v, k); }},
           {"coupling",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              const std::string t = trim(v);
              if (t == "coupled") {
                c.coupling = Coupling::coupled;
              } else if (t == "decoupled") {
                c.coupling = Coupling::decoupled;
              } else {
                throw ConfigError(k + ": unknown coupling '" + t + "' (coupled|decoupled)");
              }
            }},
           {"hk_ratio", [](RunConfig& c, const std::string& v, const std::string& k) { c.hk_ratio = to_double(v, k); }},
           {"dt", [](RunConfig& c, const std::string& v, const std::string& k) { c.dt = to_double(v, k); }},
           {"quadrature",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              c.quadrature = static_cast<int>(to_int(v, k));
            }},
       }},
  };
  return table;
}

void require(bool ok, const std::string& message)
{
  if (!ok) {
    throw ConfigError(message);
  }
}

void require_rate(double v, const char* key)
{
  require(v >= 0.0, std::string("[params] ") + key + " = " + std::to_string(v) + " must be >= 0");
}

}  // namespace

std::function<double(double)> parse_preset(const std::string& text, const std::string& key)
{
  static const std::regex form(R"(^\s*([a-z]+)\s*\(([^()]*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, form)) {
    throw ConfigError(key + ": cannot parse preset '" + text + "'");
  }
  const std::string name = m[1];
  const std::vector<std::string> args = split(m[2], ',');
  auto arity = [&](std::size_t n) {
    require(args.size() == n, key + ": " + name + " takes " + std::to_string(n) + " arguments");
  };
  if (name == "constant") {
    arity(1);
    const double c = to_double(args[0], key);
    require(c >= 0.0, key + ": constant must be >= 0");
    return [c](double) { return c; };
  }
  if (name == "fourier") {
    arity(3);
    const std::int64_t mode = to_int(args[0], key);
    const double amp = to_double(args[1], key);
    const double base = to_double(args[2], key);
    require(mode >= 0, key + ": fourier mode must be >= 0");
    require(base >= std::abs(amp), key + ": fourier baseline must be >= |amplitude| to stay nonnegative");
    const double k = 2.0 * std::numbers::pi * static_cast<double>(mode);
    return [k, amp, base](double x) { return base + amp * std::sin(k * x); };
  }
  if (name == "bump") {
    arity(3);
    const double center = to_double(args[0], key);
    const double width = to_double(args[1], key);
    const double height = to_double(args[2], key);
    require(width > 0.0, key + ": bump width must be > 0");
    require(height >= 0.0, key + ": bump height must be >= 0");
    // Periodic image sum; a few images suffice for widths well below 1.
    return [center, width, height](double x) {
      double acc = 0.0;
      for (int img = -3; img <= 3; ++img) {
        const double d = x - center - img;
        acc += std::exp(-d * d / (2.0 * width * width));
      }
      return height * acc;
    };
  }
  throw ConfigError(key + ": unknown preset '" + name + "' (constant|fourier|bump)");
}

std::vector<ScalingParams> parse_ladder(const std::string& text)
{
  std::vector<ScalingParams> ladder;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) {
      continue;
    }
    const auto parts = split(item, ':');
    require(parts.size() == 3, "[ladder] rungs: expected N:H:K, got '" + item + "'");
    ladder.push_back({to_int(parts[0], "[ladder] rungs"), to_int(parts[1], "[ladder] rungs"),
                      to_int(parts[2], "[ladder] rungs")});
  }
  return ladder;
}

void RunConfig::finalize()
{
  require(std::isfinite(horizon) && horizon >= 0.0, "[run] horizon must be finite and >= 0");
  require(samples >= 1, "[run] samples must be >= 1");
  require(horizon == 0.0 || samples >= 2, "[run] samples must be >= 2 for a positive horizon");
  require(replicas >= 1, "[run] replicas must be >= 1");
  require(workers >= 1, "[run] workers must be >= 1");
  require(tau > 0.0, "[run] tau must be > 0");

  require_rate(params.mu, "mu");
  require_rate(params.alpha, "alpha");
  require_rate(params.gamma, "gamma");
  require_rate(params.rho, "rho");
  require_rate(params.beta, "beta");
  require_rate(params.p_over_W, "p_over_W");
  require_rate(params.mu_B, "mu_B");
  require_rate(ell, "ell");
  require(p_out >= 0.0 && p_out <= 1.0,
          "[params] p_out = " + std::to_string(p_out) + " is out of range: a probability must lie in [0, 1]");

  require(scaling.N >= kMinSites, "[scaling] N must be >= 3");
  require(scaling.H >= 1, "[scaling] H must be >= 1");
  require(scaling.K >= 1, "[scaling] K must be >= 1");
  require(pde_sites >= kMinSites, "[deterministic] M must be >= 3");
  require(quadrature >= 1, "[deterministic] quadrature must be >= 1");
  require(!hk_ratio || *hk_ratio >= 0.0, "[deterministic] hk_ratio must be >= 0");
  require(!dt || *dt > 0.0, "[deterministic] dt must be > 0");

  if (!ladder.empty()) {
    try {
      validate_ladder(ladder, regime);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[ladder] rungs: ") + e.what());
    }
  }
  require(mode != RunMode::converge || !ladder.empty(), "[ladder] rungs: converge mode needs a ladder");

  for (int c = 0; c < kCompartments; ++c) {
    parse_preset(initial_text[static_cast<std::size_t>(c)],
                 std::string("[initial] ") + kCompartmentNames[static_cast<std::size_t>(c)]);
  }

  const Eigen::Index base = ladder.empty() ? scaling.N : ladder.front().N;
  params.transport = TransportCoefficients(ell, p_out, base);
}

InitialProfile RunConfig::initial_profile() const
{
  std::array<std::function<double(double)>, kCompartments> f;
  for (int c = 0; c < kCompartments; ++c) {
    f[static_cast<std::size_t>(c)] = parse_preset(initial_text[static_cast<std::size_t>(c)],
                                                  std::string("[initial] ") + kCompartmentNames[static_cast<std::size_t>(c)]);
  }
  return [f](double x) { return Vector4(f[0](x), f[1](x), f[2](x), f[3](x)); };
}

ReactionField RunConfig::reaction_field() const
{
  return {params, hk_ratio.value_or(scaling.hk_ratio()), coupling};
}

nlohmann::json RunConfig::echo() const
{
  nlohmann::json j;
  j["run"] = {{"mode", to_string(mode)},
              {"horizon", horizon},
              {"samples", samples},
              {"replicas", replicas},
              {"seed", seed},
              {"workers", workers},
              {"output", output},
              {"record_events", record_events},
              {"method", method == Method::ssa ? "ssa" : "tau_leap"},
              {"tau", tau}};
  j["params"] = {{"mu", params.mu},       {"alpha", params.alpha},       {"gamma", params.gamma},
                 {"rho", params.rho},     {"beta", params.beta},         {"p_over_W", params.p_over_W},
                 {"mu_B", params.mu_B},   {"ell", ell},                  {"p_out", p_out}};
  j["scaling"] = {{"N", scaling.N}, {"H", scaling.H}, {"K", scaling.K}};
  nlohmann::json rungs = nlohmann::json::array();
  for (const auto& r : ladder) {
    rungs.push_back({{"N", r.N}, {"H", r.H}, {"K", r.K}});
  }
  j["ladder"] = {{"rungs", rungs}, {"regime", to_string(regime)}};
  j["initial"] = {{"S", initial_text[kS]}, {"I", initial_text[kI]}, {"R", initial_text[kR]}, {"B", initial_text[kB]}};
  j["deterministic"] = {{"M", pde_sites},
                        {"coupling", coupling == Coupling::coupled ? "coupled" : "decoupled"},
                        {"hk_ratio", hk_ratio.value_or(scaling.hk_ratio())},
                        {"quadrature", quadrature}};
  if (dt) {
    j["deterministic"]["dt"] = *dt;
  }
  const auto& tc = params.transport;
  j["derived"] = {{"transport_sites", tc.sites()},
                  {"p_in", tc.p_in()},
                  {"bias", tc.bias()},
                  {"velocity", tc.velocity()},
                  {"diffusion", tc.diffusion()}};
  return j;
}

RunConfig parse_config_string(const std::string& text)
{
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  RunConfig cfg;
  const auto& table = schema();
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    const auto sit = table.find(section);
    if (sit == table.end()) {
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : keys) {
      const auto kit = sit->second.find(key);
      const std::string name = "[" + section + "] " + key;
      if (kit == sit->second.end()) {
        throw ConfigError("unknown key " + name);
      }
      kit->second(cfg, node.data(), name);
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

}  // namespace cholera
