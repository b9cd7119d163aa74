#include "cholera/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cholera {

namespace {

void require_rate(double value, const char* name)
{
  if (!std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument(std::string("rate '") + name + "' must be finite and >= 0, got " +
                                std::to_string(value));
  }
}

}  // namespace

void EpidemicParams::validate() const
{
  require_rate(mu, "mu");
  require_rate(alpha, "alpha");
  require_rate(gamma, "gamma");
  require_rate(rho, "rho");
  require_rate(beta, "beta");
  require_rate(p_over_W, "p_over_W");
  require_rate(mu_B, "mu_B");
  require_rate(transport.ell(), "ell");
  if (!(transport.p_out() >= 0.0 && transport.p_out() <= 1.0)) {
    throw std::invalid_argument("p_out must lie in [0, 1]");
  }
}

void ScalingParams::validate() const
{
  if (N < kMinSites) {
    throw std::invalid_argument("N must be >= 3, got " + std::to_string(N));
  }
  if (H < 1) {
    throw std::invalid_argument("H must be >= 1, got " + std::to_string(H));
  }
  if (K < 1) {
    throw std::invalid_argument("K must be >= 1, got " + std::to_string(K));
  }
}

std::vector<double> uniform_times(double horizon, int count)
{
  if (!std::isfinite(horizon) || horizon < 0.0) {
    throw std::invalid_argument("horizon must be finite and >= 0");
  }
  if (horizon == 0.0) {
    return {0.0};
  }
  if (count < 2) {
    throw std::invalid_argument("a positive horizon needs at least 2 sample times");
  }
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    t[static_cast<std::size_t>(k)] = horizon * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  t.back() = horizon;
  return t;
}

void validate_sample_grid(const std::vector<double>& times, double horizon)
{
  if (times.empty() || times.front() != 0.0) {
    throw std::invalid_argument("sample grid must start at 0");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw std::invalid_argument("sample grid must be strictly increasing");
    }
  }
  if (times.back() > horizon) {
    throw std::invalid_argument("sample grid extends past the horizon");
  }
}

}  // namespace cholera
