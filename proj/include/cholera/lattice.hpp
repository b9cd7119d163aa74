#pragma once

// Periodic 1-D lattice: step-function fields, discrete difference operators,
// the canonical projection and the biased bacterial transport operator.
//
// Sites are 0-based here. Site i covers (i/N, (i+1)/N]; index arithmetic is
// always taken modulo N.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace cholera {

template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using LatticeField = Field<double>;

inline constexpr Eigen::Index kMinSites = 3;

inline void require_lattice_size(Eigen::Index n)
{
  if (n < kMinSites) {
    throw std::invalid_argument("lattice needs at least 3 sites, got " + std::to_string(n));
  }
}

/// Wraps any integer site index onto [0, n).
inline Eigen::Index wrap(Eigen::Index i, Eigen::Index n)
{
  const Eigen::Index r = i % n;
  return r < 0 ? r + n : r;
}

/// Midpoint x-coordinate of site i (0-based) on an n-site lattice.
inline double site_center(Eigen::Index i, Eigen::Index n)
{
  return (static_cast<double>(i) + 0.5) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Transport coefficients

/// Bacterial transport on an oriented cycle. Only (ell, p_out, N) are stored;
/// bias, advection velocity and diffusion are derived on demand.
class TransportCoefficients {
public:
  TransportCoefficients() = default;

  TransportCoefficients(double ell, double p_out, Eigen::Index sites) : ell_(ell), p_out_(p_out), sites_(sites)
  {
    require_lattice_size(sites);
    if (!std::isfinite(ell) || ell < 0.0) {
      throw std::invalid_argument("transport rate ell must be finite and >= 0");
    }
    if (!std::isfinite(p_out) || p_out < 0.0 || p_out > 1.0) {
      throw std::invalid_argument("p_out must lie in [0, 1]");
    }
  }

  /// Coefficients on an n-site lattice realising a given continuum diffusion
  /// and advection velocity (ell = 2 n^2 D, b = v n / ell).
  static TransportCoefficients from_continuum(double diffusion, double velocity, Eigen::Index sites)
  {
    require_lattice_size(sites);
    if (!(diffusion > 0.0)) {
      throw std::invalid_argument("continuum diffusion must be positive");
    }
    const double n = static_cast<double>(sites);
    const double ell = 2.0 * n * n * diffusion;
    const double bias = velocity * n / ell;
    if (std::abs(bias) > 1.0) {
      throw std::invalid_argument("lattice too coarse: |bias| = " + std::to_string(std::abs(bias)) +
                                  " exceeds 1 for the requested advection");
    }
    return {ell, 0.5 * (1.0 + bias), sites};
  }

  /// Same continuum diffusion and velocity on a lattice of another size.
  TransportCoefficients at_resolution(Eigen::Index sites) const
  {
    if (sites == sites_) {
      return *this;
    }
    if (ell_ == 0.0) {
      return {0.0, p_out_, sites};
    }
    return from_continuum(diffusion(), velocity(), sites);
  }

  double ell() const { return ell_; }
  double p_out() const { return p_out_; }
  double p_in() const { return 1.0 - p_out_; }
  double bias() const { return 2.0 * p_out_ - 1.0; }
  Eigen::Index sites() const { return sites_; }

  double velocity() const { return bias() * ell_ / static_cast<double>(sites_); }
  double diffusion() const
  {
    const double n = static_cast<double>(sites_);
    return ell_ / (2.0 * n * n);
  }

private:
  double ell_ = 0.0;
  double p_out_ = 0.5;
  Eigen::Index sites_ = kMinSites;
};

/// Probability that a transported propagule at site i lands on site j.
/// On the cycle every node has one inward and one outward edge.
inline double transition_probability(const TransportCoefficients& tc, Eigen::Index i, Eigen::Index j)
{
  const Eigen::Index n = tc.sites();
  const Eigen::Index from = wrap(i, n);
  const Eigen::Index to = wrap(j, n);
  const double denom = tc.p_out() + tc.p_in();
  if (to == wrap(from + 1, n)) {
    return tc.p_out() / denom;
  }
  if (to == wrap(from - 1, n)) {
    return tc.p_in() / denom;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Matrix-free stencils

template <typename Derived>
Field<typename Derived::Scalar> grad_centered(const Eigen::MatrixBase<Derived>& f)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = f.size();
  require_lattice_size(n);
  const Scalar half_n = Scalar(static_cast<double>(n) / 2.0);
  Field<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = half_n * (f(wrap(i + 1, n)) - f(wrap(i - 1, n)));
  }
  return out;
}

template <typename Derived>
Field<typename Derived::Scalar> grad_plus(const Eigen::MatrixBase<Derived>& f)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = f.size();
  require_lattice_size(n);
  const Scalar sn = Scalar(static_cast<double>(n));
  Field<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = sn * (f(wrap(i + 1, n)) - f(i));
  }
  return out;
}

template <typename Derived>
Field<typename Derived::Scalar> grad_minus(const Eigen::MatrixBase<Derived>& f)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = f.size();
  require_lattice_size(n);
  const Scalar sn = Scalar(static_cast<double>(n));
  Field<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = sn * (f(i) - f(wrap(i - 1, n)));
  }
  return out;
}

template <typename Derived>
Field<typename Derived::Scalar> laplace(const Eigen::MatrixBase<Derived>& f)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = f.size();
  require_lattice_size(n);
  const Scalar n2 = Scalar(static_cast<double>(n) * static_cast<double>(n));
  Field<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = n2 * ((f(wrap(i + 1, n)) - Scalar(2) * f(i)) + f(wrap(i - 1, n)));
  }
  return out;
}

/// A_N f = -nu grad_N f + D lap_N f.
template <typename Derived>
Field<typename Derived::Scalar> transport_apply(const Eigen::MatrixBase<Derived>& f, const TransportCoefficients& tc)
{
  using Scalar = typename Derived::Scalar;
  if (f.size() != tc.sites()) {
    throw std::invalid_argument("transport coefficients built for " + std::to_string(tc.sites()) +
                                " sites applied to a field of size " + std::to_string(f.size()));
  }
  return Scalar(-tc.velocity()) * grad_centered(f) + Scalar(tc.diffusion()) * laplace(f);
}

/// <f, g>_2 on the step-function space: (1/N) sum f_i g_i.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar inner(const Eigen::MatrixBase<DerivedA>& f, const Eigen::MatrixBase<DerivedB>& g)
{
  return f.dot(g) / typename DerivedA::Scalar(static_cast<double>(f.size()));
}

// ---------------------------------------------------------------------------
// Explicit matrices (test path)

Eigen::MatrixXd grad_centered_matrix(Eigen::Index n);
Eigen::MatrixXd grad_plus_matrix(Eigen::Index n);
Eigen::MatrixXd grad_minus_matrix(Eigen::Index n);
Eigen::MatrixXd laplace_matrix(Eigen::Index n);
Eigen::MatrixXd transport_matrix(const TransportCoefficients& tc);

// ---------------------------------------------------------------------------
// Projection onto step functions

inline constexpr int kDefaultQuadraturePoints = 16;

/// f_i = N * integral of f over site i, by the composite midpoint rule with
/// `quadrature_points` nodes per site. Exact for site-wise constant f.
LatticeField project(const std::function<double(double)>& f, Eigen::Index n,
                     int quadrature_points = kDefaultQuadraturePoints);

/// Averages consecutive blocks of a fine field down to `coarse` sites. The
/// fine size must be a multiple of the coarse size.
LatticeField restrict_to(const LatticeField& fine, Eigen::Index coarse);

}  // namespace cholera
