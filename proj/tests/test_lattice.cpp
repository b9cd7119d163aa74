#include "cholera/lattice.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>
#include <random>

using namespace cholera;

namespace {

LatticeField random_field(Eigen::Index n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LatticeField f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f(i) = u(rng);
  }
  return f;
}

}  // namespace

TEST_CASE("wrap and site centers")
{
  CHECK(wrap(-1, 5) == 4);
  CHECK(wrap(5, 5) == 0);
  CHECK(wrap(12, 5) == 2);
  CHECK(site_center(0, 4) == doctest::Approx(0.125));
  CHECK(site_center(3, 4) == doctest::Approx(0.875));
  CHECK_THROWS_AS(require_lattice_size(2), std::invalid_argument);
}

TEST_CASE("stencils annihilate constants exactly")
{
  const LatticeField c = LatticeField::Constant(7, 0.3);
  CHECK(laplace(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad_centered(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad_plus(c).cwiseAbs().maxCoeff() == 0.0);
  const TransportCoefficients tc(2.0, 0.7, 7);
  CHECK(transport_apply(c, tc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix builders agree with matrix-free stencils")
{
  std::mt19937_64 rng(1);
  const Eigen::Index n = 9;
  const LatticeField f = random_field(n, rng);
  CHECK((laplace_matrix(n) * f - laplace(f)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((grad_centered_matrix(n) * f - grad_centered(f)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((grad_plus_matrix(n) * f - grad_plus(f)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((grad_minus_matrix(n) * f - grad_minus(f)).cwiseAbs().maxCoeff() < 1e-12);
  // Laplacian = forward difference of the backward difference.
  CHECK((laplace_matrix(n) - grad_plus_matrix(n) * grad_minus_matrix(n)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("periodic Laplacian spectrum")
{
  for (Eigen::Index n : {3, 4, 8, 13}) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplace_matrix(n));
    std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::vector<double> want;
    const double nd = static_cast<double>(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(m) / nd);
      want.push_back(-4.0 * nd * nd * s * s);
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK(got[static_cast<std::size_t>(k)] == doctest::Approx(want[static_cast<std::size_t>(k)]).epsilon(1e-10));
    }
  }
}

TEST_CASE("transport operator equals the jump generator of one propagule")
{
  std::mt19937_64 rng(2);
  for (double p_out : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    const Eigen::Index n = 11;
    const TransportCoefficients tc(1.7, p_out, n);
    const LatticeField f = random_field(n, rng);
    LatticeField want(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      want(i) = tc.ell() * tc.p_out() * (f(wrap(i - 1, n)) - f(i)) + tc.ell() * tc.p_in() * (f(wrap(i + 1, n)) - f(i));
    }
    CHECK((transport_apply(f, tc) - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transport matrix is a rate matrix")
{
  const TransportCoefficients tc(3.0, 0.85, 10);
  const Eigen::MatrixXd a = transport_matrix(tc);
  CHECK(a.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) {
        CHECK(a(i, j) >= -1e-12);
      }
    }
  }
  // Its Euler propagator with a small step is stochastic, hence a sup-norm contraction.
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(10, 10) + 0.01 * a;
  CHECK(step.cwiseAbs().rowwise().sum().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("transport coefficients and their continuum parameters")
{
  const TransportCoefficients tc(2.0, 0.7, 8);
  CHECK(tc.bias() == doctest::Approx(0.4));
  CHECK(tc.velocity() == doctest::Approx(0.1));
  CHECK(tc.diffusion() == doctest::Approx(2.0 / 128.0));
  CHECK(tc.p_in() == doctest::Approx(0.3));
  CHECK(transition_probability(tc, 3, 4) + transition_probability(tc, 3, 2) == doctest::Approx(1.0));
  CHECK(transition_probability(tc, 7, 0) == doctest::Approx(0.7));
  CHECK(transition_probability(tc, 0, 5) == 0.0);

  const auto fine = tc.at_resolution(32);
  CHECK(fine.velocity() == doctest::Approx(tc.velocity()));
  CHECK(fine.diffusion() == doctest::Approx(tc.diffusion()));

  const auto rt = TransportCoefficients::from_continuum(0.01, 0.05, 64);
  CHECK(rt.diffusion() == doctest::Approx(0.01));
  CHECK(rt.velocity() == doctest::Approx(0.05));
  CHECK_THROWS_AS(TransportCoefficients::from_continuum(0.001, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(TransportCoefficients(1.0, 1.3, 4), std::invalid_argument);
  CHECK_THROWS_AS(TransportCoefficients(-1.0, 0.5, 4), std::invalid_argument);
}

TEST_CASE("stencils are generic over the scalar type")
{
  Field<float> f(4);
  f << 0.f, 1.f, 0.f, -1.f;
  const Field<float> g = grad_centered(f);
  CHECK(g(0) == doctest::Approx(4.0f));
  CHECK(inner(f, f) == doctest::Approx(0.5f));
}

TEST_CASE("projection averages over each site")
{
  const Eigen::Index n = 8;
  // Exact cell averages of sin(2 pi x).
  const LatticeField got = project([](double x) { return std::sin(2.0 * std::numbers::pi * x); }, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / n;
    const double b = static_cast<double>(i + 1) / n;
    const double want = n * (std::cos(2.0 * std::numbers::pi * a) - std::cos(2.0 * std::numbers::pi * b)) /
                        (2.0 * std::numbers::pi);
    CHECK(got(i) == doctest::Approx(want).epsilon(1e-3));
  }
  // Step functions are reproduced exactly.
  const LatticeField step = project([](double x) { return std::floor(x * 4.0); }, 4);
  CHECK(step(2) == 2.0);
  CHECK_THROWS_AS(project([](double) { return std::nan(""); }, 4), std::domain_error);
}

TEST_CASE("restriction is a block average")
{
  LatticeField fine(6);
  fine << 1, 3, 5, 7, 9, 11;
  const LatticeField coarse = restrict_to(fine, 3);
  CHECK(coarse(0) == 2.0);
  CHECK(coarse(2) == 10.0);
  CHECK_THROWS_AS(restrict_to(fine, 4), std::invalid_argument);
}
