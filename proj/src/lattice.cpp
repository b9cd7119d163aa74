#include "cholera/lattice.hpp"

namespace cholera {

namespace {

// Builds the matrix of a linear stencil by applying it to unit vectors.
template <typename Op>
Eigen::MatrixXd matrix_of(Eigen::Index n, Op op)
{
  require_lattice_size(n);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m.col(j) = op(Eigen::VectorXd::Unit(n, j));
  }
  return m;
}

}  // namespace

Eigen::MatrixXd grad_centered_matrix(Eigen::Index n)
{
  return matrix_of(n, [](const Eigen::VectorXd& e) { return grad_centered(e); });
}

Eigen::MatrixXd grad_plus_matrix(Eigen::Index n)
{
  return matrix_of(n, [](const Eigen::VectorXd& e) { return grad_plus(e); });
}

Eigen::MatrixXd grad_minus_matrix(Eigen::Index n)
{
  return matrix_of(n, [](const Eigen::VectorXd& e) { return grad_minus(e); });
}

Eigen::MatrixXd laplace_matrix(Eigen::Index n)
{
  return matrix_of(n, [](const Eigen::VectorXd& e) { return laplace(e); });
}

Eigen::MatrixXd transport_matrix(const TransportCoefficients& tc)
{
  return matrix_of(tc.sites(), [&](const Eigen::VectorXd& e) { return transport_apply(e, tc); });
}

LatticeField project(const std::function<double(double)>& f, Eigen::Index n, int quadrature_points)
{
  require_lattice_size(n);
  if (quadrature_points < 1) {
    throw std::invalid_argument("quadrature_points must be >= 1");
  }
  const double nd = static_cast<double>(n);
  const double q = static_cast<double>(quadrature_points);
  LatticeField out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < quadrature_points; ++k) {
      const double x = (static_cast<double>(i) + (static_cast<double>(k) + 0.5) / q) / nd;
      const double v = f(x);
      if (!std::isfinite(v)) {
        throw std::domain_error("projected function is not finite at x = " + std::to_string(x));
      }
      acc += v;
    }
    out(i) = acc / q;
  }
  return out;
}

LatticeField restrict_to(const LatticeField& fine, Eigen::Index coarse)
{
  require_lattice_size(coarse);
  if (fine.size() % coarse != 0) {
    throw std::invalid_argument("fine lattice size is not a multiple of the coarse size");
  }
  const Eigen::Index ratio = fine.size() / coarse;
  LatticeField out(coarse);
  for (Eigen::Index i = 0; i < coarse; ++i) {
    out(i) = fine.segment(i * ratio, ratio).mean();
  }
  return out;
}

}  // namespace cholera
