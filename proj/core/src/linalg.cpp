#include "ssmc/linalg.hpp"

#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

#include "ssmc/common.hpp"

namespace ssmc {

bool all_finite(const Eigen::MatrixXd& a) { return a.allFinite(); }

double asymmetry(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("asymmetry: matrix is not square");
  if (a.size() == 0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("expm: matrix is not square");
  if (!a.allFinite()) throw InvalidArgument("expm: matrix has non-finite entries");
  if (a.size() == 0) return a;
  // Eigen's MatrixExponential is Higham's scaling and squaring with Padé
  // degrees 3..13 chosen from the 1-norm.
  return a.exp();
}

Eigen::MatrixXcd unitary_propagator(const Eigen::MatrixXd& h, double t) {
  if (h.rows() != h.cols()) throw InvalidArgument("unitary_propagator: matrix is not square");
  if (!h.allFinite()) throw InvalidArgument("unitary_propagator: non-finite entries");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (asymmetry(h) > 1e-12 * scale) {
    throw InvalidArgument("unitary_propagator: generator is not Hermitian");
  }
  if (h.size() == 0) return Eigen::MatrixXcd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw Error("unitary_propagator: eigensolver failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  Eigen::VectorXcd phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    phases(k) = std::polar(1.0, -lambda(k) * t);
  }
  const Eigen::MatrixXcd v = eig.eigenvectors().cast<std::complex<double>>();
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace ssmc
