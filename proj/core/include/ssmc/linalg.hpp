#pragma once

#include <Eigen/Dense>

namespace ssmc {

/// exp(A) for a dense real matrix by scaling and squaring with a Padé
/// approximant. Throws InvalidArgument on non-square or non-finite input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// exp(-i H t) for real symmetric H, through its eigendecomposition.
Eigen::MatrixXcd unitary_propagator(const Eigen::MatrixXd& h, double t);

/// Largest |A - A^T| entry.
double asymmetry(const Eigen::MatrixXd& a);

bool all_finite(const Eigen::MatrixXd& a);

}  // namespace ssmc
