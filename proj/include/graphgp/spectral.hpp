#pragma once

#include <Eigen/Dense>

#include <string>

#include "graphgp/errors.hpp"

namespace graphgp {

/// Eigendecomposition L = U diag(eigenvalues) U^T with eigenvalues ascending.
struct SpectralDecomposition {
  Eigen::MatrixXd eigenvectors;  // columns are eigenvectors
  Eigen::VectorXd eigenvalues;   // ascending

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// Symmetric eigendecomposition, for normalized-Laplacian spectra.
/// Eigenvalues that exceed [0, 2] by at most `clamp_tol` are treated as
/// round-off and clamped to the bound; larger excursions are left untouched.
inline SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& matrix,
                                                double sym_tol = 1e-10,
                                                double clamp_tol = 1e-8) {
  if (matrix.rows() != matrix.cols()) {
    throw ParameterError("spectral_decompose: matrix must be square");
  }
  if (matrix.rows() > 0) {
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol) {
      throw SymmetryError("spectral_decompose: symmetry violation, max |L - L^T| = " +
                          std::to_string(asym));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("spectral_decompose: eigensolver did not converge", 0.0);
  }
  SpectralDecomposition sd;
  sd.eigenvectors = solver.eigenvectors();
  sd.eigenvalues = solver.eigenvalues();
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    double& lam = sd.eigenvalues(i);
    if (lam < 0.0 && lam >= -clamp_tol) lam = 0.0;
    if (lam > 2.0 && lam <= 2.0 + clamp_tol) lam = 2.0;
  }
  return sd;
}

}  // namespace graphgp
