#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "graphgp/errors.hpp"
#include "graphgp/hyperparams.hpp"
#include "graphgp/spectral.hpp"

namespace graphgp {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace detail {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return (m + m.transpose()) / 2.0;
}

/// Solves M X = B by partial-pivot LU, escalating an additive diagonal
/// jitter (1e-8 -> 1e-6 -> 1e-4) only when the solve fails. Failure means a
/// non-finite solution or a componentwise backward error above tolerance.
inline Eigen::MatrixXd solve_lu_with_jitter(const Eigen::MatrixXd& m,
                                            const Eigen::MatrixXd& b,
                                            const std::string& context) {
  static const double ladder[] = {0.0, 1e-8, 1e-6, 1e-4};
  double last_rcond = 0.0;
  for (double jitter : ladder) {
    Eigen::MatrixXd sys = m;
    if (jitter > 0.0) sys.diagonal().array() += jitter;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    last_rcond = lu.rcond();
    Eigen::MatrixXd x = lu.solve(b);
    if (!x.allFinite()) continue;
    // Oettli-Prager componentwise backward error
    const Eigen::MatrixXd residual = (sys * x - b).cwiseAbs();
    const Eigen::MatrixXd scale = sys.cwiseAbs() * x.cwiseAbs() + b.cwiseAbs();
    const double err = (residual.array() / (scale.array() + 1e-300)).maxCoeff();
    if (err <= 1e-8) return x;
  }
  const double cond = last_rcond > 0.0 ? 1.0 / last_rcond
                                       : std::numeric_limits<double>::infinity();
  throw ConditioningError(context + ": linear solve failed after jitter escalation"
                                    " (condition estimate " + std::to_string(cond) + ")",
                          cond);
}

}  // namespace detail

/// Cross-covariance of the feature-space base kernel.
///   RBF:        sigma1^2 exp(-|x - x'|^2 / (2 l^2))
///   Matern-1/2: sigma1^2 exp(-|x - x'| / l)
inline Eigen::MatrixXd base_kernel_matrix(const KernelSpec& spec, const HyperParams& hp,
                                          const Eigen::MatrixXd& xa,
                                          const Eigen::MatrixXd& xb) {
  if (spec.base == BaseKernel::None) {
    throw ParameterError("base_kernel_matrix: kernel spec has no base kernel");
  }
  if (xa.cols() != xb.cols()) {
    throw ParameterError("base_kernel_matrix: feature dimension mismatch");
  }
  const double s1 = hp.sigma1_sq();
  const double ell = hp.lengthscale();
  Eigen::MatrixXd k(xa.rows(), xb.rows());
  for (Eigen::Index i = 0; i < xa.rows(); ++i) {
    for (Eigen::Index j = 0; j < xb.rows(); ++j) {
      const double d2 = (xa.row(i) - xb.row(j)).squaredNorm();
      k(i, j) = spec.base == BaseKernel::RBF
                    ? s1 * std::exp(-d2 / (2.0 * ell * ell))
                    : s1 * std::exp(-std::sqrt(d2) / ell);
    }
  }
  return k;
}

/// Element-wise spectral regularizer r2(lambda) / sigma2^2 on Laplacian
/// eigenvalues. Output is floored at the smallest normal double so it stays
/// strictly positive for any finite parameters.
inline Eigen::VectorXd graph_regularizer_eigen(const KernelSpec& spec, const HyperParams& hp,
                                               const Eigen::VectorXd& eigenvalues) {
  constexpr double kEdgeTol = 1e-8;
  const double s2 = hp.sigma2_sq();
  Eigen::VectorXd out(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double lam = eigenvalues(i);
    if (lam < -kEdgeTol || lam > 2.0 + kEdgeTol) {
      throw ParameterError("graph_regularizer_eigen: eigenvalue " + std::to_string(lam) +
                           " outside [0, 2]");
    }
    lam = std::min(std::max(lam, 0.0), 2.0);
    double r;
    switch (spec.regularizer) {
      case GraphRegularizer::RegularizedLaplacian:
        r = 1.0 + hp.alpha() * lam;
        break;
      case GraphRegularizer::Diffusion: {
        const double sigma = hp.sigma_diff();
        r = std::exp(sigma * sigma / 2.0 * lam);
        break;
      }
      case GraphRegularizer::PStepRandomWalk: {
        const double a = hp.alpha();
        if (a <= 2.0) {
          throw SingularityError(
              "p-step random walk requires alpha > 2 (got " + std::to_string(a) + ")");
        }
        r = std::pow(a - lam, -hp.p_steps);
        break;
      }
      case GraphRegularizer::Cosine:
        r = 1.0 / std::cos(lam * M_PI / 4.0);
        break;
      case GraphRegularizer::GraphMatern: {
        const double nu = hp.nu();
        const double kappa = hp.kappa();
        r = std::pow(2.0 * nu / (kappa * kappa) + lam, nu / 2.0 + 0.25);  // d = 1
        break;
      }
      case GraphRegularizer::SoftplusPolynomial: {
        if (hp.betas.size() != spec.poly_degree + 1) {
          throw ParameterError("graph_regularizer_eigen: expected " +
                               std::to_string(spec.poly_degree + 1) + " beta coefficients, got " +
                               std::to_string(hp.betas.size()));
        }
        double poly = 0.0;
        for (Eigen::Index d = hp.betas.size() - 1; d >= 0; --d) {
          poly = poly * lam + hp.betas(d);
        }
        r = softplus(poly);
        break;
      }
      case GraphRegularizer::None:
      default:
        throw ParameterError("graph_regularizer_eigen: kernel spec has no regularizer");
    }
    r /= s2;
    if (std::isnan(r)) {
      throw InvariantViolation("graph_regularizer_eigen: regularizer produced NaN");
    }
    out(i) = std::max(r, std::numeric_limits<double>::min());
  }
  return out;
}

/// r2(L) = U diag(r2(Lambda)/sigma2^2) U^T, symmetric positive definite.
inline Eigen::MatrixXd graph_regularizer_matrix(const KernelSpec& spec, const HyperParams& hp,
                                                const SpectralDecomposition& sd) {
  const Eigen::VectorXd r = graph_regularizer_eigen(spec, hp, sd.eigenvalues);
  if (!r.allFinite()) {
    throw ConditioningError("graph_regularizer_matrix: non-finite regularizer eigenvalue",
                            std::numeric_limits<double>::infinity());
  }
  const Eigen::MatrixXd m =
      sd.eigenvectors * r.asDiagonal() * sd.eigenvectors.transpose();
  return detail::symmetrized(m);
}

/// Graph-only kernel K = r^{-1}(L): the spectral inverse of the regularizer.
inline Eigen::MatrixXd graph_only_kernel(const KernelSpec& spec, const HyperParams& hp,
                                         const SpectralDecomposition& sd) {
  if (spec.mode != KernelMode::GraphOnly) {
    throw ParameterError("graph_only_kernel: kernel spec mode must be graph-only");
  }
  const Eigen::VectorXd r = graph_regularizer_eigen(spec, hp, sd.eigenvalues);
  const Eigen::VectorXd inv = r.cwiseInverse();  // +inf regularizer -> 0 kernel eigenvalue
  if (!inv.allFinite()) {
    throw ConditioningError("graph_only_kernel: non-finite kernel eigenvalue",
                            std::numeric_limits<double>::infinity());
  }
  const Eigen::MatrixXd k =
      sd.eigenvectors * inv.asDiagonal() * sd.eigenvectors.transpose();
  return detail::symmetrized(k);
}

/// Combined kernel [K1^{-1} + R2]^{-1} evaluated in Woodbury form
///   K = K1 - K1 [I + R2 K1]^{-1} R2 K1
/// which never inverts K1 itself (base-kernel Gram matrices are routinely
/// near-singular while I + R2 K1 is not). K1 must be the base-kernel Gram
/// matrix over all nodes; R2 the regularizer matrix on the same node set.
inline Eigen::MatrixXd transductive_kernel(const KernelSpec& spec, const HyperParams&,
                                           const Eigen::MatrixXd& k1,
                                           const Eigen::MatrixXd& r2) {
  if (spec.mode != KernelMode::Transductive) {
    throw ParameterError("transductive_kernel: kernel spec mode must be transductive");
  }
  if (k1.rows() != k1.cols() || r2.rows() != r2.cols() || k1.rows() != r2.rows()) {
    throw ParameterError("transductive_kernel: K1 and R2 must be square and same size");
  }
  const Eigen::MatrixXd b = r2 * k1;
  Eigen::MatrixXd m = b;
  m.diagonal().array() += 1.0;  // I + R2 K1
  const Eigen::MatrixXd x = detail::solve_lu_with_jitter(m, b, "transductive_kernel");
  const Eigen::MatrixXd k = k1 - k1 * x;
  return detail::symmetrized(k);
}

/// The block K[rows, cols], in the order the index sequences dictate.
inline Eigen::MatrixXd kernel_submatrix(const Eigen::MatrixXd& k,
                                        const std::vector<int>& rows,
                                        const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= k.rows()) {
      throw ParameterError("kernel_submatrix: row index " + std::to_string(rows[i]) +
                           " out of range");
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] < 0 || cols[j] >= k.cols()) {
        throw ParameterError("kernel_submatrix: column index " + std::to_string(cols[j]) +
                             " out of range");
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k(rows[i], cols[j]);
    }
  }
  return out;
}

/// Kernel over all nodes for any mode. The spectral decomposition is
/// required whenever a graph regularizer is involved.
inline Eigen::MatrixXd full_kernel_matrix(const KernelSpec& spec, const HyperParams& hp,
                                          const Eigen::MatrixXd& x,
                                          const SpectralDecomposition* sd) {
  switch (spec.mode) {
    case KernelMode::FeatureOnly:
      return base_kernel_matrix(spec, hp, x, x);
    case KernelMode::GraphOnly:
      if (!sd) throw ParameterError("full_kernel_matrix: graph-only mode needs a decomposition");
      return graph_only_kernel(spec, hp, *sd);
    case KernelMode::Transductive: {
      if (!sd) throw ParameterError("full_kernel_matrix: transductive mode needs a decomposition");
      const Eigen::MatrixXd k1 = base_kernel_matrix(spec, hp, x, x);
      const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, *sd);
      return transductive_kernel(spec, hp, k1, r2);
    }
  }
  throw ParameterError("full_kernel_matrix: unknown kernel mode");
}

/// Label-propagation smoothing (1 - alpha)(I + alpha L)^{-1} Y applied
/// spectrally. y_partial holds the training rows of Y and zeros elsewhere.
inline Eigen::MatrixXd label_propagation(const SpectralDecomposition& sd, double alpha,
                                         const Eigen::MatrixXd& y_partial) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("label_propagation: alpha must lie in (0, 1)");
  }
  if (y_partial.rows() != sd.size()) {
    throw ParameterError("label_propagation: label matrix row count mismatch");
  }
  const Eigen::VectorXd gain =
      ((1.0 - alpha) / (1.0 + alpha * sd.eigenvalues.array())).matrix();
  return sd.eigenvectors *
         (gain.asDiagonal() * (sd.eigenvectors.transpose() * y_partial));
}

}  // namespace graphgp
