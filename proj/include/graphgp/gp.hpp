#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "graphgp/errors.hpp"
#include "graphgp/kernels.hpp"

namespace graphgp {

/// Posterior of a multi-output regression GP sharing one kernel across
/// output channels: per-channel means, channel-independent variances, and
/// the training log marginal likelihood.
struct GPPosterior {
  Eigen::MatrixXd mean;      // t x c
  Eigen::VectorXd variance;  // length t
  double lml = 0.0;
};

namespace detail {

/// Cholesky of K + noise I, escalating additive jitter on failure.
inline Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(const Eigen::MatrixXd& k,
                                                   double noise_sq,
                                                   const std::string& context) {
  static const double ladder[] = {0.0, 1e-8, 1e-6, 1e-4};
  for (double jitter : ladder) {
    Eigen::MatrixXd sys = k;
    sys.diagonal().array() += noise_sq + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(sys);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw ConditioningError(context + ": Cholesky factorization failed after jitter escalation",
                          std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Training log marginal likelihood, summed over output channels:
///   sum_j [ -1/2 y_j^T (K + s_n^2 I)^{-1} y_j - 1/2 log det(K + s_n^2 I) - s/2 log 2pi ]
inline double log_marginal_likelihood(const Eigen::MatrixXd& k_train,
                                      const Eigen::MatrixXd& y, double noise_sq) {
  const Eigen::Index s = k_train.rows();
  if (s == 0 || k_train.cols() != s) {
    throw ParameterError("log_marginal_likelihood: kernel block must be square and nonempty");
  }
  if (y.rows() != s) {
    throw ParameterError("log_marginal_likelihood: label rows do not match kernel size");
  }
  const auto llt = detail::llt_with_jitter(k_train, noise_sq, "log_marginal_likelihood");
  double half_log_det = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    half_log_det += std::log(llt.matrixLLT()(i, i));
  }
  const double norm_const = 0.5 * static_cast<double>(s) * std::log(2.0 * M_PI);
  const Eigen::MatrixXd alpha = llt.solve(y);
  double lml = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    lml += -0.5 * y.col(j).dot(alpha.col(j)) - half_log_det - norm_const;
  }
  return lml;
}

/// Zero-mean GP posterior at the test nodes from a kernel over all nodes.
///   mean = K_ts (K_tt + s_n^2 I)^{-1} Y,  var_i = K_ss(i,i) - k_i^T (K_tt + s_n^2 I)^{-1} k_i
inline GPPosterior posterior(const Eigen::MatrixXd& k_full, const std::vector<int>& train_idx,
                             const std::vector<int>& test_idx, const Eigen::MatrixXd& y_train,
                             double noise_sq) {
  if (train_idx.empty()) {
    throw ParameterError("posterior: training set is empty");
  }
  if (y_train.rows() != static_cast<Eigen::Index>(train_idx.size())) {
    throw ParameterError("posterior: label rows do not match training set size");
  }
  for (int t : test_idx) {
    for (int tr : train_idx) {
      if (t == tr) {
        throw ParameterError("posterior: train and test index sets overlap at " +
                             std::to_string(t));
      }
    }
  }
  const Eigen::MatrixXd k_tt = kernel_submatrix(k_full, train_idx, train_idx);
  const Eigen::MatrixXd k_st = kernel_submatrix(k_full, test_idx, train_idx);
  const auto llt = detail::llt_with_jitter(k_tt, noise_sq, "posterior");

  GPPosterior post;
  post.mean = k_st * llt.solve(y_train);
  const Eigen::MatrixXd w = llt.solve(k_st.transpose());  // s x t
  post.variance.resize(static_cast<Eigen::Index>(test_idx.size()));
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double var = k_full(test_idx[i], test_idx[i]) - k_st.row(ii).dot(w.col(ii));
    if (var < -1e-8) {
      throw InvariantViolation("posterior: variance " + std::to_string(var) +
                               " below tolerance at test point " + std::to_string(test_idx[i]));
    }
    post.variance(ii) = std::max(var, 0.0);
  }
  post.lml = log_marginal_likelihood(k_tt, y_train, noise_sq);
  return post;
}

/// Per-row argmax over output channels; ties break toward the lowest index.
inline Eigen::VectorXi classify(const Eigen::MatrixXd& scores) {
  if (scores.cols() < 2) {
    throw ParameterError("classify: need at least two output channels");
  }
  Eigen::VectorXi labels(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = static_cast<int>(j);
    }
    labels(i) = best;
  }
  return labels;
}

/// One-hot target encoding for multi-output regression.
inline Eigen::MatrixXd one_hot(const Eigen::VectorXi& y, int class_count) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(y.size(), class_count);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0 || y(i) >= class_count) {
      throw ParameterError("one_hot: label " + std::to_string(y(i)) + " outside [0, " +
                           std::to_string(class_count) + ")");
    }
    out(i, y(i)) = 1.0;
  }
  return out;
}

}  // namespace graphgp
