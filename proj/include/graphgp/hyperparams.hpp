#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "graphgp/errors.hpp"

namespace graphgp {

/// Kernel hyperparameters. Positive scalars are stored in log space so any
/// double is a valid state and the optimizer can move freely; accessors
/// expose the positive-domain values. Polynomial coefficients are raw.
struct HyperParams {
  static constexpr double kDefaultLogNoise = -2.302585092994046;  // log(0.1)

  double log_sigma1_sq = 0.0;    // base-kernel variance
  double log_lengthscale = 0.0;  // base-kernel lengthscale
  double log_sigma2_sq = 0.0;    // graph-regularizer variance
  Eigen::VectorXd betas;         // softplus-polynomial coefficients, unconstrained
  double log_noise_sq = kDefaultLogNoise;

  // per-regularizer scalars
  double log_alpha = 0.0;       // regularized Laplacian / label propagation / p-step
  double log_sigma_diff = 0.0;  // diffusion scale sigma
  int p_steps = 2;              // p-step random walk exponent, fixed (not optimized)
  double log_nu = 0.4054651081081644;  // log(1.5)
  double log_kappa = 0.0;

  double sigma1_sq() const { return std::exp(log_sigma1_sq); }
  double lengthscale() const { return std::exp(log_lengthscale); }
  double sigma2_sq() const { return std::exp(log_sigma2_sq); }
  double noise_sq() const { return std::exp(log_noise_sq); }
  double alpha() const { return std::exp(log_alpha); }
  double sigma_diff() const { return std::exp(log_sigma_diff); }
  double nu() const { return std::exp(log_nu); }
  double kappa() const { return std::exp(log_kappa); }

  void set_sigma1_sq(double v) { log_sigma1_sq = std::log(v); }
  void set_lengthscale(double v) { log_lengthscale = std::log(v); }
  void set_sigma2_sq(double v) { log_sigma2_sq = std::log(v); }
  void set_noise_sq(double v) { log_noise_sq = std::log(v); }
  void set_alpha(double v) { log_alpha = std::log(v); }
  void set_sigma_diff(double v) { log_sigma_diff = std::log(v); }
  void set_nu(double v) { log_nu = std::log(v); }
  void set_kappa(double v) { log_kappa = std::log(v); }
};

enum class BaseKernel { None, RBF, Matern12 };

enum class GraphRegularizer {
  None,
  RegularizedLaplacian,
  Diffusion,
  PStepRandomWalk,
  Cosine,
  GraphMatern,
  SoftplusPolynomial,
};

enum class KernelMode { FeatureOnly, GraphOnly, Transductive };

/// Declarative kernel description: which base kernel, which spectral
/// regularizer, and how they combine.
struct KernelSpec {
  BaseKernel base = BaseKernel::None;
  GraphRegularizer regularizer = GraphRegularizer::None;
  KernelMode mode = KernelMode::FeatureOnly;
  int poly_degree = 4;  // SoftplusPolynomial only

  static KernelSpec feature_only(BaseKernel base) {
    KernelSpec s;
    s.base = base;
    s.regularizer = GraphRegularizer::None;
    s.mode = KernelMode::FeatureOnly;
    s.validate();
    return s;
  }

  static KernelSpec graph_only(GraphRegularizer reg, int poly_degree = 4) {
    KernelSpec s;
    s.base = BaseKernel::None;
    s.regularizer = reg;
    s.mode = KernelMode::GraphOnly;
    s.poly_degree = poly_degree;
    s.validate();
    return s;
  }

  static KernelSpec transductive(BaseKernel base, GraphRegularizer reg,
                                 int poly_degree = 4) {
    KernelSpec s;
    s.base = base;
    s.regularizer = reg;
    s.mode = KernelMode::Transductive;
    s.poly_degree = poly_degree;
    s.validate();
    return s;
  }

  void validate() const {
    switch (mode) {
      case KernelMode::FeatureOnly:
        if (base == BaseKernel::None)
          throw ParameterError("KernelSpec: feature-only mode requires a base kernel");
        if (regularizer != GraphRegularizer::None)
          throw ParameterError("KernelSpec: feature-only mode forbids a graph regularizer");
        break;
      case KernelMode::GraphOnly:
        if (base != BaseKernel::None)
          throw ParameterError("KernelSpec: graph-only mode forbids a base kernel");
        if (regularizer == GraphRegularizer::None)
          throw ParameterError("KernelSpec: graph-only mode requires a graph regularizer");
        break;
      case KernelMode::Transductive:
        if (base == BaseKernel::None || regularizer == GraphRegularizer::None)
          throw ParameterError(
              "KernelSpec: transductive mode requires both a base kernel and a regularizer");
        break;
    }
    if (poly_degree < 0) {
      throw ParameterError("KernelSpec: polynomial degree must be nonnegative");
    }
  }
};

}  // namespace graphgp
