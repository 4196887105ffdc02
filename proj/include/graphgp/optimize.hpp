#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "graphgp/dataset.hpp"
#include "graphgp/errors.hpp"
#include "graphgp/gp.hpp"
#include "graphgp/kernels.hpp"

namespace graphgp {

/// Flat optimization vector plus the name of each coordinate. Positive
/// scalars travel as logs (names prefixed "log_"); polynomial coefficients
/// travel raw. pack/unpack copy coordinates verbatim, so the round trip is
/// exact.
struct ParamVector {
  Eigen::VectorXd values;
  std::vector<std::string> names;

  Eigen::Index size() const { return values.size(); }

  Eigen::Index position(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<Eigen::Index>(i);
    }
    throw ParameterError("ParamVector: no coordinate named '" + name + "'");
  }
};

inline std::vector<std::string> param_layout(const KernelSpec& spec) {
  std::vector<std::string> names;
  if (spec.base != BaseKernel::None) {
    names.emplace_back("log_sigma1_sq");
    names.emplace_back("log_lengthscale");
  }
  if (spec.regularizer != GraphRegularizer::None) {
    names.emplace_back("log_sigma2_sq");
    switch (spec.regularizer) {
      case GraphRegularizer::RegularizedLaplacian:
      case GraphRegularizer::PStepRandomWalk:
        names.emplace_back("log_alpha");
        break;
      case GraphRegularizer::Diffusion:
        names.emplace_back("log_sigma_diff");
        break;
      case GraphRegularizer::GraphMatern:
        names.emplace_back("log_nu");
        names.emplace_back("log_kappa");
        break;
      case GraphRegularizer::SoftplusPolynomial:
        for (int d = 0; d <= spec.poly_degree; ++d) {
          names.emplace_back("beta_" + std::to_string(d));
        }
        break;
      default:
        break;  // Cosine has no scalars
    }
  }
  names.emplace_back("log_noise_sq");
  return names;
}

inline ParamVector pack(const KernelSpec& spec, const HyperParams& hp) {
  ParamVector pv;
  pv.names = param_layout(spec);
  pv.values.resize(static_cast<Eigen::Index>(pv.names.size()));
  for (std::size_t i = 0; i < pv.names.size(); ++i) {
    const std::string& name = pv.names[i];
    double v;
    if (name == "log_sigma1_sq") v = hp.log_sigma1_sq;
    else if (name == "log_lengthscale") v = hp.log_lengthscale;
    else if (name == "log_sigma2_sq") v = hp.log_sigma2_sq;
    else if (name == "log_noise_sq") v = hp.log_noise_sq;
    else if (name == "log_alpha") v = hp.log_alpha;
    else if (name == "log_sigma_diff") v = hp.log_sigma_diff;
    else if (name == "log_nu") v = hp.log_nu;
    else if (name == "log_kappa") v = hp.log_kappa;
    else if (name.rfind("beta_", 0) == 0) {
      const int d = std::stoi(name.substr(5));
      if (hp.betas.size() != spec.poly_degree + 1) {
        throw ParameterError("pack: betas must have " + std::to_string(spec.poly_degree + 1) +
                             " entries");
      }
      v = hp.betas(d);
    } else {
      throw ParameterError("pack: unknown coordinate '" + name + "'");
    }
    pv.values(static_cast<Eigen::Index>(i)) = v;
  }
  return pv;
}

/// Inverse of pack. Fields not present in the layout (e.g. p_steps) are
/// taken from `proto`.
inline HyperParams unpack(const KernelSpec& spec, const ParamVector& pv,
                          const HyperParams& proto = HyperParams{}) {
  if (pv.values.size() != static_cast<Eigen::Index>(pv.names.size())) {
    throw ParameterError("unpack: values/names size mismatch");
  }
  HyperParams hp = proto;
  if (spec.regularizer == GraphRegularizer::SoftplusPolynomial) {
    hp.betas = Eigen::VectorXd::Zero(spec.poly_degree + 1);
  }
  for (std::size_t i = 0; i < pv.names.size(); ++i) {
    const std::string& name = pv.names[i];
    const double v = pv.values(static_cast<Eigen::Index>(i));
    if (name == "log_sigma1_sq") hp.log_sigma1_sq = v;
    else if (name == "log_lengthscale") hp.log_lengthscale = v;
    else if (name == "log_sigma2_sq") hp.log_sigma2_sq = v;
    else if (name == "log_noise_sq") hp.log_noise_sq = v;
    else if (name == "log_alpha") hp.log_alpha = v;
    else if (name == "log_sigma_diff") hp.log_sigma_diff = v;
    else if (name == "log_nu") hp.log_nu = v;
    else if (name == "log_kappa") hp.log_kappa = v;
    else if (name.rfind("beta_", 0) == 0) hp.betas(std::stoi(name.substr(5))) = v;
    else throw ParameterError("unpack: unknown coordinate '" + name + "'");
  }
  return hp;
}

/// Training-block log marginal likelihood as a function of a ParamVector.
/// The Laplacian eigendecomposition and the pairwise-distance matrix are
/// computed once; per evaluation only r2(lambda), the base Gram map, and
/// one dense solve are redone. The value equals slicing the full kernel
/// built by full_kernel_matrix and scoring it with log_marginal_likelihood.
class MarginalLikelihoodObjective {
public:
  MarginalLikelihoodObjective(const KernelSpec& spec, const Dataset& ds,
                              std::vector<int> train_idx)
      : spec_(spec), train_idx_(std::move(train_idx)) {
    spec_.validate();
    if (train_idx_.empty()) {
      throw ParameterError("objective: empty training set");
    }
    for (int i : train_idx_) {
      if (i < 0 || i >= ds.n()) {
        throw ParameterError("objective: training index out of range");
      }
    }
    const auto s = static_cast<Eigen::Index>(train_idx_.size());

    if (ds.task == Task::Classification) {
      Eigen::VectorXi yt(s);
      const Eigen::VectorXi all = ds.labels_int();
      for (Eigen::Index i = 0; i < s; ++i) yt(i) = all(train_idx_[static_cast<std::size_t>(i)]);
      y_train_ = one_hot(yt, ds.class_count);
    } else {
      y_train_.resize(s, 1);
      for (Eigen::Index i = 0; i < s; ++i) y_train_(i, 0) = ds.y(train_idx_[static_cast<std::size_t>(i)]);
    }

    if (spec_.base != BaseKernel::None) {
      if (spec_.mode == KernelMode::FeatureOnly) {
        x_train_.resize(s, ds.dim());
        for (Eigen::Index i = 0; i < s; ++i) x_train_.row(i) = ds.X.row(train_idx_[static_cast<std::size_t>(i)]);
      } else {
        x_all_ = ds.X;
      }
    }
    if (spec_.regularizer != GraphRegularizer::None) {
      sd_ = spectral_decompose(normalized_laplacian(ds.graph));
      u_train_.resize(s, sd_.size());
      for (Eigen::Index i = 0; i < s; ++i) {
        u_train_.row(i) = sd_.eigenvectors.row(train_idx_[static_cast<std::size_t>(i)]);
      }
    }
  }

  const KernelSpec& spec() const { return spec_; }
  const std::vector<int>& train_indices() const { return train_idx_; }
  const SpectralDecomposition& decomposition() const { return sd_; }

  /// Conditioning and singularity failures come back as -infinity so the
  /// optimizer rejects the step instead of aborting.
  double operator()(const ParamVector& pv) const {
    try {
      const double lml = evaluate(unpack(spec_, pv, proto_));
      return std::isfinite(lml) ? lml : -std::numeric_limits<double>::infinity();
    } catch (const ConditioningError&) {
      return -std::numeric_limits<double>::infinity();
    } catch (const SingularityError&) {
      return -std::numeric_limits<double>::infinity();
    } catch (const InvariantViolation&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  double evaluate(const HyperParams& hp) const {
    return log_marginal_likelihood(train_block(hp), y_train_, hp.noise_sq());
  }

  /// Training block of the full kernel for the given hyperparameters.
  Eigen::MatrixXd train_block(const HyperParams& hp) const {
    switch (spec_.mode) {
      case KernelMode::FeatureOnly:
        return base_kernel_matrix(spec_, hp, x_train_, x_train_);
      case KernelMode::GraphOnly: {
        const Eigen::VectorXd r = graph_regularizer_eigen(spec_, hp, sd_.eigenvalues);
        const Eigen::VectorXd inv = r.cwiseInverse();
        if (!inv.allFinite()) {
          throw ConditioningError("objective: non-finite graph kernel eigenvalue",
                                  std::numeric_limits<double>::infinity());
        }
        return detail::symmetrized(u_train_ * inv.asDiagonal() * u_train_.transpose());
      }
      case KernelMode::Transductive:
        return transductive_train_block(hp);
      default:
        throw ParameterError("objective: unknown kernel mode");
    }
  }

private:
  /// Train block of K = [K1^{-1} + R2]^{-1} via the Woodbury identity
  /// rotated into the Laplacian eigenbasis, where R2 is diagonal:
  ///   U^T K U = G - G [I + D G]^{-1} D G,  G = U^T K1 U, D = r2(Lambda)/s2.
  /// Only |train| right-hand sides are solved, so one LU factorization
  /// dominates the cost. G depends on the lengthscale alone up to the
  /// sigma1^2 factor and is cached across evaluations.
  Eigen::MatrixXd transductive_train_block(const HyperParams& hp) const {
    const Eigen::VectorXd r = graph_regularizer_eigen(spec_, hp, sd_.eigenvalues);
    if (!r.allFinite()) {
      throw ConditioningError("objective: non-finite regularizer eigenvalue",
                              std::numeric_limits<double>::infinity());
    }
    const double ell = hp.lengthscale();
    if (!(cached_ell_ == ell && cached_base_ == spec_.base)) {
      HyperParams unit = hp;
      unit.log_sigma1_sq = 0.0;
      const Eigen::MatrixXd c0 = base_kernel_matrix(spec_, unit, x_all_, x_all_);
      cached_g0_ = sd_.eigenvectors.transpose() * c0 * sd_.eigenvectors;
      cached_ell_ = ell;
      cached_base_ = spec_.base;
    }
    const Eigen::MatrixXd g = hp.sigma1_sq() * cached_g0_;
    Eigen::MatrixXd m = r.asDiagonal() * g;
    m.diagonal().array() += 1.0;  // I + D G
    const Eigen::MatrixXd p = g * u_train_.transpose();              // n x s
    const Eigen::MatrixXd q = r.asDiagonal() * p;                    // D G U_t^T
    const Eigen::MatrixXd z = detail::solve_lu_with_jitter(m, q, "objective");
    const Eigen::MatrixXd k_tt = u_train_ * p - p.transpose() * z;
    return detail::symmetrized(k_tt);
  }

  KernelSpec spec_;
  std::vector<int> train_idx_;
  HyperParams proto_;
  Eigen::MatrixXd y_train_;
  Eigen::MatrixXd x_train_;  // feature-only mode
  Eigen::MatrixXd x_all_;    // transductive mode
  SpectralDecomposition sd_;
  Eigen::MatrixXd u_train_;
  mutable double cached_ell_ = std::numeric_limits<double>::quiet_NaN();
  mutable BaseKernel cached_base_ = BaseKernel::None;
  mutable Eigen::MatrixXd cached_g0_;
};

/// One-shot objective evaluation (tests and diagnostics; optimize() keeps
/// the context alive across evaluations instead).
inline double objective(const ParamVector& pv, const KernelSpec& spec, const Dataset& ds,
                        const std::vector<int>& train_idx) {
  return MarginalLikelihoodObjective(spec, ds, train_idx)(pv);
}

/// Central-difference gradient. A non-finite neighbor evaluation zeroes
/// that coordinate and raises its warning flag.
struct GradientResult {
  Eigen::VectorXd gradient;
  std::vector<char> non_finite;  // per coordinate

  bool any_non_finite() const {
    return std::any_of(non_finite.begin(), non_finite.end(), [](char c) { return c != 0; });
  }
};

template <typename F>
GradientResult numerical_gradient_raw(F&& f, const Eigen::VectorXd& x, double h = 1e-5) {
  GradientResult res;
  res.gradient.resize(x.size());
  res.non_finite.assign(static_cast<std::size_t>(x.size()), 0);
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double fp = f(probe);
    probe(i) = x(i) - h;
    const double fm = f(probe);
    probe(i) = x(i);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      res.gradient(i) = (fp - fm) / (2.0 * h);
    } else {
      res.gradient(i) = 0.0;
      res.non_finite[static_cast<std::size_t>(i)] = 1;
    }
  }
  return res;
}

template <typename F>
GradientResult numerical_gradient(F&& f, const ParamVector& pv, double h = 1e-5) {
  ParamVector probe = pv;
  return numerical_gradient_raw(
      [&](const Eigen::VectorXd& x) {
        probe.values = x;
        return f(probe);
      },
      pv.values, h);
}

struct OptConfig {
  int restarts = 2;
  int max_iters = 200;
  unsigned long seed = 0;
  // step rule: adaptive ascent with per-coordinate RMS scaling
  double init_step = 0.1;
  double grow = 1.2;
  double shrink = 0.5;
  double ema_decay = 0.9;
  double min_step = 1e-10;
  double fd_step = 1e-5;
};

struct OptResult {
  ParamVector best_params;
  double best_lml = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, double>> trace;  // (iteration, objective) per accepted state
  int restarts_run = 0;
};

namespace detail {

struct AscentRun {
  Eigen::VectorXd x;
  double fx = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, double>> trace;
  bool diverged = false;
};

/// Monotone adaptive first-order ascent: per-coordinate RMS step scaling,
/// global step size grown on accepted steps and shrunk on rejections.
/// Rejected steps never move the iterate, so the objective never decreases.
template <typename F>
AscentRun ascend(F&& f, Eigen::VectorXd x0, const OptConfig& cfg) {
  AscentRun run;
  run.x = std::move(x0);
  run.fx = f(run.x);
  run.trace.emplace_back(0, run.fx);
  if (!std::isfinite(run.fx)) {
    run.diverged = true;
    return run;
  }
  Eigen::VectorXd ema = Eigen::VectorXd::Zero(run.x.size());
  double step = cfg.init_step;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const GradientResult g = numerical_gradient_raw(f, run.x, cfg.fd_step);
    ema = cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * g.gradient.cwiseAbs2();
    if (g.gradient.norm() == 0.0) {
      run.trace.emplace_back(iter, run.fx);
      break;
    }
    const Eigen::VectorXd direction =
        (g.gradient.array() / (ema.array().sqrt() + 1e-12)).matrix();
    const Eigen::VectorXd candidate = run.x + step * direction;
    const double fc = f(candidate);
    if (std::isfinite(fc) && fc >= run.fx) {
      run.x = candidate;
      run.fx = fc;
      step *= cfg.grow;
    } else {
      step *= cfg.shrink;
    }
    run.trace.emplace_back(iter, run.fx);
    if (step < cfg.min_step) break;
  }
  return run;
}

inline unsigned long mix_seed(unsigned long seed, int restart) {
  unsigned long h = seed + 0x9e3779b97f4a7c15ULL * static_cast<unsigned long>(restart + 1);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  return h | 1UL;  // keep nonzero so it never collides with the canonical init
}

}  // namespace detail

/// Initial hyperparameters: unit variances, noise 0.1, lengthscale from the
/// median pairwise feature distance, flat softplus polynomial (all betas 0),
/// and unit regularizer scalars (p-step alpha = 2.5 to clear its pole).
/// seed == 0 yields the canonical values; any other seed perturbs the
/// log-space coordinates by uniform +-1 noise.
inline ParamVector default_init(const KernelSpec& spec, const Dataset& ds, unsigned long seed) {
  HyperParams hp;
  hp.log_sigma1_sq = 0.0;
  hp.log_sigma2_sq = 0.0;
  hp.log_noise_sq = HyperParams::kDefaultLogNoise;
  hp.log_alpha = spec.regularizer == GraphRegularizer::PStepRandomWalk ? std::log(2.5) : 0.0;
  hp.log_sigma_diff = 0.5 * std::log(2.0);  // alpha = sigma^2/2 = 1
  hp.log_nu = std::log(1.5);
  hp.log_kappa = 0.0;
  if (spec.regularizer == GraphRegularizer::SoftplusPolynomial) {
    hp.betas = Eigen::VectorXd::Zero(spec.poly_degree + 1);
  }

  if (spec.base != BaseKernel::None) {
    const Eigen::Index n = ds.n();
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        dist.push_back((ds.X.row(i) - ds.X.row(j)).norm());
      }
    }
    double median = 1.0;
    if (!dist.empty()) {
      std::sort(dist.begin(), dist.end());
      const std::size_t mid = dist.size() / 2;
      median = dist.size() % 2 == 1 ? dist[mid] : (dist[mid - 1] + dist[mid]) / 2.0;
    }
    if (!(median > 0.0)) median = 1.0;
    hp.log_lengthscale = std::log(median);
  }

  ParamVector pv = pack(spec, hp);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    for (std::size_t i = 0; i < pv.names.size(); ++i) {
      if (pv.names[i].rfind("log_", 0) == 0) {
        pv.values(static_cast<Eigen::Index>(i)) += noise(rng);
      }
    }
  }
  return pv;
}

/// Maximizes the training log marginal likelihood from `config.restarts`
/// initializations (the first canonical, the rest perturbed). Deterministic
/// given the seed; ties between restarts resolve to the lowest index.
inline OptResult optimize(const KernelSpec& spec, const Dataset& ds,
                          const std::vector<int>& train_idx, const OptConfig& config) {
  if (config.restarts < 1) {
    throw ParameterError("optimize: need at least one restart");
  }
  const MarginalLikelihoodObjective objective_fn(spec, ds, train_idx);
  ParamVector layout = default_init(spec, ds, 0);

  OptResult result;
  result.best_params = layout;
  int best_restart = -1;
  bool any_converged = false;
  for (int r = 0; r < config.restarts; ++r) {
    const ParamVector init =
        r == 0 ? layout : default_init(spec, ds, detail::mix_seed(config.seed, r));
    ParamVector probe = layout;
    auto run = detail::ascend(
        [&](const Eigen::VectorXd& x) {
          probe.values = x;
          return objective_fn(probe);
        },
        init.values, config);
    const int offset = result.trace.empty() ? 0 : result.trace.back().first + 1;
    for (const auto& [it, val] : run.trace) {
      result.trace.emplace_back(offset + it, val);
    }
    ++result.restarts_run;
    if (!run.diverged) {
      any_converged = true;
      if (run.fx > result.best_lml || best_restart < 0) {
        result.best_lml = run.fx;
        result.best_params.values = run.x;
        best_restart = r;
      }
    }
  }
  if (!any_converged) {
    throw OptimizationError("optimize: every restart diverged (objective -inf at init)");
  }
  return result;
}

}  // namespace graphgp
