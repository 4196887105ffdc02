#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "graphgp/dataset.hpp"
#include "graphgp/graph.hpp"
#include "graphgp/hyperparams.hpp"
#include "graphgp/kernels.hpp"
#include "graphgp/spectral.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index m, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = gauss(rng);
  return x;
}

inline graphgp::Graph random_knn_graph(int n, int k, Rng& rng) {
  return graphgp::build_knn_graph(random_points(n, 3, rng), k);
}

/// Symmetric nonnegative adjacency with random weights, edge density p.
inline graphgp::Graph random_weighted_graph(int n, double p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unit(rng) < p) {
        const double w = 0.1 + unit(rng);
        adj(i, j) = w;
        adj(j, i) = w;
      }
    }
  }
  return graphgp::Graph::from_adjacency(adj);
}

/// Random hyperparameters with every positive scalar in e^[-1.5, 1.5];
/// p-step alpha stays clear of its pole at 2.
inline graphgp::HyperParams random_hyperparams(const graphgp::KernelSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> logu(-1.5, 1.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  graphgp::HyperParams hp;
  hp.log_sigma1_sq = logu(rng);
  hp.log_lengthscale = logu(rng);
  hp.log_sigma2_sq = logu(rng);
  hp.log_noise_sq = logu(rng) - 2.0;
  hp.log_alpha = spec.regularizer == graphgp::GraphRegularizer::PStepRandomWalk
                     ? std::log(2.0 + std::exp(logu(rng)))
                     : logu(rng);
  hp.log_sigma_diff = logu(rng);
  hp.p_steps = 1 + static_cast<int>(rng() % 3);
  hp.log_nu = logu(rng);
  hp.log_kappa = logu(rng);
  if (spec.regularizer == graphgp::GraphRegularizer::SoftplusPolynomial) {
    hp.betas.resize(spec.poly_degree + 1);
    for (Eigen::Index i = 0; i < hp.betas.size(); ++i) hp.betas(i) = gauss(rng);
  }
  return hp;
}

inline std::vector<graphgp::KernelSpec> all_kernel_specs(int poly_degree = 4) {
  using graphgp::BaseKernel;
  using graphgp::GraphRegularizer;
  using graphgp::KernelSpec;
  const BaseKernel bases[] = {BaseKernel::RBF, BaseKernel::Matern12};
  const GraphRegularizer regs[] = {
      GraphRegularizer::RegularizedLaplacian, GraphRegularizer::Diffusion,
      GraphRegularizer::PStepRandomWalk,      GraphRegularizer::Cosine,
      GraphRegularizer::GraphMatern,          GraphRegularizer::SoftplusPolynomial};
  std::vector<KernelSpec> specs;
  for (BaseKernel b : bases) specs.push_back(KernelSpec::feature_only(b));
  for (GraphRegularizer r : regs) specs.push_back(KernelSpec::graph_only(r, poly_degree));
  for (BaseKernel b : bases)
    for (GraphRegularizer r : regs)
      specs.push_back(KernelSpec::transductive(b, r, poly_degree));
  return specs;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((m + m.transpose()) / 2.0);
  return es.eigenvalues().minCoeff();
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// ---- independent oracles (deliberately naive routes) ----

/// Direct-inversion route for the combined kernel: (K1^{-1} + R2)^{-1}.
inline Eigen::MatrixXd direct_inverse_kernel(const Eigen::MatrixXd& k1,
                                             const Eigen::MatrixXd& r2) {
  return (k1.inverse() + r2).inverse();
}

/// Dense-inverse log marginal likelihood, summed over channels.
inline double lml_oracle(const Eigen::MatrixXd& k, const Eigen::MatrixXd& y, double noise_sq) {
  const Eigen::Index s = k.rows();
  Eigen::MatrixXd a = k;
  a.diagonal().array() += noise_sq;
  const Eigen::MatrixXd ainv = a.inverse();
  const double logdet = std::log(a.determinant());
  double total = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    total += -0.5 * y.col(j).dot(ainv * y.col(j)) - 0.5 * logdet -
             0.5 * static_cast<double>(s) * std::log(2.0 * M_PI);
  }
  return total;
}

/// Brute-force directed kNN indicator by full sort of distance lists.
inline Eigen::MatrixXd brute_force_knn_indicator(const Eigen::MatrixXd& x, int k) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d.emplace_back((x.row(i) - x.row(j)).norm(), j);
    }
    std::sort(d.begin(), d.end());
    for (int t = 0; t < k; ++t) b(i, d[static_cast<std::size_t>(t)].second) = 1.0;
  }
  return b;
}

}  // namespace testutil
