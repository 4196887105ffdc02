#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "graphgp/errors.hpp"

namespace graphgp {

/// Undirected weighted graph held as a dense symmetric adjacency matrix.
/// Dense is deliberate: everything downstream is O(n^3) spectral algebra,
/// so sparsity buys nothing at the scales this library targets.
struct Graph {
  Eigen::Index n = 0;
  Eigen::MatrixXd adjacency;  // n x n, symmetric, nonnegative
  Eigen::VectorXd degrees;    // row sums of adjacency

  /// Validates symmetry and nonnegativity, computes degrees.
  static Graph from_adjacency(const Eigen::MatrixXd& a, double sym_tol = 1e-12) {
    if (a.rows() != a.cols()) {
      throw ParameterError("adjacency matrix must be square");
    }
    if ((a.array() < 0.0).any()) {
      throw ParameterError("adjacency entries must be nonnegative");
    }
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (a.rows() > 0 && asym > sym_tol) {
      throw SymmetryError("adjacency matrix is not symmetric (max |A - A^T| = " +
                          std::to_string(asym) + ")");
    }
    Graph g;
    g.n = a.rows();
    g.adjacency = (a + a.transpose()) / 2.0;  // kill round-off asymmetry
    g.degrees = g.adjacency.rowwise().sum();
    return g;
  }

  bool has_edges() const {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (adjacency(i, j) > 0.0) return true;
    return false;
  }
};

/// (A + A^T)/2; used on directed inputs so eigenvalues stay real.
inline Eigen::MatrixXd symmetrize_adjacency(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw ParameterError("symmetrize_adjacency: matrix must be square");
  }
  if ((a.array() < 0.0).any()) {
    throw ParameterError("symmetrize_adjacency: entries must be nonnegative");
  }
  return (a + a.transpose()) / 2.0;
}

/// Normalized graph Laplacian D^{-1/2} (D - A) D^{-1/2}.
/// Isolated nodes use the convention d^{-1/2} := 0, which zeroes their
/// row and column and keeps the result total and PSD.
inline Eigen::MatrixXd normalized_laplacian(const Graph& g) {
  Eigen::VectorXd dinv_sqrt(g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) {
    dinv_sqrt(i) = g.degrees(i) > 0.0 ? 1.0 / std::sqrt(g.degrees(i)) : 0.0;
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.n, g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) {
    for (Eigen::Index j = 0; j < g.n; ++j) {
      if (i == j) {
        lap(i, i) = g.degrees(i) > 0.0 ? 1.0 - g.adjacency(i, i) * dinv_sqrt(i) * dinv_sqrt(i)
                                       : 0.0;
      } else {
        lap(i, j) = -g.adjacency(i, j) * dinv_sqrt(i) * dinv_sqrt(j);
      }
    }
  }
  lap = ((lap + lap.transpose()) / 2.0).eval();
  return lap;
}

/// k-nearest-neighbour graph on Euclidean distances, union-symmetrized:
/// edge (i,j) exists iff j is among the k nearest of i or vice versa.
/// Unweighted, no self-loops, distance ties broken toward the lower index.
inline Graph build_knn_graph(const Eigen::MatrixXd& x, int k) {
  const Eigen::Index n = x.rows();
  if (k <= 0) {
    throw ParameterError("build_knn_graph: k must be positive");
  }
  if (k >= n) {
    throw ParameterError("build_knn_graph: k must be smaller than the number of points");
  }
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dist.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int m = 0; m < k; ++m) {
      const Eigen::Index j = dist[static_cast<std::size_t>(m)].second;
      adj(i, j) = 1.0;
      adj(j, i) = 1.0;
    }
  }
  return Graph::from_adjacency(adj);
}

/// Fraction of (unordered, positively-weighted) edges whose endpoints share a label.
inline double homophily_ratio(const Graph& g, const Eigen::VectorXi& labels) {
  if (labels.size() != g.n) {
    throw ParameterError("homophily_ratio: label count does not match node count");
  }
  long edges = 0;
  long same = 0;
  for (Eigen::Index i = 0; i < g.n; ++i) {
    for (Eigen::Index j = i + 1; j < g.n; ++j) {
      if (g.adjacency(i, j) > 0.0) {
        ++edges;
        if (labels(i) == labels(j)) ++same;
      }
    }
  }
  if (edges == 0) {
    throw ParameterError("homophily_ratio: graph has no edges");
  }
  return static_cast<double>(same) / static_cast<double>(edges);
}

/// Breadth-first connectivity over positive-weight edges.
inline bool is_connected(const Graph& g) {
  if (g.n == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
  std::vector<Eigen::Index> queue;
  queue.push_back(0);
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Eigen::Index u = queue[head];
    for (Eigen::Index v = 0; v < g.n; ++v) {
      if (!seen[static_cast<std::size_t>(v)] && g.adjacency(u, v) > 0.0) {
        seen[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return queue.size() == static_cast<std::size_t>(g.n);
}

}  // namespace graphgp
