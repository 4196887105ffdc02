#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "graphgp/graph.hpp"
#include "graphgp/kernels.hpp"
#include "graphgp/spectral.hpp"
#include "helpers.hpp"

using namespace graphgp;

namespace {

SpectralDecomposition decompose_graph(const Graph& g) {
  return spectral_decompose(normalized_laplacian(g));
}

Graph path2() {
  Eigen::MatrixXd adj(2, 2);
  adj << 0, 1, 1, 0;
  return Graph::from_adjacency(adj);
}

}  // namespace

TEST_CASE("base kernel values at zero and known distances", "[kernels]") {
  HyperParams hp;  // sigma1^2 = 1, lengthscale = 1
  const KernelSpec rbf = KernelSpec::feature_only(BaseKernel::RBF);
  const KernelSpec matern = KernelSpec::feature_only(BaseKernel::Matern12);

  Eigen::MatrixXd x(1, 2);
  x << 0.3, -0.7;
  CHECK(base_kernel_matrix(rbf, hp, x, x)(0, 0) == 1.0);
  CHECK(base_kernel_matrix(matern, hp, x, x)(0, 0) == 1.0);

  hp.set_sigma1_sq(2.5);
  CHECK(base_kernel_matrix(rbf, hp, x, x)(0, 0) == 2.5);

  // squared distance 2 with unit scales: exp(-1)
  hp = HyperParams{};
  Eigen::MatrixXd xa(1, 2), xb(1, 2);
  xa << 0, 0;
  xb << 1, 1;
  CHECK(base_kernel_matrix(rbf, hp, xa, xb)(0, 0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(base_kernel_matrix(matern, hp, xa, xb)(0, 0) ==
        Catch::Approx(std::exp(-std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("base kernel rejects dimension mismatch", "[kernels]") {
  HyperParams hp;
  const KernelSpec rbf = KernelSpec::feature_only(BaseKernel::RBF);
  Eigen::MatrixXd xa(2, 2), xb(2, 3);
  xa.setZero();
  xb.setZero();
  CHECK_THROWS_AS(base_kernel_matrix(rbf, hp, xa, xb), ParameterError);
}

TEST_CASE("Matern-1/2 Gram matrix is PSD", "[kernels]") {
  testutil::Rng rng(31);
  const Eigen::MatrixXd x = testutil::random_points(20, 4, rng);
  HyperParams hp;
  const KernelSpec spec = KernelSpec::feature_only(BaseKernel::Matern12);
  const Eigen::MatrixXd k = base_kernel_matrix(spec, hp, x, x);
  CHECK(testutil::min_eigenvalue(k) >= -1e-10);
}

TEST_CASE("regularizer values on pinned points", "[kernels]") {
  const Eigen::VectorXd lams = (Eigen::VectorXd(3) << 0.0, 1.0, 2.0).finished();

  SECTION("softplus polynomial with zero coefficients gives log 2") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::SoftplusPolynomial, 4);
    HyperParams hp;
    hp.betas = Eigen::VectorXd::Zero(5);
    const Eigen::VectorXd r = graph_regularizer_eigen(spec, hp, lams);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      CHECK(r(i) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    }
  }

  SECTION("regularized Laplacian at lambda 0 is 1") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;  // alpha = 1, sigma2^2 = 1
    const Eigen::VectorXd r =
        graph_regularizer_eigen(spec, hp, Eigen::VectorXd::Zero(1));
    CHECK(r(0) == 1.0);
  }

  SECTION("degree-4 polynomial matches scalar oracle") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::SoftplusPolynomial, 4);
    HyperParams hp;
    hp.betas.resize(5);
    hp.betas << 1.0, -2.0, 0.5, 0.0, 0.1;
    const double lam = 1.3;
    // independent scalar route: explicit powers, naive softplus
    double poly = 0.0;
    for (int d = 0; d <= 4; ++d) poly += hp.betas(d) * std::pow(lam, d);
    const double expected = std::log(1.0 + std::exp(poly));
    const Eigen::VectorXd r =
        graph_regularizer_eigen(spec, hp, Eigen::VectorXd::Constant(1, lam));
    CHECK(r(0) == Catch::Approx(expected).margin(1e-12));
  }

  SECTION("p-step random walk requires alpha > 2") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::PStepRandomWalk);
    HyperParams hp;  // alpha = 1
    CHECK_THROWS_AS(graph_regularizer_eigen(spec, hp, lams), SingularityError);
  }

  SECTION("eigenvalues outside [0,2] are rejected") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;
    CHECK_THROWS_AS(graph_regularizer_eigen(spec, hp, Eigen::VectorXd::Constant(1, 2.5)),
                    ParameterError);
  }
}

TEST_CASE("regularizer output is strictly positive", "[kernels]") {
  testutil::Rng rng(37);
  Eigen::VectorXd lams(21);
  for (int i = 0; i <= 20; ++i) lams(i) = 0.1 * i;
  for (const KernelSpec& spec : testutil::all_kernel_specs()) {
    if (spec.regularizer == GraphRegularizer::None) continue;
    for (int draw = 0; draw < 10; ++draw) {
      const HyperParams hp = testutil::random_hyperparams(spec, rng);
      const Eigen::VectorXd r = graph_regularizer_eigen(spec, hp, lams);
      CHECK((r.array() > 0.0).all());
    }
  }
}

TEST_CASE("regularizer matrix on fixtures", "[kernels]") {
  SECTION("zero Laplacian gives the identity") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;
    const SpectralDecomposition sd = spectral_decompose(Eigen::MatrixXd::Zero(3, 3));
    const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
    CHECK(testutil::max_abs_diff(r2, Eigen::MatrixXd::Identity(3, 3)) < 1e-14);
  }

  SECTION("single edge: eigenvalues 1 and 3") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;
    const SpectralDecomposition sd = decompose_graph(path2());
    const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r2);
    CHECK(es.eigenvalues()(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(es.eigenvalues()(1) == Catch::Approx(3.0).margin(1e-12));
  }

  SECTION("commutes with the Laplacian") {
    testutil::Rng rng(41);
    const Graph g = testutil::random_weighted_graph(8, 0.4, rng);
    const Eigen::MatrixXd lap = normalized_laplacian(g);
    const SpectralDecomposition sd = spectral_decompose(lap);
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::SoftplusPolynomial, 3);
    HyperParams hp = testutil::random_hyperparams(spec, rng);
    const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
    CHECK(testutil::max_abs_diff(r2 * lap, lap * r2) < 1e-8);
  }
}

TEST_CASE("graph-only kernel fixtures", "[kernels]") {
  SECTION("single edge regularized Laplacian inverts (I+L)") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;
    const Eigen::MatrixXd k = graph_only_kernel(spec, hp, decompose_graph(path2()));
    Eigen::MatrixXd expected(2, 2);  // oracle: direct 2x2 inverse of I + L
    expected << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
    CHECK(testutil::max_abs_diff(k, expected) < 1e-12);
  }

  SECTION("diffusion with sigma = 0 is the identity") {
    const KernelSpec spec = KernelSpec::graph_only(GraphRegularizer::Diffusion);
    HyperParams hp;
    hp.log_sigma_diff = -std::numeric_limits<double>::infinity();  // sigma = 0
    testutil::Rng rng(43);
    const SpectralDecomposition sd = decompose_graph(testutil::random_knn_graph(10, 3, rng));
    const Eigen::MatrixXd k = graph_only_kernel(spec, hp, sd);
    CHECK(testutil::max_abs_diff(k, Eigen::MatrixXd::Identity(10, 10)) < 1e-10);
  }

  SECTION("kernel and regularizer are mutual inverses") {
    testutil::Rng rng(47);
    const SpectralDecomposition sd = decompose_graph(testutil::random_knn_graph(10, 3, rng));
    for (const KernelSpec& spec : testutil::all_kernel_specs()) {
      if (spec.mode != KernelMode::GraphOnly) continue;
      const HyperParams hp = testutil::random_hyperparams(spec, rng);
      const Eigen::MatrixXd k = graph_only_kernel(spec, hp, sd);
      const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
      CHECK(testutil::max_abs_diff(k * r2, Eigen::MatrixXd::Identity(10, 10)) < 1e-8);
    }
  }

  SECTION("mode gating") {
    const KernelSpec spec = KernelSpec::transductive(BaseKernel::RBF,
                                                     GraphRegularizer::RegularizedLaplacian);
    HyperParams hp;
    testutil::Rng rng(53);
    const SpectralDecomposition sd = decompose_graph(testutil::random_knn_graph(6, 2, rng));
    CHECK_THROWS_AS(graph_only_kernel(spec, hp, sd), ParameterError);
  }
}

TEST_CASE("transductive kernel fixtures", "[kernels]") {
  const KernelSpec spec =
      KernelSpec::transductive(BaseKernel::RBF, GraphRegularizer::RegularizedLaplacian);

  SECTION("scalar case: K1 = 1, R2 = 1 gives 1/2") {
    HyperParams hp;
    Eigen::MatrixXd k1(1, 1), r2(1, 1);
    k1 << 1.0;
    r2 << 1.0;
    const Eigen::MatrixXd k = transductive_kernel(spec, hp, k1, r2);
    CHECK(k(0, 0) == Catch::Approx(0.5).margin(1e-14));
  }

  SECTION("vanishing regularizer recovers K1") {
    testutil::Rng rng(59);
    const Graph g = testutil::random_knn_graph(12, 3, rng);
    const SpectralDecomposition sd = decompose_graph(g);
    const Eigen::MatrixXd x = testutil::random_points(12, 3, rng);
    HyperParams hp;
    hp.set_sigma2_sq(1e12);
    const Eigen::MatrixXd k1 = base_kernel_matrix(spec, hp, x, x);
    const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
    const Eigen::MatrixXd k = transductive_kernel(spec, hp, k1, r2);
    CHECK(testutil::max_abs_diff(k, k1) / k1.cwiseAbs().maxCoeff() < 1e-6);
  }

  SECTION("matches the direct-inverse oracle on a small instance") {
    testutil::Rng rng(61);
    const Graph g = testutil::random_knn_graph(5, 2, rng);
    const SpectralDecomposition sd = decompose_graph(g);
    const Eigen::MatrixXd x = testutil::random_points(5, 3, rng);
    HyperParams hp = testutil::random_hyperparams(spec, rng);
    Eigen::MatrixXd k1 = base_kernel_matrix(spec, hp, x, x);
    k1.diagonal().array() += 1e-4;  // keep the oracle's K1 inverse well-posed
    const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
    const Eigen::MatrixXd k = transductive_kernel(spec, hp, k1, r2);
    const Eigen::MatrixXd oracle = testutil::direct_inverse_kernel(k1, r2);
    CHECK(testutil::max_abs_diff(k, oracle) < 1e-8);
  }

  SECTION("the Woodbury correction never exceeds K1 in the PSD order") {
    testutil::Rng rng(67);
    for (int trial = 0; trial < 5; ++trial) {
      const Graph g = testutil::random_knn_graph(10, 3, rng);
      const SpectralDecomposition sd = decompose_graph(g);
      const Eigen::MatrixXd x = testutil::random_points(10, 3, rng);
      const HyperParams hp = testutil::random_hyperparams(spec, rng);
      const Eigen::MatrixXd k1 = base_kernel_matrix(spec, hp, x, x);
      const Eigen::MatrixXd r2 = graph_regularizer_matrix(spec, hp, sd);
      const Eigen::MatrixXd k = transductive_kernel(spec, hp, k1, r2);
      CHECK(testutil::min_eigenvalue(k1 - k) >= -1e-8);
      CHECK(testutil::min_eigenvalue(k) >= -1e-8);
    }
  }
}

TEST_CASE("kernel submatrix extraction", "[kernels]") {
  testutil::Rng rng(71);
  const Eigen::MatrixXd k = testutil::random_points(6, 6, rng);

  SECTION("full index set returns the matrix itself") {
    std::vector<int> all(6);
    std::iota(all.begin(), all.end(), 0);
    CHECK(testutil::max_abs_diff(kernel_submatrix(k, all, all), k) == 0.0);
  }

  SECTION("singleton") {
    const Eigen::MatrixXd sub = kernel_submatrix(k, {0}, {0});
    CHECK(sub.rows() == 1);
    CHECK(sub(0, 0) == k(0, 0));
  }

  SECTION("disjoint blocks reassemble to a permutation of K") {
    const std::vector<int> a = {4, 1, 5};
    const std::vector<int> b = {0, 2, 3};
    std::vector<int> order = a;
    order.insert(order.end(), b.begin(), b.end());
    Eigen::MatrixXd assembled(6, 6);
    assembled.topLeftCorner(3, 3) = kernel_submatrix(k, a, a);
    assembled.topRightCorner(3, 3) = kernel_submatrix(k, a, b);
    assembled.bottomLeftCorner(3, 3) = kernel_submatrix(k, b, a);
    assembled.bottomRightCorner(3, 3) = kernel_submatrix(k, b, b);
    CHECK(testutil::max_abs_diff(assembled, kernel_submatrix(k, order, order)) == 0.0);
  }

  SECTION("out-of-range index is rejected") {
    CHECK_THROWS_AS(kernel_submatrix(k, {6}, {0}), ParameterError);
    CHECK_THROWS_AS(kernel_submatrix(k, {0}, {-1}), ParameterError);
  }
}

TEST_CASE("label propagation", "[kernels]") {
  SECTION("alpha near 0 reproduces the input labels") {
    testutil::Rng rng(73);
    const SpectralDecomposition sd =
        spectral_decompose(normalized_laplacian(testutil::random_knn_graph(8, 2, rng)));
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(8, 2);
    y(1, 0) = 1.0;
    y(4, 1) = 1.0;
    const Eigen::MatrixXd scores = label_propagation(sd, 1e-9, y);
    CHECK(testutil::max_abs_diff(scores, y) < 1e-7);
  }

  SECTION("single labelled node wins everywhere on a single edge") {
    const SpectralDecomposition sd = decompose_graph(path2());
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 2);
    y(0, 0) = 1.0;  // node 0 labelled class 0
    const Eigen::MatrixXd scores = label_propagation(sd, 0.5, y);
    CHECK(scores(0, 0) > scores(0, 1));
    CHECK(scores(1, 0) > scores(1, 1));
  }

  SECTION("triangle with two labels matches the direct linear solve") {
    Eigen::MatrixXd adj(3, 3);
    adj << 0, 1, 1, 1, 0, 1, 1, 1, 0;
    const Graph tri = Graph::from_adjacency(adj);
    const Eigen::MatrixXd lap = normalized_laplacian(tri);
    const SpectralDecomposition sd = spectral_decompose(lap);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(3, 2);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    const double alpha = 0.7;
    const Eigen::MatrixXd scores = label_propagation(sd, alpha, y);
    // oracle: dense inverse of (I + alpha L)
    const Eigen::MatrixXd direct =
        (1.0 - alpha) *
        ((Eigen::MatrixXd::Identity(3, 3) + alpha * lap).inverse() * y);
    CHECK(testutil::max_abs_diff(scores, direct) < 1e-10);
  }

  SECTION("alpha outside (0,1) is rejected") {
    const SpectralDecomposition sd = decompose_graph(path2());
    const Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(label_propagation(sd, 0.0, y), ParameterError);
    CHECK_THROWS_AS(label_propagation(sd, 1.0, y), ParameterError);
  }
}

TEST_CASE("kernels are invariant under node relabeling", "[kernels]") {
  testutil::Rng rng(79);
  const int n = 9;
  const Eigen::MatrixXd x = testutil::random_points(n, 3, rng);
  const Graph g = build_knn_graph(x, 3);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  Eigen::MatrixXd xp(n, 3);
  Eigen::MatrixXd adjp(n, n);
  for (int i = 0; i < n; ++i) {
    xp.row(perm[static_cast<std::size_t>(i)]) = x.row(i);
    for (int j = 0; j < n; ++j) {
      adjp(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) =
          g.adjacency(i, j);
    }
  }
  const Graph gp = Graph::from_adjacency(adjp);

  const KernelSpec spec =
      KernelSpec::transductive(BaseKernel::Matern12, GraphRegularizer::SoftplusPolynomial, 3);
  const HyperParams hp = testutil::random_hyperparams(spec, rng);

  const SpectralDecomposition sd = decompose_graph(g);
  const SpectralDecomposition sdp = decompose_graph(gp);
  const Eigen::MatrixXd k = transductive_kernel(
      spec, hp, base_kernel_matrix(spec, hp, x, x), graph_regularizer_matrix(spec, hp, sd));
  const Eigen::MatrixXd kp = transductive_kernel(
      spec, hp, base_kernel_matrix(spec, hp, xp, xp), graph_regularizer_matrix(spec, hp, sdp));

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      worst = std::max(worst,
                       std::abs(k(i, j) - kp(perm[static_cast<std::size_t>(i)],
                                              perm[static_cast<std::size_t>(j)])));
    }
  }
  CHECK(worst < 1e-8);
}
