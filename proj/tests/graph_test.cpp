#include "dapi/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace dapi;

namespace {

// Brute-force reference: dense Laplacian built entry by entry, eigenvalues
// from Eigen's general (non-symmetric) solver.
Eigen::VectorXd brute_force_eigenvalues(std::size_t n, const std::vector<Edge>& edges) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
    L(i, i) += e.weight;
    L(j, j) += e.weight;
    L(i, j) -= e.weight;
    L(j, i) -= e.weight;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(L, false);
  Eigen::VectorXd v = es.eigenvalues().real();
  std::sort(v.data(), v.data() + v.size());
  return v;
}

void expect_spectrum(const LaplacianSpectrum& s, std::vector<double> expected, double tol = 1e-12) {
  ASSERT_EQ(s.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(s[i], expected[i], tol) << "index " << i;
}

WeightedGraph random_connected(std::mt19937_64& rng, std::size_t n, double extra_prob) {
  std::uniform_real_distribution<double> w(0.1, 2.0), u(0.0, 1.0);
  std::vector<Edge> edges;
  // random spanning tree, then extra edges
  for (std::size_t v = 1; v < n; ++v) edges.push_back({std::uniform_int_distribution<std::size_t>(0, v - 1)(rng), v, w(rng)});
  WeightedGraph g(n, edges);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!g.has_edge(i, j) && u(rng) < extra_prob) edges.push_back({i, j, w(rng)});
  return WeightedGraph(n, edges);
}

}  // namespace

TEST(WeightedGraph, RejectsInvalidEdges) {
  EXPECT_THROW(WeightedGraph(3, {{0, 0, 1.0}}), std::domain_error);
  EXPECT_THROW(WeightedGraph(3, {{0, 3, 1.0}}), std::domain_error);
  EXPECT_THROW(WeightedGraph(3, {{0, 1, 0.0}}), std::domain_error);
  EXPECT_THROW(WeightedGraph(3, {{0, 1, -1.0}}), std::domain_error);
  EXPECT_THROW(WeightedGraph(3, {{0, 1, 1.0}, {1, 0, 2.0}}), std::domain_error);
}

TEST(WeightedGraph, NormalizesAndQueriesEdges) {
  WeightedGraph g(4, {{2, 1, 0.5}, {0, 3, 1.5}});
  EXPECT_EQ(g.edges().front(), (Edge{0, 3, 1.5}));
  EXPECT_EQ(g.weight(1, 2), 0.5);
  EXPECT_FALSE(g.has_edge(0, 1));
  EXPECT_EQ(g.component_count(), 2u);
  EXPECT_FALSE(g.is_connected());
}

TEST(RingQFuzz, FourCycle) { expect_spectrum(spectrum(build_ring_qfuzz(4, 1, 1.0)), {0, 2, 2, 4}); }

TEST(RingQFuzz, RadiusTwoOnFiveNodesIsComplete) {
  const auto g = build_ring_qfuzz(5, 2, 1.0);
  EXPECT_EQ(g.edges().size(), 10u);
  expect_spectrum(spectrum(g), {0, 5, 5, 5, 5});
}

TEST(RingQFuzz, Triangle) { expect_spectrum(spectrum(build_ring(3, 0.05)), {0, 0.15, 0.15}); }

TEST(RingQFuzz, RejectsBadRadius) {
  EXPECT_THROW(build_ring_qfuzz(6, 3, 1.0), std::domain_error);
  EXPECT_THROW(build_ring_qfuzz(6, 0, 1.0), std::domain_error);
}

TEST(Path, SmallSpectra) {
  expect_spectrum(spectrum(build_path(2, 1.0)), {0, 2});
  expect_spectrum(spectrum(build_path(3, 1.0)), {0, 1, 3});
  expect_spectrum(spectrum(build_path(4, 2.0)), {0, 2 * (2 - std::sqrt(2.0)), 4, 2 * (2 + std::sqrt(2.0))});
}

TEST(Torus, ThreeByThree) { expect_spectrum(spectrum(build_torus_2d(3, 3, 1.0)), {0, 3, 3, 3, 3, 6, 6, 6, 6}); }

TEST(Torus, FourByFourLambdaMax) { EXPECT_NEAR(spectrum(build_torus_2d(4, 4, 1.0)).lambda_max(), 8.0, 1e-12); }

TEST(Torus, TransposeHasSameSpectrum) {
  const auto a = spectrum(build_torus_2d(3, 5, 0.7)), b = spectrum(build_torus_2d(5, 3, 0.7));
  EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Complete, Spectra) {
  const auto s = spectrum(build_complete(10, 0.05));
  EXPECT_EQ(s[0], 0.0);
  for (std::size_t i = 1; i < 10; ++i) EXPECT_NEAR(s[i], 0.5, 1e-14);
  expect_spectrum(spectrum(build_complete(2, 1.0)), {0, 2});
  expect_spectrum(spectrum(build_complete(3, 1.0)), {0, 3, 3});
}

TEST(Laplacian, ExplicitEntries) {
  const auto L = laplacian(build_complete(3, 1.0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(L(i, j), i == j ? 2.0 : -1.0);
  Eigen::Matrix2d edge;
  edge << 3, -3, -3, 3;
  EXPECT_EQ(laplacian(WeightedGraph(2, {{0, 1, 3.0}})), Eigen::MatrixXd(edge));
}

TEST(Laplacian, TwoComponentsHaveRankNMinusTwo) {
  WeightedGraph g(5, {{0, 1, 1.0}, {1, 2, 2.0}, {3, 4, 1.0}});
  Eigen::FullPivLU<Eigen::MatrixXd> lu(laplacian(g));
  EXPECT_EQ(lu.rank(), 3);
  const auto s = spectrum(g);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_FALSE(s.connected());
}

TEST(Spectrum, EigenvectorsDiagonalize) {
  const auto g = build_torus_2d(3, 4, 0.3);
  const auto s = spectrum(g, true);
  ASSERT_TRUE(s.eigenvectors.has_value());
  const Eigen::MatrixXd& V = *s.eigenvectors;
  const Eigen::MatrixXd D = V.transpose() * laplacian(g) * V;
  EXPECT_LT((D - Eigen::MatrixXd(s.eigenvalues.asDiagonal())).norm(), 1e-12);
}

TEST(Edits, PathPlusClosingEdgeIsTriangle) {
  const auto path = build_path(3, 1.0);
  const auto tri = add_edge(path, 0, 2, 1.0);
  EXPECT_NEAR(spectrum(path).lambda2(), 1.0, 1e-12);
  EXPECT_NEAR(spectrum(tri).lambda2(), 3.0, 1e-12);
  EXPECT_THROW(add_edge(tri, 0, 2, 1.0), std::domain_error);
}

TEST(Edits, ScaleByOneIsIdentity) {
  const auto g = build_torus_2d(3, 3, 0.4);
  const auto h = scale_edge(g, 0, 1, 1.0);
  EXPECT_EQ(g, h);
  EXPECT_EQ(spectrum(g).eigenvalues, spectrum(h).eigenvalues);
  EXPECT_THROW(scale_edge(g, 0, 4, 2.0), std::domain_error);
}

// One chord of the 4-cycle leaves lambda_2 = 2: the eigenvector (0, 1, 0, -1)
// does not see edge (0, 2). Only the spectrum sum moves. The second chord
// completes K4 and lifts lambda_2 to 4.
TEST(Edits, RingChords) {
  const auto ring = build_ring(4, 1.0);
  const auto one = add_edge(ring, 0, 2, 1.0);
  expect_spectrum(spectrum(one), {0, 2, 4, 4});
  EXPECT_NEAR(spectrum(one).lambda2(), spectrum(ring).lambda2(), 1e-12);
  expect_spectrum(spectrum(add_edge(one, 1, 3, 1.0)), {0, 4, 4, 4});
}

TEST(ClosedForms, MatchNumericalSpectra) {
  for (std::size_t n : {5, 8, 13})
    for (std::size_t q = 1; 2 * q < n; ++q) {
      const auto num = spectrum(build_ring_qfuzz(n, q, 0.3));
      const auto cf = ring_qfuzz_spectrum(n, q, 0.3);
      EXPECT_LT((num.eigenvalues - cf.eigenvalues).cwiseAbs().maxCoeff(), 1e-10) << n << " " << q;
    }
  for (std::size_t n : {2, 7, 16})
    EXPECT_LT((spectrum(build_path(n, 1.3)).eigenvalues - path_spectrum(n, 1.3).eigenvalues).cwiseAbs().maxCoeff(),
              1e-10);
  EXPECT_LT((spectrum(build_torus_2d(4, 6, 0.2)).eigenvalues - torus_2d_spectrum(4, 6, 0.2).eigenvalues)
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  EXPECT_LT((spectrum(build_complete(7, 0.4)).eigenvalues - complete_spectrum(7, 0.4).eigenvalues).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ClosedForms, PathFormula) {
  const auto s = path_spectrum(6, 1.0);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s[i], 2.0 * (1.0 - std::cos(std::numbers::pi * i / 6.0)), 1e-14);
}

TEST(Circulant, DetectsRingsOnly) {
  EXPECT_TRUE(circulant_offsets(build_ring_qfuzz(9, 3, 1.0)).has_value());
  EXPECT_TRUE(circulant_offsets(build_complete(6, 1.0)).has_value());
  EXPECT_FALSE(circulant_offsets(build_path(6, 1.0)).has_value());
  const auto lam = circulant_mode_eigenvalues(build_ring(8, 1.0));
  ASSERT_TRUE(lam.has_value());
  for (int k = 0; k < 8; ++k) EXPECT_NEAR((*lam)(k), 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * k / 8.0)), 1e-12);
}

TEST(EdgeListIO, RoundTrip) {
  const auto g = build_torus_2d(3, 4, 0.125);
  std::stringstream ss;
  write_edge_list(ss, g);
  EXPECT_EQ(read_edge_list(ss), g);
}

TEST(EdgeListIO, ParsesCommentsAndRejectsGarbage) {
  std::istringstream ok("# comment\nn 3\n0 1 0.5\n\n1 2 2 # trailing\n");
  const auto g = read_edge_list(ok);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.weight(1, 2), 2.0);
  std::istringstream no_header("0 1 0.5\n");
  EXPECT_THROW(read_edge_list(no_header), std::domain_error);
  std::istringstream bad("n 3\n0 1\n");
  EXPECT_THROW(read_edge_list(bad), std::domain_error);
}

// Properties over random graphs

TEST(Properties, LaplacianInvariants) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 40; ++t) {
    const auto g = random_connected(rng, 2 + t % 11, 0.3);
    const auto L = laplacian(g);
    EXPECT_LT(L.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((L - L.transpose()).norm(), 0.0 + 1e-15);
    const auto s = spectrum(g);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_GE(s.eigenvalues.minCoeff(), 0.0);
    EXPECT_GT(s.lambda2(), 0.0);
    EXPECT_NEAR(s.eigenvalues.sum(), L.trace(), 1e-10 * L.trace());
    const auto bf = brute_force_eigenvalues(g.size(), g.edges());
    EXPECT_LT((s.eigenvalues - bf).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Properties, InterlacingUnderEdgeAddition) {
  std::mt19937_64 rng(11);
  int tested = 0;
  for (int t = 0; t < 200 && tested < 60; ++t) {
    const std::size_t n = 3 + t % 10;
    const auto g = random_connected(rng, n, 0.2);
    std::vector<std::pair<std::size_t, std::size_t>> absent;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!g.has_edge(i, j)) absent.emplace_back(i, j);
    if (absent.empty()) continue;
    const auto [i, j] = absent[rng() % absent.size()];
    const double w = std::uniform_real_distribution<double>(0.05, 3.0)(rng);
    const auto before = brute_force_eigenvalues(n, g.edges());
    const auto h = add_edge(g, i, j, w);
    const auto after = brute_force_eigenvalues(n, h.edges());
    bool strict = false;
    for (Eigen::Index k = 0; k < before.size(); ++k) {
      EXPECT_LE(before(k), after(k) + 1e-10);
      strict = strict || after(k) > before(k) + 1e-10;
    }
    EXPECT_TRUE(strict);
    // rank-one update: the eigenvalue sum rises by exactly 2w
    EXPECT_NEAR(after.sum() - before.sum(), 2.0 * w, 1e-9);
    ++tested;
  }
  EXPECT_GE(tested, 50);
}

TEST(Properties, WeightScalingScalesSpectrum) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_connected(rng, 4 + t % 8, 0.4);
    const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    const auto a = spectrum(g), b = spectrum(scaled(g, c));
    EXPECT_LT((b.eigenvalues - c * a.eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * c * a.lambda_max());
  }
}
