#include "dapi/experiments.hpp"
#include "dapi/lyapunov.hpp"
#include "dapi/oracle.hpp"
#include "dapi/verification.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <random>

using namespace dapi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

ClosedLoopStateSpace scalar_system() {
  ClosedLoopStateSpace s;
  s.nodes = 1;
  s.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  s.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  s.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  s.deflated = true;
  return s;
}

}  // namespace

TEST(Lyapunov, ScalarFirstOrder) {
  const auto h = h2_lyapunov(scalar_system());
  EXPECT_NEAR(h.value, 0.5, 1e-15);
}

TEST(Lyapunov, SolverAgainstKronecker) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  for (int t = 0; t < 10; ++t) {
    const int n = 2 + t;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    A -= (rightmost_eigenvalue(A).real() + 0.5) * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = N(rng);
    const Eigen::MatrixXd Q = G * G.transpose();

    const auto sol = solve_lyapunov(A, Q);
    Eigen::MatrixXd K = Eigen::kroneckerProduct(Eigen::MatrixXd::Identity(n, n), A.transpose()).eval() +
                        Eigen::kroneckerProduct(A.transpose(), Eigen::MatrixXd::Identity(n, n)).eval();
    Eigen::VectorXd x = K.fullPivLu().solve(-Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n));
    const Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
    EXPECT_LT((sol.X - X).norm() / X.norm(), 1e-10);
    EXPECT_LT(sol.relative_residual, 1e-12);
  }
}

TEST(Lyapunov, UnstableSystemNamesEigenvalue) {
  auto s = scalar_system();
  s.A(0, 0) = 0.5;
  try {
    h2_lyapunov(s);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);
  }
}

TEST(Lyapunov, RingMatchesClosedForm) {
  const auto g = build_ring(10, 0.1);
  const auto p = reference_params(0.5, 1.0);
  const auto cf = dapi_losses(spectrum(g), p).total;
  EXPECT_LT(rel(h2_lyapunov(assemble_dapi(g, p)).value, cf), 1e-8);
}

TEST(Lyapunov, CapiMatchesFormula) {
  for (const auto& g : {build_ring(6, 0.3), build_path(7, 1.0), build_complete(10, 0.05)})
    for (double eps : {0.0, 1.0, 10.0}) {
      const auto p = reference_params(eps);
      EXPECT_LT(rel(h2_lyapunov(assemble_capi(g, p)).value, capi_losses(g.size(), p).total), 1e-8);
    }
}

TEST(PerMode, SingleEdgeHandSolve) {
  // lambda = 2 at unit parameters, eps = 0: 4/11 from the 3x3 Lyapunov equation by hand
  const auto h = h2_per_mode(spectrum(WeightedGraph(2, {{0, 1, 1.0}})), SystemParams{});
  EXPECT_NEAR(h.value, 4.0 / 11.0, 1e-14);
}

TEST(PerMode, ZeroModeContributesNothing) {
  const ModeSpectrum modes{{0.0, 0.0}};
  EXPECT_EQ(h2_per_mode(ModeSpectrum{{0.0, 0.0}, {1.0, 1.0}}, SystemParams{}).value,
            h2_per_mode(ModeSpectrum{{1.0, 1.0}}, SystemParams{}).value);
  EXPECT_EQ(h2_per_mode(modes, SystemParams{}).value, 0.0);
}

TEST(PerMode, CapiRejected) {
  EXPECT_THROW(h2_per_mode(ModeSpectrum{{1.0, 1.0}}, SystemParams{}, Controller::capi), std::domain_error);
}

TEST(PerMode, MatchesFullLyapunovOnRandomGraphs) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0.2, 2.0);
  for (int t = 0; t < 15; ++t) {
    const std::size_t n = 3 + t % 9;
    std::vector<Edge> edges;
    for (std::size_t v = 1; v < n; ++v) edges.push_back({std::uniform_int_distribution<std::size_t>(0, v - 1)(rng), v, w(rng)});
    const WeightedGraph g(n, edges);
    const SystemParams p{.k = w(rng), .tau = w(rng), .q = w(rng), .alpha = w(rng), .epsilon = w(rng) / 2, .gamma = w(rng)};
    const auto spec = spectrum(g);
    EXPECT_LT(rel(h2_lyapunov(assemble_dapi(g, p)).value, h2_per_mode(spec, p).value), 1e-8);
    EXPECT_LT(rel(h2_lyapunov(assemble_dapi_correlated(g, p)).value,
                  h2_per_mode(spec, p, Controller::dapi_correlated).value),
              1e-8);
  }
}

TEST(OracleTriangle, StandingGridDeterministicRoutes) {
  const auto grid = standing_grid();
  EXPECT_GE(grid.size(), 12u);
  for (const auto& c : grid) {
    const auto row = verify_case(c);
    EXPECT_LT(row.max_rel_err, 1e-8) << c.name;
    EXPECT_FALSE(row.monte_carlo.has_value());
  }
}

TEST(OracleTriangle, CorrelatedAgreesOnGrid) {
  for (const auto& c : standing_grid()) {
    const auto cf = dapi_losses_correlated(spectrum(c.graph), c.params).total;
    EXPECT_LT(rel(h2_lyapunov(assemble_dapi_correlated(c.graph, c.params)).value, cf), 1e-8) << c.name;
  }
}

TEST(Deflation, LosesNothing) {
  for (const auto& g : {build_ring(8, 0.5), build_torus_2d(3, 4, 1.0), build_path(5, 2.0)}) {
    const auto p = reference_params(0.8, 1.5);
    const auto full = assemble_dapi(g, p);
    EXPECT_LT(rel(h2_lyapunov(deflate_marginal_mode(full)).value, h2_per_mode(spectrum(g), p).value), 1e-8);
    EXPECT_EQ(h2_lyapunov(full).value, h2_lyapunov(deflate_marginal_mode(full)).value);
  }
}

TEST(SimConfigResolution, DefaultsAndValidation) {
  const auto s = deflate_marginal_mode(assemble_dapi(build_complete(5, 0.05), reference_params(0.5, 2.0)));
  const auto r = resolve(SimConfig{}, s);
  EXPECT_DOUBLE_EQ(r.dt, 1e-3 * 0.8);
  EXPECT_NEAR(r.t_burn, 50.0 / slowest_decay_rate(s.A), 1e-9);
  EXPECT_DOUBLE_EQ(r.t_avg, 10.0 * r.t_burn);
  EXPECT_EQ(r.n_seeds, 8);
  auto with = [](auto edit) {
    SimConfig c;
    edit(c);
    return c;
  };
  EXPECT_THROW(resolve(with([&](SimConfig& c) { c.t_burn = r.t_burn / 2; }), s), std::domain_error);
  EXPECT_THROW(resolve(with([&](SimConfig& c) { c.t_avg = r.slowest_time_constant; }), s), std::domain_error);
  EXPECT_THROW(resolve(with([](SimConfig& c) { c.n_seeds = 2; }), s), std::domain_error);
  EXPECT_THROW(resolve(with([](SimConfig& c) { c.dt = 0.0; }), s), std::domain_error);
}

TEST(GaussianStream, MomentsAndReproducibility) {
  GaussianStream a(42), b(42), c(43);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  bool differs = false;
  for (int i = 0; i < n; ++i) {
    const double x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    differs = differs || x != z;
    sum += x;
    sq += x * x;
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}
