#include "dapi/experiments.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dapi;

namespace {

void expect_all_passed(const std::vector<Check>& checks) {
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

std::string csv(const Table& t) {
  std::ostringstream ss;
  write_csv(ss, t);
  return ss.str();
}

}  // namespace

TEST(Fig2, DefaultsMatchCaption) {
  const Fig2Config cfg;
  EXPECT_EQ(cfg.n, 10u);
  EXPECT_EQ(cfg.weight, 0.05);
  EXPECT_EQ(cfg.params.k, 5.0);
  EXPECT_EQ(cfg.params.tau, 0.8);
  EXPECT_EQ(cfg.params.q, 0.8);
  EXPECT_EQ(cfg.params.alpha, 1.0);
  EXPECT_EQ(cfg.params.epsilon, 1.0);
}

TEST(Fig2, TableAndMarkers) {
  const auto r = run_fig2({});
  expect_all_passed(r.checks);
  EXPECT_EQ(r.table.rows.size(), 202u);
  EXPECT_EQ(r.table.header,
            (std::vector<std::string>{"gamma", "p_part", "eta_part", "total_with_noise", "total_without_noise", "capi",
                                      "marker"}));
  int markers = 0;
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    EXPECT_EQ(r.table.number(i, "capi"), 0.9);
    if (i) {
      EXPECT_GE(r.table.number(i, "gamma"), r.table.number(i - 1, "gamma"));
    }
    const auto& m = r.table.rows[i].back();
    if (m == "gamma_star") {
      EXPECT_NEAR(r.table.number(i, "gamma"), 0.83, 0.05);
      ++markers;
    }
    if (m == "gamma_star_eta") {
      EXPECT_NEAR(r.table.number(i, "gamma"), 5.6, 0.3);
      ++markers;
    }
  }
  EXPECT_EQ(markers, 2);
  EXPECT_NEAR(r.table.number(0, "gamma"), 0.05, 1e-12);
  EXPECT_NEAR(r.table.number(r.table.rows.size() - 1, "gamma"), 100.0, 1e-9);
}

TEST(Fig2, Deterministic) { EXPECT_EQ(csv(run_fig2({}).table), csv(run_fig2({}).table)); }

TEST(Fig3, CapiColumnAndGrowth) {
  const auto r = run_fig3({});
  expect_all_passed(r.checks);
  EXPECT_EQ(r.table.rows.size(), 8u * 3u);
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    const double n = r.table.number(i, "n");
    EXPECT_NEAR(r.table.number(i, "per_node_capi"), 0.1 * (n - 1) / n, 1e-15);
  }
  // n = 10: gamma_hat = 0.25 / lambda_2 ~ 6.5, so gamma = 10 beats CAPI and
  // gamma = 2 does not (0.11380 per node, checked against a full Lyapunov solve)
  EXPECT_EQ(r.table.rows[2][1], "10");
  EXPECT_LT(r.table.number(2, "per_node_dapi_total"), r.table.number(2, "per_node_capi"));
  EXPECT_NEAR(r.table.number(1, "per_node_dapi_total"), 0.11379789123400963, 1e-10);
  EXPECT_NEAR(r.table.number(2, "per_node_dapi_total"), 0.06893620957856181, 1e-10);
}

TEST(Scaling, RingRatiosApproachTwo) {
  const auto r = run_scaling({});
  expect_all_passed(r.checks);
  EXPECT_GE(r.ratios.back(), 1.7);
  EXPECT_LE(r.ratios.back(), 2.3);
  EXPECT_NEAR(r.loglog_slope, 1.0, 0.05);
  for (double v : r.per_node_p) EXPECT_LE(v, 0.1 + 1e-12);
  EXPECT_EQ(r.sizes.back(), 2048u);
}

TEST(Scaling, TorusDifferencesSteady) {
  ScalingConfig cfg;
  cfg.family = LatticeFamily::torus;
  const auto r = run_scaling(cfg);
  expect_all_passed(r.checks);
  EXPECT_EQ(r.dimension, 2);
  EXPECT_EQ(r.sizes.back(), 64u * 64u);
}

TEST(Scaling, OtherOneDimensionalFamilies) {
  for (auto fam : {LatticeFamily::path, LatticeFamily::ring_qfuzz}) {
    ScalingConfig cfg;
    cfg.family = fam;
    const auto r = run_scaling(cfg);
    for (double v : r.per_node_p) EXPECT_LE(v, 0.1 + 1e-12);
    EXPECT_GE(r.ratios.back(), 1.7) << to_string(fam);
    EXPECT_LE(r.ratios.back(), 2.3) << to_string(fam);
  }
  EXPECT_EQ(parse_family("ring-qfuzz"), LatticeFamily::ring_qfuzz);
  EXPECT_THROW(parse_family("hypercube"), std::domain_error);
}

TEST(Density, RingToComplete) {
  const auto r = run_density({});
  expect_all_passed(r.checks);
  EXPECT_EQ(r.table.rows.size(), 1u + 45u - 10u);
  EXPECT_EQ(r.table.rows.back()[1], "45");
}

TEST(Density, ScalingByOneLeavesRowUnchanged) {
  const DensityConfig cfg;
  const auto g = cfg.base;
  const auto a = dapi_losses(spectrum(g), cfg.params), b = dapi_losses(spectrum(scale_edge(g, 0, 1, 1.0)), cfg.params);
  EXPECT_EQ(a.total, b.total);
}

TEST(Density, SeedChangesOrderNotEndpoint) {
  DensityConfig a, b;
  b.seed = 99;
  const auto ra = run_density(a), rb = run_density(b);
  EXPECT_NE(csv(ra.table), csv(rb.table));
  EXPECT_EQ(ra.table.rows.back()[4], rb.table.rows.back()[4]);
}

TEST(Separated, DefaultSweep) {
  const auto r = run_separated({});
  expect_all_passed(r.checks);
  EXPECT_EQ(r.table.rows.size(), 16u);
}

TEST(Table, CsvFormat) {
  Table t;
  t.header = {"a", "b"};
  t.add_row({"1", format_number(0.1)});
  t.add_row({"2", format_number(std::numeric_limits<double>::infinity())});
  EXPECT_EQ(csv(t), "a,b\n1,0.1\n2,inf\n");
  EXPECT_THROW(t.add_row({"x"}), std::logic_error);
}
