#ifndef DAPI_EXPERIMENTS_HPP
#define DAPI_EXPERIMENTS_HPP

// Deterministic experiments over the closed forms: the loss-vs-gamma curve on
// a complete graph, per-node losses vs ring size, lattice scaling, network
// densification and separated physical/communication layers. Each returns
// its CSV table and the assertions it evaluated.

#include "dapi/formulas.hpp"
#include "dapi/graph.hpp"
#include "dapi/table.hpp"
#include "dapi/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace dapi {

/// k = 5, q = tau = 0.8, alpha = 1 with the given noise ratio.
inline SystemParams reference_params(double epsilon, double gamma = 1.0) {
  return {.k = 5.0, .tau = 0.8, .q = 0.8, .alpha = 1.0, .epsilon = epsilon, .gamma = gamma};
}

// ---------------------------------------------------------------------------
// Losses vs gamma on a complete graph

struct Fig2Config {
  std::size_t n = 10;
  double weight = 0.05;
  SystemParams params = reference_params(1.0);
  double gamma_lo = 0.05;
  double gamma_hi = 100.0;
  std::size_t points = 200;
};

struct Fig2Result {
  Table table;
  double gamma_star = 0.0;
  double gamma_star_eta = 0.0;
  double capi = 0.0;
  std::vector<Check> checks;
};

inline Fig2Result run_fig2(const Fig2Config& cfg) {
  const auto spec = complete_spectrum(cfg.n, cfg.weight);
  const auto& p = cfg.params;
  Fig2Result r;
  r.capi = capi_losses(cfg.n, p).total;
  r.gamma_star = optimize_gamma(spec, p, GammaObjective::p_part).gamma;
  r.gamma_star_eta = optimize_gamma(spec, p, GammaObjective::total).gamma;

  struct Point {
    double gamma;
    std::string marker;
  };
  std::vector<Point> points;
  const double a = std::log(cfg.gamma_lo), b = std::log(cfg.gamma_hi);
  for (std::size_t i = 0; i < cfg.points; ++i)
    points.push_back({std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(cfg.points - 1)), ""});
  points.push_back({r.gamma_star, "gamma_star"});
  points.push_back({r.gamma_star_eta, "gamma_star_eta"});
  std::stable_sort(points.begin(), points.end(), [](const Point& x, const Point& y) { return x.gamma < y.gamma; });

  r.table.header = {"gamma", "p_part", "eta_part", "total_with_noise", "total_without_noise", "capi", "marker"};
  bool finite = true;
  for (const auto& pt : points) {
    const auto noisy = dapi_losses(spec, p.with_gamma(pt.gamma));
    const auto clean = dapi_losses(spec, p.with_gamma(pt.gamma).with_epsilon(0.0));
    finite = finite && noisy.finite() && std::isfinite(noisy.total);
    r.table.add_row({format_number(pt.gamma), format_number(noisy.p_part), format_number(noisy.eta_part),
                     format_number(noisy.total), format_number(clean.total), format_number(r.capi), pt.marker});
  }

  const double t_lo = dapi_losses(spec, p.with_gamma(cfg.gamma_lo)).total;
  const double t_hi = dapi_losses(spec, p.with_gamma(cfg.gamma_hi)).total;
  r.checks.push_back({"total finite on the grid", finite, ""});
  r.checks.push_back({"gamma_star_eta > gamma_star", r.gamma_star_eta > r.gamma_star,
                      fmt::format("{:.4g} > {:.4g}", r.gamma_star_eta, r.gamma_star)});
  r.checks.push_back({"total at gamma_lo >= 5x CAPI", t_lo >= 5.0 * r.capi,
                      fmt::format("total({}) = {:.6g}, CAPI = {:.6g}", cfg.gamma_lo, t_lo, r.capi)});
  r.checks.push_back({"total at gamma_hi within 5% of CAPI", std::abs(t_hi - r.capi) <= 0.05 * r.capi,
                      fmt::format("total({}) = {:.6g}, CAPI = {:.6g}", cfg.gamma_hi, t_hi, r.capi)});
  return r;
}

// ---------------------------------------------------------------------------
// Per-node losses vs ring size

struct Fig3Config {
  std::vector<std::size_t> sizes = {10, 20, 40, 80, 160, 320, 640, 1280};
  std::vector<double> gammas = {0.5, 2.0, 10.0};  // not given by the source figure
  double weight = 0.1;
  SystemParams params = reference_params(0.5);
};

struct Fig3Result {
  Table table;
  std::vector<Check> checks;
};

inline Fig3Result run_fig3(const Fig3Config& cfg) {
  Fig3Result r;
  r.table.header = {"n", "gamma", "per_node_dapi_total", "per_node_capi"};
  auto sizes = cfg.sizes;
  auto gammas = cfg.gammas;
  std::sort(sizes.begin(), sizes.end());
  std::sort(gammas.begin(), gammas.end());
  const double bound = cfg.params.alpha / (2.0 * cfg.params.k);

  bool capi_ok = true, growing = true;
  std::vector<double> last(gammas.size(), 0.0);
  for (std::size_t n : sizes) {
    const auto spec = ring_qfuzz_spectrum(n, 1, cfg.weight);
    const double nd = static_cast<double>(n);
    const double capi = capi_losses(n, cfg.params).total / nd;
    capi_ok = capi_ok && std::abs(capi - bound * (nd - 1.0) / nd) <= 1e-12 * bound;
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      const double dapi = dapi_losses(spec, cfg.params.with_gamma(gammas[gi])).total / nd;
      if (n != sizes.front()) growing = growing && dapi > last[gi];
      last[gi] = dapi;
      r.table.add_row({std::to_string(n), format_number(gammas[gi]), format_number(dapi), format_number(capi)});
    }
  }
  r.checks.push_back({"CAPI per-node column equals alpha/(2k) (n-1)/n", capi_ok, ""});
  r.checks.push_back({"per-node DAPI losses grow with n for every gamma", growing, ""});
  return r;
}

// ---------------------------------------------------------------------------
// Lattice scaling

enum class LatticeFamily { path, ring, ring_qfuzz, torus };

inline LatticeFamily parse_family(const std::string& s) {
  if (s == "path") return LatticeFamily::path;
  if (s == "ring") return LatticeFamily::ring;
  if (s == "ring-qfuzz") return LatticeFamily::ring_qfuzz;
  if (s == "torus") return LatticeFamily::torus;
  throw std::domain_error("unknown lattice family '" + s + "' (path, ring, ring-qfuzz, torus)");
}

inline const char* to_string(LatticeFamily f) {
  switch (f) {
    case LatticeFamily::path: return "path";
    case LatticeFamily::ring: return "ring";
    case LatticeFamily::ring_qfuzz: return "ring-qfuzz";
    case LatticeFamily::torus: return "torus";
  }
  return "?";
}

struct ScalingConfig {
  LatticeFamily family = LatticeFamily::ring;
  std::size_t fuzz = 2;  // ring-qfuzz only
  double weight = 0.1;
  SystemParams params = reference_params(0.5, 1.0);
  /// Node counts for d = 1, side lengths for the torus. Empty: doubling
  /// 16..2048 (d = 1) or 4..64 (d = 2).
  std::vector<std::size_t> sizes;
  /// Ratio and difference assertions only use sizes >= this node count.
  std::size_t asymptotic_from = 128;
};

struct ScalingReport {
  LatticeFamily family = LatticeFamily::ring;
  int dimension = 1;
  std::vector<std::size_t> sizes;  // node counts
  std::vector<double> per_node_p;
  std::vector<double> per_node_eta;
  std::vector<double> per_node_capi;
  std::vector<double> ratios;       // per_node_eta[i+1] / per_node_eta[i]
  std::vector<double> differences;  // per_node_eta[i+1] - per_node_eta[i]
  double loglog_slope = 0.0;        // least squares over the asymptotic range
  std::vector<Check> checks;

  Table table() const {
    Table t;
    t.header = {"n", "per_node_p", "per_node_eta", "per_node_capi", "ratio", "difference"};
    for (std::size_t i = 0; i < sizes.size(); ++i)
      t.add_row({std::to_string(sizes[i]), format_number(per_node_p[i]), format_number(per_node_eta[i]),
                 format_number(per_node_capi[i]), i ? format_number(ratios[i - 1]) : "",
                 i ? format_number(differences[i - 1]) : ""});
    return t;
  }
};

inline LaplacianSpectrum lattice_spectrum(LatticeFamily family, std::size_t size, std::size_t fuzz, double weight) {
  switch (family) {
    case LatticeFamily::path: return path_spectrum(size, weight);
    case LatticeFamily::ring: return ring_qfuzz_spectrum(size, 1, weight);
    case LatticeFamily::ring_qfuzz: return ring_qfuzz_spectrum(size, fuzz, weight);
    case LatticeFamily::torus: return torus_2d_spectrum(size, size, weight);
  }
  throw std::domain_error("unknown family");
}

inline ScalingReport run_scaling(const ScalingConfig& cfg) {
  ScalingReport r;
  r.family = cfg.family;
  r.dimension = cfg.family == LatticeFamily::torus ? 2 : 1;
  auto sizes = cfg.sizes;
  if (sizes.empty()) {
    if (r.dimension == 1)
      for (std::size_t n = 16; n <= 2048; n *= 2) sizes.push_back(n);
    else
      for (std::size_t s = 4; s <= 64; s *= 2) sizes.push_back(s);
  }
  std::sort(sizes.begin(), sizes.end());

  const auto& p = cfg.params;
  const double bound = p.alpha / (2.0 * p.k);
  for (std::size_t s : sizes) {
    const auto spec = lattice_spectrum(cfg.family, s, cfg.fuzz, cfg.weight);
    const auto l = dapi_losses(spec, p);
    const double n = static_cast<double>(spec.size());
    r.sizes.push_back(spec.size());
    r.per_node_p.push_back(l.p_part / n);
    r.per_node_eta.push_back(l.eta_part / n);
    r.per_node_capi.push_back(capi_losses(spec.size(), p).total / n);
  }
  for (std::size_t i = 1; i < r.sizes.size(); ++i) {
    r.ratios.push_back(r.per_node_eta[i] / r.per_node_eta[i - 1]);
    r.differences.push_back(r.per_node_eta[i] - r.per_node_eta[i - 1]);
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.sizes.size(); ++i) {
    if (r.sizes[i] < cfg.asymptotic_from) continue;
    lx.push_back(std::log(static_cast<double>(r.sizes[i])));
    ly.push_back(std::log(r.per_node_eta[i]));
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    r.loglog_slope = sxy / sxx;
  }

  bool p_bounded = true, capi_ok = true;
  for (std::size_t i = 0; i < r.sizes.size(); ++i) {
    p_bounded = p_bounded && r.per_node_p[i] <= bound + 1e-12;
    capi_ok = capi_ok && r.per_node_capi[i] < bound && (i == 0 || r.per_node_capi[i] > r.per_node_capi[i - 1]);
  }
  r.checks.push_back({"per-node P losses <= alpha/(2k)", p_bounded, fmt::format("bound {:.6g}", bound)});
  r.checks.push_back({"per-node CAPI losses < alpha/(2k) and increasing", capi_ok, ""});

  if (r.dimension == 1) {
    bool in_range = true, converging = true;
    double prev_gap = std::numeric_limits<double>::infinity();
    std::string detail;
    for (std::size_t i = 1; i < r.sizes.size(); ++i) {
      if (r.sizes[i - 1] < cfg.asymptotic_from) continue;
      const double ratio = r.ratios[i - 1];
      in_range = in_range && ratio >= 1.7 && ratio <= 2.3;
      const double gap = std::abs(ratio - 2.0);
      converging = converging && gap <= prev_gap + 1e-12;
      prev_gap = gap;
      detail += fmt::format("{}->{}: {:.4f}; ", r.sizes[i - 1], r.sizes[i], ratio);
    }
    r.checks.push_back({"per-node eta ratio per doubling in [1.7, 2.3]", in_range, detail});
    r.checks.push_back({"ratios converge toward 2", converging, detail});
  } else {
    // Successive side doublings (n -> 4n) at or beyond asymptotic_from nodes.
    std::vector<double> diffs;
    for (std::size_t i = 1; i < r.sizes.size(); ++i)
      if (r.sizes[i - 1] >= cfg.asymptotic_from) diffs.push_back(r.differences[i - 1]);
    bool steady = diffs.size() >= 2;
    std::string detail;
    for (std::size_t i = 1; i < diffs.size(); ++i) {
      const double rel = std::abs(diffs[i] - diffs[i - 1]) / std::max(diffs[i], diffs[i - 1]);
      steady = steady && rel <= 0.25;
      detail += fmt::format("{:.6g} vs {:.6g} ({:.1f}%); ", diffs[i - 1], diffs[i], 100.0 * rel);
    }
    r.checks.push_back({"per-node eta differences per 4x size within 25%", steady, detail});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Densification

struct DensityConfig {
  WeightedGraph base = build_ring(10, 0.1);
  SystemParams params = reference_params(0.5, 1.0);
  /// Edges added in order. Empty: every missing edge, in a seeded shuffle.
  std::vector<Edge> additions;
  std::uint64_t seed = 1;
  double added_weight = 0.1;
};

struct DensityResult {
  Table table;
  std::vector<Check> checks;
};

/// Every absent node pair, shuffled by a Fisher-Yates pass over mt19937_64.
inline std::vector<Edge> random_completion(const WeightedGraph& g, double weight, std::uint64_t seed) {
  std::vector<Edge> missing;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (!g.has_edge(i, j)) missing.push_back({i, j, weight});
  std::mt19937_64 rng(seed);
  for (std::size_t i = missing.size(); i > 1; --i) std::swap(missing[i - 1], missing[rng() % i]);
  return missing;
}

inline DensityResult run_density(const DensityConfig& cfg) {
  DensityResult r;
  r.table.header = {"step", "edges", "lambda2", "p_part", "eta_part", "total"};
  const auto additions = cfg.additions.empty() ? random_completion(cfg.base, cfg.added_weight, cfg.seed) : cfg.additions;

  WeightedGraph g = cfg.base;
  bool monotone = true;
  double prev_eta = std::numeric_limits<double>::infinity(), min_eta = prev_eta;
  std::string detail;
  for (std::size_t step = 0; step <= additions.size(); ++step) {
    if (step > 0) {
      const auto& e = additions[step - 1];
      g = add_edge(g, e.i, e.j, e.weight);
    }
    const auto spec = spectrum(g);
    const auto l = dapi_losses(spec, cfg.params);
    if (!(l.eta_part < prev_eta || std::abs(l.eta_part - prev_eta) < 1e-12)) {
      monotone = false;
      detail += fmt::format("step {}: {:.6g} -> {:.6g}; ", step, prev_eta, l.eta_part);
    }
    prev_eta = l.eta_part;
    min_eta = std::min(min_eta, l.eta_part);
    r.table.add_row({std::to_string(step), std::to_string(g.edges().size()), format_number(spec.lambda2()),
                     format_number(l.p_part), format_number(l.eta_part), format_number(l.total)});
  }
  r.checks.push_back({"eta_part non-increasing under edge addition", monotone, detail});
  r.checks.push_back({"final graph has the smallest eta_part", prev_eta <= min_eta, ""});
  return r;
}

// ---------------------------------------------------------------------------
// Separate physical and communication layers on q-fuzz rings

struct SeparatedConfig {
  std::size_t n = 24;
  std::size_t q_max = 4;
  double weight = 0.1;  // b_ij; communication weights are gamma * b_ij
  SystemParams params = reference_params(0.5, 1.0);
};

struct SeparatedResult {
  Table table;
  std::vector<Check> checks;
};

inline SeparatedResult run_separated(const SeparatedConfig& cfg) {
  if (2 * cfg.q_max >= cfg.n) throw std::domain_error("q_max must be < n/2");
  const auto& p = cfg.params;
  const std::size_t Q = cfg.q_max;
  std::vector<std::vector<LossBreakdown>> grid(Q + 1, std::vector<LossBreakdown>(Q + 1));

  SeparatedResult r;
  r.table.header = {"q_p", "q_c", "p_part", "eta_part", "total"};
  for (std::size_t qp = 1; qp <= Q; ++qp) {
    const auto physical = build_ring_qfuzz(cfg.n, qp, cfg.weight);
    for (std::size_t qc = 1; qc <= Q; ++qc) {
      const auto communication = build_ring_qfuzz(cfg.n, qc, p.gamma * cfg.weight);
      const auto l = dapi_losses_separated(physical, communication, p);
      grid[qp][qc] = l;
      r.table.add_row({std::to_string(qp), std::to_string(qc), format_number(l.p_part), format_number(l.eta_part),
                       format_number(l.total)});
    }
  }

  bool diagonal_ok = true, eta_down = true, p_up = true;
  std::string diag_detail;
  for (std::size_t q = 1; q <= Q; ++q) {
    const auto ref = dapi_losses(ring_qfuzz_spectrum(cfg.n, q, cfg.weight), p);
    const auto& sep = grid[q][q];
    const double err = std::max(std::abs(sep.p_part - ref.p_part) / ref.p_part,
                                ref.eta_part > 0 ? std::abs(sep.eta_part - ref.eta_part) / ref.eta_part : 0.0);
    diagonal_ok = diagonal_ok && err <= 1e-10;
    diag_detail += fmt::format("q={}: {:.2e}; ", q, err);
    for (std::size_t k = 2; k <= Q; ++k) {
      eta_down = eta_down && grid[q][k].eta_part < grid[q][k - 1].eta_part;
      p_up = p_up && grid[k][q].p_part > grid[k - 1][q].p_part;
    }
  }
  r.checks.push_back({"q_C = q_P reproduces the single-layer losses (1e-10)", diagonal_ok, diag_detail});
  if (p.epsilon > 0.0) r.checks.push_back({"eta_part decreases with q_C at fixed q_P", eta_down, ""});
  r.checks.push_back({"p_part increases with q_P at fixed q_C", p_up, ""});
  return r;
}

}  // namespace dapi

#endif  // DAPI_EXPERIMENTS_HPP
