#ifndef DAPI_TUNING_HPP
#define DAPI_TUNING_HPP

// Choice of the distributed-averaging strength gamma: numerical minimizers
// of the losses with and without measurement noise, the a-priori interval
// for the noise-free optimum, and the threshold above which DAPI beats CAPI.

#include "dapi/formulas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace dapi {

/// One named pass/fail assertion with a human-readable witness.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

// ---------------------------------------------------------------------------
// Scalar minimization on log(gamma)

struct LogGridScan {
  std::vector<double> x;       // geometric grid
  std::vector<double> values;  // objective at x
  std::size_t argmin = 0;

  std::vector<double> interior_local_minima() const {
    std::vector<double> minima;
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
      if (values[i] < values[i - 1] && values[i] <= values[i + 1]) minima.push_back(x[i]);
    return minima;
  }
};

template <class F>
LogGridScan log_grid_scan(F&& f, double lo, double hi, std::size_t points = 64) {
  if (!(lo > 0.0) || !(hi > lo) || points < 3) throw std::domain_error("log_grid_scan needs 0 < lo < hi");
  LogGridScan s;
  s.x.resize(points);
  s.values.resize(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    s.x[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    s.values[i] = f(s.x[i]);
  }
  s.argmin = static_cast<std::size_t>(std::min_element(s.values.begin(), s.values.end()) - s.values.begin());
  return s;
}

/// Golden-section search for a minimum of f on [lo, hi], performed in log x
/// until the bracket's log-width is below rel_tol.
template <class F>
std::pair<double, double> golden_section_log(F&& f, double lo, double hi, double rel_tol = 1e-4) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  while (b - a > rel_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(std::exp(d));
    }
  }
  const double x = std::exp(0.5 * (a + b));
  return {x, f(x)};
}

// ---------------------------------------------------------------------------
// Gamma optimization

enum class GammaObjective { p_part, total };

struct GammaBracket {
  double lo = 1e-3;
  double hi = 1e3;
};

struct GammaOptimum {
  double gamma = 0.0;
  LossBreakdown losses;
  double objective = 0.0;
  /// Objective increasing from the smallest admissible gamma. For p_part this
  /// is the gamma* = 0 case and `gamma` is exactly 0.
  bool at_lower_boundary = false;
  bool at_upper_boundary = false;
  std::vector<double> grid_local_minima;
  double grid_minimum = 0.0;
  GammaBracket bracket;
};

namespace detail {

inline double objective_value(const LossBreakdown& l, GammaObjective obj) {
  if (obj == GammaObjective::p_part) return l.p_part;
  return l.finite() ? l.total : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Minimizes an objective over gamma for any loss model `losses(gamma)`.
/// The bracket is widened geometrically (down to 1e-10, up to 1e8) until the
/// 64-point log-grid minimum is interior, then refined by golden section.
template <class LossFn>
GammaOptimum optimize_gamma_with(LossFn&& losses, GammaObjective obj, GammaBracket bracket = {},
                                 double rel_tol = 1e-4) {
  constexpr double floor_lo = 1e-10, ceil_hi = 1e8;
  if (!(bracket.lo > 0.0) || !(bracket.hi > bracket.lo)) throw std::domain_error("bracket needs 0 < lo < hi");
  auto f = [&](double g) { return detail::objective_value(losses(g), obj); };

  LogGridScan scan;
  for (;;) {
    scan = log_grid_scan(f, bracket.lo, bracket.hi);
    if (scan.argmin == scan.x.size() - 1 && bracket.hi < ceil_hi) {
      bracket.hi = std::min(bracket.hi * 100.0, ceil_hi);
    } else if (scan.argmin == 0 && bracket.lo > floor_lo) {
      bracket.lo = std::max(bracket.lo / 100.0, floor_lo);
    } else {
      break;
    }
  }

  GammaOptimum opt;
  opt.bracket = bracket;
  opt.grid_local_minima = scan.interior_local_minima();
  opt.grid_minimum = scan.values[scan.argmin];
  if (scan.argmin == 0) {
    opt.at_lower_boundary = true;
    opt.gamma = obj == GammaObjective::p_part ? 0.0 : bracket.lo;
  } else if (scan.argmin == scan.x.size() - 1) {
    opt.at_upper_boundary = true;
    opt.gamma = bracket.hi;
  } else {
    auto [x, fx] = golden_section_log(f, scan.x[scan.argmin - 1], scan.x[scan.argmin + 1], rel_tol);
    opt.gamma = fx <= opt.grid_minimum ? x : scan.x[scan.argmin];
  }
  opt.losses = losses(opt.gamma);
  opt.objective = detail::objective_value(opt.losses, obj);
  return opt;
}

inline GammaOptimum optimize_gamma(const LaplacianSpectrum& spec, const SystemParams& p, GammaObjective obj,
                                   GammaBracket bracket = {}, double rel_tol = 1e-4) {
  detail::require_connected(spec);
  if (p.epsilon == 0.0) obj = GammaObjective::p_part;  // identical objectives
  return optimize_gamma_with([&](double g) { return dapi_losses(spec, p.with_gamma(g)); }, obj, bracket, rel_tol);
}

// ---------------------------------------------------------------------------
// A-priori bounds

struct Lemma2Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool gamma_star_is_zero = false;  // lambda_i k tau <= 1 for every mode
};

/// 0 <= gamma* <= max_i (q sqrt(tau k lambda_i) - q) / (tau lambda_i), floored at 0.
inline Lemma2Interval lemma2_bound(const LaplacianSpectrum& spec, const SystemParams& p) {
  detail::require_connected(spec);
  Lemma2Interval b;
  b.gamma_star_is_zero = true;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    const double lam = spec[i];
    b.upper = std::max(b.upper, (p.q * std::sqrt(p.tau * p.k * lam) - p.q) / (p.tau * lam));
    if (lam * p.k * p.tau > 1.0) b.gamma_star_is_zero = false;
  }
  return b;
}

/// eps^2 / lambda_2: DAPI beats CAPI for every gamma above this.
inline double gamma_hat(const LaplacianSpectrum& spec, const SystemParams& p) {
  detail::require_connected(spec);
  return p.epsilon * p.epsilon / spec.lambda2();
}

// ---------------------------------------------------------------------------
// Reports

struct NamedLosses {
  std::string name;
  double gamma = 0.0;
  LossBreakdown losses;
};

struct GammaTuningReport {
  double gamma_star = 0.0;
  bool gamma_star_is_zero = false;
  double gamma_star_eta = 0.0;
  double gamma_hat = 0.0;
  double lemma2_upper = 0.0;
  LossBreakdown capi;
  std::vector<double> total_local_minima;  // every interior minimum of the grid scan
  std::vector<NamedLosses> losses_at;
};

inline GammaTuningReport tune(const LaplacianSpectrum& spec, const SystemParams& p, GammaBracket bracket = {}) {
  GammaTuningReport r;
  const auto star = optimize_gamma(spec, p, GammaObjective::p_part, bracket);
  const auto star_eta = optimize_gamma(spec, p, GammaObjective::total, bracket);
  const auto bound = lemma2_bound(spec, p);
  r.gamma_star = star.gamma;
  r.gamma_star_is_zero = star.at_lower_boundary;
  r.gamma_star_eta = star_eta.gamma;
  r.gamma_hat = gamma_hat(spec, p);
  r.lemma2_upper = bound.upper;
  r.capi = capi_losses(spec.size(), p);
  r.total_local_minima = star_eta.grid_local_minima;
  auto at = [&](std::string name, double g) { r.losses_at.push_back({std::move(name), g, dapi_losses(spec, p.with_gamma(g))}); };
  at("gamma_star", r.gamma_star);
  at("gamma_star_eta", r.gamma_star_eta);
  at("gamma_hat", r.gamma_hat);
  at("lemma2_upper", r.lemma2_upper);
  return r;
}

/// Ordering gamma*,eta > gamma*, divergence below and dominance over CAPI
/// above gamma_hat, for one configuration with eps > 0.
inline std::vector<Check> verify_ordering(const LaplacianSpectrum& spec, const SystemParams& p) {
  if (!(p.epsilon > 0.0)) throw std::domain_error("verify_ordering needs eps > 0");
  std::vector<Check> checks;
  const auto star = optimize_gamma(spec, p, GammaObjective::p_part);
  const auto star_eta = optimize_gamma(spec, p, GammaObjective::total);
  const double capi = capi_losses(spec.size(), p).total;
  const double ghat = gamma_hat(spec, p);
  auto total = [&](double g) { return dapi_losses(spec, p.with_gamma(g)).total; };

  checks.push_back({"gamma_star_eta > gamma_star", star_eta.gamma > star.gamma,
                    fmt::format("gamma*,eta = {:.6g}, gamma* = {:.6g}", star_eta.gamma, star.gamma)});

  double g = std::min(star_eta.gamma, ghat) / 2.0;
  while (g > 1e-12 && !(total(g) > capi)) g /= 2.0;
  const double tg = total(g);
  checks.push_back({"small gamma exceeds CAPI", std::isfinite(tg) && tg > capi,
                    fmt::format("total({:.6g}) = {:.6g} vs CAPI {:.6g}", g, tg, capi)});

  for (double factor : {1.01, 2.0, 10.0}) {
    const double t = total(factor * ghat);
    checks.push_back({fmt::format("DAPI < CAPI at {}*gamma_hat", factor), t < capi,
                      fmt::format("total({:.6g}) = {:.6g} vs CAPI {:.6g}", factor * ghat, t, capi)});
  }
  return checks;
}

}  // namespace dapi

#endif  // DAPI_TUNING_HPP
