#ifndef DAPI_VERIFICATION_HPP
#define DAPI_VERIFICATION_HPP

// Standing grid of DAPI configurations on which the closed form, the full
// Lyapunov solve, the per-mode solve and Monte-Carlo are compared.
//
// Edge weights are chosen so that every case's slowest closed-loop rate is
// >= ~0.1 s^-1; sparse graphs at b = 0.1 have modes decaying a thousand
// times slower, which puts the default Monte-Carlo horizon out of reach.

#include "dapi/closed_loop.hpp"
#include "dapi/experiments.hpp"
#include "dapi/formulas.hpp"
#include "dapi/graph.hpp"
#include "dapi/oracle.hpp"
#include "dapi/table.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dapi {

struct VerifyCase {
  std::string name;
  WeightedGraph graph;
  SystemParams params;
};

inline std::vector<VerifyCase> standing_grid() {
  auto fig2 = [](double eps, double g) { return reference_params(eps, g); };
  return {
      {"fig2-complete10-g0.5", build_complete(10, 0.05), fig2(1.0, 0.5)},
      {"fig2-complete10-g2", build_complete(10, 0.05), fig2(1.0, 2.0)},
      {"fig2-complete10-g10", build_complete(10, 0.05), fig2(1.0, 10.0)},
      {"complete5-e0.5-g2", build_complete(5, 0.05), fig2(0.5, 2.0)},
      {"complete5-e0-g10", build_complete(5, 0.05), fig2(0.0, 10.0)},
      {"fig3-ring5-g2", build_ring(5, 0.1), fig2(0.5, 2.0)},
      {"fig3-ring5-g10", build_ring(5, 0.1), fig2(0.5, 10.0)},
      {"ring10-b1-e0.5-g2", build_ring(10, 1.0), fig2(0.5, 2.0)},
      {"ring10-b1-e1-g0.5", build_ring(10, 1.0), fig2(1.0, 0.5)},
      {"path5-b1-e1-g2", build_path(5, 1.0), fig2(1.0, 2.0)},
      {"path10-b1-e0.5-g10", build_path(10, 1.0), fig2(0.5, 10.0)},
      {"torus4x6-b1-e0.5-g0.5", build_torus_2d(4, 6, 1.0), fig2(0.5, 0.5)},
      {"torus4x6-b1-e1-g2", build_torus_2d(4, 6, 1.0), fig2(1.0, 2.0)},
      {"ring8-b1-e0-g10", build_ring(8, 1.0), fig2(0.0, 10.0)},
  };
}

struct VerifyRow {
  std::string name;
  double closed_form = 0.0;
  double lyapunov = 0.0;
  double per_mode = 0.0;
  std::optional<H2Result> monte_carlo;
  double max_rel_err = 0.0;  // over the three deterministic routes

  /// |mc - closed form| in units of the Monte-Carlo standard error.
  double mc_z() const {
    if (!monte_carlo) return 0.0;
    return std::abs(monte_carlo->value - closed_form) / monte_carlo->std_error;
  }
};

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline VerifyRow verify_case(const VerifyCase& c, std::optional<SimConfig> mc = std::nullopt) {
  VerifyRow row;
  row.name = c.name;
  const auto spec = spectrum(c.graph);
  const auto system = assemble_dapi(c.graph, c.params);
  row.closed_form = dapi_losses(spec, c.params).total;
  row.lyapunov = h2_lyapunov(system).value;
  row.per_mode = h2_per_mode(spec, c.params).value;
  row.max_rel_err = std::max({relative_difference(row.closed_form, row.lyapunov),
                              relative_difference(row.closed_form, row.per_mode),
                              relative_difference(row.lyapunov, row.per_mode)});
  if (mc) row.monte_carlo = h2_monte_carlo(system, *mc);
  return row;
}

inline Table verify_table(const std::vector<VerifyRow>& rows) {
  Table t;
  t.header = {"case", "closed_form", "lyapunov", "per_mode", "mc_mean", "mc_stderr", "max_rel_err"};
  for (const auto& r : rows)
    t.add_row({r.name, format_number(r.closed_form), format_number(r.lyapunov), format_number(r.per_mode),
               r.monte_carlo ? format_number(r.monte_carlo->value) : "",
               r.monte_carlo ? format_number(r.monte_carlo->std_error) : "", format_number(r.max_rel_err)});
  return t;
}

}  // namespace dapi

#endif  // DAPI_VERIFICATION_HPP
