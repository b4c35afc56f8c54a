// dapi: command-line front end for the loss formulas, oracles and experiments.

#include "dapi/closed_loop.hpp"
#include "dapi/experiments.hpp"
#include "dapi/formulas.hpp"
#include "dapi/graph.hpp"
#include "dapi/oracle.hpp"
#include "dapi/table.hpp"
#include "dapi/tuning.hpp"
#include "dapi/verification.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed_check = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_params(CLI::App* app, dapi::SystemParams& p) {
  app->add_option("--k", p.k, "droop gain 1/d")->capture_default_str();
  app->add_option("--tau", p.tau, "inertia over damping")->capture_default_str();
  app->add_option("--q", p.q, "integral gain")->capture_default_str();
  app->add_option("--alpha", p.alpha, "conductance-to-susceptance ratio")->capture_default_str();
  app->add_option("--eps", p.epsilon, "measurement-noise ratio")->capture_default_str();
  app->add_option("--gamma", p.gamma, "communication weight factor")->capture_default_str();
}

dapi::Controller parse_controller(const std::string& s) {
  if (s == "dapi") return dapi::Controller::dapi;
  if (s == "dapi-correlated") return dapi::Controller::dapi_correlated;
  if (s == "capi") return dapi::Controller::capi;
  throw UsageError("unknown controller '" + s + "'");
}

int report(const std::vector<dapi::Check>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "[ok]   " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
    ok = ok && c.passed;
  }
  return ok ? exit_ok : exit_failed_check;
}

struct Output {
  std::string dir;

  fs::path prepare() const {
    fs::path d = dir.empty() ? fs::path(".") : fs::path(dir);
    fs::create_directories(d);
    return d;
  }

  void csv(const std::string& name, const dapi::Table& t) const {
    const auto path = prepare() / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    dapi::write_csv(f, t);
    std::cout << "wrote " << path.string() << '\n';
  }

  /// Fully resolved options of the run, in the same INI format --config reads.
  void log_config(const CLI::App& sub, const std::string& note = "") const {
    const auto path = prepare() / (sub.get_name() + ".config.ini");
    std::ofstream f(path, std::ios::binary);
    if (!note.empty()) f << "; " << note << '\n';
    f << "[" << sub.get_name() << "]\n" << sub.config_to_str(true, false);
  }
};

void print_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << "# " << name << ' ' << m.rows() << 'x' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << dapi::format_number(m(i, j));
    out << '\n';
  }
}

dapi::ClosedLoopStateSpace assemble(dapi::Controller c, const dapi::WeightedGraph& g,
                                    const std::optional<dapi::WeightedGraph>& comm, const dapi::SystemParams& p) {
  switch (c) {
    case dapi::Controller::dapi: return comm ? dapi::assemble_dapi(g, *comm, p) : dapi::assemble_dapi(g, p);
    case dapi::Controller::dapi_correlated:
      return comm ? dapi::assemble_dapi_correlated(g, *comm, p) : dapi::assemble_dapi_correlated(g, p);
    case dapi::Controller::capi: return dapi::assemble_capi(g, p);
  }
  throw UsageError("unknown controller");
}

dapi::LossBreakdown closed_form(dapi::Controller c, const dapi::WeightedGraph& g,
                                const std::optional<dapi::WeightedGraph>& comm, const dapi::SystemParams& p) {
  if (c == dapi::Controller::capi) return dapi::capi_losses(g.size(), p);
  if (comm) {
    if (c == dapi::Controller::dapi_correlated)
      throw UsageError("the correlated variant takes gamma, not --comm-graph");
    return dapi::dapi_losses_separated(g, *comm, p);
  }
  const auto spec = dapi::spectrum(g);
  return c == dapi::Controller::dapi ? dapi::dapi_losses(spec, p) : dapi::dapi_losses_correlated(spec, p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient resistive losses of DAPI/CAPI-controlled power networks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file of option values; [section] names select subcommands");
  Output out;
  app.add_option("--out", out.dir, "output directory for CSV files")->envname("DAPI_OUT_DIR");

  // graph spectrum
  auto* graph = app.add_subcommand("graph", "graph utilities");
  graph->require_subcommand(1);
  auto* graph_spectrum = graph->add_subcommand("spectrum", "sorted Laplacian eigenvalues as CSV");
  std::string graph_file;
  graph_spectrum->add_option("file", graph_file, "edge-list file")->required()->check(CLI::ExistingFile);

  // model dump
  auto* model = app.add_subcommand("model", "closed-loop state space");
  model->require_subcommand(1);
  auto* model_dump = model->add_subcommand("dump", "print A, B, C as CSV (n <= 10)");
  std::string model_file, model_comm, model_ctrl = "dapi";
  dapi::SystemParams model_p;
  model_dump->add_option("file", model_file, "physical edge-list file")->required()->check(CLI::ExistingFile);
  model_dump->add_option("--comm-graph", model_comm, "communication edge-list file")->check(CLI::ExistingFile);
  model_dump->add_option("--controller", model_ctrl, "dapi | dapi-correlated | capi")->capture_default_str();
  add_params(model_dump, model_p);

  // losses
  auto* losses = app.add_subcommand("losses", "closed-form losses as a CSV row");
  std::string losses_file, losses_comm, losses_ctrl = "dapi";
  dapi::SystemParams losses_p;
  losses->add_option("file", losses_file, "physical edge-list file")->required()->check(CLI::ExistingFile);
  losses->add_option("--comm-graph", losses_comm, "communication edge-list file")->check(CLI::ExistingFile);
  losses->add_option("--controller", losses_ctrl, "dapi | dapi-correlated | capi")->capture_default_str();
  add_params(losses, losses_p);

  // tune
  auto* tune = app.add_subcommand("tune", "optimal and threshold gamma for one graph");
  std::string tune_file;
  dapi::SystemParams tune_p;
  dapi::GammaBracket tune_bracket;
  bool tune_csv = false;
  tune->add_option("file", tune_file, "physical edge-list file")->required()->check(CLI::ExistingFile);
  add_params(tune, tune_p);
  tune->add_option("--gamma-lo", tune_bracket.lo, "initial search bracket")->capture_default_str();
  tune->add_option("--gamma-hi", tune_bracket.hi, "initial search bracket")->capture_default_str();
  tune->add_flag("--csv", tune_csv, "also write tune.csv");

  // verify
  auto* verify = app.add_subcommand("verify", "closed form vs Lyapunov vs per-mode (vs Monte-Carlo)");
  bool verify_mc = false;
  std::vector<std::string> verify_cases;
  dapi::SimConfig sim;
  double sim_dt = 0.0, sim_burn = 0.0, sim_avg = 0.0;
  verify->add_flag("--mc", verify_mc, "include Monte-Carlo (minutes)");
  verify->add_option("--case", verify_cases, "restrict to named cases");
  verify->add_option("--seeds", sim.n_seeds, "Monte-Carlo replications")->capture_default_str();
  verify->add_option("--rng-seed", sim.rng_seed, "base RNG seed")->capture_default_str();
  verify->add_option("--dt", sim_dt, "Euler-Maruyama step (default 1e-3 min(tau, q))");
  verify->add_option("--t-burn", sim_burn, "burn-in time (default 50 slowest time constants)");
  verify->add_option("--t-avg", sim_avg, "averaging time (default 10 t_burn)");
  verify->add_option("--threads", sim.threads, "worker threads (0: all cores)")->capture_default_str();
  verify->add_flag("--extrapolate", sim.extrapolate, "report 2 M(dt) - M(2 dt) to cancel the step bias");

  // fig2
  auto* fig2 = app.add_subcommand("fig2", "losses vs gamma on a complete graph");
  dapi::Fig2Config f2;
  fig2->add_option("--n", f2.n)->capture_default_str();
  fig2->add_option("--weight", f2.weight, "line susceptance b_ij")->capture_default_str();
  fig2->add_option("--gamma-lo", f2.gamma_lo)->capture_default_str();
  fig2->add_option("--gamma-hi", f2.gamma_hi)->capture_default_str();
  fig2->add_option("--points", f2.points)->capture_default_str();
  add_params(fig2, f2.params);

  // fig3
  auto* fig3 = app.add_subcommand("fig3", "per-node losses vs ring size");
  dapi::Fig3Config f3;
  fig3->add_option("--sizes", f3.sizes)->capture_default_str()->delimiter(',');
  fig3->add_option("--gammas", f3.gammas, "curves to draw (default 0.5,2,10 is a free choice)")
      ->capture_default_str()
      ->delimiter(',');
  fig3->add_option("--weight", f3.weight)->capture_default_str();
  add_params(fig3, f3.params);

  // scaling
  auto* scaling = app.add_subcommand("scaling", "per-node losses on growing lattices");
  dapi::ScalingConfig sc;
  std::string family = "ring";
  scaling->add_option("--family", family, "path | ring | ring-qfuzz | torus")->capture_default_str();
  scaling->add_option("--fuzz", sc.fuzz, "neighbourhood radius for ring-qfuzz")->capture_default_str();
  scaling->add_option("--weight", sc.weight)->capture_default_str();
  scaling->add_option("--sizes", sc.sizes, "node counts (torus: side lengths)")->delimiter(',');
  scaling->add_option("--asymptotic-from", sc.asymptotic_from, "smallest n used by the trend checks")
      ->capture_default_str();
  add_params(scaling, sc.params);

  // density
  auto* density = app.add_subcommand("density", "losses while edges are added one at a time");
  dapi::DensityConfig dc;
  std::string density_file;
  density->add_option("--graph", density_file, "base edge-list file (default: ring n=10, b=0.1)")
      ->check(CLI::ExistingFile);
  density->add_option("--seed", dc.seed, "shuffle seed for the added edges")->capture_default_str();
  density->add_option("--added-weight", dc.added_weight)->capture_default_str();
  add_params(density, dc.params);

  // separated
  auto* separated = app.add_subcommand("separated", "distinct physical and communication q-fuzz rings");
  dapi::SeparatedConfig sp;
  separated->add_option("--n", sp.n)->capture_default_str();
  separated->add_option("--q-max", sp.q_max)->capture_default_str();
  separated->add_option("--weight", sp.weight)->capture_default_str();
  add_params(separated, sp.params);

  if (argc <= 1) {
    std::cerr << app.help();
    return exit_usage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*graph_spectrum) {
      const auto spec = dapi::spectrum(dapi::read_edge_list_file(graph_file));
      dapi::Table t;
      t.header = {"index", "eigenvalue"};
      for (std::size_t i = 0; i < spec.size(); ++i) t.add_row({std::to_string(i), dapi::format_number(spec[i])});
      dapi::write_csv(std::cout, t);
      return exit_ok;
    }

    if (*model_dump) {
      const auto g = dapi::read_edge_list_file(model_file);
      if (g.size() > 10) throw UsageError("model dump is limited to n <= 10");
      std::optional<dapi::WeightedGraph> comm;
      if (!model_comm.empty()) comm = dapi::read_edge_list_file(model_comm);
      const auto s = assemble(parse_controller(model_ctrl), g, comm, model_p);
      print_matrix(std::cout, "A", s.A);
      print_matrix(std::cout, "B", s.B);
      print_matrix(std::cout, "C", s.C);
      return exit_ok;
    }

    if (*losses) {
      const auto g = dapi::read_edge_list_file(losses_file);
      std::optional<dapi::WeightedGraph> comm;
      if (!losses_comm.empty()) comm = dapi::read_edge_list_file(losses_comm);
      const auto l = closed_form(parse_controller(losses_ctrl), g, comm, losses_p);
      dapi::Table t;
      t.header = {"p_part", "eta_part", "total"};
      t.add_row({dapi::format_number(l.p_part), dapi::format_number(l.eta_part), dapi::format_number(l.total)});
      dapi::write_csv(std::cout, t);
      if (l.divergence) std::cerr << "diverges: " << *l.divergence << '\n';
      return exit_ok;
    }

    if (*tune) {
      const auto spec = dapi::spectrum(dapi::read_edge_list_file(tune_file));
      const auto r = dapi::tune(spec, tune_p, tune_bracket);
      auto line = [](const std::string& k, double v) { std::cout << fmt::format("{:<20}{:>16.8g}\n", k, v); };
      line("gamma_star", r.gamma_star);
      if (r.gamma_star_is_zero) std::cout << fmt::format("{:<20}{:>16}\n", "", "(boundary: 0)");
      line("gamma_star_eta", r.gamma_star_eta);
      line("gamma_hat", r.gamma_hat);
      line("lemma2_upper", r.lemma2_upper);
      line("capi_total", r.capi.total);
      std::cout << fmt::format("\n{:<20}{:>16}{:>16}{:>16}{:>16}\n", "at", "gamma", "p_part", "eta_part", "total");
      for (const auto& e : r.losses_at)
        std::cout << fmt::format("{:<20}{:>16.8g}{:>16.8g}{:>16.8g}{:>16.8g}\n", e.name, e.gamma, e.losses.p_part,
                                 e.losses.eta_part, e.losses.total);
      if (r.total_local_minima.size() > 1) {
        std::cout << "\nlocal minima of total:";
        for (double g : r.total_local_minima) std::cout << ' ' << dapi::format_number(g);
        std::cout << '\n';
      }
      if (tune_csv) {
        dapi::Table t;
        t.header = {"at", "gamma", "p_part", "eta_part", "total"};
        for (const auto& e : r.losses_at)
          t.add_row({e.name, dapi::format_number(e.gamma), dapi::format_number(e.losses.p_part),
                     dapi::format_number(e.losses.eta_part), dapi::format_number(e.losses.total)});
        t.add_row({"capi", "", dapi::format_number(r.capi.p_part), dapi::format_number(r.capi.eta_part),
                   dapi::format_number(r.capi.total)});
        out.csv("tune.csv", t);
        out.log_config(*tune);
      }
      return exit_ok;
    }

    if (*verify) {
      if (sim_dt > 0) sim.dt = sim_dt;
      if (sim_burn > 0) sim.t_burn = sim_burn;
      if (sim_avg > 0) sim.t_avg = sim_avg;
      std::vector<dapi::VerifyRow> rows;
      bool ok = true;
      for (const auto& c : dapi::standing_grid()) {
        if (!verify_cases.empty() && std::find(verify_cases.begin(), verify_cases.end(), c.name) == verify_cases.end())
          continue;
        auto row = dapi::verify_case(c, verify_mc ? std::optional<dapi::SimConfig>(sim) : std::nullopt);
        ok = ok && row.max_rel_err <= 1e-8 && (!row.monte_carlo || row.mc_z() <= 3.0);
        rows.push_back(std::move(row));
      }
      if (rows.empty()) throw UsageError("no case matched --case");
      const auto t = dapi::verify_table(rows);
      if (out.dir.empty()) {
        dapi::write_csv(std::cout, t);
      } else {
        out.csv("verify.csv", t);
        out.log_config(*verify);
      }
      return ok ? exit_ok : exit_failed_check;
    }

    if (*fig2) {
      const auto r = dapi::run_fig2(f2);
      out.csv("fig2.csv", r.table);
      out.log_config(*fig2);
      std::cout << fmt::format("gamma_star = {:.6g}\ngamma_star_eta = {:.6g}\ncapi = {:.6g}\n", r.gamma_star,
                               r.gamma_star_eta, r.capi);
      return report(r.checks);
    }

    if (*fig3) {
      const auto r = dapi::run_fig3(f3);
      out.csv("fig3.csv", r.table);
      out.log_config(*fig3, "gamma curves are an implementation choice; the source figure does not list them");
      return report(r.checks);
    }

    if (*scaling) {
      sc.family = dapi::parse_family(family);
      const auto r = dapi::run_scaling(sc);
      out.csv(fmt::format("scaling_{}.csv", dapi::to_string(r.family)), r.table());
      out.log_config(*scaling);
      std::cout << fmt::format("log-log slope of per-node eta losses: {:.4f}\n", r.loglog_slope);
      return report(r.checks);
    }

    if (*density) {
      if (!density_file.empty()) dc.base = dapi::read_edge_list_file(density_file);
      const auto r = dapi::run_density(dc);
      out.csv("density.csv", r.table);
      out.log_config(*density);
      return report(r.checks);
    }

    if (*separated) {
      const auto r = dapi::run_separated(sp);
      out.csv("separated.csv", r.table);
      out.log_config(*separated);
      return report(r.checks);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failed_check;
  }
  return exit_usage;
}
