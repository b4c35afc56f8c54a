#ifndef DAPI_CLOSED_LOOP_HPP
#define DAPI_CLOSED_LOOP_HPP

// State-space assembly of the linearized swing dynamics under DAPI and CAPI
// secondary control, driven by w = [P; eta / eps] (unit-intensity white noise
// on 2n channels) with performance output y = L_G^{1/2} theta.
//
//   theta' = omega
//   T omega' = -K L_B theta - omega + u + P
//   DAPI:  Q Omega' = -omega - L_C Omega + eps * eta      u = Omega
//   CAPI:  q Omega' = -(1/n) 1^T omega + (eps/n) 1^T eta  u = Omega * 1
//
// The correlated variant additionally feeds eps * eta into the omega row.

#include "dapi/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapi {

/// Uniform model and controller constants.
struct SystemParams {
  double k = 1.0;        // droop gain 1/d
  double tau = 1.0;      // inertia / damping [s]
  double q = 1.0;        // integral gain
  double alpha = 1.0;    // conductance-to-susceptance ratio g/b
  double epsilon = 0.0;  // measurement-noise intensity relative to injection noise
  double gamma = 1.0;    // communication weights c = gamma * b (DAPI only)

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(name) + " must be positive");
    };
    positive(k, "k");
    positive(tau, "tau");
    positive(q, "q");
    positive(alpha, "alpha");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::domain_error("epsilon must be >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::domain_error("gamma must be >= 0");
  }

  /// gamma = 0 leaves the integral states undamped; with eps > 0 the losses
  /// diverge.
  bool dapi_diverges() const { return gamma == 0.0 && epsilon > 0.0; }

  SystemParams with_gamma(double g) const {
    SystemParams p = *this;
    p.gamma = g;
    return p;
  }
  SystemParams with_epsilon(double e) const {
    SystemParams p = *this;
    p.epsilon = e;
    return p;
  }
};

/// Per-node gains for the non-uniform assembly overloads.
struct NodeGains {
  Eigen::VectorXd k, tau, q;

  static NodeGains uniform(std::size_t n, const SystemParams& p) {
    const auto m = static_cast<Eigen::Index>(n);
    return {Eigen::VectorXd::Constant(m, p.k), Eigen::VectorXd::Constant(m, p.tau), Eigen::VectorXd::Constant(m, p.q)};
  }

  void validate(std::size_t n) const {
    const auto m = static_cast<Eigen::Index>(n);
    if (k.size() != m || tau.size() != m || q.size() != m)
      throw std::domain_error("node gain vectors must have one entry per node");
    if ((k.array() <= 0.0).any() || (tau.array() <= 0.0).any() || (q.array() <= 0.0).any())
      throw std::domain_error("node gains must be positive");
  }
};

enum class Controller { dapi, dapi_correlated, capi };

inline const char* to_string(Controller c) {
  switch (c) {
    case Controller::dapi: return "dapi";
    case Controller::dapi_correlated: return "dapi-correlated";
    case Controller::capi: return "capi";
  }
  return "?";
}

struct StateBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

struct ClosedLoopStateSpace {
  Controller controller = Controller::dapi;
  std::size_t nodes = 0;
  Eigen::MatrixXd A;  // state_dim x state_dim
  Eigen::MatrixXd B;  // state_dim x 2n; columns [0, n) carry P, [n, 2n) carry eta
  Eigen::MatrixXd C;  // n x state_dim
  std::vector<StateBlock> blocks;
  double epsilon = 0.0;
  double fastest_time_constant = 1.0;  // min over tau_i, q_i
  bool deflated = false;
  bool marginally_stable_integral_states = false;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index noise_channels() const { return B.cols(); }

  const StateBlock& block(const std::string& name) const {
    for (const auto& b : blocks)
      if (b.name == name) return b;
    throw std::domain_error("no state block named '" + name + "'");
  }

  /// Restriction to the P channels or the eta channels.
  ClosedLoopStateSpace injection_only() const { return with_inputs(0); }
  ClosedLoopStateSpace measurement_only() const { return with_inputs(static_cast<Eigen::Index>(nodes)); }

private:
  ClosedLoopStateSpace with_inputs(Eigen::Index first) const {
    ClosedLoopStateSpace s = *this;
    s.B = B.middleCols(first, static_cast<Eigen::Index>(nodes));
    return s;
  }
};

namespace detail {

/// Symmetric PSD square root via eigendecomposition.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed in matrix square root");
  // Round-off zero modes would otherwise leak as O(sqrt(eps)) entries.
  const double cut = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  const Eigen::VectorXd root = es.eigenvalues().unaryExpr([cut](double v) { return v > cut ? std::sqrt(v) : 0.0; });
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline void check_physical(const WeightedGraph& physical) {
  if (!physical.is_connected()) throw std::domain_error("physical graph must be connected");
}

inline void check_same_nodes(const WeightedGraph& a, const WeightedGraph& b, const char* what) {
  if (a.size() != b.size()) throw std::domain_error(std::string(what) + " graph does not share the physical node set");
}

inline ClosedLoopStateSpace assemble_dapi_impl(const WeightedGraph& physical, const WeightedGraph& communication,
                                               const NodeGains& gains, const Eigen::MatrixXd& conductance_laplacian,
                                               double epsilon, bool correlated) {
  check_physical(physical);
  check_same_nodes(physical, communication, "communication");
  const std::size_t nn = physical.size();
  gains.validate(nn);
  if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be >= 0");

  const auto n = static_cast<Eigen::Index>(nn);
  const Eigen::MatrixXd LB = laplacian(physical);
  const Eigen::MatrixXd LC = laplacian(communication);
  const Eigen::VectorXd inv_tau = gains.tau.cwiseInverse();
  const Eigen::VectorXd inv_q = gains.q.cwiseInverse();

  ClosedLoopStateSpace s;
  s.controller = correlated ? Controller::dapi_correlated : Controller::dapi;
  s.nodes = nn;
  s.epsilon = epsilon;
  s.fastest_time_constant = std::min(gains.tau.minCoeff(), gains.q.minCoeff());
  s.blocks = {{"theta", 0, n}, {"omega", n, n}, {"Omega", 2 * n, n}};
  s.marginally_stable_integral_states = !communication.is_connected();

  s.A = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  s.A.block(0, n, n, n).setIdentity();
  s.A.block(n, 0, n, n) = -((inv_tau.cwiseProduct(gains.k)).asDiagonal() * LB);
  s.A.block(n, n, n, n) = -Eigen::MatrixXd(inv_tau.asDiagonal());
  s.A.block(n, 2 * n, n, n) = inv_tau.asDiagonal();
  s.A.block(2 * n, n, n, n) = -Eigen::MatrixXd(inv_q.asDiagonal());
  s.A.block(2 * n, 2 * n, n, n) = -(inv_q.asDiagonal() * LC);

  s.B = Eigen::MatrixXd::Zero(3 * n, 2 * n);
  s.B.block(n, 0, n, n) = inv_tau.asDiagonal();
  s.B.block(2 * n, n, n, n) = (epsilon * inv_q).asDiagonal();
  if (correlated) s.B.block(n, n, n, n) = (epsilon * inv_tau).asDiagonal();

  s.C = Eigen::MatrixXd::Zero(n, 3 * n);
  s.C.block(0, 0, n, n) = psd_sqrt(conductance_laplacian);
  return s;
}

inline WeightedGraph communication_from_gamma(const WeightedGraph& physical, double gamma) {
  if (gamma == 0.0) return WeightedGraph(physical.size(), {});
  return scaled(physical, gamma);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DAPI

/// Uniform parameters with an explicit communication graph (p.gamma unused).
inline ClosedLoopStateSpace assemble_dapi(const WeightedGraph& physical, const WeightedGraph& communication,
                                          const SystemParams& p) {
  p.validate();
  return detail::assemble_dapi_impl(physical, communication, NodeGains::uniform(physical.size(), p),
                                    p.alpha * laplacian(physical), p.epsilon, false);
}

/// Communication layer equal to the physical one, scaled by p.gamma.
inline ClosedLoopStateSpace assemble_dapi(const WeightedGraph& physical, const SystemParams& p) {
  p.validate();
  return assemble_dapi(physical, detail::communication_from_gamma(physical, p.gamma), p);
}

/// Non-uniform gains and an independent conductance graph for the output.
inline ClosedLoopStateSpace assemble_dapi(const WeightedGraph& physical, const WeightedGraph& communication,
                                          const WeightedGraph& conductance, const NodeGains& gains, double epsilon) {
  detail::check_same_nodes(physical, conductance, "conductance");
  return detail::assemble_dapi_impl(physical, communication, gains, laplacian(conductance), epsilon, false);
}

inline ClosedLoopStateSpace assemble_dapi_correlated(const WeightedGraph& physical,
                                                     const WeightedGraph& communication, const SystemParams& p) {
  p.validate();
  return detail::assemble_dapi_impl(physical, communication, NodeGains::uniform(physical.size(), p),
                                    p.alpha * laplacian(physical), p.epsilon, true);
}

inline ClosedLoopStateSpace assemble_dapi_correlated(const WeightedGraph& physical, const SystemParams& p) {
  p.validate();
  return assemble_dapi_correlated(physical, detail::communication_from_gamma(physical, p.gamma), p);
}

// ---------------------------------------------------------------------------
// CAPI

/// Per-node k and tau; the single integral state uses gain q.
inline ClosedLoopStateSpace assemble_capi(const WeightedGraph& physical, const WeightedGraph& conductance,
                                          const Eigen::VectorXd& k, const Eigen::VectorXd& tau, double q,
                                          double epsilon) {
  detail::check_physical(physical);
  detail::check_same_nodes(physical, conductance, "conductance");
  const auto n = static_cast<Eigen::Index>(physical.size());
  if (k.size() != n || tau.size() != n) throw std::domain_error("node gain vectors must have one entry per node");
  if ((k.array() <= 0.0).any() || (tau.array() <= 0.0).any() || !(q > 0.0))
    throw std::domain_error("gains must be positive");
  if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be >= 0");

  const Eigen::MatrixXd LB = laplacian(physical);
  const Eigen::VectorXd inv_tau = tau.cwiseInverse();
  const double nd = static_cast<double>(n);

  ClosedLoopStateSpace s;
  s.controller = Controller::capi;
  s.nodes = physical.size();
  s.epsilon = epsilon;
  s.fastest_time_constant = std::min(tau.minCoeff(), q);
  s.blocks = {{"theta", 0, n}, {"omega", n, n}, {"Omega", 2 * n, 1}};

  s.A = Eigen::MatrixXd::Zero(2 * n + 1, 2 * n + 1);
  s.A.block(0, n, n, n).setIdentity();
  s.A.block(n, 0, n, n) = -((inv_tau.cwiseProduct(k)).asDiagonal() * LB);
  s.A.block(n, n, n, n) = -Eigen::MatrixXd(inv_tau.asDiagonal());
  s.A.block(n, 2 * n, n, 1) = inv_tau;
  s.A.block(2 * n, n, 1, n).setConstant(-1.0 / (nd * q));

  s.B = Eigen::MatrixXd::Zero(2 * n + 1, 2 * n);
  s.B.block(n, 0, n, n) = inv_tau.asDiagonal();
  s.B.block(2 * n, n, 1, n).setConstant(epsilon / (nd * q));

  s.C = Eigen::MatrixXd::Zero(n, 2 * n + 1);
  s.C.block(0, 0, n, n) = detail::psd_sqrt(laplacian(conductance));
  return s;
}

/// Uniform parameters; p.gamma is ignored.
inline ClosedLoopStateSpace assemble_capi(const WeightedGraph& physical, const SystemParams& p) {
  p.validate();
  detail::check_physical(physical);
  const auto n = static_cast<Eigen::Index>(physical.size());
  auto s = assemble_capi(physical, physical, Eigen::VectorXd::Constant(n, p.k), Eigen::VectorXd::Constant(n, p.tau),
                         p.q, p.epsilon);
  s.C.block(0, 0, n, n) = detail::psd_sqrt(p.alpha * laplacian(physical));
  return s;
}

// ---------------------------------------------------------------------------
// Deflation of the network-average phase

/// Removes the theta-average state. The theta block is rotated by an
/// orthonormal basis whose first vector is 1/sqrt(n); that coordinate feeds
/// neither A nor C and is dropped. Throws NumericalError if it is coupled.
inline ClosedLoopStateSpace deflate_marginal_mode(const ClosedLoopStateSpace& s) {
  if (s.deflated) return s;
  const auto n = static_cast<Eigen::Index>(s.nodes);
  const Eigen::Index dim = s.state_dim();

  // Householder reflector H = I - 2 v v^T / v^T v with H e1 = 1/sqrt(n).
  Eigen::VectorXd v = -Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  v(0) += 1.0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  if (const double vv = v.squaredNorm(); vv > 0.0) H -= (2.0 / vv) * v * v.transpose();

  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(dim, dim);
  T.block(0, 0, n, n) = H;
  const Eigen::MatrixXd A = T.transpose() * s.A * T;
  const Eigen::MatrixXd B = T.transpose() * s.B;
  const Eigen::MatrixXd C = s.C * T;

  const double coupling = A.col(0).tail(dim - 1).norm() + C.col(0).norm();
  const double scale = std::max(1.0, s.A.norm() + s.C.norm());
  if (coupling > 1e-10 * scale)
    throw NumericalError("theta-average state is coupled to the rest of the system (norm " +
                         std::to_string(coupling) + ")");

  ClosedLoopStateSpace r = s;
  r.A = A.bottomRightCorner(dim - 1, dim - 1);
  r.B = B.bottomRows(dim - 1);
  r.C = C.rightCols(dim - 1);
  r.deflated = true;
  for (auto& b : r.blocks) {
    if (b.name == "theta") b.size -= 1;
    else b.offset -= 1;
  }
  return r;
}

}  // namespace dapi

#endif  // DAPI_CLOSED_LOOP_HPP
