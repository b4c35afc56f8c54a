#ifndef DAPI_FORMULAS_HPP
#define DAPI_FORMULAS_HPP

// Closed-form squared H2 norms (expected resistive power losses) of the DAPI
// and CAPI closed loops, split into the injection-noise part and the
// measurement-noise part.

#include "dapi/closed_loop.hpp"
#include "dapi/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapi {

struct LossBreakdown {
  double p_part = 0.0;    // losses driven by power-injection noise P
  double eta_part = 0.0;  // losses driven by frequency-measurement noise eta
  double total = 0.0;
  /// Set when the losses are unbounded; p_part stays meaningful, eta_part and
  /// total are +inf.
  std::optional<std::string> divergence;

  bool finite() const { return !divergence.has_value(); }

  static LossBreakdown make(double p, double eta) { return {p, eta, p + eta, std::nullopt}; }

  static LossBreakdown diverged(double p, std::string reason) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {p, inf, inf, std::move(reason)};
  }
};

/// Gain of one Laplacian mode:
///   phi = (k q^2 lambda + q gamma lambda + tau (gamma lambda)^2) / (q + tau gamma lambda).
inline double phi(double lambda, const SystemParams& p) {
  if (lambda < 0.0) throw std::domain_error("phi needs lambda >= 0");
  const double gl = p.gamma * lambda;
  const double den = p.q + p.tau * gl;
  if (!(den > 0.0)) throw std::domain_error("phi denominator vanished");
  return (p.k * p.q * p.q * lambda + p.q * gl + p.tau * gl * gl) / den;
}

/// Mode gain for separate physical and communication layers sharing a mode:
///   phi_hat = (k lambda_P q^2 + lambda_C q + lambda_C^2 tau) / (q + lambda_C tau).
inline double phi_hat(double lambda_p, double lambda_c, const SystemParams& p) {
  if (lambda_p < 0.0 || lambda_c < 0.0) throw std::domain_error("phi_hat needs nonnegative eigenvalues");
  const double den = p.q + lambda_c * p.tau;
  return (p.k * lambda_p * p.q * p.q + lambda_c * p.q + lambda_c * lambda_c * p.tau) / den;
}

namespace detail {

// 1 / (1 + phi^{-1}) written so that phi = 0 is harmless.
inline double injection_share(double ph) { return ph / (1.0 + ph); }
inline double measurement_share(double ph) { return 1.0 / (1.0 + ph); }

inline void require_connected(const LaplacianSpectrum& s) {
  if (!s.connected()) throw std::domain_error("closed forms need the spectrum of a connected graph");
}

}  // namespace detail

inline LossBreakdown capi_losses(std::size_t n, const SystemParams& p) {
  if (n < 1) throw std::domain_error("capi_losses needs n >= 1");
  return LossBreakdown::make(p.alpha / (2.0 * p.k) * static_cast<double>(n - 1), 0.0);
}

inline LossBreakdown dapi_losses(const LaplacianSpectrum& spec, const SystemParams& p) {
  p.validate();
  detail::require_connected(spec);
  const double pre = p.alpha / (2.0 * p.k);
  double p_sum = 0.0, eta_sum = 0.0;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    const double lam = spec[i];
    const double ph = phi(lam, p);
    p_sum += detail::injection_share(ph);
    if (p.epsilon > 0.0 && p.gamma > 0.0) eta_sum += detail::measurement_share(ph) / (p.gamma * lam);
  }
  if (p.dapi_diverges())
    return LossBreakdown::diverged(pre * p_sum, "gamma = 0 with measurement noise: integral states drift");
  return LossBreakdown::make(pre * p_sum, p.epsilon * p.epsilon * pre * eta_sum);
}

/// Correlated-noise model: eta also enters the swing equation. The total is
///   (alpha/2k) sum [(1 + eps^2) phi/(1+phi) + eps^2 (2 + 1/(gamma lambda)) / (1+phi)];
/// p_part keeps only the P-driven share.
inline LossBreakdown dapi_losses_correlated(const LaplacianSpectrum& spec, const SystemParams& p) {
  p.validate();
  detail::require_connected(spec);
  const double pre = p.alpha / (2.0 * p.k);
  const double e2 = p.epsilon * p.epsilon;
  double p_sum = 0.0, eta_sum = 0.0;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    const double lam = spec[i];
    const double ph = phi(lam, p);
    p_sum += detail::injection_share(ph);
    // eta reaches the swing equation directly (phi / (1 + phi), as P does) and
    // through the integral state
    if (e2 > 0.0 && p.gamma > 0.0)
      eta_sum += detail::injection_share(ph) + (2.0 + 1.0 / (p.gamma * lam)) * detail::measurement_share(ph);
  }
  if (p.dapi_diverges())
    return LossBreakdown::diverged(pre * p_sum, "gamma = 0 with measurement noise: integral states drift");
  return LossBreakdown::make(pre * p_sum, pre * e2 * eta_sum);
}

// ---------------------------------------------------------------------------
// Separate physical and communication layers

/// Eigenvalue pair of one mode shared by L_B and L_C.
struct ModePair {
  double lambda_p = 0.0;
  double lambda_c = 0.0;
};

/// Jointly diagonalized spectrum. Entry 0 is the shared all-ones mode.
using ModeSpectrum = std::vector<ModePair>;

/// Pairs (lambda_i, gamma * lambda_i): the L_C = gamma L_B case.
inline ModeSpectrum paired_modes(const LaplacianSpectrum& spec, double gamma) {
  ModeSpectrum modes(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) modes[i] = {spec[i], gamma * spec[i]};
  return modes;
}

/// Fourier-indexed pairing of a q_P-fuzz ring (weight w_p) and a q_C-fuzz
/// ring (weight w_c) on the same n nodes.
inline ModeSpectrum ring_qfuzz_modes(std::size_t n, std::size_t q_p, double w_p, std::size_t q_c, double w_c) {
  if (n < 3 || q_p < 1 || q_c < 1 || 2 * q_p >= n || 2 * q_c >= n) throw std::domain_error("invalid q-fuzz ring");
  ModeSpectrum modes(n);
  for (std::size_t m = 0; m < n; ++m)
    modes[m] = {ring_qfuzz_mode_eigenvalue(n, q_p, w_p, m), ring_qfuzz_mode_eigenvalue(n, q_c, w_c, m)};
  return modes;
}

/// Joint spectrum of two commuting Laplacians. Circulant pairs are matched by
/// Fourier index; other commuting pairs via the eigenvectors of a generic
/// combination L_B + c L_C. Throws std::domain_error if
/// ||L_B L_C - L_C L_B|| > 1e-9.
inline ModeSpectrum paired_modes(const WeightedGraph& physical, const WeightedGraph& communication) {
  if (physical.size() != communication.size()) throw std::domain_error("graphs must share the node set");
  const Eigen::MatrixXd LB = laplacian(physical);
  const Eigen::MatrixXd LC = laplacian(communication);
  const double commutator = (LB * LC - LC * LB).norm();
  if (commutator > 1e-9)
    throw std::domain_error("Laplacians do not commute (||[L_B, L_C]|| = " + std::to_string(commutator) + ")");

  const std::size_t n = physical.size();
  ModeSpectrum modes(n);
  auto circ_p = circulant_mode_eigenvalues(physical);
  auto circ_c = circulant_mode_eigenvalues(communication);
  if (circ_p && circ_c) {
    for (std::size_t m = 0; m < n; ++m) {
      const auto i = static_cast<Eigen::Index>(m);
      modes[m] = {(*circ_p)(i), (*circ_c)(i)};
    }
    return modes;
  }

  constexpr double mix = 0.6180339887498949;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(LB + mix * LC);
  if (es.info() != Eigen::Success) throw NumericalError("joint diagonalization failed");
  const Eigen::MatrixXd& V = es.eigenvectors();
  Eigen::VectorXd lp(static_cast<Eigen::Index>(n)), lc(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    lp(i) = V.col(i).dot(LB * V.col(i));
    lc(i) = V.col(i).dot(LC * V.col(i));
  }
  detail::clamp_zero_modes(lp);
  detail::clamp_zero_modes(lc);
  for (std::size_t m = 0; m < n; ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    modes[m] = {lp(i), lc(i)};
  }
  return modes;  // ascending in lambda_p + mix * lambda_c, so the zero mode is first
}

inline LossBreakdown dapi_losses_separated(const ModeSpectrum& modes, const SystemParams& p) {
  p.validate();
  if (modes.size() < 2) throw std::domain_error("need at least two modes");
  const double pre = p.alpha / (2.0 * p.k);
  const double e2 = p.epsilon * p.epsilon;
  double p_sum = 0.0, eta_sum = 0.0;
  bool diverges = false;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto [lp, lc] = modes[i];
    if (lp == 0.0 && lc == 0.0) continue;  // shared all-ones mode
    if (lp == 0.0) throw std::domain_error("physical graph must be connected");
    const double ph = phi_hat(lp, lc, p);
    p_sum += detail::injection_share(ph);
    if (e2 > 0.0) {
      if (lc == 0.0) diverges = true;
      else eta_sum += detail::measurement_share(ph) / lc;
    }
  }
  if (diverges)
    return LossBreakdown::diverged(pre * p_sum, "communication graph disconnected: undamped integral modes");
  return LossBreakdown::make(pre * p_sum, pre * e2 * eta_sum);
}

/// Convenience over two graphs (commutation-checked).
inline LossBreakdown dapi_losses_separated(const WeightedGraph& physical, const WeightedGraph& communication,
                                           const SystemParams& p) {
  if (!physical.is_connected()) throw std::domain_error("physical graph must be connected");
  return dapi_losses_separated(paired_modes(physical, communication), p);
}

}  // namespace dapi

#endif  // DAPI_FORMULAS_HPP
