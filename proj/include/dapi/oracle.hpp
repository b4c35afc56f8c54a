#ifndef DAPI_ORACLE_HPP
#define DAPI_ORACLE_HPP

// Independent numerical evaluations of the squared H2 norm
//   ||S||^2 = lim_{t -> inf} E[y^T y]
// used to validate the closed forms: a full-state Lyapunov solve, a sum of
// per-mode 3x3 Lyapunov solves, and a Monte-Carlo simulation.

#include "dapi/closed_loop.hpp"
#include "dapi/formulas.hpp"
#include "dapi/lyapunov.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace dapi {

enum class H2Method { lyapunov_full, lyapunov_per_mode, monte_carlo };

inline const char* to_string(H2Method m) {
  switch (m) {
    case H2Method::lyapunov_full: return "lyapunov_full";
    case H2Method::lyapunov_per_mode: return "lyapunov_per_mode";
    case H2Method::monte_carlo: return "monte_carlo";
  }
  return "?";
}

struct H2Result {
  double value = 0.0;
  H2Method method = H2Method::lyapunov_full;
  double std_error = 0.0;  // Monte-Carlo only
  bool infinite = false;
  std::string note;
  double residual = 0.0;  // Lyapunov relative residual (full method)
  // With extrapolation, the plain step-dt Euler estimate from the same run.
  double euler_value = 0.0;
  double euler_std_error = 0.0;

  static H2Result unbounded(H2Method m, std::string why) {
    return {std::numeric_limits<double>::infinity(), m, 0.0, true, std::move(why), 0.0};
  }
};

// ---------------------------------------------------------------------------
// Full Lyapunov

/// trace(B^T X B) with A^T X + X A + C^T C = 0 on the deflated system.
/// Throws NumericalError naming the offending eigenvalue if A is not Hurwitz.
inline H2Result h2_lyapunov(const ClosedLoopStateSpace& system) {
  if (system.marginally_stable_integral_states && system.epsilon > 0.0)
    return H2Result::unbounded(H2Method::lyapunov_full,
                               "integral states are not averaged: measurement noise drives an undamped mode");
  const ClosedLoopStateSpace s = deflate_marginal_mode(system);

  const auto rightmost = rightmost_eigenvalue(s.A);
  const double scale = std::max(1.0, s.A.norm());
  if (!(rightmost.real() < -1e-13 * scale)) {
    std::ostringstream msg;
    msg << "system is unstable or marginal: eigenvalue " << rightmost.real() << (rightmost.imag() < 0 ? " - " : " + ")
        << std::abs(rightmost.imag()) << "i";
    throw NumericalError(msg.str());
  }

  const Eigen::MatrixXd Q = s.C.transpose() * s.C;
  const auto sol = solve_lyapunov(s.A, Q);
  if (sol.relative_residual > 1e-9)
    throw NumericalError("Lyapunov residual " + std::to_string(sol.relative_residual) + " exceeds 1e-9");

  H2Result r;
  r.method = H2Method::lyapunov_full;
  r.value = (s.B.transpose() * sol.X * s.B).trace();
  r.residual = sol.relative_residual;
  return r;
}

// ---------------------------------------------------------------------------
// Per-mode Lyapunov

namespace detail {

// Solves the 3x3 Lyapunov equation through its 9x9 Kronecker form
// (I (x) A^T + A^T (x) I) vec(X) = -vec(C^T C).
inline double mode_h2(const Eigen::Matrix3d& A, const Eigen::Matrix<double, 3, 2>& B, const Eigen::RowVector3d& C) {
  Eigen::Matrix<double, 9, 9> K = Eigen::Matrix<double, 9, 9>::Zero();
  const Eigen::Matrix3d At = A.transpose();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      // vec is column-major: index = row + 3 * col
      K.block<3, 3>(3 * a, 3 * b) += (a == b ? 1.0 : 0.0) * At;  // I (x) A^T
      K.block<3, 3>(3 * a, 3 * b) += At(a, b) * Eigen::Matrix3d::Identity();  // A^T (x) I
    }
  }
  const Eigen::Matrix3d Q = C.transpose() * C;
  const Eigen::Matrix<double, 9, 1> rhs = -Eigen::Map<const Eigen::Matrix<double, 9, 1>>(Q.data());
  Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> lu(K);
  if (!lu.isInvertible()) throw NumericalError("per-mode Lyapunov operator is singular");
  const Eigen::Matrix<double, 9, 1> x = lu.solve(rhs);
  const Eigen::Matrix3d X = Eigen::Map<const Eigen::Matrix3d>(x.data());
  return (B.transpose() * X * B).trace();
}

}  // namespace detail

/// Contribution of a single mode with physical eigenvalue lambda_p and
/// communication eigenvalue lambda_c (both > 0).
inline double h2_single_mode(double lambda_p, double lambda_c, const SystemParams& p, Controller variant) {
  Eigen::Matrix3d A;
  A << 0.0, 1.0, 0.0,                                 //
      -p.k * lambda_p / p.tau, -1.0 / p.tau, 1.0 / p.tau,  //
      0.0, -1.0 / p.q, -lambda_c / p.q;
  Eigen::Matrix<double, 3, 2> B;
  B << 0.0, 0.0,  //
      1.0 / p.tau, (variant == Controller::dapi_correlated ? p.epsilon / p.tau : 0.0),  //
      0.0, p.epsilon / p.q;
  const Eigen::RowVector3d C(std::sqrt(p.alpha * lambda_p), 0.0, 0.0);
  return detail::mode_h2(A, B, C);
}

/// Sum of per-mode 3x3 solves over a jointly diagonalized spectrum, skipping
/// the zero-output mode lambda_p = 0.
inline H2Result h2_per_mode(const ModeSpectrum& modes, const SystemParams& p, Controller variant = Controller::dapi) {
  if (variant == Controller::capi) throw std::domain_error("per-mode oracle covers the DAPI variants");
  p.validate();
  H2Result r;
  r.method = H2Method::lyapunov_per_mode;
  for (const auto& m : modes) {
    if (m.lambda_p == 0.0) continue;
    if (m.lambda_c == 0.0 && p.epsilon > 0.0)
      return H2Result::unbounded(H2Method::lyapunov_per_mode, "mode without integral-state averaging");
    r.value += h2_single_mode(m.lambda_p, m.lambda_c, p, variant);
  }
  return r;
}

inline H2Result h2_per_mode(const LaplacianSpectrum& spec, const SystemParams& p,
                            Controller variant = Controller::dapi) {
  return h2_per_mode(paired_modes(spec, p.gamma), p, variant);
}

// ---------------------------------------------------------------------------
// Monte-Carlo

/// Unset fields resolve to defaults derived from the system:
///   dt = 1e-3 * min(tau, q), t_burn = 50 / slowest decay rate,
///   t_avg = 10 * t_burn, n_seeds = 8.
struct SimConfig {
  std::optional<double> dt;
  std::optional<double> t_burn;
  std::optional<double> t_avg;
  int n_seeds = 8;
  std::uint64_t rng_seed = 20170101;
  int sample_every = 10;  // Euler steps between samples of y^T y
  unsigned threads = 0;   // 0: hardware concurrency
  // Also run a step-2dt chain on the same noise path and report
  // 2 M(dt) - M(2 dt), which cancels the first-order step bias.
  bool extrapolate = false;
};

struct ResolvedSimConfig {
  double dt = 0.0;
  double t_burn = 0.0;
  double t_avg = 0.0;
  int n_seeds = 0;
  std::uint64_t rng_seed = 0;
  int sample_every = 1;
  unsigned threads = 1;
  bool extrapolate = false;
  double slowest_time_constant = 0.0;
};

/// Smallest |Re lambda| over the eigenvalues of a Hurwitz matrix.
inline double slowest_decay_rate(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  double rate = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double re = es.eigenvalues()(i).real();
    if (!(re < 0.0)) throw NumericalError("Monte-Carlo needs a stable system (eigenvalue real part " +
                                          std::to_string(re) + ")");
    rate = std::min(rate, -re);
  }
  return rate;
}

inline ResolvedSimConfig resolve(const SimConfig& cfg, const ClosedLoopStateSpace& deflated) {
  ResolvedSimConfig r;
  const double rate = slowest_decay_rate(deflated.A);
  r.slowest_time_constant = 1.0 / rate;
  r.dt = cfg.dt.value_or(1e-3 * deflated.fastest_time_constant);
  r.t_burn = cfg.t_burn.value_or(50.0 * r.slowest_time_constant);
  r.t_avg = cfg.t_avg.value_or(10.0 * r.t_burn);
  r.n_seeds = cfg.n_seeds;
  r.rng_seed = cfg.rng_seed;
  r.sample_every = cfg.sample_every;
  r.extrapolate = cfg.extrapolate;
  r.threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());

  const double slack = 1.0 - 1e-12;
  if (!(r.dt > 0.0)) throw std::domain_error("dt must be positive");
  if (r.t_burn < 50.0 * r.slowest_time_constant * slack)
    throw std::domain_error("t_burn must cover at least 50 slowest time constants");
  if (r.t_avg < 100.0 * r.slowest_time_constant * slack)
    throw std::domain_error("t_avg must cover at least 100 slowest time constants");
  if (r.n_seeds < 4) throw std::domain_error("n_seeds must be >= 4");
  if (r.sample_every < 1) throw std::domain_error("sample_every must be >= 1");
  return r;
}

/// Standard normal stream: mt19937_64 with the Box-Muller transform, so runs
/// are bit-reproducible independent of the standard library.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * scale;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * scale;          // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {

struct ReplicationStats {
  double fine = 0.0;
  double coarse = 0.0;  // step 2 dt, only with extrapolation
};

// Euler-Maruyama: x <- (I + dt A) x + sqrt(dt) B z, z ~ N(0, I); time average
// of y^T y after burn-in. The coarse chain takes one step per pair of fine
// steps with the summed increments, so both follow the same Brownian path.
inline ReplicationStats simulate_replication(const ClosedLoopStateSpace& s, const ResolvedSimConfig& cfg,
                                             int replication) {
  const Eigen::Index dim = s.state_dim();
  const Eigen::Index channels = s.noise_channels();
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(dim, dim) + cfg.dt * s.A;
  const Eigen::MatrixXd coarse_step = Eigen::MatrixXd::Identity(dim, dim) + 2.0 * cfg.dt * s.A;
  const Eigen::SparseMatrix<double> noise = (std::sqrt(cfg.dt) * s.B).sparseView();

  std::vector<GaussianStream> streams;
  streams.reserve(static_cast<std::size_t>(channels));
  for (Eigen::Index ch = 0; ch < channels; ++ch)
    streams.emplace_back(cfg.rng_seed + static_cast<std::uint64_t>(ch) * (std::uint64_t{1} << 20) +
                         static_cast<std::uint64_t>(replication));

  const auto burn_steps = static_cast<std::int64_t>(std::ceil(cfg.t_burn / cfg.dt));
  const auto avg_steps = static_cast<std::int64_t>(std::ceil(cfg.t_avg / cfg.dt));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim), next(dim), z(channels), y(s.C.rows());
  Eigen::VectorXd xc = Eigen::VectorXd::Zero(dim), zc = Eigen::VectorXd::Zero(channels);
  double acc = 0.0, acc_c = 0.0;
  std::int64_t samples = 0, samples_c = 0;
  for (std::int64_t t = 0; t < burn_steps + avg_steps; ++t) {
    for (Eigen::Index ch = 0; ch < channels; ++ch) z(ch) = streams[static_cast<std::size_t>(ch)]();
    next.noalias() = step * x;
    next.noalias() += noise * z;
    x.swap(next);
    if (t >= burn_steps && (t - burn_steps) % cfg.sample_every == 0) {
      y.noalias() = s.C * x;
      acc += y.squaredNorm();
      ++samples;
    }
    if (cfg.extrapolate) {
      zc += z;
      if (t & 1) {
        next.noalias() = coarse_step * xc;
        next.noalias() += noise * zc;
        xc.swap(next);
        zc.setZero();
        if (t >= burn_steps && (t / 2) % cfg.sample_every == 0) {
          y.noalias() = s.C * xc;
          acc_c += y.squaredNorm();
          ++samples_c;
        }
      }
    }
    if ((t & 1023) == 0 && !(x.norm() <= 1e6 && xc.norm() <= 1e6))
      throw NumericalError("Monte-Carlo state diverged (norm > 1e6) at step " + std::to_string(t));
  }
  ReplicationStats r;
  r.fine = samples > 0 ? acc / static_cast<double>(samples) : 0.0;
  r.coarse = samples_c > 0 ? acc_c / static_cast<double>(samples_c) : 0.0;
  return r;
}

inline std::pair<double, double> mean_and_std_error(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace detail

/// Steady-state E[y^T y] by simulation; mean over replications with the
/// across-replication standard error.
inline H2Result h2_monte_carlo(const ClosedLoopStateSpace& system, const SimConfig& config = {}) {
  if (system.marginally_stable_integral_states)
    throw NumericalError("Monte-Carlo needs a stable system; integral states are not averaged");
  const ClosedLoopStateSpace s = deflate_marginal_mode(system);
  const ResolvedSimConfig cfg = resolve(config, s);

  std::vector<detail::ReplicationStats> per_seed(static_cast<std::size_t>(cfg.n_seeds));
  if (cfg.threads <= 1) {
    for (int r = 0; r < cfg.n_seeds; ++r) per_seed[static_cast<std::size_t>(r)] = detail::simulate_replication(s, cfg, r);
  } else {
    for (int first = 0; first < cfg.n_seeds; first += static_cast<int>(cfg.threads)) {
      std::vector<std::future<detail::ReplicationStats>> batch;
      const int last = std::min(cfg.n_seeds, first + static_cast<int>(cfg.threads));
      for (int r = first; r < last; ++r)
        batch.push_back(std::async(std::launch::async, [&s, &cfg, r] { return detail::simulate_replication(s, cfg, r); }));
      for (int r = first; r < last; ++r) per_seed[static_cast<std::size_t>(r)] = batch[static_cast<std::size_t>(r - first)].get();
    }
  }

  std::vector<double> fine, combined;
  for (const auto& st : per_seed) {
    fine.push_back(st.fine);
    combined.push_back(2.0 * st.fine - st.coarse);
  }
  H2Result r;
  r.method = H2Method::monte_carlo;
  std::tie(r.euler_value, r.euler_std_error) = detail::mean_and_std_error(fine);
  if (cfg.extrapolate)
    std::tie(r.value, r.std_error) = detail::mean_and_std_error(combined);
  else {
    r.value = r.euler_value;
    r.std_error = r.euler_std_error;
  }
  return r;
}

}  // namespace dapi

#endif  // DAPI_ORACLE_HPP
