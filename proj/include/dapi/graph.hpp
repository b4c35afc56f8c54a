#ifndef DAPI_GRAPH_HPP
#define DAPI_GRAPH_HPP

// Weighted undirected graphs, their Laplacians and Laplacian spectra.
//
// Graphs are immutable values: add_edge/scale_edge/scaled return new graphs.
// Structured families (q-fuzz rings, paths, tori, complete graphs) also have
// closed-form spectra here so that large-n experiments avoid dense solves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dapi {

/// Raised when an iterative numerical routine fails (non-convergence,
/// instability, residual too large). Preconditions use std::domain_error.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class WeightedGraph {
public:
  WeightedGraph() = default;

  /// Edges are normalized to i < j and sorted. Throws std::domain_error on
  /// self-loops, out-of-range ids, duplicates or non-positive weights.
  WeightedGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ == 0) throw std::domain_error("graph needs at least one node");
    for (auto& e : edges_) {
      if (e.i == e.j) throw std::domain_error("self-loop at node " + std::to_string(e.i));
      if (e.i >= n_ || e.j >= n_) throw std::domain_error("edge endpoint out of range");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw std::domain_error("edge weights must be finite and strictly positive");
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
      if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j)
        throw std::domain_error("duplicate edge (" + std::to_string(edges_[k].i) + ", " +
                                std::to_string(edges_[k].j) + ")");
    }
  }

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<double> weight(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(i, j),
                               [](const Edge& e, const std::pair<std::size_t, std::size_t>& key) {
                                 return std::pair(e.i, e.j) < key;
                               });
    if (it == edges_.end() || it->i != i || it->j != j) return std::nullopt;
    return it->weight;
  }

  bool has_edge(std::size_t i, std::size_t j) const { return weight(i, j).has_value(); }

  std::size_t component_count() const {
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n_;
    for (const auto& e : edges_) {
      auto a = find(e.i), b = find(e.j);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components;
  }

  bool is_connected() const { return component_count() == 1; }

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : edges_) s += e.weight;
    return s;
  }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

/// Laplacian eigenvalues in nondecreasing order, with the zero mode(s)
/// clamped to exactly zero. Eigenvectors are present only when requested.
struct LaplacianSpectrum {
  Eigen::VectorXd eigenvalues;
  std::optional<Eigen::MatrixXd> eigenvectors;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double operator[](std::size_t i) const { return eigenvalues(static_cast<Eigen::Index>(i)); }

  /// Smallest nonzero eigenvalue (algebraic connectivity for connected graphs).
  double lambda2() const {
    if (eigenvalues.size() < 2) throw std::domain_error("spectrum has no second eigenvalue");
    return eigenvalues(1);
  }
  double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
  bool connected() const { return eigenvalues.size() >= 2 && eigenvalues(1) > 0.0; }
};

// ---------------------------------------------------------------------------
// Builders

/// Periodic ring where node i is joined to i±1, ..., i±q (mod n).
inline WeightedGraph build_ring_qfuzz(std::size_t n, std::size_t q, double weight) {
  if (n < 3) throw std::domain_error("ring needs n >= 3");
  if (q < 1 || 2 * q >= n) throw std::domain_error("fuzz radius must satisfy 1 <= q < n/2");
  std::vector<Edge> edges;
  edges.reserve(n * q);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 1; d <= q; ++d) edges.push_back({i, (i + d) % n, weight});
  return WeightedGraph(n, std::move(edges));
}

inline WeightedGraph build_ring(std::size_t n, double weight) { return build_ring_qfuzz(n, 1, weight); }

inline WeightedGraph build_path(std::size_t n, double weight) {
  if (n < 2) throw std::domain_error("path needs n >= 2");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, weight});
  return WeightedGraph(n, std::move(edges));
}

/// 4-regular periodic grid; node (r, c) has id r * cols + c.
inline WeightedGraph build_torus_2d(std::size_t rows, std::size_t cols, double weight) {
  if (rows < 3 || cols < 3) throw std::domain_error("torus needs rows, cols >= 3");
  std::vector<Edge> edges;
  edges.reserve(2 * rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t id = r * cols + c;
      edges.push_back({id, r * cols + (c + 1) % cols, weight});
      edges.push_back({id, ((r + 1) % rows) * cols + c, weight});
    }
  }
  return WeightedGraph(rows * cols, std::move(edges));
}

/// Non-periodic rows x cols grid. Provided for completeness; scaling claims
/// are only checked on the torus.
inline WeightedGraph build_grid_2d(std::size_t rows, std::size_t cols, double weight) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw std::domain_error("grid needs at least two nodes");
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t id = r * cols + c;
      if (c + 1 < cols) edges.push_back({id, id + 1, weight});
      if (r + 1 < rows) edges.push_back({id, id + cols, weight});
    }
  }
  return WeightedGraph(rows * cols, std::move(edges));
}

inline WeightedGraph build_complete(std::size_t n, double weight) {
  if (n < 2) throw std::domain_error("complete graph needs n >= 2");
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j, weight});
  return WeightedGraph(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Edits

inline WeightedGraph add_edge(const WeightedGraph& g, std::size_t i, std::size_t j, double weight) {
  if (i == j) throw std::domain_error("cannot add a self-loop");
  if (g.has_edge(i, j))
    throw std::domain_error("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") already present");
  auto edges = g.edges();
  edges.push_back({i, j, weight});
  return WeightedGraph(g.size(), std::move(edges));
}

inline WeightedGraph scale_edge(const WeightedGraph& g, std::size_t i, std::size_t j, double factor) {
  if (!(factor > 0.0)) throw std::domain_error("scale factor must be positive");
  if (i > j) std::swap(i, j);
  auto edges = g.edges();
  auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.i == i && e.j == j; });
  if (it == edges.end())
    throw std::domain_error("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") not present");
  it->weight *= factor;
  return WeightedGraph(g.size(), std::move(edges));
}

/// Multiplies every edge weight by c (e.g. L_C = gamma * L_B).
inline WeightedGraph scaled(const WeightedGraph& g, double c) {
  if (!(c > 0.0)) throw std::domain_error("graph scale factor must be positive");
  auto edges = g.edges();
  for (auto& e : edges) e.weight *= c;
  return WeightedGraph(g.size(), std::move(edges));
}

// ---------------------------------------------------------------------------
// Laplacian and spectrum

inline Eigen::MatrixXd laplacian(const WeightedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
    L(i, j) -= e.weight;
    L(j, i) -= e.weight;
    L(i, i) += e.weight;
    L(j, j) += e.weight;
  }
  return L;
}

namespace detail {

// Eigenvalues below rel_tol * lambda_max are floating-point noise at the
// zero mode(s).
inline void clamp_zero_modes(Eigen::VectorXd& values, double rel_tol = 1e-12) {
  if (values.size() == 0) return;
  const double cutoff = rel_tol * std::max(values.maxCoeff(), 0.0);
  for (auto& v : values)
    if (v < cutoff) v = 0.0;
}

inline LaplacianSpectrum sorted_spectrum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  LaplacianSpectrum s;
  s.eigenvalues = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  clamp_zero_modes(s.eigenvalues);
  return s;
}

}  // namespace detail

/// Dense symmetric eigendecomposition of the Laplacian.
inline LaplacianSpectrum spectrum(const WeightedGraph& g, bool with_eigenvectors = false) {
  const Eigen::MatrixXd L = laplacian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      L, with_eigenvectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Laplacian eigensolver did not converge");
  LaplacianSpectrum s;
  s.eigenvalues = solver.eigenvalues();
  if (!s.eigenvalues.allFinite()) throw NumericalError("Laplacian eigensolver returned non-finite values");
  detail::clamp_zero_modes(s.eigenvalues);
  if (with_eigenvectors) s.eigenvectors = solver.eigenvectors();
  return s;
}

// ---------------------------------------------------------------------------
// Closed-form spectra of structured families

/// Eigenvalue of Fourier mode m of a q-fuzz ring: sum_{d=1..q} 2w(1 - cos(2 pi m d / n)).
inline double ring_qfuzz_mode_eigenvalue(std::size_t n, std::size_t q, double weight, std::size_t mode) {
  double s = 0.0;
  for (std::size_t d = 1; d <= q; ++d) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((mode * d) % n) / static_cast<double>(n);
    s += 2.0 * weight * (1.0 - std::cos(angle));
  }
  return s;
}

inline LaplacianSpectrum ring_qfuzz_spectrum(std::size_t n, std::size_t q, double weight) {
  if (n < 3 || q < 1 || 2 * q >= n) throw std::domain_error("invalid q-fuzz ring");
  std::vector<double> v(n);
  for (std::size_t m = 0; m < n; ++m) v[m] = ring_qfuzz_mode_eigenvalue(n, q, weight, m);
  return detail::sorted_spectrum(std::move(v));
}

/// 2w(1 - cos(pi i / n)), i = 0..n-1.
inline LaplacianSpectrum path_spectrum(std::size_t n, double weight) {
  if (n < 2) throw std::domain_error("path needs n >= 2");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = 2.0 * weight * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return detail::sorted_spectrum(std::move(v));
}

inline LaplacianSpectrum torus_2d_spectrum(std::size_t rows, std::size_t cols, double weight) {
  if (rows < 3 || cols < 3) throw std::domain_error("torus needs rows, cols >= 3");
  std::vector<double> v;
  v.reserve(rows * cols);
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b)
      v.push_back(ring_qfuzz_mode_eigenvalue(rows, 1, weight, a) + ring_qfuzz_mode_eigenvalue(cols, 1, weight, b));
  return detail::sorted_spectrum(std::move(v));
}

inline LaplacianSpectrum complete_spectrum(std::size_t n, double weight) {
  if (n < 2) throw std::domain_error("complete graph needs n >= 2");
  std::vector<double> v(n, static_cast<double>(n) * weight);
  v[0] = 0.0;
  return detail::sorted_spectrum(std::move(v));
}

// ---------------------------------------------------------------------------
// Circulant structure

/// Weight of the edge from node 0 to node d, for d = 0..n-1, if g is
/// circulant (invariant under i -> i+1 mod n); nullopt otherwise.
inline std::optional<std::vector<double>> circulant_offsets(const WeightedGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> offset(n, 0.0);
  for (const auto& e : g.edges()) {
    const std::size_t d = (e.j + n - e.i) % n;
    for (std::size_t dd : {d, n - d}) {
      double& slot = offset[dd];
      if (slot == 0.0) slot = e.weight;
      else if (std::abs(slot - e.weight) > 1e-12 * e.weight) return std::nullopt;
    }
  }
  // Consistent offsets and no duplicates: the graph is circulant iff it has
  // as many edges as the union of the offset orbits.
  std::size_t expected = 0;
  for (std::size_t d = 1; d < n; ++d)
    if (offset[d] > 0.0) expected += n;
  if (expected / 2 != g.edges().size()) return std::nullopt;
  return offset;
}

/// Laplacian eigenvalues of a circulant graph indexed by Fourier mode
/// (not sorted): lambda_m = sum_d w_d (1 - cos(2 pi m d / n)).
inline std::optional<Eigen::VectorXd> circulant_mode_eigenvalues(const WeightedGraph& g) {
  auto offsets = circulant_offsets(g);
  if (!offsets) return std::nullopt;
  const std::size_t n = g.size();
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) {
    double s = 0.0;
    for (std::size_t d = 1; d < n; ++d) {
      if ((*offsets)[d] == 0.0) continue;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((m * d) % n) / static_cast<double>(n);
      s += (*offsets)[d] * (1.0 - std::cos(angle));
    }
    lam(static_cast<Eigen::Index>(m)) = s;
  }
  detail::clamp_zero_modes(lam);
  return lam;
}

// ---------------------------------------------------------------------------
// Edge-list file format:
//   n <count>
//   i j weight      (0-based, one edge per line; '#' starts a comment)

inline WeightedGraph read_edge_list(std::istream& in) {
  std::string line;
  std::optional<std::size_t> n;
  std::vector<Edge> edges;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (!n) {
      std::size_t count = 0;
      if (first != "n" || !(ss >> count))
        throw std::domain_error("line " + std::to_string(lineno) + ": expected header 'n <count>'");
      n = count;
      continue;
    }
    Edge e;
    std::istringstream full(line);
    if (!(full >> e.i >> e.j >> e.weight))
      throw std::domain_error("line " + std::to_string(lineno) + ": expected 'i j weight'");
    edges.push_back(e);
  }
  if (!n) throw std::domain_error("edge list is missing the 'n <count>' header");
  return WeightedGraph(*n, std::move(edges));
}

inline WeightedGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::domain_error("cannot open graph file '" + path + "'");
  return read_edge_list(in);
}

inline void write_edge_list(std::ostream& out, const WeightedGraph& g) {
  out << "n " << g.size() << '\n';
  out.precision(17);
  for (const auto& e : g.edges()) out << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

}  // namespace dapi

#endif  // DAPI_GRAPH_HPP
