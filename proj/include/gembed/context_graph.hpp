#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"

namespace gembed {

enum class GraphKind { Chain, OmegaNN, Lattice, Custom };

/// Undirected context graph over m nodes. Each node j carries a sorted
/// neighbor set c_j; the adjacency operator is exposed both as a dense 0/1
/// matrix and as the sparse accumulation context_sums(X, g) = X A.
/// Immutable after construction; all queries are const and thread-safe.
class ContextGraph {
 public:
  /// Path graph: c_0 = {1}, c_{m-1} = {m-2}, interior c_j = {j-1, j+1}.
  static ContextGraph chain(int m) {
    if (m < 2) throw InputError("chain: m must be >= 2");
    std::vector<std::vector<int>> ctx(m);
    for (int j = 0; j < m; ++j) {
      if (j > 0) ctx[j].push_back(j - 1);
      if (j + 1 < m) ctx[j].push_back(j + 1);
    }
    return ContextGraph(m, std::move(ctx), GraphKind::Chain);
  }

  /// Each node is adjacent to its preceding and subsequent omega nodes;
  /// omega = 1 coincides with chain(m).
  static ContextGraph omega_nn(int m, int omega) {
    if (m < 2) throw InputError("omega_nn: m must be >= 2");
    if (omega < 1 || omega > m - 1) throw InputError("omega_nn: omega out of range");
    std::vector<std::vector<int>> ctx(m);
    for (int j = 0; j < m; ++j)
      for (int k = std::max(0, j - omega); k <= std::min(m - 1, j + omega); ++k)
        if (k != j) ctx[j].push_back(k);
    ContextGraph g(m, std::move(ctx), GraphKind::OmegaNN);
    g.omega_ = omega;
    return g;
  }

  /// rows x cols 4-neighbor grid, row-major node numbering, no wraparound.
  static ContextGraph lattice(int rows, int cols) {
    if (rows < 2 || cols < 2) throw InputError("lattice: dims must be >= 2");
    const int m = rows * cols;
    std::vector<std::vector<int>> ctx(m);
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        auto& cj = ctx[id(r, c)];
        if (r > 0) cj.push_back(id(r - 1, c));
        if (c > 0) cj.push_back(id(r, c - 1));
        if (c + 1 < cols) cj.push_back(id(r, c + 1));
        if (r + 1 < rows) cj.push_back(id(r + 1, c));
      }
    ContextGraph g(m, std::move(ctx), GraphKind::Lattice);
    g.rows_ = rows;
    g.cols_ = cols;
    return g;
  }

  /// Build from an explicit edge list (0-based). Duplicates and reversed
  /// pairs are deduplicated; self-loops are rejected.
  static ContextGraph from_edges(int m, const std::vector<std::pair<int, int>>& edges) {
    if (m < 2) throw InputError("from_edges: m must be >= 2");
    std::set<std::pair<int, int>> uniq;
    for (auto [j, k] : edges) {
      if (j == k) throw InputError("from_edges: self-loop rejected");
      if (j < 0 || k < 0 || j >= m || k >= m)
        throw InputError("from_edges: node index out of range");
      uniq.insert({std::min(j, k), std::max(j, k)});
    }
    std::vector<std::vector<int>> ctx(m);
    for (auto [j, k] : uniq) {
      ctx[j].push_back(k);
      ctx[k].push_back(j);
    }
    for (auto& c : ctx) std::sort(c.begin(), c.end());
    return ContextGraph(m, std::move(ctx), GraphKind::Custom);
  }

  /// Edge-list file: one "j k" pair per line, whitespace-separated, 0-based;
  /// '#' starts a comment. Node count is max index + 1.
  static ContextGraph from_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open edge list: " + path);
    std::vector<std::pair<int, int>> edges;
    int max_node = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      long j, k;
      if (!(ls >> j)) continue;  // blank or comment-only line
      if (!(ls >> k))
        throw IoError(path + ":" + std::to_string(lineno) + ": expected \"j k\" pair");
      std::string extra;
      if (ls >> extra)
        throw IoError(path + ":" + std::to_string(lineno) + ": trailing tokens");
      if (j < 0 || k < 0)
        throw IoError(path + ":" + std::to_string(lineno) + ": negative node index");
      if (j == k)
        throw IoError(path + ":" + std::to_string(lineno) + ": self-loop rejected");
      edges.emplace_back(static_cast<int>(j), static_cast<int>(k));
      max_node = std::max(max_node, static_cast<int>(std::max(j, k)));
    }
    if (edges.empty()) throw IoError(path + ": no edges");
    return from_edges(max_node + 1, edges);
  }

  int m() const { return m_; }
  GraphKind kind() const { return kind_; }
  int omega() const { return omega_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<int>& context(int j) const { return contexts_[j]; }
  const std::vector<std::vector<int>>& contexts() const { return contexts_; }
  int degree(int j) const { return static_cast<int>(contexts_[j].size()); }
  int max_degree() const {
    int d = 0;
    for (const auto& c : contexts_) d = std::max<int>(d, static_cast<int>(c.size()));
    return d;
  }
  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& c : contexts_) twice += c.size();
    return twice / 2;
  }

  /// Dense 0/1 adjacency matrix, symmetric with zero diagonal.
  Matrix adjacency() const {
    Matrix a = Matrix::Zero(m_, m_);
    for (int j = 0; j < m_; ++j)
      for (int k : contexts_[j]) a(j, k) = 1.0;
    return a;
  }

 private:
  ContextGraph(int m, std::vector<std::vector<int>> contexts, GraphKind kind)
      : m_(m), contexts_(std::move(contexts)), kind_(kind) {
    for (auto& c : contexts_) std::sort(c.begin(), c.end());
  }

  int m_;
  std::vector<std::vector<int>> contexts_;
  GraphKind kind_;
  int omega_ = 0;
  int rows_ = 0;
  int cols_ = 0;
};

/// X_tilde = X A by sparse accumulation over context sets: column j is
/// sum_{k in c_j} x_k. Matches the dense product to rounding; the dense
/// multiply is kept as a test oracle.
inline Matrix context_sums(const Matrix& x, const ContextGraph& g) {
  if (x.cols() != g.m()) throw InputError("context_sums: X must have m columns");
  Matrix xt = Matrix::Zero(x.rows(), x.cols());
  for (int j = 0; j < g.m(); ++j) {
    auto col = xt.col(j);
    for (int k : g.context(j)) col += x.col(k);
  }
  return xt;
}

/// Cheap upper bound on ||A||_2: exact closed form where known, max degree
/// otherwise.
inline double adjacency_norm_bound(const ContextGraph& g) {
  switch (g.kind()) {
    case GraphKind::Chain:
      return 2.0 * std::cos(std::numbers::pi / (g.m() + 1));
    case GraphKind::OmegaNN:
      return 2.0 * g.omega();
    case GraphKind::Lattice:
      return 2.0 * std::cos(std::numbers::pi / (g.rows() + 1)) +
             2.0 * std::cos(std::numbers::pi / (g.cols() + 1));
    case GraphKind::Custom:
      return static_cast<double>(g.max_degree());
  }
  return static_cast<double>(g.max_degree());
}

/// ||A||_2 of the adjacency operator. Chain and lattice have closed forms
/// (path-graph spectra and their Cartesian sums); other kinds fall back to a
/// dense eigendecomposition up to `dense_cap` nodes and to the degree bound
/// beyond it.
inline double adjacency_spectral_norm(const ContextGraph& g, int dense_cap = 4096) {
  switch (g.kind()) {
    case GraphKind::Chain:
      return 2.0 * std::cos(std::numbers::pi / (g.m() + 1));
    case GraphKind::Lattice:
      return 2.0 * std::cos(std::numbers::pi / (g.rows() + 1)) +
             2.0 * std::cos(std::numbers::pi / (g.cols() + 1));
    default:
      if (g.m() <= dense_cap) return spectral_norm(g.adjacency());
      return adjacency_norm_bound(g);
  }
}

}  // namespace gembed
