#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "unishrink/linalg.hpp"
#include "unishrink/truncated.hpp"

namespace unishrink {

/// Undirected graph on p vertices without self loops.
class Graph {
 public:
  explicit Graph(std::size_t p = 0);
  static Graph complete(std::size_t p);
  /// Edge wherever an off-diagonal entry is nonzero; the matrix must be symmetric.
  static Graph from_adjacency(const Matrix& w);

  std::size_t size() const noexcept { return p_; }
  bool has_edge(std::size_t i, std::size_t j) const noexcept;
  void add_edge(std::size_t i, std::size_t j);
  std::size_t degree(std::size_t v) const noexcept;
  std::size_t edge_count() const noexcept;
  bool is_complete() const noexcept { return edge_count() == p_ * (p_ - 1) / 2; }

  /// (i, j) with j < i, ordered by i then j.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::vector<std::size_t> isolated() const;

 private:
  std::size_t p_;
  std::vector<char> adjacency_;
};

/// Per-element centers m_ij, scale multipliers v_ij, box constraints and
/// the graph of free off-diagonal elements. Every free element (i ≥ j, with
/// (i, j) an edge or i = j) carries one latent scale t_ij and must satisfy
/// |ω_ij - m_ij| < v_ij τ t_ij together with its box.
class ConstraintLedger {
 public:
  explicit ConstraintLedger(std::size_t p);

  std::size_t dim() const noexcept { return p_; }
  const Graph& graph() const noexcept { return graph_; }
  void set_graph(Graph graph);

  double center(std::size_t i, std::size_t j) const { return center_(index(i), index(j)); }
  const Matrix& centers() const noexcept { return center_; }
  void set_center(std::size_t i, std::size_t j, double value);
  void set_centers(const Matrix& centers);

  double multiplier(std::size_t i, std::size_t j) const { return multiplier_(index(i), index(j)); }
  void set_multiplier(std::size_t i, std::size_t j, double value);

  /// Open box (lo, hi) for ω_ij; unbounded by default.
  Interval box(std::size_t i, std::size_t j) const;
  void set_box(std::size_t i, std::size_t j, Interval box);
  /// Convenience: ω_ij < 0 for every edge.
  void constrain_edges_negative();

  bool is_free(std::size_t i, std::size_t j) const noexcept {
    return i == j || graph_.has_edge(i, j);
  }
  std::size_t free_count() const noexcept { return p_ + graph_.edge_count(); }

  /// (m - vτt, m + vτt) ∩ box.
  Interval allowed(std::size_t i, std::size_t j, double tau, double t) const;

  bool has_nonzero_centers() const noexcept;
  /// True when every box is a cone: bounds in {-inf, 0, +inf}.
  bool boxes_are_cones() const noexcept;

  /// Graph zeros hold exactly and every free element lies strictly in its box.
  bool satisfied_by(const Matrix& omega) const;

 private:
  Eigen::Index index(std::size_t k) const { return static_cast<Eigen::Index>(k); }

  std::size_t p_;
  Graph graph_;
  Matrix center_;
  Matrix multiplier_;
  Matrix box_lo_;
  Matrix box_hi_;
};

}  // namespace unishrink
