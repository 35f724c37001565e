#include "unishrink/constraints.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "unishrink/errors.hpp"

namespace unishrink {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Graph::Graph(std::size_t p) : p_(p), adjacency_(p * p, 0) {}

Graph Graph::complete(std::size_t p) {
  Graph g(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) g.add_edge(i, j);
  }
  return g;
}

Graph Graph::from_adjacency(const Matrix& w) {
  if (w.rows() != w.cols()) throw InvalidSpec("adjacency matrix must be square");
  const auto p = static_cast<std::size_t>(w.rows());
  Graph g(p);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (w(i, j) != w(j, i)) throw InvalidSpec("adjacency matrix must be symmetric");
      if (w(i, j) != 0.0) g.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return g;
}

bool Graph::has_edge(std::size_t i, std::size_t j) const noexcept {
  return i != j && i < p_ && j < p_ && adjacency_[i * p_ + j] != 0;
}

void Graph::add_edge(std::size_t i, std::size_t j) {
  if (i == j || i >= p_ || j >= p_) throw InvalidSpec("graph edge out of range or self loop");
  adjacency_[i * p_ + j] = 1;
  adjacency_[j * p_ + i] = 1;
}

std::size_t Graph::degree(std::size_t v) const noexcept {
  std::size_t d = 0;
  for (std::size_t k = 0; k < p_; ++k) d += adjacency_[v * p_ + k] != 0 ? 1 : 0;
  return d;
}

std::size_t Graph::edge_count() const noexcept {
  std::size_t count = 0;
  for (std::size_t i = 0; i < p_; ++i) {
    for (std::size_t j = 0; j < i; ++j) count += adjacency_[i * p_ + j] != 0 ? 1 : 0;
  }
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> Graph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < p_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (adjacency_[i * p_ + j] != 0) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::size_t> Graph::isolated() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < p_; ++v) {
    if (degree(v) == 0) out.push_back(v);
  }
  return out;
}

ConstraintLedger::ConstraintLedger(std::size_t p)
    : p_(p),
      graph_(Graph::complete(p)),
      center_(Matrix::Zero(index(p), index(p))),
      multiplier_(Matrix::Ones(index(p), index(p))),
      box_lo_(Matrix::Constant(index(p), index(p), -kInf)),
      box_hi_(Matrix::Constant(index(p), index(p), kInf)) {
  if (p == 0) throw InvalidSpec("constraint ledger needs p >= 1");
}

void ConstraintLedger::set_graph(Graph graph) {
  if (graph.size() != p_) throw InvalidSpec("graph dimension does not match the ledger");
  graph_ = std::move(graph);
}

void ConstraintLedger::set_center(std::size_t i, std::size_t j, double value) {
  if (!std::isfinite(value)) throw InvalidSpec("center must be finite");
  center_(index(i), index(j)) = value;
  center_(index(j), index(i)) = value;
}

void ConstraintLedger::set_centers(const Matrix& centers) {
  if (centers.rows() != index(p_) || centers.cols() != index(p_)) {
    throw InvalidSpec("center matrix has the wrong shape");
  }
  if (!centers.isApprox(centers.transpose(), 0.0)) throw InvalidSpec("center matrix must be symmetric");
  center_ = centers;
}

void ConstraintLedger::set_multiplier(std::size_t i, std::size_t j, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidSpec("scale multiplier must be positive");
  multiplier_(index(i), index(j)) = value;
  multiplier_(index(j), index(i)) = value;
}

Interval ConstraintLedger::box(std::size_t i, std::size_t j) const {
  return {box_lo_(index(i), index(j)), box_hi_(index(i), index(j))};
}

void ConstraintLedger::set_box(std::size_t i, std::size_t j, Interval box) {
  if (i >= p_ || j >= p_) throw InvalidSpec("box index out of range");
  if (!(box.lo < box.hi)) throw InvalidSpec("box must satisfy lo < hi");
  if (i == j && box.hi <= 0.0) {
    throw InvalidSpec("diagonal box must intersect (0, inf)");
  }
  box_lo_(index(i), index(j)) = box_lo_(index(j), index(i)) = box.lo;
  box_hi_(index(i), index(j)) = box_hi_(index(j), index(i)) = box.hi;
}

void ConstraintLedger::constrain_edges_negative() {
  for (const auto& [i, j] : graph_.edges()) set_box(i, j, {-kInf, 0.0});
}

Interval ConstraintLedger::allowed(std::size_t i, std::size_t j, double tau, double t) const {
  const double half = multiplier(i, j) * tau * t;
  const double m = center(i, j);
  return Interval{m - half, m + half}.intersect(box(i, j));
}

bool ConstraintLedger::has_nonzero_centers() const noexcept { return !center_.isZero(0.0); }

bool ConstraintLedger::boxes_are_cones() const noexcept {
  auto cone_bound = [](double b) { return b == 0.0 || std::isinf(b); };
  for (Eigen::Index i = 0; i < index(p_); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (!cone_bound(box_lo_(i, j)) || !cone_bound(box_hi_(i, j))) return false;
    }
  }
  return true;
}

bool ConstraintLedger::satisfied_by(const Matrix& omega) const {
  if (omega.rows() != index(p_) || omega.cols() != index(p_)) return false;
  for (std::size_t i = 0; i < p_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = omega(index(i), index(j));
      if (w != omega(index(j), index(i))) return false;
      if (!is_free(i, j)) {
        if (w != 0.0) return false;
        continue;
      }
      const Interval b = box(i, j);
      if (!(w > b.lo && w < b.hi)) return false;
    }
  }
  return true;
}

}  // namespace unishrink
