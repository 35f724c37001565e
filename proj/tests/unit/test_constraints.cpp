#include <gtest/gtest.h>

#include <limits>

#include "unishrink/constraints.hpp"
#include "unishrink/errors.hpp"

using namespace unishrink;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Graph, CompleteGraphEdgesInScanOrder) {
  const Graph g = Graph::complete(4);
  EXPECT_EQ(g.edge_count(), 6u);
  EXPECT_TRUE(g.is_complete());
  const auto edges = g.edges();
  const std::vector<std::pair<std::size_t, std::size_t>> expected{
      {1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}};
  EXPECT_EQ(edges, expected);
  EXPECT_TRUE(g.isolated().empty());
}

TEST(Graph, FromAdjacencyAndIsolatedVertices) {
  Matrix w = Matrix::Zero(4, 4);
  w(0, 2) = w(2, 0) = 1;
  const Graph g = Graph::from_adjacency(w);
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_FALSE(g.has_edge(1, 0));
  EXPECT_EQ(g.isolated(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(g.degree(0), 1u);
}

TEST(ConstraintLedger, AllowedIntervalCombinesScaleAndBox) {
  ConstraintLedger ledger(3);
  ledger.set_center(1, 0, 0.5);
  ledger.set_multiplier(1, 0, 2.0);
  const Interval band = ledger.allowed(1, 0, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(band.lo, -0.5);
  EXPECT_DOUBLE_EQ(band.hi, 1.5);
  ledger.set_box(1, 0, {-kInf, 0.0});
  const Interval boxed = ledger.allowed(0, 1, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(boxed.lo, -0.5);
  EXPECT_DOUBLE_EQ(boxed.hi, 0.0);
  EXPECT_TRUE(ledger.has_nonzero_centers());
}

TEST(ConstraintLedger, ConeDetection) {
  ConstraintLedger ledger(3);
  EXPECT_TRUE(ledger.boxes_are_cones());
  ledger.constrain_edges_negative();
  EXPECT_TRUE(ledger.boxes_are_cones());
  ledger.set_box(2, 2, {0.5, 3.0});
  EXPECT_FALSE(ledger.boxes_are_cones());
}

TEST(ConstraintLedger, RejectsImpossibleDiagonalBoxes) {
  ConstraintLedger ledger(2);
  EXPECT_THROW(ledger.set_box(0, 0, {-1.0, 0.0}), InvalidSpec);
  EXPECT_THROW(ledger.set_box(1, 0, {1.0, 1.0}), InvalidSpec);
}

TEST(ConstraintLedger, SatisfiedByChecksGraphZerosAndBoxes) {
  ConstraintLedger ledger(3);
  Graph g(3);
  g.add_edge(1, 0);
  ledger.set_graph(g);
  ledger.constrain_edges_negative();
  Matrix omega = Matrix::Identity(3, 3);
  omega(1, 0) = omega(0, 1) = -0.2;
  EXPECT_TRUE(ledger.satisfied_by(omega));
  omega(2, 0) = omega(0, 2) = 1e-300;
  EXPECT_FALSE(ledger.satisfied_by(omega));
  omega(2, 0) = omega(0, 2) = 0.0;
  omega(1, 0) = omega(0, 1) = 0.0;
  EXPECT_FALSE(ledger.satisfied_by(omega));  // the box is open at 0
  EXPECT_EQ(ledger.free_count(), 4u);
}
