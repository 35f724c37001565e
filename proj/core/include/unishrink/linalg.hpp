#pragma once

#include <cstddef>
#include <utility>

#include <Eigen/Dense>

namespace unishrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix2 = Eigen::Matrix2d;

/// Lower-triangular L with L*L^T = m. Throws NotPositiveDefinite on a
/// non-positive pivot.
Matrix cholesky(const Matrix& m);

/// 2 * sum(log(diag(chol(m)))).
double log_det(const Matrix& m);

/// Inverse of an SPD matrix via its Cholesky factor.
Matrix spd_inverse(const Matrix& m);

bool is_positive_definite(const Matrix& m);

struct EigenRange {
  double min;
  double max;
};

EigenRange extremal_eigenvalues(const Matrix& m);

/// Ω_{e,e} = A + B for the vertex pair e = (first, second), where
/// B = Ω_{e,R} Ω_{R,R}^{-1} Ω_{R,e} over the remaining vertices R and the
/// Schur component A factors as L diag(d1, d2) L^T with L = [[1,0],[l21,1]].
struct BlockDecomposition {
  std::size_t first = 0;
  std::size_t second = 0;
  Matrix2 a = Matrix2::Zero();
  Matrix2 b = Matrix2::Zero();
  double d1 = 0.0;
  double d2 = 0.0;
  double l21 = 0.0;
};

/// Fills d1, d2, l21 from block.a; throws NotPositiveDefinite if A is not SPD.
void factor_block(BlockDecomposition& block);

/// Reference path: B from a fresh Cholesky solve of Ω_{R,R}.
BlockDecomposition schur_block(const Matrix& omega, std::size_t first, std::size_t second);

/// Schur complement of Ω_{R,R} for a single vertex v: b = Ω_{v,R} Ω_{R,R}^{-1} Ω_{R,v}.
double schur_scalar(const Matrix& omega, std::size_t v);

/// Maintains Σ = Ω^{-1} under updates that only touch one 2x2 diagonal block
/// (or one diagonal entry), so every B costs O(1) and every update O(p^2)
/// instead of a fresh O(p^3) solve.
class RunningInverse {
 public:
  RunningInverse() = default;
  explicit RunningInverse(const Matrix& omega) { reset(omega); }

  /// Recomputes Σ from scratch.
  void reset(const Matrix& omega);

  BlockDecomposition block(const Matrix& omega, std::size_t first, std::size_t second) const;
  double scalar(const Matrix& omega, std::size_t v) const;

  /// Record that the Schur component of block (first, second) is now new_a.
  void update_block(std::size_t first, std::size_t second, const Matrix2& new_a);
  /// Record that ω_vv - b is now new_gap.
  void update_scalar(std::size_t v, double new_gap);

  const Matrix& sigma() const noexcept { return sigma_; }

 private:
  Matrix sigma_;
};

/// Symmetrize in place from the lower triangle.
void mirror_lower(Matrix& m);

double relative_frobenius(const Matrix& estimate, const Matrix& reference);

}  // namespace unishrink

namespace unishrink {

/// Lower triangle (diagonal included) flattened row-major:
/// (0,0), (1,0), (1,1), (2,0), ...
Vector lower_triangle(const Matrix& m);
Matrix from_lower_triangle(const Vector& values, std::size_t p);

}  // namespace unishrink
