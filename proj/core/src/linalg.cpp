#include "unishrink/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "unishrink/errors.hpp"

namespace unishrink {

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("cholesky: matrix is not square");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: non-positive pivot");
  }
  Matrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw NotPositiveDefinite("cholesky: non-positive pivot at row " + std::to_string(i));
    }
  }
  return l;
}

double log_det(const Matrix& m) {
  const Matrix l = cholesky(m);
  return 2.0 * l.diagonal().array().log().sum();
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("spd_inverse: non-positive pivot");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  // Symmetrize to keep downstream Cholesky calls happy.
  return 0.5 * (inv + inv.transpose());
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const Matrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  }
  return true;
}

EigenRange extremal_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DomainError("extremal_eigenvalues: solver failed");
  const Vector& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

void factor_block(BlockDecomposition& block) {
  const double d1 = block.a(0, 0);
  if (!(d1 > 0.0)) throw NotPositiveDefinite("schur block: d1 <= 0");
  const double l21 = block.a(1, 0) / d1;
  const double d2 = block.a(1, 1) - block.a(1, 0) * l21;
  if (!(d2 > 0.0)) throw NotPositiveDefinite("schur block: d2 <= 0");
  block.d1 = d1;
  block.d2 = d2;
  block.l21 = l21;
}

namespace {

std::vector<Eigen::Index> complement(Eigen::Index p, std::size_t first, std::size_t second) {
  std::vector<Eigen::Index> rest;
  rest.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    if (k != static_cast<Eigen::Index>(first) && k != static_cast<Eigen::Index>(second)) {
      rest.push_back(k);
    }
  }
  return rest;
}

}  // namespace

BlockDecomposition schur_block(const Matrix& omega, std::size_t first, std::size_t second) {
  const Eigen::Index p = omega.rows();
  if (first == second || first >= static_cast<std::size_t>(p) ||
      second >= static_cast<std::size_t>(p)) {
    throw DomainError("schur_block: invalid vertex pair");
  }
  const auto i = static_cast<Eigen::Index>(first);
  const auto j = static_cast<Eigen::Index>(second);
  BlockDecomposition out;
  out.first = first;
  out.second = second;
  Matrix2 omega_ee;
  omega_ee << omega(i, i), omega(i, j), omega(j, i), omega(j, j);

  const auto rest = complement(p, first, second);
  if (!rest.empty()) {
    const auto r = static_cast<Eigen::Index>(rest.size());
    Matrix rr(r, r);
    Matrix re(r, 2);
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = 0; b < r; ++b) rr(a, b) = omega(rest[a], rest[b]);
      re(a, 0) = omega(rest[a], i);
      re(a, 1) = omega(rest[a], j);
    }
    Eigen::LLT<Matrix> llt(rr);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("schur_block: complement not SPD");
    const Matrix solved = llt.solve(re);
    out.b = re.transpose() * solved;
    out.b = 0.5 * (out.b + out.b.transpose()).eval();
  }
  out.a = omega_ee - out.b;
  factor_block(out);
  return out;
}

double schur_scalar(const Matrix& omega, std::size_t v) {
  const Eigen::Index p = omega.rows();
  if (v >= static_cast<std::size_t>(p)) throw DomainError("schur_scalar: invalid vertex");
  if (p == 1) return 0.0;
  const auto vi = static_cast<Eigen::Index>(v);
  std::vector<Eigen::Index> rest;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (k != vi) rest.push_back(k);
  }
  const auto r = static_cast<Eigen::Index>(rest.size());
  Matrix rr(r, r);
  Vector rv(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    for (Eigen::Index b = 0; b < r; ++b) rr(a, b) = omega(rest[a], rest[b]);
    rv(a) = omega(rest[a], vi);
  }
  if (rv.isZero(0.0)) return 0.0;
  Eigen::LLT<Matrix> llt(rr);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("schur_scalar: complement not SPD");
  return rv.dot(llt.solve(rv));
}

void RunningInverse::reset(const Matrix& omega) { sigma_ = spd_inverse(omega); }

BlockDecomposition RunningInverse::block(const Matrix& omega, std::size_t first,
                                         std::size_t second) const {
  const auto i = static_cast<Eigen::Index>(first);
  const auto j = static_cast<Eigen::Index>(second);
  BlockDecomposition out;
  out.first = first;
  out.second = second;
  Matrix2 sigma_ee;
  sigma_ee << sigma_(i, i), sigma_(i, j), sigma_(j, i), sigma_(j, j);
  // (Σ_ee)^{-1} is exactly the Schur component A.
  out.a = sigma_ee.inverse();
  out.a(0, 1) = out.a(1, 0) = 0.5 * (out.a(0, 1) + out.a(1, 0));
  Matrix2 omega_ee;
  omega_ee << omega(i, i), omega(i, j), omega(j, i), omega(j, j);
  out.b = omega_ee - out.a;
  factor_block(out);
  return out;
}

double RunningInverse::scalar(const Matrix& omega, std::size_t v) const {
  const auto vi = static_cast<Eigen::Index>(v);
  return omega(vi, vi) - 1.0 / sigma_(vi, vi);
}

void RunningInverse::update_block(std::size_t first, std::size_t second, const Matrix2& new_a) {
  const auto i = static_cast<Eigen::Index>(first);
  const auto j = static_cast<Eigen::Index>(second);
  Matrix2 sigma_ee;
  sigma_ee << sigma_(i, i), sigma_(i, j), sigma_(j, i), sigma_(j, j);
  const Matrix2 sigma_ee_inv = sigma_ee.inverse();
  Eigen::Matrix<double, Eigen::Dynamic, 2> cols(sigma_.rows(), 2);
  cols.col(0) = sigma_.col(i);
  cols.col(1) = sigma_.col(j);
  const Eigen::Matrix<double, Eigen::Dynamic, 2> g = cols * sigma_ee_inv;
  const Matrix2 delta = new_a.inverse() - sigma_ee;
  const Eigen::Matrix<double, Eigen::Dynamic, 2> h = g * delta;
  // Two outer products; a general GEMM is slow for inner dimension 2.
  sigma_.noalias() += h.col(0) * g.col(0).transpose();
  sigma_.noalias() += h.col(1) * g.col(1).transpose();
}

void RunningInverse::update_scalar(std::size_t v, double new_gap) {
  const auto vi = static_cast<Eigen::Index>(v);
  const double s = sigma_(vi, vi);
  const Vector g = sigma_.col(vi) / s;
  sigma_.noalias() += (1.0 / new_gap - s) * g * g.transpose();
}

void mirror_lower(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) m(j, i) = m(i, j);
  }
}

double relative_frobenius(const Matrix& estimate, const Matrix& reference) {
  return (estimate - reference).norm() / reference.norm();
}

}  // namespace unishrink

namespace unishrink {

Vector lower_triangle(const Matrix& m) {
  const Eigen::Index p = m.rows();
  Vector out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) out(k++) = m(i, j);
  }
  return out;
}

Matrix from_lower_triangle(const Vector& values, std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  if (values.size() != n * (n + 1) / 2) throw DomainError("from_lower_triangle: size mismatch");
  Matrix m(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = values(k);
      m(j, i) = values(k);
      ++k;
    }
  }
  return m;
}

}  // namespace unishrink
