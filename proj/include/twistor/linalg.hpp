#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace twistor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Numerical policy knobs shared across the library.
struct Tolerances {
  double rank_tol = 1e-9;     // SVD rank cut, relative to the largest singular value
  double cluster_tol = 1e-8;  // eigenvalue clustering, relative to the spectral norm
  double fd_step = 1e-5;      // finite-difference step, relative to ||K||_F
  double check_tol = 1e-6;    // residual threshold for validation checks
};

inline VectorXd vec(const MatrixXd& A) {
  return Eigen::Map<const VectorXd>(A.data(), A.size());
}

inline MatrixXd unvec(const VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<long>(rows) * cols)
    throw DimensionMismatch("unvec: size " + std::to_string(v.size()));
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

inline MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
  MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

/// Operator on vec(A) for A -> A M (column-major vec).
inline MatrixXd right_mult_op(const MatrixXd& M, int d) {
  return kron(M.transpose(), MatrixXd::Identity(d, d));
}

/// Operator on vec(A) for A -> M A.
inline MatrixXd left_mult_op(const MatrixXd& M, int d) {
  return kron(MatrixXd::Identity(d, d), M);
}

/// Permutation with transpose_op(d) * vec(A) = vec(A^T).
inline MatrixXd transpose_op(int d) {
  MatrixXd P = MatrixXd::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) P(j * d + i, i * d + j) = 1.0;
  return P;
}

/// Rank cut: singular values above rank_tol * max(sigma_max, ref).
/// The absolute floor `ref` keeps identically-zero operators at rank 0.
inline int rank_from_singular_values(const VectorXd& s, double rank_tol, double ref = 1.0) {
  if (s.size() == 0) return 0;
  const double thr = rank_tol * std::max(s(0), ref);
  int r = 0;
  while (r < s.size() && s(r) > thr) ++r;
  return r;
}

/// Subspace of R^ambient held as an orthonormal column basis.
class Subspace {
 public:
  Subspace() : basis_(MatrixXd::Zero(0, 0)) {}  // placeholder, ambient 0

  explicit Subspace(int ambient_dim)
      : basis_(MatrixXd::Zero(ambient_dim, 0)) {
    if (ambient_dim <= 0) throw DimensionMismatch("Subspace: ambient dim must be positive");
  }

  Subspace(MatrixXd basis, const Tolerances& tol = {}) : basis_(std::move(basis)) {
    if (basis_.rows() <= 0) throw DimensionMismatch("Subspace: empty ambient");
    if (basis_.cols() > basis_.rows())
      throw DimensionMismatch("Subspace: more basis vectors than ambient dimension");
    if (basis_.cols() > 0) {
      const double resid =
          (basis_.transpose() * basis_ - MatrixXd::Identity(basis_.cols(), basis_.cols()))
              .norm();
      if (resid > std::sqrt(tol.rank_tol))
        throw InvalidStructure("Subspace: basis not orthonormal, residual " +
                               std::to_string(resid));
    }
  }

  /// Orthonormalizes an arbitrary spanning set; rank decided by SVD.
  static Subspace from_span(const MatrixXd& vectors, const Tolerances& tol = {},
                            double ref = 1.0) {
    if (vectors.cols() == 0) return Subspace(static_cast<int>(vectors.rows()));
    Eigen::JacobiSVD<MatrixXd> svd(vectors, Eigen::ComputeThinU);
    const int r = rank_from_singular_values(svd.singularValues(), tol.rank_tol, ref);
    return Subspace(svd.matrixU().leftCols(r), tol);
  }

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const MatrixXd& basis() const { return basis_; }
  MatrixXd projector() const { return basis_ * basis_.transpose(); }

  Subspace orthogonal_complement(const Tolerances& tol = {}) const {
    Eigen::JacobiSVD<MatrixXd> svd(basis_, Eigen::ComputeFullU);
    (void)tol;
    return Subspace(svd.matrixU().rightCols(ambient_dim() - rank()));
  }

 private:
  MatrixXd basis_;
};

/// Null space of M as a Subspace of the domain.
inline Subspace nullspace(const MatrixXd& M, const Tolerances& tol = {}, double ref = 1.0) {
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const int r = rank_from_singular_values(svd.singularValues(), tol.rank_tol, ref);
  return Subspace(svd.matrixV().rightCols(M.cols() - r), tol);
}

/// Column space of M as a Subspace of the codomain.
inline Subspace column_space(const MatrixXd& M, const Tolerances& tol = {}, double ref = 1.0) {
  if (M.cols() == 0) return Subspace(static_cast<int>(M.rows()));
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU);
  const int r = rank_from_singular_values(svd.singularValues(), tol.rank_tol, ref);
  return Subspace(svd.matrixU().leftCols(r), tol);
}

/// Span of a family of equally-sized matrices, as a Subspace of vec-space.
inline Subspace span_of_matrices(const std::vector<MatrixXd>& mats, const Tolerances& tol = {},
                                 double ref = 1.0) {
  if (mats.empty()) throw DimensionMismatch("span_of_matrices: empty family");
  const long n = mats.front().size();
  MatrixXd stacked(n, static_cast<long>(mats.size()));
  for (size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].size() != n) throw AmbientMismatch("span_of_matrices: mixed sizes");
    stacked.col(static_cast<long>(i)) = vec(mats[i]);
  }
  return Subspace::from_span(stacked, tol, ref);
}

/// Euclidean model space after metric canonicalization.  A general SPD metric
/// G = L L^T is folded into coordinates once via A -> L^T A L^{-T}; everything
/// downstream works with the identity metric (adjoint = transpose).
class MetricSpace {
 public:
  explicit MetricSpace(int dim) : dim_(dim), metric_(MatrixXd::Identity(dim, dim)),
                                  chol_(MatrixXd::Identity(dim, dim)) {
    check_dim();
  }

  MetricSpace(int dim, MatrixXd metric, const Tolerances& tol = {})
      : dim_(dim), metric_(std::move(metric)) {
    check_dim();
    if (metric_.rows() != dim_ || metric_.cols() != dim_)
      throw DimensionMismatch("MetricSpace: metric shape");
    if ((metric_ - metric_.transpose()).norm() > tol.check_tol * std::max(1.0, metric_.norm()))
      throw NonSymmetric("MetricSpace: metric");
    Eigen::LLT<MatrixXd> llt(metric_);
    if (llt.info() != Eigen::Success)
      throw InvalidStructure("MetricSpace: metric not positive definite");
    chol_ = llt.matrixL();
  }

  int dim() const { return dim_; }
  const MatrixXd& metric() const { return metric_; }

  /// Endomorphism in canonical (identity-metric) coordinates.
  MatrixXd to_canonical(const MatrixXd& A) const {
    require_shape(A);
    return chol_.transpose() * A * chol_.transpose().inverse();
  }

  MatrixXd from_canonical(const MatrixXd& A) const {
    require_shape(A);
    return chol_.transpose().inverse() * A * chol_.transpose();
  }

 private:
  void check_dim() const {
    if (dim_ < 4 || dim_ % 2 != 0)
      throw DimensionMismatch("MetricSpace: dim must be even and at least 4, got " +
                              std::to_string(dim_));
  }
  void require_shape(const MatrixXd& A) const {
    if (A.rows() != dim_ || A.cols() != dim_) throw DimensionMismatch("MetricSpace: matrix shape");
  }

  int dim_;
  MatrixXd metric_, chol_;
};

struct EigenCluster {
  double value;  // cluster mean
  Subspace space;
};

/// Eigendecomposition of a symmetric matrix with nearby eigenvalues merged
/// into clusters.  The gap threshold is cluster_tol relative to the spectral
/// norm.  Clusters are returned in ascending order of value.
inline std::vector<EigenCluster> clustered_sym_eig(const MatrixXd& M, const Tolerances& tol = {}) {
  if (M.rows() != M.cols()) throw DimensionMismatch("clustered_sym_eig: not square");
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > tol.check_tol * scale)
    throw NonSymmetric("clustered_sym_eig: input");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (M + M.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalFailure("clustered_sym_eig: solver");
  const VectorXd& vals = eig.eigenvalues();  // ascending
  const int d = static_cast<int>(M.rows());
  const double opnorm = std::max(std::abs(vals(0)), std::abs(vals(d - 1)));
  const double gap = tol.cluster_tol * std::max(opnorm, 1e-300);

  std::vector<EigenCluster> out;
  int start = 0;
  for (int i = 1; i <= d; ++i) {
    if (i == d || vals(i) - vals(i - 1) > gap) {
      const int len = i - start;
      EigenCluster c{vals.segment(start, len).mean(),
                     Subspace(eig.eigenvectors().middleCols(start, len), tol)};
      out.push_back(std::move(c));
      start = i;
    }
  }
  return out;
}

/// Residual of "A maps U into U": norm of the part of A*basis(U) outside U.
inline double invariance_residual(const MatrixXd& A, const Subspace& U) {
  if (A.rows() != U.ambient_dim() || A.cols() != U.ambient_dim())
    throw DimensionMismatch("invariance_residual: shape");
  if (U.rank() == 0) return 0.0;
  const MatrixXd AU = A * U.basis();
  return (AU - U.basis() * (U.basis().transpose() * AU)).norm();
}

struct SubspaceRelation {
  bool contains;  // U is contained in W
  bool equals;
  int dim_intersection;
  int dim_sum;
};

/// Relation of U against W via the rank of the concatenated bases.
inline SubspaceRelation subspace_relate(const Subspace& U, const Subspace& W,
                                        const Tolerances& tol = {}) {
  if (U.ambient_dim() != W.ambient_dim())
    throw AmbientMismatch("subspace_relate: ambient dims " + std::to_string(U.ambient_dim()) +
                          " vs " + std::to_string(W.ambient_dim()));
  const int ru = U.rank(), rw = W.rank();
  int dim_sum = 0;
  if (ru + rw > 0) {
    MatrixXd cat(U.ambient_dim(), ru + rw);
    cat.leftCols(ru) = U.basis();
    cat.rightCols(rw) = W.basis();
    Eigen::JacobiSVD<MatrixXd> svd(cat);
    dim_sum = rank_from_singular_values(svd.singularValues(), tol.rank_tol, 1.0);
  }
  SubspaceRelation rel;
  rel.dim_sum = dim_sum;
  rel.dim_intersection = ru + rw - dim_sum;
  rel.contains = (dim_sum == rw);
  rel.equals = (dim_sum == rw && ru == rw);
  return rel;
}

/// One linear condition on a d x d matrix, encoded as an operator on vec(A).
class MatrixConstraint {
 public:
  static MatrixConstraint skew(int d) {
    return MatrixConstraint(MatrixXd::Identity(d * d, d * d) + transpose_op(d), d);
  }

  static MatrixConstraint commute_with(const MatrixXd& M) {
    const int d = square_dim(M);
    return MatrixConstraint(right_mult_op(M, d) - left_mult_op(M, d), d);
  }

  static MatrixConstraint anticommute_with(const MatrixXd& M) {
    const int d = square_dim(M);
    return MatrixConstraint(right_mult_op(M, d) + left_mult_op(M, d), d);
  }

  /// A maps W to zero: A * basis(W) = 0.
  static MatrixConstraint annihilate(const Subspace& W) {
    const int d = W.ambient_dim();
    if (W.rank() == 0) return MatrixConstraint(MatrixXd::Zero(0, d * d), d);
    return MatrixConstraint(kron(W.basis().transpose(), MatrixXd::Identity(d, d)), d);
  }

  /// A maps `domain` into `target`: (1 - P_target) A basis(domain) = 0.
  static MatrixConstraint map_into(const Subspace& domain, const Subspace& target) {
    if (domain.ambient_dim() != target.ambient_dim())
      throw AmbientMismatch("map_into: mismatched ambient dims");
    const int d = domain.ambient_dim();
    if (domain.rank() == 0) return MatrixConstraint(MatrixXd::Zero(0, d * d), d);
    const MatrixXd pout = MatrixXd::Identity(d, d) - target.projector();
    return MatrixConstraint(kron(domain.basis().transpose(), pout), d);
  }

  const MatrixXd& op() const { return op_; }
  int dim() const { return dim_; }

 private:
  MatrixConstraint(MatrixXd op, int d) : op_(std::move(op)), dim_(d) {}
  static int square_dim(const MatrixXd& M) {
    if (M.rows() != M.cols()) throw DimensionMismatch("MatrixConstraint: not square");
    return static_cast<int>(M.rows());
  }
  MatrixXd op_;
  int dim_;
};

/// Basis (orthonormal in the Frobenius inner product) of the space of d x d
/// matrices satisfying all given linear constraints.
inline std::vector<MatrixXd> constrained_matrix_space(int d,
                                                      const std::vector<MatrixConstraint>& cons,
                                                      const Tolerances& tol = {}) {
  if (d <= 0) throw DimensionMismatch("constrained_matrix_space: dim");
  long rows = 0;
  for (const auto& c : cons) {
    if (c.dim() != d) throw DimensionMismatch("constrained_matrix_space: constraint dim");
    rows += c.op().rows();
  }
  std::vector<MatrixXd> out;
  if (rows == 0) {
    out.reserve(static_cast<size_t>(d) * d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        MatrixXd E = MatrixXd::Zero(d, d);
        E(i, j) = 1.0;
        out.push_back(std::move(E));
      }
    return out;
  }
  MatrixXd stacked(rows, static_cast<long>(d) * d);
  long at = 0;
  for (const auto& c : cons) {
    stacked.middleRows(at, c.op().rows()) = c.op();
    at += c.op().rows();
  }
  const Subspace null = nullspace(stacked, tol, 1.0);
  out.reserve(null.rank());
  for (int j = 0; j < null.rank(); ++j) out.push_back(unvec(null.basis().col(j), d, d));
  return out;
}

/// Orthonormal basis (v_1, J v_1, v_2, J v_2, ...) adapted to a complex
/// structure J, grown greedily from the standard basis (deterministic: each
/// step takes the standard vector with the largest residual outside the
/// current span).  In this basis J becomes block-diagonal with 2x2 rotation
/// blocks [[0,-1],[1,0]].
inline MatrixXd adapted_complex_basis(const MatrixXd& J, const Tolerances& tol = {}) {
  const int d = static_cast<int>(J.rows());
  if (J.cols() != d || d % 2 != 0) throw DimensionMismatch("adapted_complex_basis: shape");
  const double scale = std::max(1.0, J.norm());
  if ((J * J + MatrixXd::Identity(d, d)).norm() > tol.check_tol * scale ||
      (J + J.transpose()).norm() > tol.check_tol * scale)
    throw InvalidStructure("adapted_complex_basis: not an orthogonal complex structure");

  MatrixXd P(d, d);
  int filled = 0;
  while (filled < d) {
    int best = -1;
    double best_norm = -1.0;
    VectorXd best_res;
    for (int i = 0; i < d; ++i) {
      VectorXd v = VectorXd::Unit(d, i);
      if (filled > 0) v -= P.leftCols(filled) * (P.leftCols(filled).transpose() * v);
      const double nv = v.norm();
      if (nv > best_norm + 1e-12) {
        best_norm = nv;
        best = i;
        best_res = v;
      }
    }
    if (best < 0 || best_norm < tol.check_tol)
      throw NumericalFailure("adapted_complex_basis: basis completion stalled");
    P.col(filled) = best_res / best_norm;
    VectorXd w = J * P.col(filled);
    if (filled > 0) w -= P.leftCols(filled) * (P.leftCols(filled).transpose() * w);
    const double nw = w.norm();
    if (nw < 0.5) throw NumericalFailure("adapted_complex_basis: partner vector collapsed");
    P.col(filled + 1) = w / nw;
    filled += 2;
  }
  return P;
}

/// Orientation induced by a complex structure: sign of det of an adapted
/// orthonormal basis.
inline int orientation_sign(const MatrixXd& J, const Tolerances& tol = {}) {
  const MatrixXd P = adapted_complex_basis(J, tol);
  return Eigen::PartialPivLU<MatrixXd>(P).determinant() > 0.0 ? 1 : -1;
}

}  // namespace twistor
