#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace twistor {

struct PointReport {
  double square_residual;  // ||J^2 + 1||
  double skew_residual;    // ||J^T + J||
  bool valid;
};

/// Residuals of the defining equations of an orthogonal complex structure in
/// canonical coordinates: J^2 = -1 and J^T = -J.
inline PointReport validate_point(const MatrixXd& J, const Tolerances& tol = {}) {
  const int d = static_cast<int>(J.rows());
  if (J.cols() != d || d % 2 != 0 || d == 0)
    throw DimensionMismatch("validate_point: need a square even-dimensional matrix");
  PointReport r;
  r.square_residual = (J * J + MatrixXd::Identity(d, d)).norm();
  r.skew_residual = (J + J.transpose()).norm();
  r.valid = r.square_residual < tol.check_tol && r.skew_residual < tol.check_tol;
  return r;
}

/// Same check for a structure given in the coordinates of a general metric
/// space: canonicalize first, then g-orthogonality becomes skewness.
inline PointReport validate_point(const MetricSpace& space, const MatrixXd& J,
                                  const Tolerances& tol = {}) {
  if (J.rows() != space.dim() || J.cols() != space.dim())
    throw DimensionMismatch("validate_point: matrix does not match the space");
  return validate_point(space.to_canonical(J), tol);
}

/// A point of the twistor space: an orthogonal complex structure on R^d.
class ComplexStructure {
 public:
  static ComplexStructure checked(MatrixXd J, const Tolerances& tol = {}) {
    const PointReport r = validate_point(J, tol);
    if (!r.valid)
      throw InvalidStructure("ComplexStructure: residuals " + std::to_string(r.square_residual) +
                             ", " + std::to_string(r.skew_residual));
    return ComplexStructure(std::move(J));
  }

  /// No validation; for values that are valid by construction.
  static ComplexStructure unchecked(MatrixXd J) { return ComplexStructure(std::move(J)); }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const MatrixXd& mat() const { return mat_; }

 private:
  explicit ComplexStructure(MatrixXd m) : mat_(std::move(m)) {}
  MatrixXd mat_;
};

/// Block-diagonal reference structure: J0 e_{2i+1} = e_{2i+2}.
inline MatrixXd standard_structure_matrix(int dim) {
  if (dim <= 0 || dim % 2 != 0) throw DimensionMismatch("standard_structure: odd dimension");
  MatrixXd J = MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; i += 2) {
    J(i, i + 1) = -1.0;
    J(i + 1, i) = 1.0;
  }
  return J;
}

inline ComplexStructure standard_structure(int dim) {
  return ComplexStructure::unchecked(standard_structure_matrix(dim));
}

/// Seeded sample Q J0 Q^T from the orthogonal-conjugation orbit.
inline ComplexStructure random_point(int dim, std::uint64_t seed) {
  Rng rng(seed);
  const MatrixXd Q = rng.random_orthogonal(dim);
  return ComplexStructure::unchecked(Q * standard_structure_matrix(dim) * Q.transpose());
}

inline ComplexStructure random_point(const MetricSpace& space, std::uint64_t seed) {
  return ComplexStructure::unchecked(
      space.from_canonical(random_point(space.dim(), seed).mat()));
}

/// Tangent vector at K: a skew matrix anticommuting with K.
class TangentVector {
 public:
  static TangentVector checked(MatrixXd K, MatrixXd A, const Tolerances& tol = {}) {
    if (A.rows() != K.rows() || A.cols() != K.cols())
      throw DimensionMismatch("TangentVector: shape");
    const double scale = std::max(1.0, A.norm());
    const double skew = (A + A.transpose()).norm();
    const double anti = (A * K + K * A).norm();
    if (skew > tol.check_tol * scale || anti > tol.check_tol * scale)
      throw NotTangent("TangentVector: residuals " + std::to_string(skew) + ", " +
                       std::to_string(anti));
    return TangentVector(std::move(K), std::move(A));
  }

  static TangentVector unchecked(MatrixXd K, MatrixXd A) {
    return TangentVector(std::move(K), std::move(A));
  }

  const MatrixXd& base() const { return base_; }
  const MatrixXd& mat() const { return mat_; }

 private:
  TangentVector(MatrixXd K, MatrixXd A) : base_(std::move(K)), mat_(std::move(A)) {}
  MatrixXd base_, mat_;
};

/// Basis of the tangent space at K: all skew A with {A,K} = 0.  Its length
/// is n(n-1) for dim = 2n.
inline std::vector<TangentVector> tangent_basis(const ComplexStructure& K,
                                                const Tolerances& tol = {}) {
  const int d = K.dim();
  const std::vector<MatrixXd> mats = constrained_matrix_space(
      d, {MatrixConstraint::skew(d), MatrixConstraint::anticommute_with(K.mat())}, tol);
  std::vector<TangentVector> out;
  out.reserve(mats.size());
  for (const auto& A : mats) out.push_back(TangentVector::unchecked(K.mat(), A));
  return out;
}

/// The almost complex structure on the twistor space: A -> KA.
inline TangentVector i_tau(const TangentVector& A, const Tolerances& tol = {}) {
  const MatrixXd& K = A.base();
  const double scale = std::max(1.0, A.mat().norm());
  if ((A.mat() + A.mat().transpose()).norm() > tol.check_tol * scale ||
      (A.mat() * K + K * A.mat()).norm() > tol.check_tol * scale)
    throw NotTangent("i_tau: input is not tangent at its base point");
  return TangentVector::unchecked(K, K * A.mat());
}

/// Conjugation curve t -> e^{tX} K e^{-tX}; every evaluation is again a
/// valid structure because the conjugating factor is orthogonal.
class Curve {
 public:
  Curve(MatrixXd base, MatrixXd generator, const Tolerances& tol = {})
      : base_(std::move(base)), gen_(std::move(generator)) {
    if (gen_.rows() != base_.rows() || gen_.cols() != base_.cols())
      throw DimensionMismatch("Curve: generator shape");
    if ((gen_ + gen_.transpose()).norm() > tol.check_tol * std::max(1.0, gen_.norm()))
      throw InvalidStructure("Curve: generator must be skew");
  }

  MatrixXd eval(double t) const {
    const MatrixXd U = (t * gen_).exp();
    return U * base_ * U.transpose();
  }

  const MatrixXd& base() const { return base_; }
  const MatrixXd& generator() const { return gen_; }

 private:
  MatrixXd base_, gen_;
};

/// Curve through K with initial velocity B, via the generator X = -BK/2
/// (then [X,K] = B, using that B anticommutes with K).
inline Curve conjugation_curve(const MatrixXd& K, const MatrixXd& B, const Tolerances& tol = {}) {
  const double scale = std::max(1.0, B.norm());
  if ((B + B.transpose()).norm() > tol.check_tol * scale ||
      (B * K + K * B).norm() > tol.check_tol * scale)
    throw NotTangent("conjugation_curve: direction is not tangent");
  return Curve(K, -0.5 * B * K, tol);
}

inline Curve curve_from_tangent(const TangentVector& B, const Tolerances& tol = {}) {
  return conjugation_curve(B.base(), B.mat(), tol);
}

/// Central difference with one Richardson step along a curve.  Works for
/// matrix-, vector- and scalar-valued fields.
template <class Field>
auto fd_derivative_along(Field&& f, const Curve& c, double h_abs)
    -> std::decay_t<decltype(f(c.base()))> {
  using R = std::decay_t<decltype(f(c.base()))>;
  if (!(h_abs > 0.0)) throw EvaluationFailure("fd_derivative: step must be positive");
  const R fp = f(c.eval(h_abs));
  const R fm = f(c.eval(-h_abs));
  const R fph = f(c.eval(0.5 * h_abs));
  const R fmh = f(c.eval(-0.5 * h_abs));
  const R d1 = (fp - fm) * (1.0 / (2.0 * h_abs));
  const R d2 = (fph - fmh) * (1.0 / h_abs);
  return (4.0 * d2 - d1) * (1.0 / 3.0);
}

/// Directional derivative of a field at K along the tangent direction B,
/// using the canonical conjugation curve.
template <class Field>
auto fd_derivative(Field&& f, const MatrixXd& K, const MatrixXd& B, const Tolerances& tol = {})
    -> std::decay_t<decltype(f(K))> {
  const Curve c = conjugation_curve(K, B, tol);
  return fd_derivative_along(std::forward<Field>(f), c, tol.fd_step * K.norm());
}

using EndoField = std::function<MatrixXd(const MatrixXd&)>;
using VecField = std::function<VectorXd(const MatrixXd&)>;

/// Lie bracket of two tangent-valued fields: dY_{X(K)} - dX_{Y(K)}.
inline TangentVector lie_bracket_fd(const EndoField& X, const EndoField& Y, const MatrixXd& K,
                                    const Tolerances& tol = {}) {
  const MatrixXd Xk = X(K);
  const MatrixXd Yk = Y(K);
  if (!Xk.allFinite() || !Yk.allFinite()) throw EvaluationFailure("lie_bracket_fd: field values");
  const MatrixXd dY = fd_derivative(Y, K, Xk, tol);
  const MatrixXd dX = fd_derivative(X, K, Yk, tol);
  MatrixXd out = dY - dX;
  if (!out.allFinite()) throw EvaluationFailure("lie_bracket_fd: derivative");
  return TangentVector::unchecked(K, std::move(out));
}

/// The correction term of the connection on endomorphism sections:
/// nabla_B A = dA_B + [BK, A]/2.
inline MatrixXd connection_correction(const MatrixXd& K, const MatrixXd& B, const MatrixXd& A) {
  const MatrixXd BK = B * K;
  return 0.5 * (BK * A - A * BK);
}

inline MatrixXd covariant_derivative_endo(const EndoField& s, const MatrixXd& K,
                                          const MatrixXd& B, const Tolerances& tol = {}) {
  const MatrixXd ds = fd_derivative(s, K, B, tol);
  return ds + connection_correction(K, B, s(K));
}

/// Vector-valued version: nabla_B s = ds_B + BK s / 2.
inline VectorXd covariant_derivative_vector(const VecField& s, const MatrixXd& K,
                                            const MatrixXd& B, const Tolerances& tol = {}) {
  const VectorXd ds = fd_derivative(s, K, B, tol);
  return ds + 0.5 * B * (K * s(K));
}

}  // namespace twistor
