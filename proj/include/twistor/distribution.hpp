#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "algebroid.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "section_algebra.hpp"
#include "twistor_space.hpp"

namespace twistor {

enum class Flavor { Plain, Unitary };

inline const char* flavor_name(Flavor f) { return f == Flavor::Plain ? "plain" : "unitary"; }

/// Names the distribution D attached to F = QS over a fixed structure J:
/// Plain is the set of tangent vectors killing Ker F and preserving Im F,
/// Unitary its sub-distribution generated by u(J).
struct DistributionSpec {
  MatrixXd J;
  QPolynomial q = QPolynomial::one();
  STag s = STag::One;
  Flavor flavor = Flavor::Plain;
};

/// F = QS at a point, with the orthogonal splitting V = Ker F + Im F.
/// F is symmetric or skew, so the two singular subspaces coincide.
struct FSplit {
  MatrixXd F;
  Subspace image, kernel;
};

inline FSplit f_split(const DistributionSpec& spec, const MatrixXd& K,
                      const Tolerances& tol = {}) {
  const int d = static_cast<int>(K.rows());
  const MatrixXd Q = spec.q.eval(spec.J, K);
  const double qscale = std::max(1.0, Q.norm());
  if ((Q - Q.transpose()).norm() > 10.0 * tol.check_tol * qscale ||
      commutator(Q, spec.J).norm() > 10.0 * tol.check_tol * qscale ||
      commutator(Q, K).norm() > 10.0 * tol.check_tol * qscale)
    throw HypothesisViolated("f_split: Q is not symmetric and commuting at this point");

  FSplit out{Q * s_value(spec.s, spec.J, K), Subspace(d), Subspace(d)};
  Eigen::JacobiSVD<MatrixXd> svd(out.F, Eigen::ComputeFullU);
  const int r = rank_from_singular_values(svd.singularValues(), tol.rank_tol, 1.0);
  out.image = Subspace(svd.matrixU().leftCols(r), tol);
  out.kernel = Subspace(svd.matrixU().rightCols(d - r), tol);

  const double inv =
      std::max({invariance_residual(spec.J, out.image), invariance_residual(K, out.image),
                invariance_residual(spec.J, out.kernel), invariance_residual(K, out.kernel)});
  if (inv > std::sqrt(tol.rank_tol))
    throw HypothesisViolated("f_split: Ker/Im split is not J,K-invariant, residual " +
                             std::to_string(inv));
  return out;
}

/// The distribution fiber at K, plus the generating data used to build it.
struct DistributionBasis {
  std::vector<MatrixXd> tangents;    // orthonormal in the Frobenius sense
  std::vector<MatrixXd> generators;  // Unitary flavor: the u(J) solutions C with [C,K] spanning
  FSplit split;
};

inline DistributionBasis distribution_basis_full(const DistributionSpec& spec, const MatrixXd& K,
                                                 const Tolerances& tol = {}) {
  const int d = static_cast<int>(K.rows());
  DistributionBasis out{{}, {}, f_split(spec, K, tol)};
  if (spec.flavor == Flavor::Plain) {
    out.tangents = constrained_matrix_space(
        d,
        {MatrixConstraint::skew(d), MatrixConstraint::anticommute_with(K),
         MatrixConstraint::annihilate(out.split.kernel),
         MatrixConstraint::map_into(out.split.image, out.split.image)},
        tol);
    return out;
  }
  out.generators = constrained_matrix_space(
      d,
      {MatrixConstraint::skew(d), MatrixConstraint::commute_with(spec.J),
       MatrixConstraint::annihilate(out.split.kernel),
       MatrixConstraint::map_into(out.split.image, out.split.image)},
      tol);
  if (out.generators.empty()) return out;
  std::vector<MatrixXd> images;
  images.reserve(out.generators.size());
  for (const auto& C : out.generators) images.push_back(commutator(C, K));
  const Subspace span = span_of_matrices(images, tol, 1.0);
  out.tangents.reserve(span.rank());
  for (int j = 0; j < span.rank(); ++j)
    out.tangents.push_back(unvec(span.basis().col(j), d, d));
  return out;
}

inline std::vector<TangentVector> distribution_basis(const DistributionSpec& spec,
                                                     const MatrixXd& K,
                                                     const Tolerances& tol = {}) {
  DistributionBasis full = distribution_basis_full(spec, K, tol);
  std::vector<TangentVector> out;
  out.reserve(full.tangents.size());
  for (auto& B : full.tangents) out.push_back(TangentVector::unchecked(K, std::move(B)));
  return out;
}

/// Span of the anchor image over its natural domain: the full matrix space
/// for the delta and sigma anchors, the twisted fiber for psi.
inline Subspace anchor_image(const AnchorKind& kind, const MatrixXd& J, const MatrixXd& K,
                             const Tolerances& tol = {}) {
  const int d = static_cast<int>(J.rows());
  std::vector<MatrixXd> images;
  if (kind.tag() == AnchorKind::Tag::Psi) {
    const auto fiber = class_fiber(twist_class(kind.domain(), kind.s()), J, K, tol);
    images.reserve(fiber.size());
    for (const auto& A : fiber) images.push_back(anchor(kind, A, J, K, tol).mat());
  } else {
    images.reserve(static_cast<size_t>(d) * d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        MatrixXd E = MatrixXd::Zero(d, d);
        E(i, j) = 1.0;
        images.push_back(anchor(kind, E, J, K, tol).mat());
      }
  }
  if (images.empty()) return Subspace(d * d);
  return span_of_matrices(images, tol, 1.0);
}

/// Prop check: {FAF | A in the fiber of E^S} equals the constrained set
/// {B in E | B Ker F = 0, B Im F inside Im F}, as spans.
inline bool image_equivalence_check(const DistributionSpec& spec, const MatrixXd& K,
                                    ConstraintClass e, const Tolerances& tol = {}) {
  const int d = static_cast<int>(K.rows());
  const FSplit fs = f_split(spec, K, tol);

  const auto fiber = class_fiber(twist_class(e, spec.s), spec.J, K, tol);
  std::vector<MatrixXd> sandwiched;
  sandwiched.reserve(fiber.size());
  for (const auto& A : fiber) sandwiched.push_back(fs.F * A * fs.F);

  std::vector<MatrixConstraint> cons{MatrixConstraint::skew(d),
                                     MatrixConstraint::annihilate(fs.kernel),
                                     MatrixConstraint::map_into(fs.image, fs.image)};
  switch (e) {
    case ConstraintClass::O: break;
    case ConstraintClass::UJ: cons.push_back(MatrixConstraint::commute_with(spec.J)); break;
    case ConstraintClass::UPhi: cons.push_back(MatrixConstraint::commute_with(K)); break;
    case ConstraintClass::OAntiJ: cons.push_back(MatrixConstraint::anticommute_with(spec.J)); break;
    case ConstraintClass::OAntiPhi: cons.push_back(MatrixConstraint::anticommute_with(K)); break;
  }
  const std::vector<MatrixXd> described = constrained_matrix_space(d, cons, tol);

  const Subspace lhs = sandwiched.empty() ? Subspace(d * d)
                                          : span_of_matrices(sandwiched, tol, 1.0);
  const Subspace rhs = described.empty() ? Subspace(d * d)
                                         : span_of_matrices(described, tol, 1.0);
  return subspace_relate(lhs, rhs, tol).equals;
}

inline bool image_equivalence_check(const DistributionSpec& spec, const MatrixXd& K,
                                    const Tolerances& tol = {}) {
  return image_equivalence_check(
      spec, K, spec.flavor == Flavor::Plain ? ConstraintClass::OAntiPhi : ConstraintClass::UJ,
      tol);
}

/// Plain distributions are closed under the almost complex structure
/// B -> KB; checks membership of KB for every basis element.
inline bool complex_closure_check(const DistributionSpec& spec, const MatrixXd& K,
                                  const Tolerances& tol = {}) {
  const DistributionBasis full = distribution_basis_full(spec, K, tol);
  if (full.tangents.empty()) return true;
  const Subspace span = span_of_matrices(full.tangents, tol, 1.0);
  for (const auto& B : full.tangents) {
    const MatrixXd KB = K * B;
    const VectorXd v = vec(KB);
    const VectorXd res = v - span.basis() * (span.basis().transpose() * v);
    if (res.norm() > std::sqrt(tol.rank_tol) * std::max(1.0, v.norm())) return false;
  }
  return true;
}

/// Subspace relation between two distribution fibers over the same J at the
/// same point.
inline SubspaceRelation distribution_relate(const DistributionSpec& a, const DistributionSpec& b,
                                            const MatrixXd& K, const Tolerances& tol = {}) {
  if (a.J.rows() != b.J.rows() || (a.J - b.J).norm() > tol.check_tol * std::max(1.0, a.J.norm()))
    throw AmbientMismatch("distribution_relate: different fixed structures");
  const int d = static_cast<int>(K.rows());
  const DistributionBasis fa = distribution_basis_full(a, K, tol);
  const DistributionBasis fb = distribution_basis_full(b, K, tol);
  const Subspace sa = fa.tangents.empty() ? Subspace(d * d)
                                          : span_of_matrices(fa.tangents, tol, 1.0);
  const Subspace sb = fb.tangents.empty() ? Subspace(d * d)
                                          : span_of_matrices(fb.tangents, tol, 1.0);
  return subspace_relate(sa, sb, tol);
}

/// requires fiber(a) contained in fiber(b) at K.
inline bool refinement_check(const DistributionSpec& a, const DistributionSpec& b,
                             const MatrixXd& K, const Tolerances& tol = {}) {
  return distribution_relate(a, b, K, tol).contains;
}

namespace detail {

/// Curve whose velocity at t=0 is the given basis direction, chosen so that
/// the distribution rank stays constant along it: a u(J)-conjugation for the
/// Unitary flavor (the generator solves [C,K] = B in the generator space),
/// the canonical tangent curve otherwise.
inline Curve frame_curve(const DistributionSpec& spec, const DistributionBasis& data,
                         const MatrixXd& K, const MatrixXd& B, const Tolerances& tol) {
  if (spec.flavor == Flavor::Plain) return conjugation_curve(K, B, tol);
  const int d = static_cast<int>(K.rows());
  MatrixXd M(d * d, static_cast<long>(data.generators.size()));
  for (size_t i = 0; i < data.generators.size(); ++i)
    M.col(static_cast<long>(i)) = vec(commutator(data.generators[i], K));
  const VectorXd coef = M.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(vec(B));
  MatrixXd C = MatrixXd::Zero(d, d);
  for (size_t i = 0; i < data.generators.size(); ++i)
    C += coef(static_cast<long>(i)) * data.generators[i];
  const double mismatch = (commutator(C, K) - B).norm();
  if (mismatch > std::sqrt(tol.rank_tol) * std::max(1.0, B.norm()))
    throw NumericalFailure("frame_curve: generator solve residual " + std::to_string(mismatch));
  return Curve(K, C, tol);
}

}  // namespace detail

/// Numerical involutivity at a generic point: extends the fiber basis to a
/// local frame by re-solving the constraints along rank-preserving curves,
/// takes finite-difference Lie brackets of all frame pairs, and returns the
/// largest distance from the fiber span at K.  Throws RankJump when the
/// fiber dimension changes within the probe radius.
inline double involutivity_residual(const DistributionSpec& spec, const MatrixXd& K,
                                    const Tolerances& tol = {}) {
  const DistributionBasis data = distribution_basis_full(spec, K, tol);
  const int m = static_cast<int>(data.tangents.size());
  if (m <= 1) return 0.0;
  const int d = static_cast<int>(K.rows());

  const Subspace span0 = span_of_matrices(data.tangents, tol, 1.0);
  const MatrixXd& U0 = span0.basis();
  const double h = tol.fd_step * K.norm();

  std::vector<Curve> curves;
  curves.reserve(m);
  for (const auto& B : data.tangents)
    curves.push_back(detail::frame_curve(spec, data, K, B, tol));

  // genericity probe: the fiber dimension must be stable around K
  for (const auto& c : curves) {
    for (const double t : {-10.0 * h, 10.0 * h}) {
      const int mp =
          static_cast<int>(distribution_basis_full(spec, c.eval(t), tol).tangents.size());
      if (mp != m)
        throw RankJump("involutivity_residual: fiber dimension " + std::to_string(mp) +
                       " at probe distance, " + std::to_string(m) + " at the base point");
    }
  }

  // the frame value of every direction j at a displaced point: project the
  // base matrix onto the re-solved fiber span there
  const auto frame_at = [&](const MatrixXd& Kp) {
    const DistributionBasis db = distribution_basis_full(spec, Kp, tol);
    const Subspace sp = span_of_matrices(db.tangents, tol, 1.0);
    MatrixXd vals(d * d, m);
    for (int j = 0; j < m; ++j) {
      const VectorXd v = vec(data.tangents[j]);
      vals.col(j) = sp.basis() * (sp.basis().transpose() * v);
    }
    return vals;  // column j = vec of X_j at Kp
  };

  // directional derivatives of the whole frame along each curve
  std::vector<MatrixXd> dframe(m);  // dframe[i].col(j) = vec(dX_j along X_i)
  for (int i = 0; i < m; ++i) {
    const MatrixXd fp = frame_at(curves[i].eval(h));
    const MatrixXd fm = frame_at(curves[i].eval(-h));
    const MatrixXd fph = frame_at(curves[i].eval(0.5 * h));
    const MatrixXd fmh = frame_at(curves[i].eval(-0.5 * h));
    const MatrixXd d1 = (fp - fm) / (2.0 * h);
    const MatrixXd d2 = (fph - fmh) / h;
    dframe[i] = (4.0 * d2 - d1) / 3.0;
  }

  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const VectorXd br = dframe[i].col(j) - dframe[j].col(i);
      const VectorXd res = br - U0 * (U0.transpose() * br);
      worst = std::max(worst, res.norm() / std::max(1.0, br.norm()));
    }
  }
  return worst;
}

}  // namespace twistor
