#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "twistor_space.hpp"

namespace twistor {

/// Eigenstructure of the pair invariant {J,K}.  The spectrum lies in [-2,2];
/// eigenvalue 2e with e in (-1,1) contributes a "middle" cluster V_e, the
/// extremes 2 and -2 give V_1 = Ker(J+K) and V_-1 = Ker(J-K).
struct PairDecomposition {
  std::vector<std::pair<double, Subspace>> middle;  // (e, V_e), e ascending
  Subspace plus_one;   // Ker(J+K), eigenvalue +2 of {J,K}
  Subspace minus_one;  // Ker(J-K), eigenvalue -2 of {J,K}
};

struct QuaternionicRefinement {
  std::vector<std::pair<double, Subspace>> blocks;  // 4-dim J,K-invariant pieces
  Subspace plus_one, minus_one;
};

struct SchubertSignature {
  int m1;        // half the dimension of Ker(J+K)
  int m_minus1;  // half the dimension of Ker(J-K)
};

namespace detail {

inline void require_same_space(const ComplexStructure& J, const ComplexStructure& K) {
  if (J.dim() != K.dim())
    throw DimensionMismatch("pair: dims " + std::to_string(J.dim()) + " vs " +
                            std::to_string(K.dim()));
}

inline void require_valid_pair(const ComplexStructure& J, const ComplexStructure& K,
                               const Tolerances& tol) {
  require_same_space(J, K);
  if (!validate_point(J.mat(), tol).valid || !validate_point(K.mat(), tol).valid)
    throw InvalidStructure("pair: one of the structures fails validation");
}

}  // namespace detail

inline MatrixXd anticommutator(const MatrixXd& A, const MatrixXd& B) { return A * B + B * A; }
inline MatrixXd commutator(const MatrixXd& A, const MatrixXd& B) { return A * B - B * A; }

inline PairDecomposition decompose_pair(const ComplexStructure& J, const ComplexStructure& K,
                                        const Tolerances& tol = {}) {
  detail::require_valid_pair(J, K, tol);
  const int d = J.dim();
  MatrixXd M = anticommutator(J.mat(), K.mat());
  M = 0.5 * (M + M.transpose());  // symmetric up to roundoff by construction

  const auto clusters = clustered_sym_eig(M, tol);
  const double edge_thr = 10.0 * tol.cluster_tol * std::max(M.norm(), 1.0);

  PairDecomposition out{{}, Subspace(d), Subspace(d)};
  for (const auto& c : clusters) {
    if (std::abs(c.value - 2.0) < edge_thr) {
      out.plus_one = c.space;
    } else if (std::abs(c.value + 2.0) < edge_thr) {
      out.minus_one = c.space;
    } else {
      const double eps = 0.5 * c.value;
      if (std::abs(eps) >= 1.0)
        throw InvalidStructure("decompose_pair: eigenvalue " + std::to_string(c.value) +
                               " outside [-2,2]");
      if (c.space.rank() % 4 != 0)
        throw InvalidStructure("decompose_pair: middle cluster at " + std::to_string(eps) +
                               " has rank " + std::to_string(c.space.rank()) +
                               ", not a multiple of 4");
      out.middle.emplace_back(eps, c.space);
    }
  }

  // Cross-check: the middle clusters exactly fill the image of [J,K], and
  // the extreme ones fill its kernel.
  const MatrixXd comm = commutator(J.mat(), K.mat());
  const Subspace im = column_space(comm, tol, 1.0);
  int middle_rank = 0;
  for (const auto& [e, U] : out.middle) middle_rank += U.rank();
  if (im.rank() != middle_rank)
    throw InvalidStructure("decompose_pair: Im[J,K] rank " + std::to_string(im.rank()) +
                           " does not match the middle clusters (" +
                           std::to_string(middle_rank) + ")");
  return out;
}

/// Half-dimensions of Ker(J+K) and Ker(J-K).
inline SchubertSignature schubert_signature(const ComplexStructure& J, const ComplexStructure& K,
                                            const Tolerances& tol = {}) {
  detail::require_valid_pair(J, K, tol);
  const int kp = nullspace(J.mat() + K.mat(), tol, 1.0).rank();
  const int km = nullspace(J.mat() - K.mat(), tol, 1.0).rank();
  return SchubertSignature{kp / 2, km / 2};
}

/// K and J induce the same orientation exactly when m1 is even.
inline bool same_orientation(const ComplexStructure& J, const ComplexStructure& K,
                             const Tolerances& tol = {}) {
  return schubert_signature(J, K, tol).m1 % 2 == 0;
}

/// A pair with signature (m1, m_minus1) exists in dimension 2n exactly when
/// the remainder n - m1 - m_minus1 is even and nonnegative.
inline bool schubert_nonempty(int n, int m1, int m_minus1) {
  if (m1 < 0 || m_minus1 < 0) return false;
  const int rest = n - m1 - m_minus1;
  return rest >= 0 && rest % 2 == 0;
}

/// The derived structure K' = (JK - e)/f on the cluster V_e, f = +sqrt(1-e^2).
/// It is a complex structure on V_e anticommuting with both J and K there.
struct DerivedStructure {
  double eps;
  Subspace space;      // the cluster V_e
  MatrixXd on_space;   // K' in the cluster basis (rank x rank)
  MatrixXd ambient;    // (JK - e)/f as an ambient matrix; meaningful on V_e only
  double square_residual, j_residual, k_residual;
};

inline DerivedStructure derived_kprime(const ComplexStructure& J, const ComplexStructure& K,
                                       double eps, const Tolerances& tol = {}) {
  if (std::abs(eps) >= 1.0 - tol.cluster_tol)
    throw DegenerateCluster("derived_kprime: eps = " + std::to_string(eps));
  const PairDecomposition dec = decompose_pair(J, K, tol);
  const Subspace* cluster = nullptr;
  double value = 0.0;
  for (const auto& [e, U] : dec.middle) {
    if (std::abs(e - eps) < 10.0 * tol.cluster_tol * 2.0 + 1e-12) {
      cluster = &U;
      value = e;
    }
  }
  if (!cluster) throw DegenerateCluster("derived_kprime: no middle cluster at eps = " +
                                        std::to_string(eps));

  const double f = std::sqrt(1.0 - value * value);
  DerivedStructure out;
  out.eps = value;
  out.space = *cluster;
  out.ambient = (J.mat() * K.mat() - value * MatrixXd::Identity(J.dim(), J.dim())) / f;

  const MatrixXd& U = cluster->basis();
  out.on_space = U.transpose() * out.ambient * U;
  const int r = cluster->rank();
  const MatrixXd Jr = U.transpose() * J.mat() * U;
  const MatrixXd Kr = U.transpose() * K.mat() * U;
  out.square_residual = (out.on_space * out.on_space + MatrixXd::Identity(r, r)).norm();
  out.j_residual = anticommutator(Jr, out.on_space).norm();
  out.k_residual = anticommutator(Kr, out.on_space).norm();
  const double lim = 10.0 * tol.check_tol;
  if (out.square_residual > lim || out.j_residual > lim || out.k_residual > lim)
    throw InvalidStructure("derived_kprime: identity residuals " +
                           std::to_string(out.square_residual) + ", " +
                           std::to_string(out.j_residual) + ", " +
                           std::to_string(out.k_residual));
  return out;
}

/// Splits every middle cluster into orthogonal 4-dimensional J,K-invariant
/// blocks.  The block through a unit vector v is spanned by v, Jv, K'v, JK'v,
/// which is an exactly orthonormal set.
inline QuaternionicRefinement refine_blocks(const ComplexStructure& J, const ComplexStructure& K,
                                            const PairDecomposition& dec,
                                            const Tolerances& tol = {}) {
  const int d = J.dim();
  QuaternionicRefinement out{{}, dec.plus_one, dec.minus_one};
  for (const auto& [eps, U] : dec.middle) {
    const double f = std::sqrt(1.0 - eps * eps);
    const MatrixXd Kp = (J.mat() * K.mat() - eps * MatrixXd::Identity(d, d)) / f;
    MatrixXd rest = U.basis();
    while (rest.cols() > 0) {
      if (rest.cols() % 4 != 0)
        throw BlockFailure("refine_blocks: residual rank " + std::to_string(rest.cols()));
      MatrixXd blk(d, 4);
      blk.col(0) = rest.col(0);
      blk.col(1) = J.mat() * blk.col(0);
      blk.col(2) = Kp * blk.col(0);
      blk.col(3) = J.mat() * blk.col(2);
      // numerically re-orthonormalize; collapse signals a tolerance breach
      for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < j; ++i) blk.col(j) -= blk.col(i).dot(blk.col(j)) * blk.col(i);
        const double nv = blk.col(j).norm();
        if (nv < 0.5) throw BlockFailure("refine_blocks: block vector collapsed");
        blk.col(j) /= nv;
      }
      out.blocks.emplace_back(eps, Subspace(blk, tol));
      if (rest.cols() == 4) break;
      MatrixXd res = rest - blk * (blk.transpose() * rest);
      const Subspace remaining = Subspace::from_span(res, tol, 1.0);
      if (remaining.rank() != rest.cols() - 4)
        throw BlockFailure("refine_blocks: complement rank " + std::to_string(remaining.rank()));
      rest = remaining.basis();
    }
  }
  return out;
}

/// One (eps, multiplicity) entry of a requested spectrum for {J,K}.
struct ClusterSpec {
  double eps;
  int mult;  // dimension of the eigenspace of {J,K} at 2*eps
};

/// Builds a partner K with the prescribed {J,K} spectrum, block by block in
/// a J-adapted basis.  Middle values use 4-dim blocks K = -e J0 + sqrt(1-e^2) J',
/// with J' a fixed anticommuting partner of J0; e = +/-1 use K = -/+ J0.
inline ComplexStructure synthesize_partner(const ComplexStructure& J,
                                           const std::vector<ClusterSpec>& spec,
                                           const Tolerances& tol = {}) {
  const int d = J.dim();
  int total = 0;
  for (const auto& s : spec) {
    if (s.mult <= 0) throw InfeasibleSpec("synthesize_partner: nonpositive multiplicity");
    if (std::abs(s.eps) > 1.0)
      throw InfeasibleSpec("synthesize_partner: eps outside [-1,1]");
    const bool edge = std::abs(std::abs(s.eps) - 1.0) < tol.cluster_tol;
    if (edge && s.mult % 2 != 0)
      throw InfeasibleSpec("synthesize_partner: odd multiplicity at eps = +-1");
    if (!edge && s.mult % 4 != 0)
      throw InfeasibleSpec("synthesize_partner: multiplicity at eps = " +
                           std::to_string(s.eps) + " not a multiple of 4");
    total += s.mult;
  }
  if (total != d)
    throw InfeasibleSpec("synthesize_partner: multiplicities sum to " + std::to_string(total) +
                         ", need " + std::to_string(d));

  // the fixed anticommuting partner of J0 on a 4-dim block
  MatrixXd J4P = MatrixXd::Zero(4, 4);
  J4P(0, 2) = -1.0;
  J4P(1, 3) = 1.0;
  J4P(2, 0) = 1.0;
  J4P(3, 1) = -1.0;

  MatrixXd K0 = MatrixXd::Zero(d, d);
  int at = 0;
  for (const auto& s : spec) {
    if (std::abs(std::abs(s.eps) - 1.0) < tol.cluster_tol) {
      const double sign = s.eps > 0.0 ? -1.0 : 1.0;
      K0.block(at, at, s.mult, s.mult) = sign * standard_structure_matrix(s.mult);
      at += s.mult;
    } else {
      const double f = std::sqrt(1.0 - s.eps * s.eps);
      const MatrixXd blk = -s.eps * standard_structure_matrix(4) + f * J4P;
      for (int k = 0; k < s.mult / 4; ++k) {
        K0.block(at, at, 4, 4) = blk;
        at += 4;
      }
    }
  }

  const MatrixXd P = adapted_complex_basis(J.mat(), tol);
  return ComplexStructure::unchecked(P * K0 * P.transpose());
}

}  // namespace twistor
