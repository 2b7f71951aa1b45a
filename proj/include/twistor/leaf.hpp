#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "pair_decomposition.hpp"
#include "section_algebra.hpp"
#include "twistor_space.hpp"

namespace twistor {

/// Orbit type of K under conjugation by the unitary group of J: one Sp(k_i)
/// stabilizer factor per middle cluster (4k_i = cluster dimension), plus
/// U(m1) and U(m_minus1) for the extreme eigenspaces.
struct LeafClass {
  std::vector<int> sp_factors;  // ascending cluster value order
  int m1 = 0, m_minus1 = 0;
  int dimension = 0;  // n^2 - sum k_i(2k_i+1) - m1^2 - m_minus1^2

  std::string model(int n) const {
    std::string out = "U(" + std::to_string(n) + ")/";
    std::string den;
    for (int k : sp_factors) den += (den.empty() ? "" : "x") + ("Sp(" + std::to_string(k) + ")");
    if (m1 > 0) den += (den.empty() ? "" : "x") + ("U(" + std::to_string(m1) + ")");
    if (m_minus1 > 0)
      den += (den.empty() ? "" : "x") + ("U(" + std::to_string(m_minus1) + ")");
    return out + (den.empty() ? "1" : den);
  }
};

inline LeafClass classify_orbit(const ComplexStructure& J, const ComplexStructure& K,
                                const Tolerances& tol = {}) {
  const PairDecomposition dec = decompose_pair(J, K, tol);
  LeafClass out;
  for (const auto& [eps, U] : dec.middle) out.sp_factors.push_back(U.rank() / 4);
  out.m1 = dec.plus_one.rank() / 2;
  out.m_minus1 = dec.minus_one.rank() / 2;
  const int n = J.dim() / 2;
  int dim = n * n - out.m1 * out.m1 - out.m_minus1 * out.m_minus1;
  for (int k : out.sp_factors) dim -= k * (2 * k + 1);
  out.dimension = dim;
  return out;
}

/// K and L lie on the same U(J)-orbit exactly when {J,K} and {J,L} have the
/// same eigenvalues with multiplicity.
inline bool orbit_equivalent(const ComplexStructure& J, const ComplexStructure& K,
                             const ComplexStructure& L, const Tolerances& tol = {}) {
  detail::require_valid_pair(J, K, tol);
  detail::require_valid_pair(J, L, tol);
  const auto ck = clustered_sym_eig(anticommutator(J.mat(), K.mat()), tol);
  const auto cl = clustered_sym_eig(anticommutator(J.mat(), L.mat()), tol);
  if (ck.size() != cl.size()) return false;
  const double merge = 20.0 * tol.cluster_tol * std::max(1.0, 2.0 * std::sqrt(J.dim()));
  for (size_t i = 0; i < ck.size(); ++i) {
    if (std::abs(ck[i].value - cl[i].value) > merge) return false;
    if (ck[i].space.rank() != cl[i].space.rank()) return false;
  }
  return true;
}

/// Pointwise leaf data for a distribution at K.  The Plain model is the
/// twistor space of Im F; the Unitary model is the U(J)-orbit of the
/// restriction of K to Im F.
struct LeafReport {
  int ker_dim = 0, im_dim = 0;
  std::string model;   // "point", "T(2r)", or a homogeneous-space string
  int model_dim = 0;   // dimension read off the model
  int solver_dim = 0;  // length of the computed fiber basis
  bool consistent = false;  // model_dim == solver_dim
  Subspace image;      // membership witness
  LeafClass orbit;     // Unitary flavor: the orbit type of the restricted pair
};

inline LeafReport leaf_report(const DistributionSpec& spec, const MatrixXd& K,
                              const Tolerances& tol = {}) {
  const DistributionBasis data = distribution_basis_full(spec, K, tol);
  LeafReport rep;
  rep.image = data.split.image;
  rep.im_dim = data.split.image.rank();
  rep.ker_dim = data.split.kernel.rank();
  rep.solver_dim = static_cast<int>(data.tangents.size());

  if (rep.im_dim == 0) {
    rep.model = "point";
    rep.model_dim = 0;
  } else if (spec.flavor == Flavor::Plain) {
    const int r = rep.im_dim / 2;
    rep.model = "T(" + std::to_string(rep.im_dim) + ")";
    rep.model_dim = r * (r - 1);
  } else {
    const MatrixXd& U = data.split.image.basis();
    const MatrixXd Jb = U.transpose() * spec.J * U;
    const MatrixXd Kb = U.transpose() * K * U;
    rep.orbit = classify_orbit(ComplexStructure::checked(Jb, tol),
                               ComplexStructure::checked(Kb, tol), tol);
    rep.model = rep.orbit.model(rep.im_dim / 2);
    rep.model_dim = rep.orbit.dimension;
  }
  rep.consistent = rep.model_dim == rep.solver_dim;
  return rep;
}

/// Replaces K on Im F by another structure of the subspace: the result is
/// K on Ker F and Lb (given in the coordinates of the image basis) on Im F.
inline ComplexStructure splice(const MatrixXd& K, const MatrixXd& Lb,
                               const DistributionSpec& spec, const Tolerances& tol = {}) {
  const FSplit fs = f_split(spec, K, tol);
  const int r = fs.image.rank();
  if (Lb.rows() != r || Lb.cols() != r)
    throw SubspaceMismatch("splice: replacement is " + std::to_string(Lb.rows()) + "x" +
                           std::to_string(Lb.cols()) + ", image rank is " + std::to_string(r));
  if (!validate_point(Lb, tol).valid)
    throw InvalidStructure("splice: replacement is not a complex structure");
  const MatrixXd& Uk = fs.kernel.basis();
  const MatrixXd& Ui = fs.image.basis();
  const MatrixXd Kp = Uk * (Uk.transpose() * K * Uk) * Uk.transpose() + Ui * Lb * Ui.transpose();
  return ComplexStructure::checked(Kp, tol);
}

/// Leaf membership of Kp relative to the leaf through K.  For the pure-S
/// specs (Q = 1, S = J+-phi or [J,phi]) this is the kernel comparison
/// Ker(J +- Kp) = Ker(J +- K); otherwise it is agreement with K on Ker F,
/// equality of Im F, and for the Unitary flavor orbit equivalence of the
/// restrictions to Im F.
inline bool membership(const MatrixXd& Kp, const MatrixXd& K, const DistributionSpec& spec,
                       const Tolerances& tol = {}) {
  if (!validate_point(Kp, tol).valid) return false;
  const bool q_is_one = spec.q.degree() == 0 && spec.q.coeffs()[0].is_constant() &&
                        std::abs(spec.q.coeffs()[0].eval({}) - 1.0) < tol.check_tol;
  if (q_is_one && spec.flavor == Flavor::Plain && spec.s != STag::One) {
    const auto same_kernel = [&](double sgn) {
      const Subspace a = nullspace(spec.J + sgn * Kp, tol, 1.0);
      const Subspace b = nullspace(spec.J + sgn * K, tol, 1.0);
      return subspace_relate(a, b, tol).equals;
    };
    switch (spec.s) {
      case STag::JPlus: return same_kernel(1.0);
      case STag::JMinus: return same_kernel(-1.0);
      case STag::Comm: return same_kernel(1.0) && same_kernel(-1.0);
      case STag::One: break;
    }
  }

  const FSplit at_k = f_split(spec, K, tol);
  const double agree_tol = std::sqrt(tol.rank_tol) * std::max(1.0, K.norm());
  if (at_k.kernel.rank() > 0 &&
      ((Kp - K) * at_k.kernel.basis()).norm() > agree_tol)
    return false;
  const FSplit at_kp = f_split(spec, Kp, tol);
  if (!subspace_relate(at_kp.image, at_k.image, tol).equals) return false;

  if (spec.flavor == Flavor::Unitary && at_k.image.rank() > 0) {
    const MatrixXd& Ui = at_k.image.basis();
    const MatrixXd Jb = Ui.transpose() * spec.J * Ui;
    const MatrixXd Kb = Ui.transpose() * K * Ui;
    const MatrixXd Kpb = Ui.transpose() * Kp * Ui;
    if (!validate_point(Kpb, tol).valid) return false;
    return orbit_equivalent(ComplexStructure::checked(Jb, tol),
                            ComplexStructure::checked(Kb, tol),
                            ComplexStructure::unchecked(Kpb), tol);
  }
  return true;
}

/// One grid sample of the 4-dimensional example: the unit sphere of
/// structures K = aI + bJ + cL, with leaf dimensions and connected-component
/// labels decided by the interval of b.
struct S2Sample {
  double a, b, c;
  int leaf_dim;
  std::string case_label;
};

/// Sweeps the sphere over a b-level grid (the exact special levels b = 0 and
/// b = -e0 are inserted), classifying each sample.  Label scheme: "1" at b = 0,
/// "2" at b = -e0, "3a" on (0,1], "3b" on (-e0,0), "3c" on [-1,-e0).
inline std::vector<S2Sample> repro_s2(double e0, int grid_size, const Tolerances& tol = {}) {
  if (!(e0 > 0.0 && e0 < 1.0)) throw InfeasibleSpec("repro_s2: e0 must lie in (0,1)");
  if (grid_size < 2) throw InfeasibleSpec("repro_s2: grid too small");

  const MatrixXd I4 = standard_structure_matrix(4);
  MatrixXd Jf = MatrixXd::Zero(4, 4);  // anticommuting partner of I4
  Jf(0, 2) = -1.0;
  Jf(1, 3) = 1.0;
  Jf(2, 0) = 1.0;
  Jf(3, 1) = -1.0;
  const MatrixXd L = I4 * Jf;

  // Q = {J,phi}^2 - 2 e0 {J,phi}
  const QPolynomial q({ScalarFn::constant(0.0), ScalarFn::constant(-2.0 * e0),
                       ScalarFn::constant(1.0)});
  const DistributionSpec spec{Jf, q, STag::One, Flavor::Plain};

  std::vector<double> levels;
  for (int i = 0; i < grid_size; ++i)
    levels.push_back(-1.0 + 2.0 * static_cast<double>(i) / (grid_size - 1));
  for (const double special : {0.0, -e0})
    if (std::find(levels.begin(), levels.end(), special) == levels.end())
      levels.push_back(special);
  std::sort(levels.begin(), levels.end());

  std::vector<S2Sample> out;
  for (const double b : levels) {
    const double rho = std::sqrt(std::max(0.0, 1.0 - b * b));
    const int n_angles = rho > 0.0 ? 8 : 1;
    for (int k = 0; k < n_angles; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n_angles;
      const double a = rho * std::cos(theta);
      const double c = rho * std::sin(theta);
      const MatrixXd K = a * I4 + b * Jf + c * L;
      S2Sample s;
      s.a = a;
      s.b = b;
      s.c = c;
      s.leaf_dim = static_cast<int>(distribution_basis(spec, K, tol).size());
      if (b == 0.0)
        s.case_label = "1";
      else if (b == -e0)
        s.case_label = "2";
      else if (b > 0.0)
        s.case_label = "3a";
      else if (b > -e0)
        s.case_label = "3b";
      else
        s.case_label = "3c";
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// Report for one case of the 12-dimensional example with
/// Q = {J,phi} - (f_1/4) 1 and S = 1, Unitary flavor.
struct Dim12Report {
  std::string case_id;
  std::vector<ClusterSpec> spectrum;
  LeafReport leaf;
  LeafClass full_orbit_class;  // orbit type of K itself on all of V
  bool full_orbit;             // Ker F = 0: the leaf is the whole orbit
};

/// Case ids follow the outline of the example: 1a.i, 1a.ii, 1a.iii, 1b,
/// 1c.i, 1c.ii, 2.  The free middle value defaults to a = 0.3.
inline Dim12Report repro_dim12(const std::string& case_id, double a = 0.3,
                               const Tolerances& tol = {}) {
  if (!(a > -1.0 && a < 1.0)) throw InfeasibleSpec("repro_dim12: a must lie in (-1,1)");
  std::vector<ClusterSpec> spectrum;
  if (case_id == "1a.i") {
    if (std::abs(a) >= 1.0 - tol.cluster_tol)
      throw InfeasibleSpec("repro_dim12: case 1a.i needs a != +-1");
    spectrum = {{a, 4}, {1.0, 4}, {-1.0, 4}};
  } else if (case_id == "1a.ii") {
    if (std::abs(a) < tol.cluster_tol) throw InfeasibleSpec("repro_dim12: case 1a.ii needs a != 0");
    spectrum = {{a, 4}, {0.0, 8}};
  } else if (case_id == "1a.iii") {
    const double b = 0.6;
    if (std::abs(std::abs(a) - b) < tol.cluster_tol)
      throw InfeasibleSpec("repro_dim12: case 1a.iii needs a != +-0.6");
    spectrum = {{a, 4}, {b, 4}, {-b, 4}};
  } else if (case_id == "1b") {
    spectrum = {{0.0, 12}};
  } else if (case_id == "1c.i") {
    spectrum = {{1.0, 8}, {-1.0, 4}};
  } else if (case_id == "1c.ii") {
    if (std::abs(a) < tol.cluster_tol) throw InfeasibleSpec("repro_dim12: case 1c.ii needs a != 0");
    spectrum = {{a, 8}, {-a, 4}};
  } else if (case_id == "2") {
    spectrum = {{0.2, 4}, {0.5, 4}, {0.9, 4}};
  } else {
    throw UnknownCase("repro_dim12: " + case_id);
  }

  const ComplexStructure J = standard_structure(12);
  const ComplexStructure K = synthesize_partner(J, spectrum, tol);

  // Q = {J,phi} - (f_1/4) 1
  ScalarFn a0;
  a0.add_term(-0.25, {{1, 1}});
  const QPolynomial q({a0, ScalarFn::constant(1.0)});
  const DistributionSpec spec{J.mat(), q, STag::One, Flavor::Unitary};

  Dim12Report rep;
  rep.case_id = case_id;
  rep.spectrum = spectrum;
  rep.leaf = leaf_report(spec, K.mat(), tol);
  rep.full_orbit_class = classify_orbit(J, K, tol);
  rep.full_orbit = rep.leaf.ker_dim == 0;
  return rep;
}

}  // namespace twistor
