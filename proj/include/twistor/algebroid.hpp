#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "section_algebra.hpp"
#include "twistor_space.hpp"

namespace twistor {

/// The five constraint classes of skew endomorphisms: plain o(V), commuting
/// or anticommuting with the fixed structure J, commuting or anticommuting
/// with the point K (the value of phi).
enum class ConstraintClass { O, UJ, UPhi, OAntiJ, OAntiPhi };

inline const char* class_name(ConstraintClass e) {
  switch (e) {
    case ConstraintClass::O: return "o";
    case ConstraintClass::UJ: return "u_j";
    case ConstraintClass::UPhi: return "u_phi";
    case ConstraintClass::OAntiJ: return "o_anti_j";
    case ConstraintClass::OAntiPhi: return "o_anti_phi";
  }
  return "?";
}

/// Basis of the fiber of a constraint class at the point K.
inline std::vector<MatrixXd> class_fiber(ConstraintClass e, const MatrixXd& J, const MatrixXd& K,
                                         const Tolerances& tol = {}) {
  const int d = static_cast<int>(J.rows());
  std::vector<MatrixConstraint> cons{MatrixConstraint::skew(d)};
  switch (e) {
    case ConstraintClass::O: break;
    case ConstraintClass::UJ: cons.push_back(MatrixConstraint::commute_with(J)); break;
    case ConstraintClass::UPhi: cons.push_back(MatrixConstraint::commute_with(K)); break;
    case ConstraintClass::OAntiJ: cons.push_back(MatrixConstraint::anticommute_with(J)); break;
    case ConstraintClass::OAntiPhi: cons.push_back(MatrixConstraint::anticommute_with(K)); break;
  }
  return constrained_matrix_space(d, cons, tol);
}

/// Residual of A against the defining equations of a class, normalized by
/// the size of A.
inline double class_residual(ConstraintClass e, const MatrixXd& A, const MatrixXd& J,
                             const MatrixXd& K) {
  const double scale = std::max(1.0, A.norm());
  double r = (A + A.transpose()).norm();
  switch (e) {
    case ConstraintClass::O: break;
    case ConstraintClass::UJ: r = std::max(r, commutator(A, J).norm()); break;
    case ConstraintClass::UPhi: r = std::max(r, commutator(A, K).norm()); break;
    case ConstraintClass::OAntiJ: r = std::max(r, anticommutator(A, J).norm()); break;
    case ConstraintClass::OAntiPhi: r = std::max(r, anticommutator(A, K).norm()); break;
  }
  return r / scale;
}

/// The twisted class E^S: commutation constraints transported through S
/// using J(J+phi) = (J+phi)phi and J(J-phi) = -(J-phi)phi.  S = 1 and
/// S = [J,phi] leave every class fixed; S = J+-phi swaps J-constraints with
/// phi-constraints; o(V) always maps to itself.
inline ConstraintClass twist_class(ConstraintClass e, STag s) {
  if (e == ConstraintClass::O || s == STag::One || s == STag::Comm) return e;
  switch (e) {
    case ConstraintClass::UJ: return ConstraintClass::UPhi;
    case ConstraintClass::UPhi: return ConstraintClass::UJ;
    case ConstraintClass::OAntiJ: return ConstraintClass::OAntiPhi;
    case ConstraintClass::OAntiPhi: return ConstraintClass::OAntiJ;
    case ConstraintClass::O: return e;
  }
  return e;
}

/// Residual of the sandwich map: for B in the fiber of E^S, the matrix SBS
/// must land in the fiber of E.
inline double sandwich_check(const MatrixXd& B, ConstraintClass e, STag s, const MatrixXd& J,
                             const MatrixXd& K) {
  const MatrixXd S = s_value(s, J, K);
  return class_residual(e, S * B * S, J, K);
}

/// Which anchor: the two delta maps, sigma, or the psi family [FAF, phi].
class AnchorKind {
 public:
  enum class Tag { DeltaPlus, DeltaMinus, Sigma, Psi };

  static AnchorKind delta_plus() { return AnchorKind(Tag::DeltaPlus); }
  static AnchorKind delta_minus() { return AnchorKind(Tag::DeltaMinus); }
  static AnchorKind sigma() { return AnchorKind(Tag::Sigma); }

  /// psi with F = Q S, acting on the fiber of domain^S.
  static AnchorKind psi(QPolynomial q, STag s,
                        ConstraintClass domain = ConstraintClass::OAntiPhi) {
    AnchorKind k(Tag::Psi);
    k.q_ = std::move(q);
    k.s_ = s;
    k.domain_ = domain;
    return k;
  }

  Tag tag() const { return tag_; }
  const QPolynomial& q() const { return q_; }
  STag s() const { return s_; }
  ConstraintClass domain() const { return domain_; }

  const char* name() const {
    switch (tag_) {
      case Tag::DeltaPlus: return "delta_plus";
      case Tag::DeltaMinus: return "delta_minus";
      case Tag::Sigma: return "sigma";
      case Tag::Psi: return "psi";
    }
    return "?";
  }

 private:
  explicit AnchorKind(Tag t) : tag_(t) {}
  Tag tag_;
  QPolynomial q_ = QPolynomial::one();
  STag s_ = STag::One;
  ConstraintClass domain_ = ConstraintClass::OAntiPhi;
};

/// The anchor map applied to a single endomorphism A at the point K.
/// delta: [SA + A^T S, K] with S = J+-K; sigma: [SAT - TA^T S, K];
/// psi: [FAF, K] with F = QS.  All outputs are exactly tangent at K.
inline TangentVector anchor(const AnchorKind& kind, const MatrixXd& A, const MatrixXd& J,
                            const MatrixXd& K, const Tolerances& tol = {}) {
  if (A.rows() != J.rows() || A.cols() != J.cols())
    throw DimensionMismatch("anchor: matrix shape");
  MatrixXd X;
  switch (kind.tag()) {
    case AnchorKind::Tag::DeltaPlus: {
      const MatrixXd S = J + K;
      X = S * A + A.transpose() * S;
      break;
    }
    case AnchorKind::Tag::DeltaMinus: {
      const MatrixXd S = J - K;
      X = S * A + A.transpose() * S;
      break;
    }
    case AnchorKind::Tag::Sigma: {
      const MatrixXd S = J + K;
      const MatrixXd T = J - K;
      X = S * A * T - T * A.transpose() * S;
      break;
    }
    case AnchorKind::Tag::Psi: {
      const ConstraintClass dom = twist_class(kind.domain(), kind.s());
      if (class_residual(dom, A, J, K) > 10.0 * tol.check_tol)
        throw NotInDomain("anchor: psi argument is not in the twisted fiber");
      const MatrixXd F = kind.q().eval(J, K) * s_value(kind.s(), J, K);
      X = F * A * F;
      break;
    }
  }
  return TangentVector::unchecked(K, commutator(X, K));
}

/// A section given by evaluation and directional-derivative closures; either
/// exact (from an expression tree) or finite-difference (from a raw field).
struct GenSection {
  std::function<MatrixXd(const MatrixXd&)> value;
  std::function<MatrixXd(const MatrixXd&, const MatrixXd&)> derivative;  // (K, B)

  static GenSection from(const Section& s) {
    return GenSection{[s](const MatrixXd& K) { return s.eval(K); },
                      [s](const MatrixXd& K, const MatrixXd& B) { return s.derivative(K, B); }};
  }

  static GenSection from_constant(const MatrixXd& M) {
    return GenSection{[M](const MatrixXd&) { return M; },
                      [M](const MatrixXd& K, const MatrixXd&) {
                        return MatrixXd::Zero(K.rows(), K.cols()).eval();
                      }};
  }

  static GenSection from_field(EndoField f, const Tolerances& tol = {}) {
    return GenSection{f, [f, tol](const MatrixXd& K, const MatrixXd& B) {
                        return fd_derivative(f, K, B, tol);
                      }};
  }

  /// fn * this, with exact scalar derivative through the symmetric functions.
  GenSection scaled_by(const ScalarFn& fn, const MatrixXd& J) const {
    const GenSection base = *this;
    return GenSection{
        [base, fn, J](const MatrixXd& K) {
          return (fn.eval(symmetric_functions(J, K)) * base.value(K)).eval();
        },
        [base, fn, J](const MatrixXd& K, const MatrixXd& B) {
          const auto [f, df] = symmetric_functions_with_derivative(J, K, B);
          return (fn.eval(f) * base.derivative(K, B) +
                  fn.eval_derivative(f, df) * base.value(K))
              .eval();
        }};
  }
};

/// The explicit brackets.  For S = J+phi:
///   [A,B] = dB_{delta(A)} + J{A(J-phi),J}B/2 - B delta(A) phi/2 - (A <-> B),
/// for S = J-phi the inner factor becomes (J+phi); sigma uses
///   [A,B] = dB_{sigma(A)} + A S phi S {B,J}/2 - {A,J} T phi T B/2 - (A <-> B).
inline MatrixXd bracket(const AnchorKind& kind, const GenSection& A, const GenSection& B,
                        const MatrixXd& J, const MatrixXd& K, const Tolerances& tol = {}) {
  const MatrixXd a = A.value(K);
  const MatrixXd b = B.value(K);

  switch (kind.tag()) {
    case AnchorKind::Tag::DeltaPlus:
    case AnchorKind::Tag::DeltaMinus: {
      const MatrixXd inner =
          kind.tag() == AnchorKind::Tag::DeltaPlus ? MatrixXd(J - K) : MatrixXd(J + K);
      const MatrixXd dA = anchor(kind, a, J, K, tol).mat();
      const MatrixXd dB = anchor(kind, b, J, K, tol).mat();
      const MatrixXd t1 = B.derivative(K, dA) +
                          0.5 * J * anticommutator(a * inner, J) * b - 0.5 * b * dA * K;
      const MatrixXd t2 = A.derivative(K, dB) +
                          0.5 * J * anticommutator(b * inner, J) * a - 0.5 * a * dB * K;
      return t1 - t2;
    }
    case AnchorKind::Tag::Sigma: {
      const MatrixXd S = J + K;
      const MatrixXd T = J - K;
      const MatrixXd sA = anchor(kind, a, J, K, tol).mat();
      const MatrixXd sB = anchor(kind, b, J, K, tol).mat();
      const MatrixXd t1 = B.derivative(K, sA) + 0.5 * a * S * K * S * anticommutator(b, J) -
                          0.5 * anticommutator(a, J) * T * K * T * b;
      const MatrixXd t2 = A.derivative(K, sB) + 0.5 * b * S * K * S * anticommutator(a, J) -
                          0.5 * anticommutator(b, J) * T * K * T * a;
      return t1 - t2;
    }
    case AnchorKind::Tag::Psi:
      throw EvaluationFailure("bracket: the psi family carries no bracket here");
  }
  throw EvaluationFailure("bracket: unknown kind");
}

/// The bracket of two sections, itself wrapped as a section (derivatives of
/// the wrapper fall back to finite differences).
inline GenSection bracket_section(const AnchorKind& kind, const GenSection& A,
                                  const GenSection& B, const MatrixXd& J,
                                  const Tolerances& tol = {}) {
  return GenSection::from_field(
      [kind, A, B, J, tol](const MatrixXd& K) { return bracket(kind, A, B, J, K, tol); }, tol);
}

struct AxiomReport {
  double anchor_residual;   // max |anchor(bracket) - FD Lie bracket of anchor fields|
  double leibniz_residual;  // max |[A,fB] - f[A,B] - (anchor(A) f) B|
  double jacobiator_max;    // measured cyclic-sum size; reported, not gated
  int samples;
  bool pass;
};

/// Samples section pairs (constants and symmetric-function-scaled ones) at
/// seeded points and measures the two skew-algebroid axioms, plus the size
/// of the Jacobiator.
inline AxiomReport verify_axioms(const AnchorKind& kind, int dim, int n_pairs, int n_points,
                                 std::uint64_t seed, const Tolerances& tol = {},
                                 double gate = 1e-4) {
  Rng rng(seed);
  const MatrixXd J = random_point(dim, seed ^ 0x9e3779b97f4a7c15ull).mat();

  std::vector<GenSection> sections;
  for (int i = 0; i < 2 * n_pairs; ++i) {
    const MatrixXd M = rng.gaussian_matrix(dim, dim);
    switch (i % 3) {
      case 0:
        sections.push_back(GenSection::from_constant(M));
        break;
      case 1:
        sections.push_back(GenSection::from(
            Section::scaled(ScalarFn::variable(1), J, Section::constant(M))));
        break;
      default:
        sections.push_back(GenSection::from(
            Section::phi() * Section::constant(M) + Section::constant(M.transpose()) *
                                                        Section::phi() * Section::fixed_structure(J)));
        break;
    }
  }

  const ScalarFn f1 = ScalarFn::variable(1);
  AxiomReport rep{0.0, 0.0, 0.0, 0, false};

  for (int p = 0; p < n_points; ++p) {
    const MatrixXd K = random_point(dim, seed + 101 * p + 7).mat();
    for (int i = 0; i < n_pairs; ++i) {
      const GenSection& A = sections[2 * i];
      const GenSection& B = sections[2 * i + 1];

      // anchor morphism against the finite-difference Lie bracket
      const MatrixXd br = bracket(kind, A, B, J, K, tol);
      const MatrixXd lhs = anchor(kind, br, J, K, tol).mat();
      const EndoField X = [&kind, &A, &J, &tol](const MatrixXd& Kp) {
        return anchor(kind, A.value(Kp), J, Kp, tol).mat();
      };
      const EndoField Y = [&kind, &B, &J, &tol](const MatrixXd& Kp) {
        return anchor(kind, B.value(Kp), J, Kp, tol).mat();
      };
      const MatrixXd rhs = lie_bracket_fd(X, Y, K, tol).mat();
      rep.anchor_residual =
          std::max(rep.anchor_residual, (lhs - rhs).norm() / std::max(1.0, rhs.norm()));

      // Leibniz rule with f = f_1, all derivatives exact
      const GenSection fB = B.scaled_by(f1, J);
      const MatrixXd dA = anchor(kind, A.value(K), J, K, tol).mat();
      const auto [fv, dfv] = symmetric_functions_with_derivative(J, K, dA);
      const MatrixXd lei = bracket(kind, A, fB, J, K, tol) -
                           f1.eval(fv) * bracket(kind, A, B, J, K, tol) -
                           f1.eval_derivative(fv, dfv) * B.value(K);
      rep.leibniz_residual = std::max(rep.leibniz_residual, lei.norm());
      ++rep.samples;
    }
  }

  // Jacobiator measurement on a few triples at one point
  const MatrixXd K0 = random_point(dim, seed + 3).mat();
  const int triples = std::min(2, static_cast<int>(sections.size()) - 2);
  for (int i = 0; i < triples; ++i) {
    const GenSection& A = sections[i];
    const GenSection& B = sections[i + 1];
    const GenSection& C = sections[i + 2];
    const MatrixXd jac = bracket(kind, bracket_section(kind, A, B, J, tol), C, J, K0, tol) +
                         bracket(kind, bracket_section(kind, B, C, J, tol), A, J, K0, tol) +
                         bracket(kind, bracket_section(kind, C, A, J, tol), B, J, K0, tol);
    rep.jacobiator_max = std::max(rep.jacobiator_max, jac.norm());
  }

  rep.pass = rep.anchor_residual < gate && rep.leibniz_residual < gate;
  return rep;
}

struct CoefficientReport {
  double max_scalar_residual;    // |d a_i| along [SCS, K] directions
  double max_operator_residual;  // |dQ_{[FCF,K]} - Q dQ_{[SCS,K]} Q|
  int samples;
  bool pass;
};

/// Checks the differential conditions on the coefficients of Q: along the
/// directions [SCS, K] for C in the twisted fiber E^S the a_i must be
/// constant, and dQ along [FCF, K] must equal Q dQ_{[SCS,K]} Q.
inline CoefficientReport check_coefficient_conditions(const MatrixXd& J, const QPolynomial& q,
                                                      STag s, ConstraintClass e, int n_samples,
                                                      std::uint64_t seed,
                                                      const Tolerances& tol = {}) {
  const int dim = static_cast<int>(J.rows());
  Rng rng(seed);
  CoefficientReport rep{0.0, 0.0, 0, false};
  for (int i = 0; i < n_samples; ++i) {
    const MatrixXd K = random_point(dim, seed + 17 * i + 1).mat();
    const auto fiber = class_fiber(twist_class(e, s), J, K, tol);
    if (fiber.empty()) continue;
    MatrixXd C = MatrixXd::Zero(dim, dim);
    for (const auto& E : fiber) C += rng.gaussian() * E;

    const MatrixXd Sv = s_value(s, J, K);
    const MatrixXd B1 = commutator(Sv * C * Sv, K);
    const MatrixXd F = q.eval(J, K) * Sv;
    const MatrixXd B2 = commutator(F * C * F, K);

    const auto [f, df1] = symmetric_functions_with_derivative(J, K, B1);
    for (const auto& a : q.coeffs()) {
      if (a.is_constant()) continue;
      rep.max_scalar_residual =
          std::max(rep.max_scalar_residual, std::abs(a.eval_derivative(f, df1)));
    }

    const MatrixXd Qk = q.eval(J, K);
    const MatrixXd op =
        q.derivative(J, K, B2) - Qk * q.derivative(J, K, B1) * Qk;
    rep.max_operator_residual = std::max(rep.max_operator_residual, op.norm());
    ++rep.samples;
  }
  rep.pass = rep.max_scalar_residual < tol.check_tol && rep.max_operator_residual < tol.check_tol;
  return rep;
}

/// Same scalar condition for black-box coefficient functions (finite
/// differences when no exact derivative is supplied).
inline double scalar_invariance_residual(const MatrixXd& J, const std::vector<ScalarField>& fns,
                                         STag s, ConstraintClass e, int n_samples,
                                         std::uint64_t seed, const Tolerances& tol = {}) {
  const int dim = static_cast<int>(J.rows());
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const MatrixXd K = random_point(dim, seed + 17 * i + 1).mat();
    const auto fiber = class_fiber(twist_class(e, s), J, K, tol);
    if (fiber.empty()) continue;
    MatrixXd C = MatrixXd::Zero(dim, dim);
    for (const auto& E : fiber) C += rng.gaussian() * E;
    const MatrixXd Sv = s_value(s, J, K);
    const MatrixXd B1 = commutator(Sv * C * Sv, K);
    for (const auto& fn : fns) worst = std::max(worst, std::abs(fn.d(K, B1, tol)));
  }
  return worst;
}

}  // namespace twistor
