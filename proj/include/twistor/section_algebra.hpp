#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "pair_decomposition.hpp"
#include "twistor_space.hpp"

namespace twistor {

/// Symmetric functions f_1..f_m of the eigenvalues of M = {J,K}, m = dim V,
/// computed from power sums p_k = tr(M^k) through Newton's identities.  They
/// are the characteristic-polynomial coefficients with alternating signs:
/// det(t - M) = t^m - f_1 t^{m-1} + f_2 t^{m-2} - ...
inline std::vector<double> symmetric_functions(const MatrixXd& J, const MatrixXd& K) {
  const int m = static_cast<int>(J.rows());
  const MatrixXd M = anticommutator(J, K);
  std::vector<double> p(m + 1, 0.0), e(m + 1, 0.0);
  e[0] = 1.0;
  MatrixXd Mk = MatrixXd::Identity(m, m);
  for (int k = 1; k <= m; ++k) {
    Mk = Mk * M;
    p[k] = Mk.trace();
  }
  for (int j = 1; j <= m; ++j) {
    double acc = 0.0;
    double sign = 1.0;
    for (int i = 1; i <= j; ++i) {
      acc += sign * e[j - i] * p[i];
      sign = -sign;
    }
    e[j] = acc / j;
  }
  return std::vector<double>(e.begin() + 1, e.end());  // f_1..f_m
}

/// f_j together with their exact directional derivatives along the tangent
/// direction B, using d p_k = k tr(M^{k-1} {J,B}).
inline std::pair<std::vector<double>, std::vector<double>> symmetric_functions_with_derivative(
    const MatrixXd& J, const MatrixXd& K, const MatrixXd& B) {
  const int m = static_cast<int>(J.rows());
  const MatrixXd M = anticommutator(J, K);
  const MatrixXd dM = anticommutator(J, B);
  std::vector<double> p(m + 1, 0.0), dp(m + 1, 0.0), e(m + 1, 0.0), de(m + 1, 0.0);
  e[0] = 1.0;
  MatrixXd Mk = MatrixXd::Identity(m, m);  // M^{k-1} inside the loop
  for (int k = 1; k <= m; ++k) {
    dp[k] = k * (Mk * dM).trace();
    Mk = Mk * M;
    p[k] = Mk.trace();
  }
  for (int j = 1; j <= m; ++j) {
    double acc = 0.0, dacc = 0.0;
    double sign = 1.0;
    for (int i = 1; i <= j; ++i) {
      acc += sign * e[j - i] * p[i];
      dacc += sign * (de[j - i] * p[i] + e[j - i] * dp[i]);
      sign = -sign;
    }
    e[j] = acc / j;
    de[j] = dacc / j;
  }
  return {std::vector<double>(e.begin() + 1, e.end()),
          std::vector<double>(de.begin() + 1, de.end())};
}

/// A polynomial in the formal variables f_1, f_2, ... with real coefficients,
/// stored as a sum of monomials.
class ScalarFn {
 public:
  struct Term {
    double c;
    std::vector<std::pair<int, int>> exp;  // (index j >= 1, power >= 1), sorted by j
  };

  ScalarFn() = default;  // the zero polynomial

  static ScalarFn constant(double c) {
    ScalarFn f;
    if (c != 0.0) f.terms_.push_back({c, {}});
    return f;
  }

  /// The variable f_j.
  static ScalarFn variable(int j) {
    if (j < 1) throw EvaluationFailure("ScalarFn: variable index must be >= 1");
    ScalarFn f;
    f.terms_.push_back({1.0, {{j, 1}}});
    return f;
  }

  ScalarFn& add_term(double c, std::vector<std::pair<int, int>> exp) {
    std::sort(exp.begin(), exp.end());
    for (const auto& [j, p] : exp)
      if (j < 1 || p < 1) throw EvaluationFailure("ScalarFn: bad exponent entry");
    terms_.push_back({c, std::move(exp)});
    return *this;
  }

  bool is_constant() const {
    for (const auto& t : terms_)
      if (!t.exp.empty()) return false;
    return true;
  }

  int max_index() const {
    int m = 0;
    for (const auto& t : terms_)
      for (const auto& [j, p] : t.exp) m = std::max(m, j);
    return m;
  }

  double eval(const std::vector<double>& f) const {
    double out = 0.0;
    for (const auto& t : terms_) {
      double v = t.c;
      for (const auto& [j, p] : t.exp) {
        if (j > static_cast<int>(f.size()))
          throw EvaluationFailure("ScalarFn: f_" + std::to_string(j) + " out of range");
        v *= std::pow(f[j - 1], p);
      }
      out += v;
    }
    return out;
  }

  /// Chain rule through the given df_j values.
  double eval_derivative(const std::vector<double>& f, const std::vector<double>& df) const {
    double out = 0.0;
    for (const auto& t : terms_) {
      for (size_t which = 0; which < t.exp.size(); ++which) {
        const auto [j, p] = t.exp[which];
        if (j > static_cast<int>(f.size()))
          throw EvaluationFailure("ScalarFn: f_" + std::to_string(j) + " out of range");
        double v = t.c * p * std::pow(f[j - 1], p - 1) * df[j - 1];
        for (size_t other = 0; other < t.exp.size(); ++other) {
          if (other == which) continue;
          const auto [l, q] = t.exp[other];
          v *= std::pow(f[l - 1], q);
        }
        out += v;
      }
    }
    return out;
  }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

/// Endomorphism-valued expression over the twistor space, with exact
/// evaluation and exact directional derivatives.  phi is the tautological
/// section (value K at the point K, derivative B).
class Section {
  enum class Kind { Const, Phi, Sum, Product, Adjoint, ScalarMul };

  struct Node {
    Kind kind;
    MatrixXd mat;  // Const: the value; ScalarMul: the fixed structure for the f_j
    ScalarFn fn;   // ScalarMul only
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

 public:
  static Section constant(MatrixXd M) {
    return Section(std::make_shared<Node>(Node{Kind::Const, std::move(M), {}, nullptr, nullptr}));
  }

  /// A fixed complex structure used inside an expression; a constant node,
  /// named separately for readable call sites.
  static Section fixed_structure(MatrixXd J) { return constant(std::move(J)); }

  static Section phi() {
    return Section(std::make_shared<Node>(Node{Kind::Phi, {}, {}, nullptr, nullptr}));
  }

  static Section identity(int dim) { return constant(MatrixXd::Identity(dim, dim)); }

  /// fn(f_1(J,K),...) * child.  J may be empty when fn is constant.
  static Section scaled(ScalarFn fn, MatrixXd J, Section child) {
    if (!fn.is_constant() && J.size() == 0)
      throw EvaluationFailure("Section: symmetric-function coefficient needs a fixed structure");
    return Section(std::make_shared<Node>(
        Node{Kind::ScalarMul, std::move(J), std::move(fn), child.root_, nullptr}));
  }

  Section adjoint() const {
    return Section(std::make_shared<Node>(Node{Kind::Adjoint, {}, {}, root_, nullptr}));
  }

  friend Section operator+(const Section& x, const Section& y) {
    return Section(std::make_shared<Node>(Node{Kind::Sum, {}, {}, x.root_, y.root_}));
  }

  friend Section operator*(const Section& x, const Section& y) {
    return Section(std::make_shared<Node>(Node{Kind::Product, {}, {}, x.root_, y.root_}));
  }

  friend Section operator*(double c, const Section& x) {
    return scaled(ScalarFn::constant(c), MatrixXd(), x);
  }

  friend Section operator-(const Section& x, const Section& y) { return x + (-1.0) * y; }

  MatrixXd eval(const MatrixXd& K) const { return eval_node(*root_, K); }

  /// Exact directional derivative at K along the tangent direction B.
  MatrixXd derivative(const MatrixXd& K, const MatrixXd& B) const {
    return derivative_node(*root_, K, B);
  }

 private:
  explicit Section(NodePtr n) : root_(std::move(n)) {}

  static MatrixXd eval_node(const Node& n, const MatrixXd& K) {
    switch (n.kind) {
      case Kind::Const:
        if (n.mat.rows() != K.rows())
          throw DimensionMismatch("Section: constant of wrong size");
        return n.mat;
      case Kind::Phi:
        return K;
      case Kind::Sum:
        return eval_node(*n.a, K) + eval_node(*n.b, K);
      case Kind::Product:
        return eval_node(*n.a, K) * eval_node(*n.b, K);
      case Kind::Adjoint:
        return eval_node(*n.a, K).transpose();
      case Kind::ScalarMul: {
        const double c = n.fn.is_constant() ? n.fn.eval({})
                                            : n.fn.eval(symmetric_functions(n.mat, K));
        return c * eval_node(*n.a, K);
      }
    }
    throw EvaluationFailure("Section: unknown node");
  }

  static MatrixXd derivative_node(const Node& n, const MatrixXd& K, const MatrixXd& B) {
    switch (n.kind) {
      case Kind::Const:
        return MatrixXd::Zero(K.rows(), K.cols());
      case Kind::Phi:
        return B;
      case Kind::Sum:
        return derivative_node(*n.a, K, B) + derivative_node(*n.b, K, B);
      case Kind::Product:
        return derivative_node(*n.a, K, B) * eval_node(*n.b, K) +
               eval_node(*n.a, K) * derivative_node(*n.b, K, B);
      case Kind::Adjoint:
        return derivative_node(*n.a, K, B).transpose();
      case Kind::ScalarMul: {
        if (n.fn.is_constant()) return n.fn.eval({}) * derivative_node(*n.a, K, B);
        const auto [f, df] = symmetric_functions_with_derivative(n.mat, K, B);
        return n.fn.eval(f) * derivative_node(*n.a, K, B) +
               n.fn.eval_derivative(f, df) * eval_node(*n.a, K);
      }
    }
    throw EvaluationFailure("Section: unknown node");
  }

  NodePtr root_;
};

/// {J, phi} as a section for a fixed J.
inline Section pair_invariant_section(const MatrixXd& J) {
  const Section j = Section::fixed_structure(J);
  const Section p = Section::phi();
  return j * p + p * j;
}

/// The four admissible S values.
enum class STag { One, JPlus, JMinus, Comm };

inline const char* s_tag_name(STag s) {
  switch (s) {
    case STag::One: return "one";
    case STag::JPlus: return "jplus";
    case STag::JMinus: return "jminus";
    case STag::Comm: return "comm";
  }
  return "?";
}

inline MatrixXd s_value(STag s, const MatrixXd& J, const MatrixXd& K) {
  switch (s) {
    case STag::One: return MatrixXd::Identity(J.rows(), J.cols());
    case STag::JPlus: return J + K;
    case STag::JMinus: return J - K;
    case STag::Comm: return commutator(J, K);
  }
  throw EvaluationFailure("s_value: unknown tag");
}

inline Section s_section(STag s, const MatrixXd& J) {
  const Section j = Section::fixed_structure(J);
  const Section p = Section::phi();
  switch (s) {
    case STag::One: return Section::identity(static_cast<int>(J.rows()));
    case STag::JPlus: return j + p;
    case STag::JMinus: return j - p;
    case STag::Comm: return j * p - p * j;
  }
  throw EvaluationFailure("s_section: unknown tag");
}

/// d S|_K in the direction B, for each tag (exact: dphi = B).
inline MatrixXd s_derivative(STag s, const MatrixXd& J, const MatrixXd& B) {
  switch (s) {
    case STag::One: return MatrixXd::Zero(J.rows(), J.cols());
    case STag::JPlus: return B;
    case STag::JMinus: return -B;
    case STag::Comm: return commutator(J, B);
  }
  throw EvaluationFailure("s_derivative: unknown tag");
}

/// Q = a_k {J,phi}^k + ... + a_1 {J,phi} + a_0, with each a_i a polynomial
/// in the symmetric functions.  At every point Q is symmetric and commutes
/// with both J and K, since {J,K} does.
class QPolynomial {
 public:
  explicit QPolynomial(std::vector<ScalarFn> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw EvaluationFailure("QPolynomial: no coefficients");
  }

  static QPolynomial one() { return QPolynomial({ScalarFn::constant(1.0)}); }

  const std::vector<ScalarFn>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  MatrixXd eval(const MatrixXd& J, const MatrixXd& K) const {
    const int d = static_cast<int>(J.rows());
    const std::vector<double> f = needs_f() ? symmetric_functions(J, K) : std::vector<double>();
    const MatrixXd M = anticommutator(J, K);
    MatrixXd out = MatrixXd::Zero(d, d);
    MatrixXd Mi = MatrixXd::Identity(d, d);
    for (size_t i = 0; i < coeffs_.size(); ++i) {
      const double a = coeffs_[i].is_constant() ? coeffs_[i].eval({}) : coeffs_[i].eval(f);
      out += a * Mi;
      if (i + 1 < coeffs_.size()) Mi = Mi * M;
    }
    return out;
  }

  /// Exact directional derivative of Q|_K along B.
  MatrixXd derivative(const MatrixXd& J, const MatrixXd& K, const MatrixXd& B) const {
    const int d = static_cast<int>(J.rows());
    std::vector<double> f, df;
    if (needs_f()) std::tie(f, df) = symmetric_functions_with_derivative(J, K, B);
    const MatrixXd M = anticommutator(J, K);
    const MatrixXd dM = anticommutator(J, B);

    // powers M^i and their derivatives, built incrementally
    MatrixXd Mi = MatrixXd::Identity(d, d);
    MatrixXd dMi = MatrixXd::Zero(d, d);
    MatrixXd out = MatrixXd::Zero(d, d);
    for (size_t i = 0; i < coeffs_.size(); ++i) {
      const double a = coeffs_[i].is_constant() ? coeffs_[i].eval({}) : coeffs_[i].eval(f);
      const double da = coeffs_[i].is_constant() ? 0.0 : coeffs_[i].eval_derivative(f, df);
      out += da * Mi + a * dMi;
      if (i + 1 < coeffs_.size()) {
        dMi = dMi * M + Mi * dM;
        Mi = Mi * M;
      }
    }
    return out;
  }

  /// The same object as a Section, for use inside bracket expressions.
  Section as_section(const MatrixXd& J) const {
    const Section m = pair_invariant_section(J);
    Section out = Section::scaled(coeffs_[0], J, Section::identity(static_cast<int>(J.rows())));
    Section mi = m;
    for (size_t i = 1; i < coeffs_.size(); ++i) {
      out = out + Section::scaled(coeffs_[i], J, mi);
      if (i + 1 < coeffs_.size()) mi = mi * m;
    }
    return out;
  }

 private:
  bool needs_f() const {
    for (const auto& c : coeffs_)
      if (!c.is_constant()) return true;
    return false;
  }

  std::vector<ScalarFn> coeffs_;
};

/// A black-box scalar function on the twistor space; the derivative falls
/// back to finite differences when no exact rule is supplied.
struct ScalarField {
  std::function<double(const MatrixXd&)> value;
  std::function<double(const MatrixXd&, const MatrixXd&)> derivative;  // optional

  double d(const MatrixXd& K, const MatrixXd& B, const Tolerances& tol = {}) const {
    if (derivative) return derivative(K, B);
    return fd_derivative(value, K, B, tol);
  }
};

}  // namespace twistor
