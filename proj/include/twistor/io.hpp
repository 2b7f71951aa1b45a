#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "algebroid.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "leaf.hpp"
#include "linalg.hpp"
#include "pair_decomposition.hpp"
#include "section_algebra.hpp"
#include "twistor_space.hpp"

namespace twistor::io {

using json = nlohmann::ordered_json;

// ---- matrices and subspaces -------------------------------------------

/// {"dim": d, "rows": [[...], ...]} with d rows of d entries.
inline json matrix_to_json(const MatrixXd& M) {
  json j;
  j["dim"] = static_cast<int>(M.rows());
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline MatrixXd matrix_from_json(const json& j) {
  const int d = j.at("dim").get<int>();
  const auto& rows = j.at("rows");
  if (d <= 0 || static_cast<int>(rows.size()) != d)
    throw EvaluationFailure("matrix: row count does not match dim");
  MatrixXd M(d, d);
  for (int r = 0; r < d; ++r) {
    const auto& row = rows.at(r);
    if (static_cast<int>(row.size()) != d)
      throw EvaluationFailure("matrix: row " + std::to_string(r) + " has wrong length");
    for (int c = 0; c < d; ++c) M(r, c) = row.at(c).get<double>();
  }
  return M;
}

/// Matrix schema plus "rank"; rows are those of the d x rank basis.
inline json subspace_to_json(const Subspace& U) {
  json j;
  j["dim"] = U.ambient_dim();
  j["rank"] = U.rank();
  json rows = json::array();
  const MatrixXd& B = U.basis();
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < B.cols(); ++c) row.push_back(B(r, c));
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline Subspace subspace_from_json(const json& j, const Tolerances& tol = {}) {
  const int d = j.at("dim").get<int>();
  const int r = j.at("rank").get<int>();
  const auto& rows = j.at("rows");
  if (d <= 0 || r < 0 || r > d || static_cast<int>(rows.size()) != d)
    throw EvaluationFailure("subspace: inconsistent dim/rank/rows");
  MatrixXd B(d, r);
  for (int i = 0; i < d; ++i) {
    const auto& row = rows.at(i);
    if (static_cast<int>(row.size()) != r)
      throw EvaluationFailure("subspace: row " + std::to_string(i) + " has wrong length");
    for (int c = 0; c < r; ++c) B(i, c) = row.at(c).get<double>();
  }
  if (r == 0) return Subspace(d);
  return Subspace(B, tol);
}

// ---- spectra -----------------------------------------------------------

/// [{"eps": e, "mult": m}, ...]
inline json spectrum_to_json(const std::vector<ClusterSpec>& spec) {
  json j = json::array();
  for (const auto& s : spec) j.push_back(json{{"eps", s.eps}, {"mult", s.mult}});
  return j;
}

inline std::vector<ClusterSpec> spectrum_from_json(const json& j) {
  std::vector<ClusterSpec> out;
  for (const auto& item : j)
    out.push_back({item.at("eps").get<double>(), item.at("mult").get<int>()});
  return out;
}

// ---- scalar polynomials and Q -----------------------------------------

/// {"terms": [{"c": coeff, "exp": {"j": power, ...}}, ...]}; "exp" keys are
/// the indices of the symmetric functions f_j as decimal strings.
inline json scalar_fn_to_json(const ScalarFn& f) {
  json terms = json::array();
  for (const auto& t : f.terms()) {
    json exp = json::object();
    for (const auto& [j, p] : t.exp) exp[std::to_string(j)] = p;
    terms.push_back(json{{"c", t.c}, {"exp", std::move(exp)}});
  }
  return json{{"terms", std::move(terms)}};
}

inline ScalarFn scalar_fn_from_json(const json& j) {
  ScalarFn f;
  for (const auto& t : j.at("terms")) {
    std::vector<std::pair<int, int>> exp;
    for (const auto& [key, val] : t.at("exp").items())
      exp.emplace_back(std::stoi(key), val.get<int>());
    f.add_term(t.at("c").get<double>(), std::move(exp));
  }
  return f;
}

/// {"coeffs": [fn_0, fn_1, ...]} ordered by power of {J,phi}.
inline json q_to_json(const QPolynomial& q) {
  json coeffs = json::array();
  for (const auto& a : q.coeffs()) coeffs.push_back(scalar_fn_to_json(a));
  return json{{"coeffs", std::move(coeffs)}};
}

inline QPolynomial q_from_json(const json& j) {
  std::vector<ScalarFn> coeffs;
  for (const auto& a : j.at("coeffs")) coeffs.push_back(scalar_fn_from_json(a));
  if (coeffs.empty()) throw EvaluationFailure("q: needs at least one coefficient");
  return QPolynomial(std::move(coeffs));
}

// ---- tags --------------------------------------------------------------

inline STag s_from_string(const std::string& s) {
  if (s == "one") return STag::One;
  if (s == "jplus") return STag::JPlus;
  if (s == "jminus") return STag::JMinus;
  if (s == "comm") return STag::Comm;
  throw UnknownCase("S tag: " + s);
}

inline Flavor flavor_from_string(const std::string& s) {
  if (s == "plain") return Flavor::Plain;
  if (s == "unitary") return Flavor::Unitary;
  throw UnknownCase("flavor: " + s);
}

// ---- distribution specs ------------------------------------------------

/// {"J": matrix, "Q": qpoly, "S": tag, "flavor": "plain"|"unitary"}
inline json spec_to_json(const DistributionSpec& spec) {
  json j;
  j["J"] = matrix_to_json(spec.J);
  j["Q"] = q_to_json(spec.q);
  j["S"] = s_tag_name(spec.s);
  j["flavor"] = flavor_name(spec.flavor);
  return j;
}

inline DistributionSpec spec_from_json(const json& j) {
  DistributionSpec spec;
  spec.J = matrix_from_json(j.at("J"));
  if (j.contains("Q")) spec.q = q_from_json(j.at("Q"));
  if (j.contains("S")) spec.s = s_from_string(j.at("S").get<std::string>());
  if (j.contains("flavor")) spec.flavor = flavor_from_string(j.at("flavor").get<std::string>());
  return spec;
}

// ---- reports -----------------------------------------------------------

inline json point_report_to_json(const PointReport& r) {
  return json{{"square_residual", r.square_residual},
              {"skew_residual", r.skew_residual},
              {"valid", r.valid}};
}

/// Summary of a pair decomposition: extreme eigenspace dimensions, middle
/// clusters, and the derived orientation/intersection flags.
inline json decomposition_to_json(const ComplexStructure& J, const ComplexStructure& K,
                                  const PairDecomposition& dec) {
  json middle = json::array();
  for (const auto& [eps, U] : dec.middle)
    middle.push_back(json{{"eps", eps}, {"dim", U.rank()}});
  const int m1 = dec.plus_one.rank() / 2;
  const int mm1 = dec.minus_one.rank() / 2;
  const int n = J.dim() / 2;
  return json{{"dim", J.dim()},
              {"plus_one_dim", dec.plus_one.rank()},
              {"minus_one_dim", dec.minus_one.rank()},
              {"middle", std::move(middle)},
              {"m1", m1},
              {"m_minus1", mm1},
              {"same_orientation", m1 % 2 == 0},
              {"schubert_nonempty", schubert_nonempty(n, m1, mm1)}};
}

inline json leaf_class_to_json(const LeafClass& c, int n) {
  return json{{"sp_factors", c.sp_factors},
              {"m1", c.m1},
              {"m_minus1", c.m_minus1},
              {"dimension", c.dimension},
              {"model", c.model(n)}};
}

inline json leaf_report_to_json(const LeafReport& r) {
  return json{{"ker_dim", r.ker_dim},     {"im_dim", r.im_dim},
              {"model", r.model},         {"model_dim", r.model_dim},
              {"solver_dim", r.solver_dim}, {"consistent", r.consistent}};
}

/// [{"axiom": ..., "max_residual": ..., "samples": ..., "pass": ...}];
/// the jacobiator row is a measurement, marked "gated": false.
inline json axiom_report_to_json(const AxiomReport& r) {
  json rows = json::array();
  rows.push_back(json{{"axiom", "anchor"},
                      {"max_residual", r.anchor_residual},
                      {"samples", r.samples},
                      {"pass", r.pass}});
  rows.push_back(json{{"axiom", "leibniz"},
                      {"max_residual", r.leibniz_residual},
                      {"samples", r.samples},
                      {"pass", r.pass}});
  rows.push_back(json{{"axiom", "jacobiator"},
                      {"max_residual", r.jacobiator_max},
                      {"samples", r.samples},
                      {"gated", false}});
  return rows;
}

inline json coefficient_report_to_json(const CoefficientReport& r) {
  return json{{"max_scalar_residual", r.max_scalar_residual},
              {"max_operator_residual", r.max_operator_residual},
              {"samples", r.samples},
              {"pass", r.pass}};
}

/// [{"point": [a,b,c], "leaf_dim": d, "case": label}, ...]
inline json s2_table_to_json(const std::vector<S2Sample>& table) {
  json j = json::array();
  for (const auto& s : table)
    j.push_back(json{{"point", {s.a, s.b, s.c}}, {"leaf_dim", s.leaf_dim}, {"case", s.case_label}});
  return j;
}

inline json dim12_report_to_json(const Dim12Report& r) {
  int total = 0;
  for (const auto& s : r.spectrum) total += s.mult;
  return json{{"case", r.case_id},
              {"spectrum", spectrum_to_json(r.spectrum)},
              {"leaf", leaf_report_to_json(r.leaf)},
              {"full_orbit", r.full_orbit},
              {"orbit", leaf_class_to_json(r.full_orbit_class, total / 2)}};
}

}  // namespace twistor::io
