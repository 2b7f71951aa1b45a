// twistor_lab: command-line front end for the twistor pair laboratory.
// Exit codes: 0 success, 1 a mathematical check failed, 2 usage or input error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include <twistor/twistor.hpp>

namespace {

using twistor::io::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void flatten_text(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& [key, val] : j.items())
      flatten_text(val, prefix.empty() ? key : prefix + "." + key, os);
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i)
      flatten_text(j[i], prefix + "[" + std::to_string(i) + "]", os);
  } else {
    os << prefix << " = " << j.dump() << "\n";
  }
}

struct Output {
  std::string format = "json";
  void emit(const json& j) const {
    if (format == "text")
      flatten_text(j, "", std::cout);
    else
      std::cout << j.dump(2) << "\n";
  }
};

twistor::ConstraintClass class_from_string(const std::string& s) {
  if (s == "o") return twistor::ConstraintClass::O;
  if (s == "u_j") return twistor::ConstraintClass::UJ;
  if (s == "u_phi") return twistor::ConstraintClass::UPhi;
  if (s == "o_anti_j") return twistor::ConstraintClass::OAntiJ;
  if (s == "o_anti_phi") return twistor::ConstraintClass::OAntiPhi;
  throw twistor::UnknownCase("constraint class: " + s);
}

twistor::AnchorKind anchor_from_string(const std::string& s) {
  if (s == "delta_plus") return twistor::AnchorKind::delta_plus();
  if (s == "delta_minus") return twistor::AnchorKind::delta_minus();
  if (s == "sigma") return twistor::AnchorKind::sigma();
  throw twistor::UnknownCase("anchor: " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for orthogonal complex structure pairs"};
  app.require_subcommand(1);
  app.fallthrough();  // let --format / --tol appear after the subcommand too

  Output out;
  double tol_override = -1.0;
  app.add_option("--format", out.format, "output format: json or text")
      ->check(CLI::IsMember({"json", "text"}));
  app.add_option("--tol", tol_override, "override the check tolerance");

  std::string j_path, k_path, q_path, s_tag = "one", flavor = "plain";
  std::string anchor_name = "delta_plus", class_name = "u_j", case_id = "all";
  std::uint64_t seed = 0;
  int dim = 6, n_points = 8, samples = 16, grid = 64;
  double e0 = 0.5, a_param = 0.3;

  auto* validate = app.add_subcommand("validate", "check that J (and optionally K) lie on the space");
  validate->add_option("--J", j_path, "matrix JSON file")->required();
  validate->add_option("--K", k_path, "matrix JSON file");

  auto* decompose = app.add_subcommand("decompose", "eigenspace decomposition of the pair (J, K)");
  decompose->add_option("--J", j_path)->required();
  decompose->add_option("--K", k_path)->required();

  auto* classify = app.add_subcommand("classify-orbit", "orbit type of K under the unitary group of J");
  classify->add_option("--J", j_path)->required();
  classify->add_option("--K", k_path)->required();

  auto* dist = app.add_subcommand("dist", "distribution fiber and leaf model at K");
  dist->add_option("--J", j_path)->required();
  dist->add_option("--K", k_path)->required();
  dist->add_option("--Q", q_path, "polynomial JSON file (default: constant 1)");
  dist->add_option("--S", s_tag)->check(CLI::IsMember({"one", "jplus", "jminus", "comm"}));
  dist->add_option("--flavor", flavor)->check(CLI::IsMember({"plain", "unitary"}));

  auto* axioms = app.add_subcommand("check-axioms", "sampled anchor/Leibniz axioms for a bracket");
  axioms->add_option("--anchor", anchor_name)
      ->check(CLI::IsMember({"delta_plus", "delta_minus", "sigma"}));
  axioms->add_option("--dim", dim)->check(CLI::PositiveNumber);
  axioms->add_option("--samples", samples, "number of section pairs")->check(CLI::PositiveNumber);
  axioms->add_option("--points", n_points)->check(CLI::PositiveNumber);
  axioms->add_option("--seed", seed);

  auto* checkq = app.add_subcommand("check-q", "differential conditions on the coefficients of Q");
  checkq->add_option("--J", j_path)->required();
  checkq->add_option("--Q", q_path)->required();
  checkq->add_option("--S", s_tag)->check(CLI::IsMember({"one", "jplus", "jminus", "comm"}));
  checkq->add_option("--class", class_name)
      ->check(CLI::IsMember({"o", "u_j", "u_phi", "o_anti_j", "o_anti_phi"}));
  checkq->add_option("--samples", samples)->check(CLI::PositiveNumber);
  checkq->add_option("--seed", seed);

  auto* s2 = app.add_subcommand("repro-s2", "leaf survey of the 4-dimensional sphere example");
  s2->add_option("--e0", e0);
  s2->add_option("--grid", grid)->check(CLI::PositiveNumber);

  auto* d12 = app.add_subcommand("repro-dim12", "leaf survey of the 12-dimensional example");
  d12->add_option("--case", case_id);
  d12->add_option("--a", a_param);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  twistor::Tolerances tol;
  if (tol_override > 0.0) tol.check_tol = tol_override;

  try {
    if (*validate) {
      const twistor::MatrixXd J = twistor::io::matrix_from_json(read_json_file(j_path));
      json rep;
      rep["J"] = twistor::io::point_report_to_json(twistor::validate_point(J, tol));
      bool ok = rep["J"]["valid"].get<bool>();
      if (!k_path.empty()) {
        const twistor::MatrixXd K = twistor::io::matrix_from_json(read_json_file(k_path));
        rep["K"] = twistor::io::point_report_to_json(twistor::validate_point(K, tol));
        ok = ok && rep["K"]["valid"].get<bool>();
      }
      out.emit(rep);
      return ok ? 0 : 1;
    }

    if (*decompose) {
      const auto J = twistor::ComplexStructure::checked(
          twistor::io::matrix_from_json(read_json_file(j_path)), tol);
      const auto K = twistor::ComplexStructure::checked(
          twistor::io::matrix_from_json(read_json_file(k_path)), tol);
      const auto dec = twistor::decompose_pair(J, K, tol);
      out.emit(twistor::io::decomposition_to_json(J, K, dec));
      return 0;
    }

    if (*classify) {
      const auto J = twistor::ComplexStructure::checked(
          twistor::io::matrix_from_json(read_json_file(j_path)), tol);
      const auto K = twistor::ComplexStructure::checked(
          twistor::io::matrix_from_json(read_json_file(k_path)), tol);
      const auto cls = twistor::classify_orbit(J, K, tol);
      out.emit(twistor::io::leaf_class_to_json(cls, J.dim() / 2));
      return 0;
    }

    if (*dist) {
      twistor::DistributionSpec spec;
      spec.J = twistor::io::matrix_from_json(read_json_file(j_path));
      if (!q_path.empty()) spec.q = twistor::io::q_from_json(read_json_file(q_path));
      spec.s = twistor::io::s_from_string(s_tag);
      spec.flavor = twistor::io::flavor_from_string(flavor);
      const twistor::MatrixXd K = twistor::io::matrix_from_json(read_json_file(k_path));
      const auto rep = twistor::leaf_report(spec, K, tol);
      out.emit(twistor::io::leaf_report_to_json(rep));
      return rep.consistent ? 0 : 1;
    }

    if (*axioms) {
      if (dim % 2 != 0) throw twistor::DimensionMismatch("check-axioms: dim must be even");
      const auto kind = anchor_from_string(anchor_name);
      const auto rep = twistor::verify_axioms(kind, dim, samples, n_points, seed, tol);
      out.emit(twistor::io::axiom_report_to_json(rep));
      return rep.pass ? 0 : 1;
    }

    if (*checkq) {
      const twistor::MatrixXd J = twistor::io::matrix_from_json(read_json_file(j_path));
      const auto q = twistor::io::q_from_json(read_json_file(q_path));
      const auto rep = twistor::check_coefficient_conditions(
          J, q, twistor::io::s_from_string(s_tag), class_from_string(class_name), samples, seed,
          tol);
      out.emit(twistor::io::coefficient_report_to_json(rep));
      return rep.pass ? 0 : 1;
    }

    if (*s2) {
      const auto table = twistor::repro_s2(e0, grid, tol);
      bool ok = true;
      for (const auto& s : table) {
        const bool zero = s.case_label == "1" || s.case_label == "2";
        if (s.leaf_dim != (zero ? 0 : 2)) ok = false;
      }
      out.emit(twistor::io::s2_table_to_json(table));
      return ok ? 0 : 1;
    }

    if (*d12) {
      const std::vector<std::string> all = {"1a.i", "1a.ii", "1a.iii", "1b",
                                            "1c.i", "1c.ii", "2"};
      bool ok = true;
      json reports = json::array();
      for (const auto& id : all) {
        if (case_id != "all" && case_id != id) continue;
        const auto rep = twistor::repro_dim12(id, a_param, tol);
        ok = ok && rep.leaf.consistent;
        reports.push_back(twistor::io::dim12_report_to_json(rep));
      }
      if (reports.empty()) throw twistor::UnknownCase("repro-dim12: " + case_id);
      out.emit(case_id == "all" ? reports : reports.front());
      return ok ? 0 : 1;
    }
  } catch (const twistor::UnknownCase& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const twistor::DimensionMismatch& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const twistor::EvaluationFailure& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const twistor::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 2;
}
