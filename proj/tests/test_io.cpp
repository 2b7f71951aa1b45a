// JSON serialization round trips and end-to-end checks of the twistor_lab
// command line tool (run as a subprocess; paths injected by the build).

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>
#include <string>
#include <twistor/twistor.hpp>

using namespace twistor;
using twistor::io::json;

namespace {

std::string data_path(const std::string& name) {
  return std::string(TWISTOR_DATA_DIR) + "/" + name;
}

json load(const std::string& name) {
  std::ifstream in(data_path(name));
  REQUIRE(in.good());
  return json::parse(in);
}

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_lab(const std::string& args) {
  const std::string cmd = std::string(TWISTOR_LAB_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_CASE("matrix json round trip preserves entries exactly") {
  Rng rng(7);
  const MatrixXd M = rng.gaussian_matrix(6, 6);
  const json j = io::matrix_to_json(M);
  CHECK(j.at("dim").get<int>() == 6);
  CHECK(j.at("rows").size() == 6);
  const MatrixXd back = io::matrix_from_json(j);
  CHECK((back - M).norm() == 0.0);
}

TEST_CASE("matrix json rejects malformed input") {
  CHECK_THROWS_AS(io::matrix_from_json(load("bad_matrix.json")), EvaluationFailure);
  CHECK_THROWS_AS(io::matrix_from_json(json{{"dim", 2}, {"rows", json::array()}}),
                  EvaluationFailure);
  CHECK_THROWS_AS(io::matrix_from_json(json{{"dim", 0}, {"rows", json::array()}}),
                  EvaluationFailure);
  CHECK_THROWS_AS(io::matrix_from_json(json{{"rows", json::array()}}), json::exception);
}

TEST_CASE("subspace json round trip keeps span and rank") {
  Rng rng(11);
  const Subspace U = Subspace::from_span(rng.gaussian_matrix(8, 3));
  const json j = io::subspace_to_json(U);
  CHECK(j.at("rank").get<int>() == 3);
  const Subspace back = io::subspace_from_json(j);
  CHECK(back.ambient_dim() == 8);
  CHECK(back.rank() == 3);
  CHECK(subspace_relate(U, back).equals);

  const json zero = io::subspace_to_json(Subspace(5));
  CHECK(zero.at("rank").get<int>() == 0);
  const Subspace zback = io::subspace_from_json(zero);
  CHECK(zback.ambient_dim() == 5);
  CHECK(zback.rank() == 0);

  CHECK_THROWS_AS(
      io::subspace_from_json(json{{"dim", 2}, {"rank", 3}, {"rows", {{0.0}, {1.0}}}}),
      EvaluationFailure);
}

TEST_CASE("spectrum json round trip") {
  const std::vector<ClusterSpec> spec = {{0.3, 4}, {1.0, 2}};
  const auto back = io::spectrum_from_json(io::spectrum_to_json(spec));
  REQUIRE(back.size() == 2);
  CHECK(back[0].eps == 0.3);
  CHECK(back[0].mult == 4);
  CHECK(back[1].eps == 1.0);
  CHECK(back[1].mult == 2);
}

TEST_CASE("scalar function json round trip keeps terms and values") {
  ScalarFn f;
  f.add_term(2.0, {});
  f.add_term(-0.5, {{1, 1}, {2, 2}});
  f.add_term(3.0, {{3, 1}});
  const json j = io::scalar_fn_to_json(f);
  const ScalarFn back = io::scalar_fn_from_json(j);
  const std::vector<double> fs = {1.5, -2.0, 0.25};
  CHECK(back.eval(fs) == f.eval(fs));
  CHECK(f.eval(fs) == -0.25);
  CHECK(io::scalar_fn_to_json(back) == j);

  const json zero = io::scalar_fn_to_json(ScalarFn());
  CHECK(zero.at("terms").empty());
  CHECK(io::scalar_fn_from_json(zero).is_constant());
}

TEST_CASE("q polynomial json round trip and the sphere polynomial fixture") {
  const QPolynomial q = io::q_from_json(load("Q_s2.json"));
  CHECK(q.degree() == 2);

  const auto J = ComplexStructure::checked(io::matrix_from_json(load("J4.json")));
  const auto K = ComplexStructure::checked(io::matrix_from_json(load("K4.json")));
  // {J,K} = I at this pair, so M^2 - M vanishes identically.
  CHECK(q.eval(J.mat(), K.mat()).norm() < 1e-14);

  const json j = io::q_to_json(q);
  const QPolynomial back = io::q_from_json(j);
  CHECK(back.degree() == 2);
  CHECK(io::q_to_json(back) == j);

  CHECK_THROWS_AS(io::q_from_json(json{{"coeffs", json::array()}}), EvaluationFailure);
}

TEST_CASE("distribution spec json round trip with defaults") {
  DistributionSpec spec;
  spec.J = io::matrix_from_json(load("J4.json"));
  spec.q = io::q_from_json(load("Q_s2.json"));
  spec.s = STag::Comm;
  spec.flavor = Flavor::Unitary;
  const json j = io::spec_to_json(spec);
  const DistributionSpec back = io::spec_from_json(j);
  CHECK((back.J - spec.J).norm() == 0.0);
  CHECK(back.q.degree() == 2);
  CHECK(back.s == STag::Comm);
  CHECK(back.flavor == Flavor::Unitary);

  const DistributionSpec bare = io::spec_from_json(json{{"J", io::matrix_to_json(spec.J)}});
  CHECK(bare.q.degree() == 0);
  CHECK(bare.s == STag::One);
  CHECK(bare.flavor == Flavor::Plain);
}

TEST_CASE("tag parsers round trip and reject unknown names") {
  for (const auto tag : {STag::One, STag::JPlus, STag::JMinus, STag::Comm})
    CHECK(io::s_from_string(s_tag_name(tag)) == tag);
  for (const auto fl : {Flavor::Plain, Flavor::Unitary})
    CHECK(io::flavor_from_string(flavor_name(fl)) == fl);
  CHECK_THROWS_AS(io::s_from_string("One"), UnknownCase);
  CHECK_THROWS_AS(io::flavor_from_string("full"), UnknownCase);
}

TEST_CASE("report serializers expose the documented keys") {
  const auto J = ComplexStructure::checked(io::matrix_from_json(load("J4.json")));
  const auto K = ComplexStructure::checked(io::matrix_from_json(load("K4.json")));
  const json dec = io::decomposition_to_json(J, K, decompose_pair(J, K));
  CHECK(dec.at("dim").get<int>() == 4);
  CHECK(dec.at("plus_one_dim").get<int>() == 0);
  CHECK(dec.at("minus_one_dim").get<int>() == 0);
  REQUIRE(dec.at("middle").size() == 1);
  CHECK(dec.at("middle")[0].at("dim").get<int>() == 4);
  CHECK(dec.at("middle")[0].at("eps").get<double>() == Catch::Approx(0.5).margin(1e-12));
  CHECK(dec.at("same_orientation").get<bool>());
  CHECK(dec.at("schubert_nonempty").get<bool>());

  AxiomReport ar;
  ar.anchor_residual = 1e-6;
  ar.leibniz_residual = 2e-6;
  ar.jacobiator_max = 0.5;
  ar.samples = 12;
  ar.pass = true;
  const json rows = io::axiom_report_to_json(ar);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("axiom") == "anchor");
  CHECK(rows[1].at("axiom") == "leibniz");
  CHECK(rows[2].at("axiom") == "jacobiator");
  CHECK_FALSE(rows[2].at("gated").get<bool>());
  CHECK_FALSE(rows[2].contains("pass"));

  CoefficientReport cr;
  cr.max_scalar_residual = 1e-12;
  cr.max_operator_residual = 1e-11;
  cr.samples = 4;
  cr.pass = true;
  const json cj = io::coefficient_report_to_json(cr);
  CHECK(cj.at("pass").get<bool>());
  CHECK(cj.at("samples").get<int>() == 4);

  const json table = io::s2_table_to_json({{0.1, 0.2, 0.3, 2, "3a"}});
  REQUIRE(table.size() == 1);
  CHECK(table[0].at("point").size() == 3);
  CHECK(table[0].at("leaf_dim").get<int>() == 2);
  CHECK(table[0].at("case") == "3a");
}

TEST_CASE("cli validate reports structure residuals") {
  const auto ok = run_lab("validate --J " + data_path("J4.json") + " --K " + data_path("K4.json"));
  CHECK(ok.code == 0);
  const json rep = json::parse(ok.out);
  CHECK(rep.at("J").at("valid").get<bool>());
  CHECK(rep.at("K").at("valid").get<bool>());
  CHECK(rep.at("J").at("square_residual").get<double>() < 1e-12);

  const auto bad = run_lab("validate --J " + data_path("notJ.json"));
  CHECK(bad.code == 1);
  CHECK_FALSE(json::parse(bad.out).at("J").at("valid").get<bool>());
}

TEST_CASE("cli decompose matches the pair spectrum") {
  const auto r = run_lab("decompose --J " + data_path("J4.json") + " --K " + data_path("K4.json"));
  CHECK(r.code == 0);
  const json rep = json::parse(r.out);
  CHECK(rep.at("plus_one_dim").get<int>() == 0);
  CHECK(rep.at("minus_one_dim").get<int>() == 0);
  REQUIRE(rep.at("middle").size() == 1);
  CHECK(rep.at("middle")[0].at("eps").get<double>() == Catch::Approx(0.5).margin(1e-12));
  CHECK(rep.at("middle")[0].at("dim").get<int>() == 4);
  CHECK(rep.at("m1").get<int>() == 0);
  CHECK(rep.at("same_orientation").get<bool>());

  // K = J sits entirely in the minus-one eigenspace.
  const auto same = run_lab("decompose --J " + data_path("J4.json") + " --K " + data_path("J4.json"));
  CHECK(same.code == 0);
  const json srep = json::parse(same.out);
  CHECK(srep.at("minus_one_dim").get<int>() == 4);
  CHECK(srep.at("plus_one_dim").get<int>() == 0);
  CHECK(srep.at("middle").empty());
  CHECK(srep.at("m_minus1").get<int>() == 2);
}

TEST_CASE("cli classify-orbit emits the orbit model") {
  const auto r =
      run_lab("classify-orbit --J " + data_path("J4.json") + " --K " + data_path("K4.json"));
  CHECK(r.code == 0);
  const json rep = json::parse(r.out);
  CHECK(rep.at("model") == "U(2)/Sp(1)");
  CHECK(rep.at("dimension").get<int>() == 1);
  CHECK(rep.at("m1").get<int>() == 0);
  CHECK(rep.at("m_minus1").get<int>() == 0);
}

TEST_CASE("cli dist reports leaf models") {
  // Q = M^2 - M annihilates this pair, so the leaf collapses to a point.
  const auto pt = run_lab("dist --J " + data_path("J4.json") + " --K " + data_path("K4.json") +
                          " --Q " + data_path("Q_s2.json") + " --S one --flavor plain");
  CHECK(pt.code == 0);
  const json prep = json::parse(pt.out);
  CHECK(prep.at("model") == "point");
  CHECK(prep.at("solver_dim").get<int>() == 0);
  CHECK(prep.at("consistent").get<bool>());

  // Default Q = 1, S = 1: the plain distribution is the whole tangent space.
  const auto full = run_lab("dist --J " + data_path("J4.json") + " --K " + data_path("K4.json"));
  CHECK(full.code == 0);
  const json frep = json::parse(full.out);
  CHECK(frep.at("model") == "T(4)");
  CHECK(frep.at("im_dim").get<int>() == 4);
  CHECK(frep.at("solver_dim").get<int>() == 2);
  CHECK(frep.at("consistent").get<bool>());
}

TEST_CASE("cli check-axioms gates the anchor and leibniz residuals") {
  const auto r = run_lab("check-axioms --anchor sigma --dim 4 --samples 4 --points 2 --seed 7");
  CHECK(r.code == 0);
  const json rows = json::parse(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("pass").get<bool>());
  CHECK(rows[0].at("max_residual").get<double>() < 1e-4);
  CHECK(rows[1].at("max_residual").get<double>() < 1e-4);
  CHECK_FALSE(rows[2].at("gated").get<bool>());

  CHECK(run_lab("check-axioms --anchor sigma --dim 5").code == 2);
}

TEST_CASE("cli check-q distinguishes compatible and incompatible data") {
  const auto good = run_lab("check-q --J " + data_path("J4.json") + " --Q " +
                            data_path("Q_f1.json") + " --S one --class u_j --samples 4 --seed 11");
  CHECK(good.code == 0);
  CHECK(json::parse(good.out).at("pass").get<bool>());

  const auto bad =
      run_lab("check-q --J " + data_path("J6.json") + " --Q " + data_path("Q_f1.json") +
              " --S jplus --class o_anti_phi --samples 6 --seed 13");
  CHECK(bad.code == 1);
  const json brep = json::parse(bad.out);
  CHECK_FALSE(brep.at("pass").get<bool>());
  CHECK(brep.at("max_scalar_residual").get<double>() > 0.1);
}

TEST_CASE("cli repro subcommands run the catalogued examples") {
  const auto s2 = run_lab("repro-s2 --e0 0.5 --grid 8");
  CHECK(s2.code == 0);
  const json table = json::parse(s2.out);
  REQUIRE(table.is_array());
  REQUIRE(!table.empty());
  for (const auto& row : table) {
    CHECK(row.at("point").size() == 3);
    const int d = row.at("leaf_dim").get<int>();
    CHECK((d == 0 || d == 2));
  }

  const auto d12 = run_lab("repro-dim12 --case 1a.i");
  CHECK(d12.code == 0);
  const json rep = json::parse(d12.out);
  CHECK(rep.at("case") == "1a.i");
  CHECK(rep.at("leaf").at("solver_dim").get<int>() == 8);
  CHECK(rep.at("leaf").at("consistent").get<bool>());
  CHECK_FALSE(rep.at("full_orbit").get<bool>());
}

TEST_CASE("cli text format and byte-identical reruns") {
  const std::string args =
      "decompose --J " + data_path("J4.json") + " --K " + data_path("K4.json");
  const auto text = run_lab("--format text " + args);
  CHECK(text.code == 0);
  CHECK(text.out.find("dim = 4\n") != std::string::npos);
  CHECK(text.out.find("middle[0].dim = 4") != std::string::npos);
  CHECK(text.out.find("same_orientation = true") != std::string::npos);

  const auto a = run_lab(args);
  const auto b = run_lab(args);
  CHECK(a.out == b.out);

  const auto s2a = run_lab("repro-s2 --e0 0.5 --grid 8");
  const auto s2b = run_lab("repro-s2 --e0 0.5 --grid 8");
  CHECK(s2a.out == s2b.out);
}

TEST_CASE("cli error paths exit with code two") {
  CHECK(run_lab("decompose --J " + data_path("J4.json")).code == 2);   // missing --K
  CHECK(run_lab("no-such-command").code == 2);
  CHECK(run_lab("validate --J " + data_path("garbage.json")).code == 2);
  CHECK(run_lab("validate --J " + data_path("bad_matrix.json")).code == 2);
  CHECK(run_lab("validate --J " + data_path("no_such_file.json")).code == 2);
  const auto mism =
      run_lab("decompose --J " + data_path("J4.json") + " --K " + data_path("J6.json"));
  CHECK(mism.code == 2);
  CHECK(mism.out.empty());
  CHECK(run_lab("repro-dim12 --case 9z").code == 2);
  CHECK(run_lab("check-q --J " + data_path("J4.json") + " --Q " + data_path("Q_f1.json") +
                " --class bogus")
            .code == 2);
}
