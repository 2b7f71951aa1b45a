#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <twistor/leaf.hpp>
#include <twistor/rng.hpp>

using namespace twistor;
using Eigen::MatrixXd;

namespace {

ComplexStructure rotated(const ComplexStructure& J, unsigned seed) {
  Rng rng(seed);
  const MatrixXd Q = rng.random_orthogonal(J.dim());
  return ComplexStructure::unchecked(Q * J.mat() * Q.transpose());
}

MatrixXd unitary_rotation(const MatrixXd& J, const MatrixXd& K, unsigned seed, double scale) {
  Rng rng(seed);
  const auto fiber = class_fiber(ConstraintClass::UJ, J, K);
  MatrixXd C = MatrixXd::Zero(J.rows(), J.cols());
  for (const auto& E : fiber) C += rng.gaussian() * E;
  return (scale * C).exp();
}

}  // namespace

TEST_CASE("orbit classification reads off the spectrum") {
  const auto J12 = standard_structure(12);
  const auto K12 = synthesize_partner(J12, {{0.3, 4}, {1.0, 4}, {-1.0, 4}});
  const LeafClass c12 = classify_orbit(J12, K12);
  CHECK(c12.sp_factors == std::vector<int>{1});
  CHECK(c12.m1 == 2);
  CHECK(c12.m_minus1 == 2);
  CHECK(c12.dimension == 25);  // 36 - 3 - 4 - 4
  CHECK(c12.model(6) == "U(6)/Sp(1)xU(2)xU(2)");

  const auto J6 = standard_structure(6);
  const LeafClass same = classify_orbit(J6, J6);
  CHECK(same.sp_factors.empty());
  CHECK(same.m1 == 0);
  CHECK(same.m_minus1 == 3);
  CHECK(same.dimension == 0);
  CHECK(same.model(3) == "U(3)/U(3)");

  const auto J8 = standard_structure(8);
  const auto K8 = synthesize_partner(J8, {{0.5, 8}});
  const LeafClass c8 = classify_orbit(J8, K8);
  CHECK(c8.sp_factors == std::vector<int>{2});
  CHECK(c8.dimension == 6);  // 16 - 10
  CHECK(c8.model(4) == "U(4)/Sp(2)");

  const LeafClass bare{{}, 0, 0, 5};
  CHECK(bare.model(3) == "U(3)/1");
}

TEST_CASE("orbit equivalence is conjugation invariance of the spectrum") {
  const auto J = rotated(standard_structure(6), 401);
  const auto K = synthesize_partner(J, {{0.4, 4}, {1.0, 2}});

  const MatrixXd U = unitary_rotation(J.mat(), K.mat(), 402, 0.4);
  const auto Kc = ComplexStructure::unchecked(U * K.mat() * U.transpose());
  CHECK(orbit_equivalent(J, K, Kc));
  CHECK(orbit_equivalent(J, K, K));

  const auto other_value = synthesize_partner(J, {{-0.4, 4}, {1.0, 2}});
  CHECK_FALSE(orbit_equivalent(J, K, other_value));
  const auto other_shape = synthesize_partner(J, {{1.0, 6}});
  CHECK_FALSE(orbit_equivalent(J, K, other_shape));

  CHECK_THROWS_AS(orbit_equivalent(J, K, standard_structure(8)), DimensionMismatch);
}

TEST_CASE("leaf reports are consistent for both flavors") {
  const auto J = rotated(standard_structure(8), 403);
  const auto K = synthesize_partner(J, {{1.0, 2}, {0.3, 4}, {-1.0, 2}});

  const DistributionSpec plain{J.mat(), QPolynomial::one(), STag::JPlus, Flavor::Plain};
  const LeafReport rp = leaf_report(plain, K.mat());
  CHECK(rp.ker_dim == 2);
  CHECK(rp.im_dim == 6);
  CHECK(rp.model == "T(6)");
  CHECK(rp.model_dim == 6);
  CHECK(rp.solver_dim == 6);
  CHECK(rp.consistent);

  const DistributionSpec unit{J.mat(), QPolynomial::one(), STag::One, Flavor::Unitary};
  const LeafReport ru = leaf_report(unit, K.mat());
  CHECK(ru.ker_dim == 0);
  CHECK(ru.im_dim == 8);
  CHECK(ru.model == "U(4)/Sp(1)xU(1)xU(1)");
  CHECK(ru.model_dim == 11);
  CHECK(ru.solver_dim == 11);
  CHECK(ru.consistent);

  // a vanishing factor collapses the leaf to a point
  const auto Jp = standard_structure(6);
  const LeafReport rz = leaf_report(DistributionSpec{Jp.mat(), QPolynomial::one(), STag::JMinus,
                                                     Flavor::Plain},
                                    Jp.mat());
  CHECK(rz.im_dim == 0);
  CHECK(rz.model == "point");
  CHECK(rz.model_dim == 0);
  CHECK(rz.solver_dim == 0);
  CHECK(rz.consistent);
}

TEST_CASE("splicing swaps the structure on the image subspace") {
  const auto J = rotated(standard_structure(8), 404);
  const auto K = synthesize_partner(J, {{1.0, 2}, {0.3, 4}, {-1.0, 2}});
  const DistributionSpec spec{J.mat(), QPolynomial::one(), STag::JPlus, Flavor::Plain};
  const FSplit fs = f_split(spec, K.mat());
  REQUIRE(fs.image.rank() == 6);

  const MatrixXd& Ui = fs.image.basis();
  const MatrixXd Jb = Ui.transpose() * J.mat() * Ui;
  const MatrixXd Kb = Ui.transpose() * K.mat() * Ui;
  const MatrixXd U = unitary_rotation(Jb, Kb, 405, 0.3);
  const MatrixXd Lb = U * Kb * U.transpose();

  const ComplexStructure Kp = splice(K.mat(), Lb, spec);
  // unchanged on the kernel, replaced on the image
  CHECK(((Kp.mat() - K.mat()) * fs.kernel.basis()).norm() < 1e-10);
  CHECK((Ui.transpose() * Kp.mat() * Ui - Lb).norm() < 1e-10);

  // rotating the restriction by the image unitary group stays on the leaf
  CHECK(membership(Kp.mat(), K.mat(), spec));

  CHECK_THROWS_AS(splice(K.mat(), MatrixXd::Identity(4, 4), spec), SubspaceMismatch);
  CHECK_THROWS_AS(splice(K.mat(), MatrixXd::Identity(6, 6), spec), InvalidStructure);
}

TEST_CASE("membership compares kernels for the pure structural specs") {
  const auto J = rotated(standard_structure(8), 406);
  const auto K = synthesize_partner(J, {{1.0, 2}, {0.3, 4}, {-1.0, 2}});

  const DistributionSpec comm{J.mat(), QPolynomial::one(), STag::Comm, Flavor::Plain};
  const FSplit fs = f_split(comm, K.mat());
  REQUIRE(fs.image.rank() == 4);
  const MatrixXd& Ui = fs.image.basis();
  const MatrixXd Jb = Ui.transpose() * J.mat() * Ui;
  const MatrixXd Kb = Ui.transpose() * K.mat() * Ui;
  const MatrixXd U = unitary_rotation(Jb, Kb, 407, 0.25);
  const ComplexStructure Kp = splice(K.mat(), U * Kb * U.transpose(), comm);
  CHECK(membership(Kp.mat(), K.mat(), comm));

  // flipping the sign swaps the two extreme kernels
  CHECK_FALSE(membership(MatrixXd(-K.mat()), K.mat(), comm));
  // a generic point has different kernels altogether
  CHECK_FALSE(membership(random_point(8, 408).mat(), K.mat(), comm));
  // garbage is rejected before any comparison
  CHECK_FALSE(membership(MatrixXd::Identity(8, 8), K.mat(), comm));
}

TEST_CASE("membership tracks orbits for the unitary flavor") {
  const auto J = rotated(standard_structure(6), 409);
  const auto K = synthesize_partner(J, {{0.4, 4}, {1.0, 2}});
  const DistributionSpec spec{J.mat(), QPolynomial::one(), STag::One, Flavor::Unitary};

  const MatrixXd U = unitary_rotation(J.mat(), K.mat(), 410, 0.35);
  const MatrixXd Kp = U * K.mat() * U.transpose();
  CHECK(membership(Kp, K.mat(), spec));

  const auto off_leaf = synthesize_partner(J, {{0.7, 4}, {1.0, 2}});
  CHECK_FALSE(membership(off_leaf.mat(), K.mat(), spec));
}

TEST_CASE("the sphere sweep labels its components and leaf dimensions") {
  const double e0 = 0.5;
  const auto samples = repro_s2(e0, 16);
  REQUIRE(samples.size() == 130);  // 14 interior + 2 inserted levels at 8 angles, poles single

  bool saw_zero = false, saw_minus_e0 = false;
  for (const auto& s : samples) {
    CHECK(s.a * s.a + s.b * s.b + s.c * s.c == Catch::Approx(1.0).margin(1e-12));
    std::string want;
    if (s.b == 0.0) want = "1";
    else if (s.b == -e0) want = "2";
    else if (s.b > 0.0) want = "3a";
    else if (s.b > -e0) want = "3b";
    else want = "3c";
    CHECK(s.case_label == want);
    const int expect_dim = (want == "1" || want == "2") ? 0 : 2;
    INFO("b = " << s.b << ", label " << s.case_label);
    CHECK(s.leaf_dim == expect_dim);
    saw_zero = saw_zero || s.b == 0.0;
    saw_minus_e0 = saw_minus_e0 || s.b == -e0;
  }
  CHECK(saw_zero);
  CHECK(saw_minus_e0);

  CHECK_THROWS_AS(repro_s2(0.0, 16), InfeasibleSpec);
  CHECK_THROWS_AS(repro_s2(1.0, 16), InfeasibleSpec);
  CHECK_THROWS_AS(repro_s2(0.5, 1), InfeasibleSpec);
}

TEST_CASE("the twelve-dimensional cases reproduce the published table") {
  struct Expected {
    const char* id;
    int solver_dim;
    const char* model;
    bool full_orbit;
  };
  const std::vector<Expected> table = {
      {"1a.i", 8, "U(4)/U(2)xU(2)", false},
      {"1a.ii", 6, "U(4)/Sp(2)", false},
      {"1a.iii", 10, "U(4)/Sp(1)xSp(1)", false},
      {"1b", 0, "point", false},
      {"1c.i", 0, "U(2)/U(2)", false},
      {"1c.ii", 1, "U(2)/Sp(1)", false},
      {"2", 27, "U(6)/Sp(1)xSp(1)xSp(1)", true},
  };
  for (const auto& row : table) {
    const Dim12Report rep = repro_dim12(row.id);
    INFO(row.id << ": got " << rep.leaf.model << " dim " << rep.leaf.solver_dim);
    CHECK(rep.case_id == row.id);
    CHECK(rep.leaf.consistent);
    CHECK(rep.leaf.solver_dim == row.solver_dim);
    CHECK(rep.leaf.model == row.model);
    CHECK(rep.full_orbit == row.full_orbit);
  }
}

TEST_CASE("the twelve-dimensional cases reject degenerate parameters") {
  CHECK_THROWS_AS(repro_dim12("1a.i", 1.5), InfeasibleSpec);   // out of range
  CHECK_THROWS_AS(repro_dim12("1a.ii", 0.0), InfeasibleSpec);  // collides with the zero cluster
  CHECK_THROWS_AS(repro_dim12("1a.iii", 0.6), InfeasibleSpec);
  CHECK_THROWS_AS(repro_dim12("1c.ii", 0.0), InfeasibleSpec);
  CHECK_THROWS_AS(repro_dim12("9z"), UnknownCase);
}
