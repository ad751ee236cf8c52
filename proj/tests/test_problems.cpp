#include "cfpgd/problems.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "cfpgd/pgd.hpp"
#include "oracles.hpp"

using namespace cfpgd;

namespace {

OperatorPair<double> scalar_pair(double a, double m) {
  SparseMatrixX<double> A(1, 1), M(1, 1);
  A.insert(0, 0) = a;
  M.insert(0, 0) = m;
  const FractionalInterval<double> interval(FractionalOrder<double>(0.5),
                                            make_uniform_mesh(1.0, 2), 'x');
  return OperatorPair<double>{A, M, StructureTag::Dense, interval};
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("poisson problem on the two-element uniform mesh") {
  ProblemSpec<double> spec;
  spec.kind = ProblemKind::Poisson2D;
  spec.alpha_x = 0.5;
  spec.alpha_y_or_t = 0.5;
  spec.n_x = 2;
  spec.n_y = 2;
  spec.grading_x = 1.0;
  spec.grading_y = 1.0;
  const auto built = build_problem(spec);
  CHECK(built.x.A.coeff(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(built.y.A.coeff(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(built.x.M.coeff(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(built.load.terms.size() == 1);
  CHECK(built.load.terms[0].fx[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(built.load.terms[0].fy[0] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("fractional fem axes default to the graded mesh") {
  ProblemSpec<double> spec;
  spec.n_x = 4;
  spec.n_y = 4;
  const auto built = build_problem(spec);
  CHECK(built.x.interval.mesh().grading_exponent() == 2.0);
  CHECK(built.y.interval.mesh().grading_exponent() == 2.0);
}

TEST_CASE("spacetime problem uses the classical pair on the time axis") {
  ProblemSpec<double> spec;
  spec.kind = ProblemKind::SpaceTime;
  spec.alpha_x = 0.5;
  spec.alpha_y_or_t = 1.0;
  spec.n_x = 4;
  spec.n_y = 2;
  spec.time_horizon = 1.0;
  const auto built = build_problem(spec);
  CHECK(built.y.interval.label() == 't');
  CHECK(built.y.interval.mesh().grading_exponent() == 1.0);
  CHECK(built.y.A.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(built.y.M.coeff(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("spacetime requires a classical time order") {
  ProblemSpec<double> spec;
  spec.kind = ProblemKind::SpaceTime;
  spec.alpha_y_or_t = 0.5;
  CHECK_THROWS_AS(build_problem(spec), DomainError);
}

TEST_CASE("gruenwald discretization rejects graded meshes") {
  ProblemSpec<double> spec;
  spec.discretization = Discretization::Grunwald;
  spec.grading_x = 2.0;
  CHECK_THROWS_AS(build_problem(spec), DomainError);
}

TEST_CASE("manufactured load on scalar operators") {
  const auto x = scalar_pair(2.0, 1.0);
  const auto y = scalar_pair(3.0, 1.0);
  VectorX<double> one(1);
  one << 1.0;
  const auto load = manufactured_rank_one_load(x, y, one, one);
  REQUIRE(load.terms.size() == 2);
  CHECK(load.terms[0].fx[0] == doctest::Approx(2.0));
  CHECK(load.terms[0].fy[0] == doctest::Approx(1.0));
  CHECK(load.terms[1].fx[0] == doctest::Approx(1.0));
  CHECK(load.terms[1].fy[0] == doctest::Approx(3.0));
  const auto U = reference_solution_dense(x, y, load);
  CHECK(U(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("manufactured load produces the designated dense solution") {
  const auto x = oracles::random_spd_pair<double>(4, 401);
  const auto y = oracles::random_spd_pair<double>(4, 402);
  const VectorX<double> p_star = oracles::random_vector<double>(4, 403);
  const VectorX<double> q_star = oracles::random_vector<double>(4, 404);
  const auto load = manufactured_rank_one_load(x, y, p_star, q_star);
  const MatrixX<double> U = reference_solution_dense(x, y, load);
  const MatrixX<double> expected = p_star * q_star.transpose();
  CHECK((U - expected).cwiseAbs().maxCoeff() <= 1e-10 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("manufactured load rejects zero factors") {
  const auto x = scalar_pair(2.0, 1.0);
  const auto y = scalar_pair(3.0, 1.0);
  VectorX<double> one(1);
  one << 1.0;
  const VectorX<double> zero = VectorX<double>::Zero(1);
  CHECK_THROWS_AS(manufactured_rank_one_load(x, y, zero, one), DomainError);
}

TEST_CASE("reference solution of the zero load is zero") {
  const auto x = oracles::random_spd_pair<double>(3, 411);
  const auto y = oracles::random_spd_pair<double>(3, 412);
  LoadFactors<double> load;
  load.terms.push_back({VectorX<double>::Zero(3), VectorX<double>::Zero(3)});
  CHECK(reference_solution_dense(x, y, load).isZero(0.0));
}

TEST_CASE("reference solution guards the desk-scale bound") {
  ProblemSpec<double> spec;
  spec.n_x = 102;
  spec.n_y = 102;
  const auto built = build_problem(spec);
  CHECK_THROWS_AS(reference_solution_dense(built.x, built.y, built.load), DomainError);
}

TEST_CASE("reference solution via Kronecker CG matches the dense path") {
  // 70*70 = 4900 unknowns sits between the materialization bound and the
  // desk-scale guard, so this exercises the CG branch.
  ProblemSpec<double> small;
  small.n_x = 9;
  small.n_y = 9;
  const auto sb = build_problem(small);
  const MatrixX<double> dense = reference_solution_dense(sb.x, sb.y, sb.load);

  const KroneckerSumOperator<double> K(sb.x, sb.y);
  const MatrixX<double> diag = K.diagonal();
  auto apply = [&](const MatrixX<double>& U) { return K.apply(U); };
  auto prec = [&](const MatrixX<double>& r) -> MatrixX<double> { return r.cwiseQuotient(diag); };
  const auto out = pcg(apply, prec, sb.load.dense(), 1e-13, 10000);
  REQUIRE(out.converged);
  CHECK((out.x - dense).cwiseAbs().maxCoeff() <= 1e-9 * dense.cwiseAbs().maxCoeff());
}

TEST_CASE("symmetric data give a symmetric reference solution") {
  ProblemSpec<double> spec;
  spec.alpha_x = 0.5;
  spec.alpha_y_or_t = 0.5;
  spec.n_x = 5;
  spec.n_y = 5;
  const auto built = build_problem(spec);
  const MatrixX<double> U = reference_solution_dense(built.x, built.y, built.load);
  CHECK((U - U.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * U.cwiseAbs().maxCoeff());
}

TEST_CASE("polynomial loads integrate the separable factors") {
  ProblemSpec<double> spec;
  spec.load = LoadKind::SeparablePolynomial;
  spec.load_value = 2.0;
  spec.load_exponent_x = 2.0;
  spec.load_exponent_y = 1.0;
  spec.n_x = 4;
  spec.n_y = 4;
  spec.grading_x = 1.0;
  spec.grading_y = 1.0;
  const auto built = build_problem(spec);
  const auto rule = gauss_legendre<double>(32);
  const auto& mesh = built.x.interval.mesh();
  for (Index i = 0; i < built.load.terms[0].fx.size(); ++i) {
    const double a = mesh.node(i);
    const double b = mesh.node(i + 1);
    const double c = mesh.node(i + 2);
    const double expected =
        integrate(rule, a, b, [&](double s) { return 2.0 * s * s * (s - a) / (b - a); }) +
        integrate(rule, b, c, [&](double s) { return 2.0 * s * s * (c - s) / (c - b); });
    CHECK(built.load.terms[0].fx[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("spacetime sweeps decouple into one time and one space solve") {
  ProblemSpec<double> spec;
  spec.kind = ProblemKind::SpaceTime;
  spec.alpha_x = 0.5;
  spec.alpha_y_or_t = 1.0;
  spec.n_x = 8;
  spec.n_y = 8;
  spec.time_horizon = 2.0;
  const auto built = build_problem(spec);
  const SeparableFunction<double> empty(built.x, built.y);
  const ResidualContraction<double> r(built.load, empty);
  const auto outcome = als_maximize(r, AlsConfig<double>{});
  CHECK(outcome.solves_x == outcome.sweeps);
  CHECK(outcome.solves_y == outcome.sweeps);
}

}  // TEST_SUITE
