#include "cfpgd/pgd.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

#include "cfpgd/problems.hpp"
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

OperatorPair<double> fem_pair(double alpha, Index n, char label = 'x') {
  const FractionalInterval<double> interval(FractionalOrder<double>(alpha),
                                            make_uniform_mesh(1.0, n), label);
  return assemble_fem_pair(interval);
}

double energy_norm_of_difference(const OperatorPair<double>& x, const OperatorPair<double>& y,
                                 const MatrixX<double>& U, const MatrixX<double>& V) {
  const KroneckerSumOperator<double> K(x, y);
  const MatrixX<double> D = U - V;
  return std::sqrt(std::max(D.cwiseProduct(K.apply(D)).sum(), 0.0));
}

}  // namespace

TEST_SUITE("pgd") {

TEST_CASE("als on the all-ones scalar problem reaches the exact maximizer") {
  const auto x = scalar_pair(1.0, 1.0);
  const auto y = scalar_pair(1.0, 1.0);
  LoadFactors<double> load;
  VectorX<double> one(1);
  one << 1.0;
  load.terms.push_back({one, one});
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);

  const auto outcome = als_maximize(r, AlsConfig<double>{});
  CHECK_FALSE(outcome.zero_residual);
  CHECK(outcome.rayleigh_quotient == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(outcome.sweeps <= 2);
  CHECK(std::abs(outcome.mode.p[0]) == doctest::Approx(1.0));
  CHECK(std::abs(outcome.mode.q[0]) == doctest::Approx(1.0));
  CHECK(outcome.monotonicity_violations == 0);
}

TEST_CASE("als recovers the factors of a rank-one representer residual") {
  const auto x = fem_pair(0.5, 9);
  const auto y = fem_pair(0.5, 9, 'y');
  const VectorX<double> p_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 301), x.M);
  const VectorX<double> q_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 302), y.M);
  const LoadFactors<double> load = manufactured_rank_one_load(x, y, p_star, q_star);
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);

  AlsConfig<double> cfg;
  cfg.rq_rel_improvement_tol = 1e-12;
  cfg.max_sweeps = 30;
  const auto outcome = als_maximize(r, cfg);
  CHECK(outcome.sweeps <= 10);
  CHECK(std::abs(outcome.mode.p.dot(x.M * p_star)) >= 1.0 - 1e-8);
  CHECK(std::abs(outcome.mode.q.dot(y.M * q_star)) >= 1.0 - 1e-8);
  CHECK(outcome.monotonicity_violations == 0);
}

TEST_CASE("als quotient trace is nondecreasing") {
  const auto built = build_problem(ProblemSpec<double>{
      ProblemKind::Poisson2D, Discretization::Fem, 0.5, 0.5, 12, 12});
  const SeparableFunction<double> empty(built.x, built.y);
  const ResidualContraction<double> r(built.load, empty);
  const auto outcome = als_maximize(r, AlsConfig<double>{});
  REQUIRE(outcome.quotient_trace.size() >= 2);
  for (std::size_t i = 1; i < outcome.quotient_trace.size(); ++i) {
    CHECK(outcome.quotient_trace[i] >=
          outcome.quotient_trace[i - 1] * (1.0 - 1e-12) - 1e-300);
  }
  CHECK(outcome.monotonicity_violations == 0);
}

TEST_CASE("als signals a zero residual") {
  const auto x = scalar_pair(1.0, 1.0);
  const auto y = scalar_pair(1.0, 1.0);
  LoadFactors<double> load;
  load.terms.push_back({VectorX<double>::Zero(1), VectorX<double>::Zero(1)});
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);
  CHECK(als_maximize(r, AlsConfig<double>{}).zero_residual);
}

TEST_CASE("line search scalar and decrease") {
  const auto x = scalar_pair(2.0, 2.0);
  const auto y = scalar_pair(1.0, 1.0);
  LoadFactors<double> load;
  VectorX<double> two(1), one(1);
  two << 2.0;
  one << 1.0;
  load.terms.push_back({two, one});
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);
  const RankOneMode<double> w{one, one, 1.0};
  // <r, w> = 2 and a(w, w) = 4: tau = 1/2, decrease 2^2/4 = 1.
  const double tau = line_search_tau(r, w);
  CHECK(tau == doctest::Approx(0.5));
  const double rw = w.scale * residual_apply(r, w.p, w.q);
  CHECK(rw * tau == doctest::Approx(1.0));
}

TEST_CASE("line search returns zero when the residual is orthogonal") {
  const auto x = scalar_pair(1.0, 1.0);
  const auto y = scalar_pair(1.0, 1.0);
  LoadFactors<double> load;
  VectorX<double> zero = VectorX<double>::Zero(1);
  VectorX<double> one(1);
  one << 1.0;
  load.terms.push_back({zero, one});
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);
  CHECK(line_search_tau(r, RankOneMode<double>{one, one, 1.0}) == 0.0);
  CHECK_THROWS_AS(line_search_tau(r, RankOneMode<double>{zero, one, 1.0}), DomainError);
}

TEST_CASE("the updated residual is orthogonal to the accepted direction") {
  const auto x = scalar_pair(1.0, 1.0);
  const auto y = scalar_pair(1.0, 1.0);
  LoadFactors<double> load;
  VectorX<double> one(1);
  one << 1.0;
  load.terms.push_back({one, one});
  SeparableFunction<double> u(x, y);
  const ResidualContraction<double> r0(load, u);
  const RankOneMode<double> w{one, one, 1.0};
  const double tau = line_search_tau(r0, w);
  u.append(RankOneMode<double>{one, one, tau});
  const ResidualContraction<double> r1(load, u);
  CHECK(std::abs(residual_apply(r1, one, one)) <= 1e-14);
}

TEST_CASE("theta is one for a perfectly aligned rank-one residual") {
  const auto x = fem_pair(0.5, 9);
  const auto y = fem_pair(0.5, 9, 'y');
  const VectorX<double> p_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 311), x.M);
  const VectorX<double> q_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 312), y.M);
  const LoadFactors<double> load = manufactured_rank_one_load(x, y, p_star, q_star);
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);
  const KroneckerSumOperator<double> K(x, y);
  const double theta = estimate_theta(r, RankOneMode<double>{p_star, q_star, 1.0}, K);
  CHECK(theta == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("theta vanishes for an energy-orthogonal direction") {
  const auto x = fem_pair(0.4, 8);
  const auto y = fem_pair(0.4, 8, 'y');
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX<double>> eig(MatrixX<double>(x.A),
                                                                MatrixX<double>(x.M));
  REQUIRE(eig.info() == Eigen::Success);
  const VectorX<double> p0 = eig.eigenvectors().col(0);
  const VectorX<double> p1 = eig.eigenvectors().col(1);
  const VectorX<double> q0 =
      detail::mass_normalized(oracles::random_vector<double>(7, 321), y.M);
  const LoadFactors<double> load = manufactured_rank_one_load(x, y, p0, q0);
  const SeparableFunction<double> empty(x, y);
  const ResidualContraction<double> r(load, empty);
  const KroneckerSumOperator<double> K(x, y);
  const double theta = estimate_theta(r, RankOneMode<double>{p1, q0, 1.0}, K);
  CHECK(std::abs(theta) <= 1e-10);
}

TEST_CASE("greedy terminates immediately on the zero load") {
  const auto x = fem_pair(0.5, 6);
  const auto y = fem_pair(0.5, 6, 'y');
  LoadFactors<double> load;
  load.terms.push_back({VectorX<double>::Zero(5), VectorX<double>::Zero(5)});
  const auto result = greedy_solve(x, y, load, GreedyConfig<double>{}, AlsConfig<double>{});
  CHECK(result.status == GreedyStatus::Converged);
  CHECK(result.u.rank() == 0);
  CHECK(result.records.empty());
}

TEST_CASE("greedy solves a manufactured rank-one problem in one mode") {
  const auto x = fem_pair(0.5, 9);
  const auto y = fem_pair(0.5, 9, 'y');
  const VectorX<double> p_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 331), x.M);
  const VectorX<double> q_star =
      detail::mass_normalized(oracles::random_vector<double>(8, 332), y.M);
  const LoadFactors<double> load = manufactured_rank_one_load(x, y, p_star, q_star);

  AlsConfig<double> als;
  als.rq_rel_improvement_tol = 1e-12;
  const auto result = greedy_solve(x, y, load, GreedyConfig<double>{}, als,
                                   DiagnosticsFlags{true, true});
  CHECK(result.status == GreedyStatus::Converged);
  REQUIRE(result.u.rank() == 1);
  REQUIRE(result.records.size() == 1);
  const auto& rec = result.records.front();
  REQUIRE(rec.energy_error_sq.has_value());
  CHECK(rec.delta_energy / *rec.energy_error_sq >= 1.0 - 1e-8);
  REQUIRE(rec.theta_hat.has_value());
  CHECK(*rec.theta_hat >= 1.0 - 1e-8);
  const MatrixX<double> expected = p_star * q_star.transpose();
  CHECK(energy_norm_of_difference(x, y, result.u.dense(), expected) <= 1e-6);
}

TEST_CASE("greedy records satisfy the one-step identities on a fractional problem") {
  const auto built = build_problem(ProblemSpec<double>{
      ProblemKind::Poisson2D, Discretization::Fem, 0.5, 0.5, 16, 16});
  GreedyConfig<double> cfg;
  cfg.eps = 1e-3;
  cfg.max_modes = 40;
  const auto result = greedy_solve(built.x, built.y, built.load, cfg, AlsConfig<double>{},
                                   DiagnosticsFlags{true, true});
  REQUIRE(result.records.size() >= 2);
  REQUIRE(result.initial_energy_error_sq.has_value());
  const double scale = *result.initial_energy_error_sq;
  CHECK(result.monotonicity_violations == 0);

  for (std::size_t k = 0; k < result.records.size(); ++k) {
    const auto& rec = result.records[k];
    CHECK(rec.delta_energy > 0.0);
    CHECK(rec.tau > 0.0);
    CHECK(rec.sweeps >= 1);
    REQUIRE(rec.energy_error_sq.has_value());
    REQUIRE(rec.theta_hat.has_value());
    CHECK(rec.delta_energy <= *rec.energy_error_sq * (1.0 + 1e-10));
    CHECK(*rec.theta_hat > 0.0);
    CHECK(*rec.theta_hat <= 1.0 + 1e-10);
    CHECK(rec.delta_energy == doctest::Approx(rec.rayleigh_quotient).epsilon(1e-10));
    // theta^2 |r|^2 is the realized decrease.
    CHECK(std::abs(rec.delta_energy - (*rec.theta_hat) * (*rec.theta_hat) * *rec.energy_error_sq) <=
          1e-10 * scale);
    if (k > 0) {
      const auto& prev = result.records[k - 1];
      CHECK(std::abs(*rec.energy_error_sq - (*prev.energy_error_sq - prev.delta_energy)) <=
            1e-8 * scale);
      CHECK(*rec.energy_error_sq < *prev.energy_error_sq);
    }
  }
  REQUIRE(result.final_energy_error_sq.has_value());
  const auto& last = result.records.back();
  CHECK(std::abs(*result.final_energy_error_sq - (*last.energy_error_sq - last.delta_energy)) <=
        1e-8 * scale);
}

TEST_CASE("greedy max_modes status") {
  const auto built = build_problem(ProblemSpec<double>{
      ProblemKind::Poisson2D, Discretization::Fem, 0.5, 0.5, 8, 8});
  GreedyConfig<double> cfg;
  cfg.max_modes = 2;
  const auto result = greedy_solve(built.x, built.y, built.load, cfg, AlsConfig<double>{});
  CHECK(result.status == GreedyStatus::MaxModes);
  CHECK(result.u.rank() == 2);
}

TEST_CASE("greedy tensor is invariant under the renormalization toggle") {
  ProblemSpec<double> spec{ProblemKind::Poisson2D, Discretization::Fem, 0.5, 0.5, 5, 5};
  const auto built = build_problem(spec);
  GreedyConfig<double> cfg;
  cfg.eps = 1e-6;
  cfg.max_modes = 30;
  AlsConfig<double> with;
  AlsConfig<double> without;
  without.renormalize_factors = false;
  const auto a = greedy_solve(built.x, built.y, built.load, cfg, with);
  const auto b = greedy_solve(built.x, built.y, built.load, cfg, without);
  const MatrixX<double> Ua = a.u.dense();
  const MatrixX<double> Ub = b.u.dense();
  CHECK((Ua - Ub).cwiseAbs().maxCoeff() <= 1e-12 * Ua.cwiseAbs().maxCoeff());
}

TEST_CASE("greedy with orthogonalization still converges to the truth") {
  const auto built = build_problem(ProblemSpec<double>{
      ProblemKind::Poisson2D, Discretization::Fem, 0.6, 0.6, 5, 5});
  GreedyConfig<double> cfg;
  cfg.eps = 1e-7;
  cfg.max_modes = 60;
  cfg.orthogonalize = true;
  const auto result = greedy_solve(built.x, built.y, built.load, cfg, AlsConfig<double>{});
  const MatrixX<double> reference = reference_solution_dense(built.x, built.y, built.load);
  CHECK(energy_norm_of_difference(built.x, built.y, result.u.dense(), reference) <= 1e-3);
}

TEST_CASE("greedy on small grids reproduces the dense solve") {
  for (const auto kind : {ProblemKind::Poisson2D, ProblemKind::SpaceTime}) {
    for (const auto disc : {Discretization::Fem, Discretization::Grunwald}) {
      ProblemSpec<double> spec;
      spec.kind = kind;
      spec.discretization = disc;
      spec.alpha_x = 0.5;
      spec.alpha_y_or_t = kind == ProblemKind::SpaceTime ? 1.0 : 0.5;
      spec.n_x = 6;
      spec.n_y = 6;
      const auto built = build_problem(spec);
      GreedyConfig<double> cfg;
      cfg.eps = 1e-11;
      cfg.max_modes = 300;
      cfg.absolute_floor = 1e-24;
      AlsConfig<double> als;
      als.rq_rel_improvement_tol = 1e-10;
      const auto result = greedy_solve(built.x, built.y, built.load, cfg, als);
      const MatrixX<double> reference = reference_solution_dense(built.x, built.y, built.load);
      CHECK(energy_norm_of_difference(built.x, built.y, result.u.dense(), reference) <= 1e-6);
    }
  }
}

}  // TEST_SUITE
