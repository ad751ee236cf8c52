#include "verify.hpp"

#include "cfpgd/matrix_market.hpp"
#include "cfpgd/pgd.hpp"
#include "cfpgd/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace cfpgd::app {

namespace {

class VerifyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
  if (!condition) throw VerifyFailure(what);
}

void require_close(double actual, double expected, double tol, const std::string& what) {
  if (!(std::abs(actual - expected) <= tol)) {
    std::ostringstream message;
    message << what << " (actual " << actual << ", expected " << expected << ")";
    throw VerifyFailure(message.str());
  }
}

VectorX<double> seeded_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VectorX<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(engine);
  return v;
}

FractionalInterval<double> unit_interval(double alpha, Index n, double gamma = 1.0) {
  return FractionalInterval<double>(FractionalOrder<double>(alpha),
                                    gamma == 1.0 ? make_uniform_mesh(1.0, n)
                                                 : make_graded_mesh(1.0, n, gamma),
                                    'x');
}

/// Independent stiffness entries by 64-point Gauss-Legendre per element; the
/// first element is mapped by x = x_1 t^5 so the rule resolves the weight.
MatrixX<double> quadrature_stiffness(const FractionalInterval<double>& interval) {
  const auto& mesh = interval.mesh();
  const double mu = 2.0 * interval.order().weight_exponent();
  const auto rule = gauss_legendre<double>(64);
  const Index n_dof = mesh.interior_count();
  MatrixX<double> A = MatrixX<double>::Zero(n_dof, n_dof);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const double a = mesh.node(e);
    const double b = mesh.node(e + 1);
    const double h = b - a;
    double weight_integral;
    if (e == 0) {
      weight_integral = integrate(rule, 0.0, 1.0, [&](double t) {
        const double x = b * std::pow(t, 5.0);
        return std::pow(x, mu) * (5.0 * b * std::pow(t, 4.0));
      });
    } else {
      weight_integral = integrate(rule, a, b, [&](double x) { return std::pow(x, mu); });
    }
    const double k = weight_integral / (h * h);
    if (e >= 1) A(e - 1, e - 1) += k;
    if (e + 1 <= mesh.element_count() - 1) A(e, e) += k;
    if (e >= 1 && e + 1 <= mesh.element_count() - 1) {
      A(e - 1, e) -= k;
      A(e, e - 1) -= k;
    }
  }
  return A;
}

double lambda_min(const OperatorPair<double>& pair) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX<double>> solver(MatrixX<double>(pair.A),
                                                                   MatrixX<double>(pair.M));
  require(solver.info() == Eigen::Success, "generalized eigenvalue solve failed");
  return solver.eigenvalues().minCoeff();
}

struct Check {
  std::string name;
  bool full_only;
  std::function<void(const VerifyOptions&)> fn;
};

const std::vector<Check>& check_list() {
  static const std::vector<Check> checks = {
      {"spaces.mesh-construction", false,
       [](const VerifyOptions&) {
         const auto mesh = make_graded_mesh(1.0, 3, 3.0);
         require_close(mesh.node(1), 1.0 / 27.0, 1e-15, "graded node");
         require_close(mesh.node(2), 8.0 / 27.0, 1e-15, "graded node");
         bool rejected = false;
         try {
           make_uniform_mesh(1.0, 1);
         } catch (const DomainError&) {
           rejected = true;
         }
         require(rejected, "n = 1 mesh must be rejected");
         const auto graded = make_graded_mesh(2.0, 16, 1.0);
         const auto uniform = make_uniform_mesh(2.0, 16);
         for (Index i = 0; i <= 16; ++i) {
           require_close(graded.node(i), uniform.node(i), 1e-15 * 2.0, "gamma=1 equals uniform");
         }
       }},
      {"spaces.conformable-weight", false,
       [](const VerifyOptions&) {
         const FractionalOrder<double> half(0.5);
         require_close(conformable_derivative_pointwise(2.0, 4.0, half), 4.0, 1e-14,
                       "weighted derivative at x=4");
         const FractionalOrder<double> one(1.0);
         require(conformable_derivative_pointwise(7.5, 0.3, one) == 7.5,
                 "classical limit must be exact");
       }},
      {"assembly.operator-symmetry", false,
       [](const VerifyOptions& options) {
         auto pair = assemble_fem_pair(unit_interval(0.5, 8, 2.0));
         if (options.inject_asymmetry) pair.A.coeffRef(0, 1) += 1e-3;
         try {
           require_symmetric(pair.A);
           require_symmetric(pair.M);
         } catch (const DomainError& err) {
           throw VerifyFailure(err.what());
         }
       }},
      {"assembly.fem-closed-form", false,
       [](const VerifyOptions&) {
         const auto pair = assemble_fem_pair(unit_interval(0.5, 2));
         require_close(pair.A.coeff(0, 0), 2.0, 1e-14, "weighted stiffness entry");
         require_close(pair.M.coeff(0, 0), 1.0 / 3.0, 1e-14, "mass entry");
         const auto classical = assemble_fem_pair(unit_interval(1.0, 4));
         require_close(classical.A.coeff(1, 1), 8.0, 1e-13, "classical diagonal");
         require_close(classical.A.coeff(1, 2), -4.0, 1e-13, "classical off-diagonal");
       }},
      {"assembly.fem-quadrature-oracle", false,
       [](const VerifyOptions& options) {
         const auto alphas =
             options.full ? std::vector<double>{0.3, 0.5, 0.7, 0.9} : std::vector<double>{0.5, 0.9};
         for (const double alpha : alphas) {
           const auto interval = unit_interval(alpha, 8, 2.0);
           const auto pair = assemble_fem_pair(interval);
           const MatrixX<double> quad = quadrature_stiffness(interval);
           const MatrixX<double> closed(pair.A);
           for (Index i = 0; i < closed.rows(); ++i) {
             for (Index j = std::max<Index>(0, i - 1); j <= std::min(closed.cols() - 1, i + 1);
                  ++j) {
               require(std::abs(closed(i, j) - quad(i, j)) <= 1e-10 * std::abs(quad(i, j)),
                       "closed form differs from quadrature");
             }
           }
         }
       }},
      {"assembly.mass-row-sums", false,
       [](const VerifyOptions&) {
         const auto interval = unit_interval(0.4, 8, 2.0);
         const auto pair = assemble_fem_pair(interval);
         const MatrixX<double> M(pair.M);
         for (Index i = 1; i + 1 < pair.dim(); ++i) {
           const double expected = 0.5 * (interval.mesh().element_length(i) +
                                          interval.mesh().element_length(i + 1));
           require_close(M.row(i).sum(), expected, 1e-13, "mass row sum");
         }
       }},
      {"assembly.grunwald-structure", false,
       [](const VerifyOptions&) {
         const auto G = assemble_grunwald_operator(unit_interval(0.7, 12));
         const MatrixX<double> T(G.sparse_T());
         for (Index i = 0; i + 1 < T.rows(); ++i) {
           for (Index j = 0; j + 1 < T.cols(); ++j) {
             require(T(i, j) == T(i + 1, j + 1), "stencil matrix must be Toeplitz");
           }
         }
         const auto tiny = unit_interval(1.0, 2);
         const auto pair = grunwald_energy_pair(assemble_grunwald_operator(tiny), tiny);
         require_close(pair.A.coeff(0, 0), 2.0, 1e-14, "1x1 energy value");
       }},
      {"assembly.grunwald-consistency", false,
       [](const VerifyOptions&) {
         const auto interval = unit_interval(0.5, 64);
         const auto G = assemble_grunwald_operator(interval);
         VectorX<double> samples(G.dim());
         for (Index i = 0; i < G.dim(); ++i) {
           const double x = interval.mesh().node(i + 1);
           samples[i] = x * x;
         }
         const VectorX<double> derivative = G.apply(samples);
         for (Index i = 0; i < G.dim(); ++i) {
           const double x = interval.mesh().node(i + 1);
           require(std::abs(derivative[i] - std::pow(x, 0.5) * 2.0 * x) <= 2.0 / 64.0,
                   "first-order consistency");
         }
       }},
      {"linalg.spd-solve", false,
       [](const VerifyOptions&) {
         const auto pair = assemble_fem_pair(unit_interval(0.5, 9));
         const VectorX<double> b = seeded_vector(8, 42);
         const VectorX<double> oracle =
             Eigen::LLT<MatrixX<double>>(MatrixX<double>(pair.A)).solve(b);
         SpdSolveOptions<double> opts;
         opts.direct_threshold = 1;
         const VectorX<double> x = spd_solve(pair.A, b, opts);
         require((x - oracle).norm() <= 1e-8 * oracle.norm(), "CG disagrees with Cholesky");
       }},
      {"linalg.toeplitz-fft", false,
       [](const VerifyOptions& options) {
         const auto dims = options.full ? std::vector<Index>{3, 17, 64, 255}
                                        : std::vector<Index>{3, 17};
         for (const Index n : dims) {
           const int trials = options.full && n == 64 ? 100 : 3;
           for (int trial = 0; trial < trials; ++trial) {
             VectorX<double> col = seeded_vector(n, 9000 + 13 * n + trial);
             VectorX<double> row = seeded_vector(n, 9100 + 17 * n + trial);
             row[0] = col[0];
             const VectorX<double> v = seeded_vector(n, 9200 + 19 * n + trial);
             MatrixX<double> T(n, n);
             for (Index i = 0; i < n; ++i) {
               for (Index j = 0; j < n; ++j) T(i, j) = i >= j ? col[i - j] : row[j - i];
             }
             const VectorX<double> dense = T * v;
             require((toeplitz_matvec(col, row, v) - dense).norm() <= 1e-12 * dense.norm(),
                     "FFT product differs from dense product");
           }
         }
       }},
      {"linalg.kron-oracle", false,
       [](const VerifyOptions&) {
         const auto x = assemble_fem_pair(unit_interval(0.5, 4));
         const auto y = assemble_fem_pair(unit_interval(0.8, 5));
         const KroneckerSumOperator<double> K(x, y);
         const MatrixX<double> dense = K.dense();
         const MatrixX<double> U = Eigen::Map<const MatrixX<double>>(
             seeded_vector(12, 77).data(), 3, 4);
         VectorX<double> vec_u(12);
         for (Index i = 0; i < 3; ++i) {
           for (Index j = 0; j < 4; ++j) vec_u[i * 4 + j] = U(i, j);
         }
         const VectorX<double> expected = dense * vec_u;
         const MatrixX<double> applied = K.apply(U);
         for (Index i = 0; i < 3; ++i) {
           for (Index j = 0; j < 4; ++j) {
             require(std::abs(applied(i, j) - expected[i * 4 + j]) <= 1e-12 * expected.norm(),
                     "Kronecker apply differs from the materialized operator");
           }
         }
       }},
      {"linalg.dual-norm-identity", false,
       [](const VerifyOptions&) {
         const auto x = assemble_fem_pair(unit_interval(0.5, 5));
         const auto y = assemble_fem_pair(unit_interval(0.5, 5));
         const KroneckerSumOperator<double> K(x, y);
         const MatrixX<double> E = Eigen::Map<const MatrixX<double>>(
             seeded_vector(16, 88).data(), 4, 4);
         const MatrixX<double> R = K.apply(E);
         const double expected = E.cwiseProduct(R).sum();
         require_close(dual_norm_squared(K, R), expected, 1e-8 * std::abs(expected),
                       "dual norm energy identity");
       }},
      {"lowrank.renormalize", false,
       [](const VerifyOptions&) {
         const auto x = assemble_fem_pair(unit_interval(0.5, 6));
         const auto y = assemble_fem_pair(unit_interval(0.5, 6));
         const RankOneMode<double> mode{seeded_vector(5, 311), seeded_vector(5, 312), -1.75};
         const auto normalized = renormalize(mode, x, y);
         require_close(normalized.p.dot(x.M * normalized.p), 1.0, 1e-14, "p mass norm");
         require_close(normalized.q.dot(y.M * normalized.q), 1.0, 1e-14, "q mass norm");
         require_close(rank_one_energy(normalized, x, y), rank_one_energy(mode, x, y),
                       1e-12 * rank_one_energy(mode, x, y), "energy invariance");
       }},
      {"lowrank.residual-consistency", false,
       [](const VerifyOptions&) {
         const auto x = assemble_fem_pair(unit_interval(0.5, 7));
         const auto y = assemble_fem_pair(unit_interval(0.7, 7));
         LoadFactors<double> load;
         load.terms.push_back({seeded_vector(6, 321), seeded_vector(6, 322)});
         SeparableFunction<double> u(x, y);
         u.append(RankOneMode<double>{seeded_vector(6, 323), seeded_vector(6, 324), 0.6});
         const ResidualContraction<double> r(load, u);
         const VectorX<double> q = seeded_vector(6, 325);
         const VectorX<double> bq = residual_partial_x(r, q);
         for (int trial = 0; trial < 10; ++trial) {
           const VectorX<double> p = seeded_vector(6, 3300 + trial);
           require_close(p.dot(bq), residual_apply(r, p, q), 1e-12, "partial contraction");
         }
       }},
      {"pgd.scalar-stationarity", false,
       [](const VerifyOptions&) {
         SparseMatrixX<double> one_matrix(1, 1);
         one_matrix.insert(0, 0) = 1.0;
         const FractionalInterval<double> interval(FractionalOrder<double>(0.5),
                                                   make_uniform_mesh(1.0, 2), 'x');
         const OperatorPair<double> ops{one_matrix, one_matrix, StructureTag::Dense, interval};
         LoadFactors<double> load;
         VectorX<double> one(1);
         one << 1.0;
         load.terms.push_back({one, one});
         const SeparableFunction<double> empty(ops, ops);
         const ResidualContraction<double> r(load, empty);
         const auto outcome = als_maximize(r, AlsConfig<double>{});
         require_close(outcome.rayleigh_quotient, 0.5, 1e-14, "scalar Rayleigh quotient");
         require(outcome.monotonicity_violations == 0, "quotient trace must be nondecreasing");
       }},
      {"pgd.rank-one-exactness", false,
       [](const VerifyOptions&) {
         const auto x = assemble_fem_pair(unit_interval(0.5, 9));
         const auto y = assemble_fem_pair(unit_interval(0.5, 9));
         const auto load = manufactured_rank_one_load(
             x, y, seeded_vector(8, 331), seeded_vector(8, 332));
         AlsConfig<double> als;
         als.rq_rel_improvement_tol = 1e-12;
         const auto result =
             greedy_solve(x, y, load, GreedyConfig<double>{}, als, DiagnosticsFlags{true, true});
         require(result.records.size() == 1, "must converge in exactly one mode");
         require(*result.records[0].theta_hat >= 1.0 - 1e-8, "theta must reach one");
       }},
      {"problems.dense-equivalence-small", false,
       [](const VerifyOptions& options) {
         const auto kinds = std::vector<ProblemKind>{ProblemKind::Poisson2D, ProblemKind::SpaceTime};
         const auto discs = std::vector<Discretization>{Discretization::Fem,
                                                        Discretization::Grunwald};
         const Index n = options.full ? 6 : 4;
         for (const auto kind : kinds) {
           for (const auto disc : discs) {
             if (!options.full && (kind != ProblemKind::Poisson2D || disc != Discretization::Fem)) {
               continue;
             }
             ProblemSpec<double> spec;
             spec.kind = kind;
             spec.discretization = disc;
             spec.alpha_x = 0.5;
             spec.alpha_y_or_t = kind == ProblemKind::SpaceTime ? 1.0 : 0.5;
             spec.n_x = n;
             spec.n_y = n;
             const auto built = build_problem(spec);
             GreedyConfig<double> cfg;
             cfg.eps = 1e-11;
             cfg.max_modes = 300;
             cfg.absolute_floor = 1e-24;
             AlsConfig<double> als;
             als.rq_rel_improvement_tol = 1e-10;
             const auto result = greedy_solve(built.x, built.y, built.load, cfg, als);
             const MatrixX<double> reference =
                 reference_solution_dense(built.x, built.y, built.load);
             const KroneckerSumOperator<double> K(built.x, built.y);
             const MatrixX<double> diff = result.u.dense() - reference;
             const double energy_err = std::sqrt(std::max(diff.cwiseProduct(K.apply(diff)).sum(), 0.0));
             require(energy_err <= 1e-6, "greedy must match the dense reference");
           }
         }
       }},
      {"assembly.grunwald-spd-trials", true,
       [](const VerifyOptions&) {
         const auto interval = unit_interval(0.5, 8);
         const auto pair = grunwald_energy_pair(assemble_grunwald_operator(interval), interval);
         for (int trial = 0; trial < 100; ++trial) {
           const VectorX<double> v = seeded_vector(7, 4000 + trial);
           require(v.dot(pair.A * v) > 0.0, "energy matrix must be positive definite");
         }
       }},
      {"linalg.jacobi-benefit", true,
       [](const VerifyOptions&) {
         const FractionalInterval<double> interval(FractionalOrder<double>(0.5),
                                                   make_graded_mesh(1.0, 128, 2.0), 'x');
         const auto pair = assemble_fem_pair(interval);
         int wins = 0;
         for (int trial = 0; trial < 100; ++trial) {
           const VectorX<double> b = seeded_vector(pair.dim(), 5000 + trial);
           SpdSolveOptions<double> opts;
           opts.direct_threshold = 1;
           opts.rel_tol = 1e-8;
           opts.max_iterations = 100 * pair.dim();
           Index with_jacobi = opts.max_iterations;
           Index without = opts.max_iterations;
           try {
             with_jacobi = spd_solve_info(pair.A, b, opts).iterations;
           } catch (const SolverError&) {
           }
           opts.jacobi = false;
           try {
             without = spd_solve_info(pair.A, b, opts).iterations;
           } catch (const SolverError&) {
           }
           if (with_jacobi <= without) ++wins;
         }
         require(wins >= 90, "Jacobi preconditioning must not increase iteration counts");
       }},
      {"assembly.poincare-stability", true,
       [](const VerifyOptions&) {
         double min_value = 0, max_value = 0;
         bool first = true;
         for (const Index n : {32, 64, 128}) {
           const double lam = lambda_min(assemble_fem_pair(unit_interval(0.5, n)));
           require(lam > 0.0, "smallest generalized eigenvalue must be positive");
           min_value = first ? lam : std::min(min_value, lam);
           max_value = first ? lam : std::max(max_value, lam);
           first = false;
         }
         require((max_value - min_value) / min_value < 0.20,
                 "Poincare constant must be stable across refinements");
       }},
      {"pgd.fractional-convergence-32", true,
       [](const VerifyOptions&) {
         ProblemSpec<double> spec;
         spec.alpha_x = 0.5;
         spec.alpha_y_or_t = 0.5;
         spec.n_x = 32;
         spec.n_y = 32;
         const auto built = build_problem(spec);
         GreedyConfig<double> cfg;
         cfg.eps = 1e-3;
         cfg.max_modes = 60;
         const auto result = greedy_solve(built.x, built.y, built.load, cfg, AlsConfig<double>{},
                                          DiagnosticsFlags{true, true});
         require(result.monotonicity_violations == 0, "quotient trace must be nondecreasing");
         require(result.records.size() >= 2, "run must accept at least two modes");
         const double scale = *result.initial_energy_error_sq;
         for (std::size_t k = 1; k < result.records.size(); ++k) {
           const auto& prev = result.records[k - 1];
           const auto& rec = result.records[k];
           require(std::abs(*rec.energy_error_sq - (*prev.energy_error_sq - prev.delta_energy)) <=
                       1e-8 * scale,
                   "one-step energy identity");
           require(*rec.theta_hat > 0.0 && *rec.theta_hat <= 1.0 + 1e-10,
                   "theta must lie in (0, 1]");
         }
       }},
  };
  return checks;
}

}  // namespace

int run_verify(const VerifyOptions& options) {
  int failures = 0;
  std::string first_failure;
  for (const Check& check : check_list()) {
    if (check.full_only && !options.full) continue;
    try {
      check.fn(options);
      std::cout << "[PASS] " << check.name << "\n";
    } catch (const std::exception& err) {
      std::cout << "[FAIL] " << check.name << ": " << err.what() << "\n";
      if (failures == 0) first_failure = check.name;
      ++failures;
    }
  }
  if (failures > 0) {
    std::cout << failures << " check(s) failed; first failing invariant: " << first_failure
              << "\n";
    return 1;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace cfpgd::app
