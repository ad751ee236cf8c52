#include "cfpgd/spaces.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cfpgd;

TEST_SUITE("spaces") {

TEST_CASE("uniform mesh nodes are equispaced") {
  const auto mesh = make_uniform_mesh(1.0, 2);
  REQUIRE(mesh.nodes().size() == 3);
  CHECK(mesh.node(0) == doctest::Approx(0.0));
  CHECK(mesh.node(1) == doctest::Approx(0.5));
  CHECK(mesh.node(2) == doctest::Approx(1.0));

  const auto mesh2 = make_uniform_mesh(2.0, 4);
  for (Index i = 0; i <= 4; ++i) CHECK(mesh2.node(i) == doctest::Approx(0.5 * double(i)));
  CHECK(mesh2.grading_exponent() == 1.0);
  CHECK(mesh2.interior_count() == 3);
}

TEST_CASE("mesh construction rejects bad parameters") {
  CHECK_THROWS_AS(make_uniform_mesh(1.0, 1), DomainError);
  CHECK_THROWS_AS(make_uniform_mesh(0.0, 4), DomainError);
  CHECK_THROWS_AS(make_uniform_mesh(-1.0, 4), DomainError);
  CHECK_THROWS_AS(make_graded_mesh(1.0, 4, 0.5), DomainError);
}

TEST_CASE("graded mesh follows the power rule") {
  const auto mesh = make_graded_mesh(1.0, 2, 2.0);
  CHECK(mesh.node(0) == doctest::Approx(0.0));
  CHECK(mesh.node(1) == doctest::Approx(0.25));
  CHECK(mesh.node(2) == doctest::Approx(1.0));

  const auto cubic = make_graded_mesh(1.0, 3, 3.0);
  CHECK(cubic.node(1) == doctest::Approx(1.0 / 27.0));
  CHECK(cubic.node(2) == doctest::Approx(8.0 / 27.0));
  CHECK(cubic.node(3) == doctest::Approx(1.0));
}

TEST_CASE("grading exponent one reduces to the uniform mesh") {
  const auto graded = make_graded_mesh(1.0, 4, 1.0);
  const auto uniform = make_uniform_mesh(1.0, 4);
  for (Index i = 0; i <= 4; ++i) {
    CHECK(std::abs(graded.node(i) - uniform.node(i)) <= 1e-15 * std::max(1.0, uniform.node(i)));
  }

  const auto graded17 = make_graded_mesh(3.0, 17, 1.0);
  const auto uniform17 = make_uniform_mesh(3.0, 17);
  for (Index i = 0; i <= 17; ++i) {
    CHECK(std::abs(graded17.node(i) - uniform17.node(i)) <= 1e-15 * 3.0);
  }
}

TEST_CASE("fractional order validates its range") {
  CHECK_THROWS_AS(FractionalOrder<double>(0.0), DomainError);
  CHECK_THROWS_AS(FractionalOrder<double>(-0.3), DomainError);
  CHECK_THROWS_AS(FractionalOrder<double>(1.5), DomainError);
  CHECK(FractionalOrder<double>(1.0).is_classical());
  CHECK(FractionalOrder<double>(0.5).weight_exponent() == doctest::Approx(0.5));
}

TEST_CASE("interval reports interior dof count") {
  const FractionalInterval<double> interval(FractionalOrder<double>(0.5),
                                            make_uniform_mesh(1.0, 8), 'x');
  CHECK(interval.interior_dof_count() == 7);
  CHECK(interval.label() == 'x');
}

TEST_CASE("pointwise conformable derivative values") {
  const FractionalOrder<double> half(0.5);
  CHECK(conformable_derivative_pointwise(3.0, 1.0, half) == doctest::Approx(3.0));
  CHECK(conformable_derivative_pointwise(2.0, 4.0, half) == doctest::Approx(4.0));

  const FractionalOrder<double> threequarters(0.75);
  CHECK(conformable_derivative_pointwise(1.0, 0.25, threequarters) ==
        doctest::Approx(std::pow(0.25, 0.25)).epsilon(1e-14));

  CHECK_THROWS_AS(conformable_derivative_pointwise(1.0, 0.0, half), DomainError);
  CHECK_THROWS_AS(conformable_derivative_pointwise(1.0, -2.0, half), DomainError);
}

TEST_CASE("classical order reduces to the plain derivative") {
  const FractionalOrder<double> one(1.0);
  for (double x : {0.1, 0.5, 1.0, 7.25}) {
    for (double fp : {-3.0, 0.0, 0.5, 11.0}) {
      CHECK(conformable_derivative_pointwise(fp, x, one) == fp);
    }
  }
}

TEST_CASE("limit quotient converges at first order for f(x) = x^2") {
  // (f(x + h x^{1-a}) - f(x)) / h -> x^{1-a} f'(x) with error ~ h x^{2(1-a)}.
  const FractionalOrder<double> order(0.6);
  const double x = 0.7;
  auto f = [](double s) { return s * s; };
  const double exact = conformable_derivative_pointwise(2.0 * x, x, order);

  std::vector<double> errors;
  for (double h : {1e-3, 1e-4, 1e-5}) {
    const double quotient = (f(x + h * std::pow(x, order.weight_exponent())) - f(x)) / h;
    errors.push_back(std::abs(quotient - exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double slope = std::log10(errors[i - 1] / errors[i]);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
  }
}

}  // TEST_SUITE
