#include <doctest.h>

#include <cmath>
#include <random>

#include "modcap/error.hpp"
#include "modcap/gradients.hpp"
#include "modcap/modulus.hpp"
#include "modcap/plans.hpp"

using namespace modcap;

namespace {

std::vector<PointId> column(std::size_t n, std::size_t i) {
  std::vector<PointId> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back(j * n + i);
  return out;
}

struct Grid {
  MetricMeasureSpace space;
  PathMembers lr;
  std::vector<ParametricCurve> paths;
  std::vector<double> x;
};

Grid grid(std::size_t n) {
  auto s = build_grid_space(n, n);
  PathMembers lr{column(n, 0), column(n, n - 1), {}, Quadrature::node};
  auto paths = path_family_curves(s, lr, 100000);
  std::vector<double> x(s.size());
  for (PointId p = 0; p < s.size(); ++p) x[p] = s.coords()[p][0];
  return {std::move(s), lr, std::move(paths), std::move(x)};
}

}  // namespace

TEST_CASE("upper-gradient inequality along curves") {
  const Grid g = grid(4);
  const std::vector<double> constant(g.space.size(), 3.0), zero(g.space.size(), 0.0), one(g.space.size(), 1.0);
  CHECK(check_upper_gradient(constant, zero, g.paths).n_violations == 0);
  const auto cal = check_upper_gradient(g.x, one, g.paths);
  CHECK(cal.n_violations == 0);
  CHECK(cal.n_curves == g.paths.size());
  // monotone left-right paths are tight
  CHECK(cal.worst_residual == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  std::vector<double> step(g.space.size());
  for (PointId p = 0; p < step.size(); ++p) step[p] = g.x[p] > 0.5 ? 1.0 : 0.0;
  const auto st = check_upper_gradient(step, zero, g.paths);
  CHECK(st.n_violations == g.paths.size());
}

TEST_CASE("upper gradient at points inside edges") {
  const auto s = build_grid_space(3, 1);
  const std::vector<double> f{0.0, 1.0, 2.0}, half(3, 1.0);
  // node 0 to the middle of edge (1,2): f changes by 1.5 over length 0.75
  const std::vector<Position> pos{Position::node(0), Position::node(1), Position{1, 2, 0.5}};
  const std::vector<ParametricCurve> c{ParametricCurve::from_positions(s, pos, std::vector<double>{0, 0.5, 1})};
  const auto rep = check_upper_gradient(f, half, c);
  REQUIRE(rep.residuals.size() == 1);
  CHECK(rep.residuals[0] == doctest::Approx(1.5 - 0.75));
  CHECK(rep.n_violations == 1);
  const std::vector<double> steep(3, 2.0);
  CHECK(check_upper_gradient(f, steep, c).n_violations == 0);
}

TEST_CASE("modulus of the violating family") {
  const Grid g = grid(4);
  const Exponent p(2.0);
  const std::vector<double> one(g.space.size(), 1.0), two(g.space.size(), 2.0), zero(g.space.size(), 0.0);
  CHECK(modulus_of_violating_family(g.space, g.x, one, g.paths, p).modulus_of_violations == 0.0);
  CHECK(modulus_of_violating_family(g.space, g.x, two, g.paths, p).modulus_of_violations == 0.0);

  std::vector<double> step(g.space.size());
  for (PointId x = 0; x < step.size(); ++x) step[x] = g.x[x] > 0.5 ? 1.0 : 0.0;
  for (double pv : {1.5, 2.0, 3.0}) {
    const auto rep = modulus_of_violating_family(g.space, step, zero, g.paths, Exponent(pv));
    const double connecting = solve_modulus_paths(g.space, g.lr, Exponent(pv)).value;
    CHECK(rep.modulus_of_violations > 0.0);
    CHECK(rep.modulus_of_violations == doctest::Approx(connecting).epsilon(1e-6));
  }
}

TEST_CASE("path family truncation") {
  const Grid g = grid(3);
  try {
    path_family_curves(g.space, g.lr, 2);
    FAIL("truncation not reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::cap_exceeded);
  }
}

TEST_CASE("W1p check against test plans") {
  const std::size_t k = 4;
  const Grid g = grid(k);
  const std::vector<double> one(g.space.size(), 1.0);
  const CurvePlan cols = CurvePlan::uniform(column_curves(g.space, k));
  const CurvePlan rows({g.paths.front(), g.paths.back()}, {0.5, 0.5});
  const std::vector<CurvePlan> plans{cols, rows};
  const auto cal = check_w1p_pair(g.space.measure(), g.x, one, plans);
  CHECK(cal.pass);
  for (const auto& v : cal.plans) CHECK(v.violating_probability == 0.0);

  // f = y with g = 0 is violated exactly along the columns
  std::vector<double> y(g.space.size()), zero(g.space.size(), 0.0);
  for (PointId x = 0; x < y.size(); ++x) y[x] = g.space.coords()[x][1];
  const std::vector<CurvePlan> only_cols{cols};
  const auto wedge = check_w1p_pair(g.space.measure(), y, zero, only_cols);
  REQUIRE(wedge.plans.size() == 1);
  CHECK(wedge.plans[0].is_test_plan);
  CHECK(wedge.plans[0].c_min == doctest::Approx(static_cast<double>(k)));
  CHECK(wedge.plans[0].violating_probability == doctest::Approx(1.0));
  CHECK_FALSE(wedge.pass);
  const auto cols_curves = column_curves(g.space, k);
  CHECK(modulus_of_violating_family(g.space, y, zero, cols_curves, Exponent(2.0)).modulus_of_violations > 0.0);

  const auto empty = check_w1p_pair(g.space.measure(), g.x, one, {});
  CHECK(empty.pass);
  CHECK_FALSE(empty.warnings.empty());
}

TEST_CASE("equivalence experiment") {
  const Grid g = grid(4);
  const Exponent p(2.0);
  const std::vector<double> one(g.space.size(), 1.0), zero(g.space.size(), 0.0);
  const std::vector<CurvePlan> plans{CurvePlan::uniform(column_curves(g.space, 4))};
  const auto cal = equivalence_experiment(g.space, g.x, one, g.paths, plans, p);
  CHECK(cal.modulus_of_violations == 0.0);
  CHECK(cal.max_violating_probability == 0.0);
  CHECK(cal.implication_holds);

  std::vector<double> step(g.space.size());
  for (PointId x = 0; x < step.size(); ++x) step[x] = g.x[x] > 0.5 ? 1.0 : 0.0;
  const std::vector<CurvePlan> rows{CurvePlan({g.paths.front()}, {1.0})};
  const auto st = equivalence_experiment(g.space, step, zero, g.paths, rows, p);
  CHECK(st.modulus_of_violations > 0.0);
  CHECK(st.max_violating_probability > 0.0);
  CHECK_FALSE(st.modulus_null);
  CHECK(st.implication_holds);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int seed = 0; seed < 5; ++seed) {
    std::vector<double> f(g.space.size()), slope(g.space.size(), 0.0);
    for (double& v : f) v = u(rng);
    for (PointId x = 0; x < f.size(); ++x) {
      for (const Neighbor& nb : g.space.neighbors(x)) {
        slope[x] = std::max(slope[x], std::abs(f[x] - f[nb.to]) / g.space.edge(nb.edge).length);
      }
    }
    const auto rec = equivalence_experiment(g.space, f, slope, g.paths, plans, p);
    CHECK(rec.implication_holds);
  }
}
