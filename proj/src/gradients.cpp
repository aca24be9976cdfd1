#include "modcap/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "modcap/error.hpp"

namespace modcap {
namespace {

double value_at(std::span<const double> f, const Position& pos) {
  if (pos.is_node()) return f[pos.a];
  return (1.0 - pos.s) * f[pos.a] + pos.s * f[pos.b];
}

double residual(std::span<const double> f, std::span<const double> g, const ParametricCurve& c) {
  const double jump = std::abs(value_at(f, c.finish()) - value_at(f, c.start()));
  return jump - j_map(c).integrate(g);
}

}  // namespace

GradientCheckReport check_upper_gradient(std::span<const double> f, std::span<const double> g,
                                         std::span<const ParametricCurve> curves, double tol) {
  if (f.size() != g.size()) fail(ErrorCode::invalid_input, "f and g must have the same length");
  for (double v : g) {
    if (!(v >= 0.0)) fail(ErrorCode::invalid_input, "g must be nonnegative");
  }
  GradientCheckReport rep;
  rep.n_curves = curves.size();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double r = residual(f, g, curves[i]);
    rep.residuals.push_back(r);
    rep.worst_residual = std::max(rep.worst_residual, r);
    if (r > tol) rep.violating.push_back(i);
  }
  rep.n_violations = rep.violating.size();
  return rep;
}

std::vector<ParametricCurve> path_family_curves(const MetricMeasureSpace& space,
                                                const PathMembers& members, std::size_t limit) {
  const PathEnumeration paths = enumerate_simple_paths(space, members, limit);
  if (paths.truncated) {
    fail(ErrorCode::cap_exceeded,
         "path family has more than " + std::to_string(limit) + " members");
  }
  std::vector<ParametricCurve> out;
  out.reserve(paths.paths.size());
  for (const PointPath& path : paths.paths) {
    std::vector<double> times(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
      times[i] = static_cast<double>(i) / static_cast<double>(path.size() - 1);
    }
    out.push_back(ParametricCurve::from_nodes(space, path, times));
  }
  return out;
}

GradientCheckReport modulus_of_violating_family(const MetricMeasureSpace& space,
                                                std::span<const double> f, std::span<const double> g,
                                                std::span<const ParametricCurve> curves, Exponent p,
                                                double tol) {
  GradientCheckReport rep = check_upper_gradient(f, g, curves, tol);
  std::vector<DiscreteMeasure> measures;
  for (std::size_t i : rep.violating) measures.push_back(j_map(curves[i]));
  rep.modulus_of_violations =
      measures.empty() ? 0.0 : solve_modulus_explicit(space, measures, p).value;
  return rep;
}

W1pReport check_w1p_pair(std::span<const double> ground, std::span<const double> f,
                         std::span<const double> g, std::span<const CurvePlan> plans, double tol) {
  W1pReport rep;
  if (plans.empty()) rep.warnings.push_back("no test plans given; the check is vacuous");
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const CurvePlan& plan = plans[k];
    PlanViolation v;
    const TestPlanReport tp = testplan_check(plan, ground);
    v.is_test_plan = tp.is_test_plan;
    v.c_min = tp.c_min;
    const GradientCheckReport gc = check_upper_gradient(f, g, plan.curves());
    for (std::size_t i : gc.violating) v.violating_probability += plan.probabilities()[i];
    if (!v.is_test_plan) {
      rep.warnings.push_back("plan " + std::to_string(k) + " is not a test plan");
      rep.pass = false;
    } else if (v.violating_probability > tol) {
      rep.pass = false;
    }
    rep.plans.push_back(v);
  }
  return rep;
}

EquivalenceRecord equivalence_experiment(const MetricMeasureSpace& space, std::span<const double> f,
                                         std::span<const double> g,
                                         std::span<const ParametricCurve> curves,
                                         std::span<const CurvePlan> plans, Exponent p) {
  EquivalenceRecord rec;
  // The modulus side quantifies over the family together with every plan's support.
  std::vector<ParametricCurve> all(curves.begin(), curves.end());
  for (const CurvePlan& plan : plans) all.insert(all.end(), plan.curves().begin(), plan.curves().end());
  rec.curves = modulus_of_violating_family(space, f, g, all, p);
  rec.modulus_of_violations = rec.curves.modulus_of_violations;
  rec.plans = check_w1p_pair(space.measure(), f, g, plans);
  for (const PlanViolation& v : rec.plans.plans) {
    if (v.is_test_plan) {
      rec.max_violating_probability = std::max(rec.max_violating_probability, v.violating_probability);
    }
  }
  rec.modulus_null = rec.modulus_of_violations <= 1e-10;
  rec.implication_holds = !rec.modulus_null || rec.max_violating_probability <= 1e-8;
  return rec;
}

}  // namespace modcap
