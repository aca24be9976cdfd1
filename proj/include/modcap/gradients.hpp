#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "modcap/curves.hpp"
#include "modcap/family.hpp"
#include "modcap/modulus.hpp"
#include "modcap/plans.hpp"
#include "modcap/space.hpp"

namespace modcap {

inline constexpr double default_gradient_tol = 1e-10;

struct GradientCheckReport {
  std::size_t n_curves = 0;
  std::size_t n_violations = 0;
  std::vector<std::size_t> violating;
  /// |f(end) - f(start)| - int_gamma g, per curve.
  std::vector<double> residuals;
  double worst_residual = -std::numeric_limits<double>::infinity();
  double modulus_of_violations = 0.0;
};

/// f is evaluated at curve endpoints by linear interpolation along edges;
/// int_gamma g = int g dJ(gamma).
GradientCheckReport check_upper_gradient(std::span<const double> f, std::span<const double> g,
                                         std::span<const ParametricCurve> curves,
                                         double tol = default_gradient_tol);

/// Curves of a path family (unit-speed polylines on uniform time grids).
std::vector<ParametricCurve> path_family_curves(const MetricMeasureSpace& space,
                                                const PathMembers& members, std::size_t limit);

/// Mod_p of the J-images of the curves violating the upper-gradient
/// inequality; 0 when there are none.
GradientCheckReport modulus_of_violating_family(const MetricMeasureSpace& space,
                                                std::span<const double> f, std::span<const double> g,
                                                std::span<const ParametricCurve> curves, Exponent p,
                                                double tol = default_gradient_tol);

struct PlanViolation {
  bool is_test_plan = false;
  double c_min = 0.0;
  double violating_probability = 0.0;
};

struct W1pReport {
  std::vector<PlanViolation> plans;
  std::vector<std::string> warnings;
  bool pass = true;
};

W1pReport check_w1p_pair(std::span<const double> ground, std::span<const double> f,
                         std::span<const double> g, std::span<const CurvePlan> plans,
                         double tol = 1e-8);

struct EquivalenceRecord {
  double modulus_of_violations = 0.0;
  double max_violating_probability = 0.0;
  bool modulus_null = false;
  bool implication_holds = true;
  GradientCheckReport curves;
  W1pReport plans;
};

/// Checks that Mod-a.e. validity (violating modulus <= 1e-10, over `curves`
/// and the plan supports) implies
/// q-a.e. validity (every test plan's violating probability <= 1e-8).
EquivalenceRecord equivalence_experiment(const MetricMeasureSpace& space, std::span<const double> f,
                                         std::span<const double> g,
                                         std::span<const ParametricCurve> curves,
                                         std::span<const CurvePlan> plans, Exponent p);

}  // namespace modcap
