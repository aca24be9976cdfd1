#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "modcap/family.hpp"
#include "modcap/space.hpp"

namespace modcap {

/// Exponent p > 1 together with its conjugate q = p/(p-1).
class Exponent {
 public:
  explicit Exponent(double p);
  static Exponent from_conjugate(double q);

  double p() const { return p_; }
  double q() const { return p_ / (p_ - 1.0); }

 private:
  double p_;
};

struct SolveOptions {
  double feas_tol = 1e-9;
  double kkt_tol = 1e-8;
  /// Relative primal-dual gap at which the dual ascent stops.
  double gap_tol = 1e-12;
  std::size_t max_iter = 100000;
};

/// Optimal density for the p-modulus of a finite family. On finite spaces
/// the Borel and the continuous-function moduli coincide, so only one is
/// computed.
struct ModulusSolution {
  double value = 0.0;  ///< +inf when the family contains the zero measure
  Ground ground = Ground::points;
  std::vector<double> f;
  /// One multiplier per input member; dropped members get 0.
  std::vector<double> multipliers;
  std::vector<std::size_t> active_set;
  std::size_t iterations = 0;
  double primal_dual_gap = 0.0;  ///< relative
  double dual_value = 0.0;

  bool empty_family = false;
  bool contains_zero_measure = false;
  /// Members charging points of zero reference measure; their constraints
  /// cost nothing and are dropped.
  std::vector<std::size_t> vanishing_support;

  /// Members generated by the path solver.
  std::vector<PointPath> paths;
  std::vector<DiscreteMeasure> measures;
};

/// Dual ascent on the multipliers of the constraints int f dmu_i >= 1, over
/// the reference measure `ground`. `warm_start` (one entry per member) seeds
/// the multipliers.
ModulusSolution solve_modulus(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                              Exponent p, const SolveOptions& opts = {},
                              std::span<const double> warm_start = {});

ModulusSolution solve_modulus_explicit(const MetricMeasureSpace& space,
                                       std::span<const DiscreteMeasure> measures, Exponent p,
                                       const SolveOptions& opts = {});

/// Constraint generation with a shortest-path separation oracle.
ModulusSolution solve_modulus_paths(const MetricMeasureSpace& space, const PathMembers& family,
                                    Exponent p, const SolveOptions& opts = {});

/// Independent primal route: log-barrier Newton iterations on f. Dense, so
/// meant for small instances (cross-validation).
ModulusSolution solve_modulus_primal(std::span<const double> ground,
                                     std::span<const DiscreteMeasure> measures, Exponent p,
                                     const SolveOptions& opts = {});

/// Closed form for a single member: ||mu/m||_{L^q(m)}^{-p}, 0 when mu charges
/// a point of zero reference measure, +inf for the zero measure.
double single_member_modulus(std::span<const double> ground, const DiscreteMeasure& mu, Exponent p);

struct KktResiduals {
  double stationarity = 0.0;    ///< max |p m f^{p-1} - sum lambda mu| on {m > 0}
  double complementarity = 0.0; ///< max lambda_i (int f dmu_i - 1)
  double infeasibility = 0.0;   ///< max (1 - int f dmu_i)_+
};

KktResiduals kkt_residuals(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                           const ModulusSolution& sol, Exponent p);

/// Members on which the optimal density saturates the constraint.
std::vector<std::size_t> saturated_subfamily(const ModulusSolution& sol,
                                             std::span<const DiscreteMeasure> measures,
                                             double sat_tol = 1e-7);

struct PropertiesReport {
  double mod_a = 0.0;
  double mod_b = 0.0;
  double mod_union = 0.0;
  std::vector<double> chain;  ///< moduli of the nested chain A1 c A2 c A3
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Monotonicity, subadditivity of Mod^{1/p}, continuity along a nested
/// chain of the union, and stability of null families under scaling.
PropertiesReport mod_properties_check(const MetricMeasureSpace& space,
                                      std::span<const DiscreteMeasure> a,
                                      std::span<const DiscreteMeasure> b, Exponent p,
                                      const SolveOptions& opts = {});

}  // namespace modcap
