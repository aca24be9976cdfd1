#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "modcap/curves.hpp"
#include "modcap/family.hpp"
#include "modcap/modulus.hpp"
#include "modcap/space.hpp"

namespace modcap {

/// Finitely supported probability on a family of measures. `members` holds
/// the index of each atom in the family it was built from.
struct MeasurePlan {
  std::vector<DiscreteMeasure> support;
  std::vector<double> probabilities;
  std::vector<std::size_t> members;
};

struct Barycenter {
  std::vector<double> g;  ///< density of the averaged measure w.r.t. m
  double c_q = 0.0;       ///< ||g||_{L^q(m)}
};

/// Throws `no_barycenter` when the plan charges a point of zero measure, and
/// `invalid_input` when the probabilities do not sum to 1.
Barycenter plan_barycenter(const MeasurePlan& plan, std::span<const double> ground, double q);

struct ContentOptions {
  /// Frank-Wolfe gap relative to the objective at which the descent stops.
  double gap_tol = 1e-13;
  /// Running out of iterations is not an error: the iterate is returned with
  /// a warning and the certificate decides.
  std::size_t max_iter = 100000;
};

struct ContentSolution {
  double value = 0.0;  ///< C = 1 / min c_q; +inf when the family holds the zero measure
  MeasurePlan plan;
  std::vector<double> weights;  ///< optimal plan as one weight per family member
  Barycenter barycenter;
  std::size_t iterations = 0;
  double fw_gap = 0.0;  ///< relative
  bool contains_zero_measure = false;
  std::vector<std::size_t> vanishing_support;
  std::vector<std::string> warnings;
};

/// Minimises ||sum lambda_i mu_i / m||_{L^q(m)} over the probability simplex.
ContentSolution solve_content(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                              Exponent p, const ContentOptions& opts = {});

struct DualityCertificate {
  double mod_root = 0.0;  ///< Mod^{1/p}
  double content = 0.0;
  double gap = 0.0;  ///< |Mod^{1/p} - C|
  double tolerance = 0.0;
  /// eta(Sigma) <= int int f dmu deta <= c_q(eta) ||f||_p for the pair.
  double weak_lhs = 0.0;
  double weak_mid = 0.0;
  double weak_rhs = 0.0;
  bool identity_ok = false;
  bool weak_ok = false;

  bool ok() const { return identity_ok && weak_ok; }
};

DualityCertificate check_duality(std::span<const double> ground, const ModulusSolution& primal,
                                 const ContentSolution& dual, Exponent p);

struct OptimalityReport {
  double saturation = 0.0;   ///< max over charged members of |int f dmu - 1|
  double barycenter = 0.0;   ///< max |g - f^{p-1}/||f||_p^p| on {m > 0}
  double converse_norm = 0.0;  ///< ||f||_p^p of the tested density
  double converse_bound = 0.0; ///< C^p
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Saturation on the plan support, the barycenter identity, and the
/// converse check ||f||_p^p >= C^p - tol for `candidate` (defaults to the
/// primal density) when it saturates the plan support.
OptimalityReport check_optimality_conditions(std::span<const double> ground,
                                             std::span<const DiscreteMeasure> measures,
                                             const ModulusSolution& primal,
                                             const ContentSolution& dual, Exponent p, double tol,
                                             std::span<const double> candidate = {});

/// Content of a curve family through its J (or M) images; the plan is read
/// as a probability on the curves. Constant curves are rejected.
ContentSolution content_of_curve_family(const MetricMeasureSpace& space,
                                        std::span<const ParametricCurve> curves, Exponent p,
                                        CurveMap map = CurveMap::j, const ContentOptions& opts = {});

}  // namespace modcap
