#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "modcap/curves.hpp"
#include "modcap/space.hpp"

namespace modcap {

/// Finitely supported probability on parametric curves.
class CurvePlan {
 public:
  CurvePlan() = default;
  /// Probabilities must be nonnegative and sum to 1 within 1e-12.
  CurvePlan(std::vector<ParametricCurve> curves, std::vector<double> probabilities);

  static CurvePlan uniform(std::vector<ParametricCurve> curves);

  std::span<const ParametricCurve> curves() const { return curves_; }
  std::span<const double> probabilities() const { return probabilities_; }
  std::span<const double> lengths() const { return lengths_; }
  std::span<const double> lipschitz() const { return lipschitz_; }
  std::size_t size() const { return curves_.size(); }
  bool empty() const { return curves_.empty(); }

 private:
  std::vector<ParametricCurve> curves_;
  std::vector<double> probabilities_;
  std::vector<double> lengths_;
  std::vector<double> lipschitz_;
};

struct ParametricBarycenter {
  std::vector<double> h;
  double norm_q = 0.0;  ///< ||h||_{L^q(m)}
  double sup = 0.0;     ///< max h
};

/// h_x = sum_gamma rho(gamma) M(gamma)(x) / m_x. Throws `no_barycenter` when
/// a curve spends time on a point of zero measure.
ParametricBarycenter parametric_barycenter(const CurvePlan& plan, std::span<const double> ground,
                                           double q);

double q_energy(const CurvePlan& plan, double q);

/// Time-t marginal (mass per point) under the nearest-endpoint occupation.
std::vector<double> time_marginal(const CurvePlan& plan, std::size_t n_points, double t);

struct TestPlanReport {
  bool is_test_plan = false;
  double c_min = 0.0;  ///< sup_t max_x marginal_x / m_x
  double worst_time = 0.0;
  PointId worst_point = 0;
  std::size_t evaluated_times = 0;
};

/// Evaluates the marginals on every occupation breakpoint and every interval
/// between breakpoints (they are constant there), plus `extra_times`.
TestPlanReport testplan_check(const CurvePlan& plan, std::span<const double> ground,
                              std::span<const double> extra_times = {});

struct ImproveResult {
  CurvePlan plan;
  double z = 0.0;
  std::vector<double> g;       ///< barycenter of the input plan
  std::vector<double> weight;  ///< 1 / max(eps, g)
  double barycenter_sup = 0.0; ///< max of the new parametric barycenter
  double energy = 0.0;         ///< q-energy of the new plan
  double energy_bound = 0.0;   ///< L^q / (z eps^q) sum g (eps v g)^{q-1} m
};

/// Reweights by G(sigma) = int h(sigma_r) dr and reparametrises each curve by
/// the inverse of t -> (1/G) int_0^t h(sigma_r) dr, with h = 1/max(eps, g).
ImproveResult improve_barycenter(const CurvePlan& plan, std::span<const double> ground, double q,
                                 double eps);

struct StretchReport {
  CurvePlan plan;
  double c_input = 0.0;        ///< max parametric barycenter of the input plan
  double bound = 0.0;          ///< c_input (1 + eps) / eps
  double c_min = 0.0;          ///< test-plan constant of the output plan
  double quadrature_term = 0.0;  ///< max_x TV_x / n_tau
  double measured_error = 0.0;   ///< max deviation from the exact tau-average
  bool within_bound = false;     ///< c_min <= bound + quadrature_term
};

/// Equal-weight average over tau_j = (j + 1/2) eps / n_tau of the plans
/// t -> gamma((t + tau) / (1 + eps)). Requires 0 < eps < 1/2.
StretchReport stretch_average(const CurvePlan& plan, std::span<const double> ground, double eps,
                              std::size_t n_tau);

/// Constant-speed representatives with equivalent curves merged.
CurvePlan constant_speed_pushforward(const CurvePlan& plan);

/// Column curves of a k-by-k grid built by build_grid_space(k, k): column i
/// stays 1/(2k) at the bottom and the top and reaches row j at (j + 1/2)/k.
std::vector<ParametricCurve> column_curves(const MetricMeasureSpace& grid, std::size_t k);

}  // namespace modcap
