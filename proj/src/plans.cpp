#include "modcap/plans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "modcap/error.hpp"

namespace modcap {
namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

std::vector<double> sorted_unique(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  return out;
}

// Occupation breakpoints of every curve, with 0 and 1.
std::vector<double> breakpoints(const CurvePlan& plan) {
  std::vector<double> ts{0.0, 1.0};
  for (const ParametricCurve& c : plan.curves()) {
    for (const OccupationPiece& piece : c.occupation()) ts.push_back(piece.t1);
  }
  return sorted_unique(std::move(ts), 0.0);
}

// Breakpoints and interval midpoints: the marginal is constant between
// consecutive breakpoints.
std::vector<double> evaluation_times(const CurvePlan& plan, std::span<const double> extra) {
  const std::vector<double> bp = breakpoints(plan);
  std::vector<double> ts(bp);
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) ts.push_back(0.5 * (bp[i] + bp[i + 1]));
  for (double t : extra) ts.push_back(std::clamp(t, 0.0, 1.0));
  return sorted_unique(std::move(ts), 0.0);
}

double position_fraction(const Segment& seg, double w) {
  if (w <= 0.0) return seg.s0;
  if (w >= 1.0) return seg.s1;
  double s = seg.s0 + w * (seg.s1 - seg.s0);
  if (std::abs(s) < 1e-13) s = 0.0;
  if (std::abs(1.0 - s) < 1e-13) s = 1.0;
  return s;
}

// Splits the curve at `cuts` (sorted, containing 0, 1 and every vertex time);
// piece k runs over [cuts[k], cuts[k+1]].
std::vector<Segment> split_curve(const ParametricCurve& curve, std::span<const double> cuts) {
  auto seg = curve.segments();
  auto t = curve.times();
  std::vector<Segment> out;
  out.reserve(cuts.size());
  std::size_t i = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    while (i + 1 < seg.size() && t[i + 1] <= lo) ++i;
    Segment piece = seg[i];
    if (piece.edge != no_edge) {
      const double dt = t[i + 1] - t[i];
      piece.s0 = position_fraction(seg[i], (lo - t[i]) / dt);
      piece.s1 = position_fraction(seg[i], (hi - t[i]) / dt);
    }
    out.push_back(piece);
  }
  return out;
}

}  // namespace

CurvePlan::CurvePlan(std::vector<ParametricCurve> curves, std::vector<double> probabilities)
    : curves_(std::move(curves)), probabilities_(std::move(probabilities)) {
  if (curves_.size() != probabilities_.size()) {
    fail(ErrorCode::invalid_input, "plan needs one probability per curve");
  }
  double total = 0.0;
  for (double w : probabilities_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorCode::invalid_input, "plan probabilities must be finite and nonnegative");
    }
    total += w;
  }
  if (!curves_.empty() && std::abs(total - 1.0) > 1e-12) {
    fail(ErrorCode::invalid_input, "plan probabilities sum to " + std::to_string(total));
  }
  for (const ParametricCurve& c : curves_) {
    lengths_.push_back(length(c));
    lipschitz_.push_back(lipschitz_bound(c));
  }
}

CurvePlan CurvePlan::uniform(std::vector<ParametricCurve> curves) {
  const std::size_t n = curves.size();
  return CurvePlan(std::move(curves), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
}

ParametricBarycenter parametric_barycenter(const CurvePlan& plan, std::span<const double> ground,
                                           double q) {
  ParametricBarycenter out;
  out.h.assign(ground.size(), 0.0);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const double w = plan.probabilities()[i];
    const DiscreteMeasure occ = m_map(plan.curves()[i]);
    for (const Atom& a : occ.atoms()) {
      if (a.index >= ground.size()) fail(ErrorCode::invalid_input, "curve leaves the space");
      if (ground[a.index] == 0.0 && w > 0.0) {
        fail(ErrorCode::no_barycenter,
             "plan spends time on point " + std::to_string(a.index) + " of zero measure");
      }
      out.h[a.index] += w * a.weight;
    }
  }
  double norm = 0.0;
  for (std::size_t x = 0; x < ground.size(); ++x) {
    if (out.h[x] == 0.0) continue;
    out.h[x] /= ground[x];
    out.sup = std::max(out.sup, out.h[x]);
    norm += ground[x] * std::pow(out.h[x], q);
  }
  out.norm_q = std::pow(norm, 1.0 / q);
  return out;
}

double q_energy(const CurvePlan& plan, double q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) sum += plan.probabilities()[i] * energy(plan.curves()[i], q);
  return sum;
}

std::vector<double> time_marginal(const CurvePlan& plan, std::size_t n_points, double t) {
  std::vector<double> mass(n_points, 0.0);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    mass[plan.curves()[i].at(t).nearest()] += plan.probabilities()[i];
  }
  return mass;
}

TestPlanReport testplan_check(const CurvePlan& plan, std::span<const double> ground,
                              std::span<const double> extra_times) {
  TestPlanReport rep;
  const std::vector<double> times = evaluation_times(plan, extra_times);
  rep.evaluated_times = times.size();
  for (double t : times) {
    const std::vector<double> mass = time_marginal(plan, ground.size(), t);
    for (std::size_t x = 0; x < mass.size(); ++x) {
      if (mass[x] == 0.0) continue;
      const double density = ground[x] == 0.0 ? infinity : mass[x] / ground[x];
      if (density > rep.c_min) {
        rep.c_min = density;
        rep.worst_time = t;
        rep.worst_point = x;
      }
    }
  }
  rep.is_test_plan = std::isfinite(rep.c_min);
  return rep;
}

ImproveResult improve_barycenter(const CurvePlan& plan, std::span<const double> ground, double q,
                                 double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) fail(ErrorCode::invalid_input, "eps must be positive");
  if (plan.empty()) fail(ErrorCode::invalid_input, "plan has no curves");
  for (const ParametricCurve& c : plan.curves()) {
    if (!std::isfinite(lipschitz_bound(c))) {
      fail(ErrorCode::invalid_input, "plan contains a curve with unbounded speed");
    }
  }
  ImproveResult out;
  out.g = parametric_barycenter(plan, ground, q).h;
  out.weight.resize(ground.size());
  for (std::size_t x = 0; x < ground.size(); ++x) out.weight[x] = 1.0 / std::max(eps, out.g[x]);

  std::vector<ParametricCurve> curves;
  std::vector<double> mass;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const ParametricCurve& c = plan.curves()[i];
    const std::vector<OccupationPiece> occ = c.occupation();
    double big_g = 0.0;
    for (const OccupationPiece& piece : occ) big_g += out.weight[piece.node] * (piece.t1 - piece.t0);

    std::vector<double> cuts(c.times().begin(), c.times().end());
    for (const OccupationPiece& piece : occ) cuts.push_back(piece.t1);
    cuts = sorted_unique(std::move(cuts), 1e-15);
    cuts.back() = 1.0;

    // t_sigma at each cut: piecewise linear, slope h(occupied node) / G.
    std::vector<double> times(cuts.size(), 0.0);
    double integral = 0.0;
    for (std::size_t k = 1; k < cuts.size(); ++k) {
      const PointId x = c.at(0.5 * (cuts[k - 1] + cuts[k])).nearest();
      integral += out.weight[x] * (cuts[k] - cuts[k - 1]);
      times[k] = integral / big_g;
    }
    times.front() = 0.0;
    times.back() = 1.0;
    curves.emplace_back(split_curve(c, cuts), std::move(times));
    mass.push_back(plan.probabilities()[i] * big_g);
  }
  out.z = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& w : mass) w /= out.z;
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& w : mass) w /= total;
  out.plan = CurvePlan(std::move(curves), std::move(mass));

  out.barycenter_sup = parametric_barycenter(out.plan, ground, q).sup;
  out.energy = q_energy(out.plan, q);
  double lip = 0.0;
  for (double l : plan.lipschitz()) lip = std::max(lip, l);
  double sum = 0.0;
  for (std::size_t x = 0; x < ground.size(); ++x) {
    sum += out.g[x] * std::pow(std::max(eps, out.g[x]), q - 1.0) * ground[x];
  }
  out.energy_bound = std::pow(lip, q) / (out.z * std::pow(eps, q)) * sum;
  return out;
}

StretchReport stretch_average(const CurvePlan& plan, std::span<const double> ground, double eps,
                              std::size_t n_tau) {
  if (!(eps > 0.0 && eps < 0.5)) fail(ErrorCode::invalid_input, "eps must lie in (0, 1/2)");
  if (n_tau == 0) fail(ErrorCode::invalid_input, "n_tau must be positive");
  if (plan.empty()) fail(ErrorCode::invalid_input, "plan has no curves");
  StretchReport rep;
  const std::size_t n = ground.size();
  rep.c_input = parametric_barycenter(plan, ground, 2.0).sup;
  rep.bound = rep.c_input * (1.0 + eps) / eps;

  std::vector<ParametricCurve> curves;
  std::vector<double> probs;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (std::size_t j = 0; j < n_tau; ++j) {
      const double tau = (static_cast<double>(j) + 0.5) * eps / static_cast<double>(n_tau);
      curves.push_back(stretch(plan.curves()[i], tau / (1.0 + eps), (1.0 + tau) / (1.0 + eps)));
      probs.push_back(plan.probabilities()[i] / static_cast<double>(n_tau));
    }
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& w : probs) w /= total;
  rep.plan = CurvePlan(std::move(curves), std::move(probs));

  // Input marginal density phi_x(u): values on breakpoints and on the open
  // intervals between them, and its running integral.
  const std::vector<double> u = breakpoints(plan);
  const std::size_t cells = u.size() - 1;
  std::vector<std::vector<double>> inside(cells);
  std::vector<std::vector<double>> prefix(u.size(), std::vector<double>(n, 0.0));
  std::vector<double> variation(n, 0.0);
  auto density = [&](double t) {
    std::vector<double> d = time_marginal(plan, n, t);
    for (std::size_t x = 0; x < n; ++x) d[x] = d[x] == 0.0 ? 0.0 : d[x] / ground[x];
    return d;
  };
  std::vector<double> previous = density(0.0);
  for (std::size_t k = 0; k < cells; ++k) {
    inside[k] = density(0.5 * (u[k] + u[k + 1]));
    const std::vector<double> right = density(u[k + 1]);
    for (std::size_t x = 0; x < n; ++x) {
      variation[x] += std::abs(inside[k][x] - previous[x]) + std::abs(right[x] - inside[k][x]);
      prefix[k + 1][x] = prefix[k][x] + inside[k][x] * (u[k + 1] - u[k]);
    }
    previous = right;
  }
  rep.quadrature_term = *std::max_element(variation.begin(), variation.end()) / static_cast<double>(n_tau);

  auto integral = [&](std::size_t x, double s) {
    s = std::clamp(s, 0.0, 1.0);
    std::size_t k = static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), s) - u.begin());
    k = std::clamp<std::size_t>(k, 1, cells) - 1;
    return prefix[k][x] + inside[k][x] * (s - u[k]);
  };

  // Same evaluation set as testplan_check, shared with the error measurement.
  const double scale = (1.0 + eps) / eps;
  for (double t : evaluation_times(rep.plan, {})) {
    const std::vector<double> mass = time_marginal(rep.plan, n, t);
    for (std::size_t x = 0; x < n; ++x) {
      if (ground[x] == 0.0) {
        if (mass[x] > 0.0) rep.c_min = infinity;
        continue;
      }
      rep.c_min = std::max(rep.c_min, mass[x] / ground[x]);
      const double exact =
          scale * (integral(x, (t + eps) / (1.0 + eps)) - integral(x, t / (1.0 + eps)));
      rep.measured_error = std::max(rep.measured_error, std::abs(mass[x] / ground[x] - exact));
    }
  }
  rep.within_bound = rep.c_min <= rep.bound + rep.quadrature_term;
  return rep;
}

CurvePlan constant_speed_pushforward(const CurvePlan& plan) {
  std::vector<ParametricCurve> curves;
  std::vector<double> probs;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (is_constant(plan.curves()[i])) {
      fail(ErrorCode::constant_curve, "plan contains constant curve " + std::to_string(i));
    }
    ParametricCurve canon = constant_speed_reparam(plan.curves()[i]);
    bool merged = false;
    for (std::size_t j = 0; j < curves.size() && !merged; ++j) {
      if (curves_equivalent(curves[j], canon)) {
        probs[j] += plan.probabilities()[i];
        merged = true;
      }
    }
    if (!merged) {
      curves.push_back(std::move(canon));
      probs.push_back(plan.probabilities()[i]);
    }
  }
  return CurvePlan(std::move(curves), std::move(probs));
}

std::vector<ParametricCurve> column_curves(const MetricMeasureSpace& grid, std::size_t k) {
  if (k < 2) fail(ErrorCode::invalid_input, "column plan needs k >= 2");
  if (grid.size() != k * k) fail(ErrorCode::invalid_input, "space is not a k-by-k grid");
  const double kk = static_cast<double>(k);
  std::vector<double> times{0.0};
  for (std::size_t j = 0; j < k; ++j) times.push_back((static_cast<double>(j) + 0.5) / kk);
  times.push_back(1.0);
  std::vector<ParametricCurve> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<PointId> nodes{i};
    for (std::size_t j = 0; j < k; ++j) nodes.push_back(j * k + i);
    nodes.push_back(nodes.back());
    out.push_back(ParametricCurve::from_nodes(grid, nodes, times));
  }
  return out;
}

}  // namespace modcap
