#include "modcap/duality.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "modcap/error.hpp"
#include "modulus_detail.hpp"

namespace modcap {
namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  double total = 0.0;
  for (double& x : v) {
    x = std::max(0.0, x - theta);
    total += x;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    fail(ErrorCode::no_convergence, "simplex projection failed");
  }
  for (double& x : v) x /= total;
}

// F(lambda) = sum_x m_x (s_x/m_x)^q with s = sum lambda_i mu_i.
class ContentObjective {
 public:
  ContentObjective(std::span<const double> ground, std::vector<const DiscreteMeasure*> members, double q)
      : ground_(ground), members_(std::move(members)), q_(q), s_(ground.size()), w_(ground.size()) {}

  double evaluate(const std::vector<double>& lambda, std::vector<double>& grad) {
    std::fill(s_.begin(), s_.end(), 0.0);
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (lambda[i] == 0.0) continue;
      for (const Atom& a : members_[i]->atoms()) s_[a.index] += lambda[i] * a.weight;
    }
    double value = 0.0;
    for (std::size_t x = 0; x < ground_.size(); ++x) {
      if (s_[x] <= 0.0) {
        w_[x] = 0.0;
        continue;
      }
      const double g = s_[x] / ground_[x];
      const double gq1 = std::pow(g, q_ - 1.0);
      w_[x] = q_ * gq1;
      value += s_[x] * gq1;
    }
    grad.resize(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) grad[i] = members_[i]->integrate(w_);
    return value;
  }

  // Hessian restricted to the members in face, at the point of the last evaluate().
  Eigen::MatrixXd hessian(const std::vector<std::size_t>& face) const {
    std::vector<double> curv(ground_.size(), 0.0);
    for (std::size_t x = 0; x < ground_.size(); ++x) {
      if (s_[x] > 0.0) curv[x] = q_ * (q_ - 1.0) * std::pow(s_[x] / ground_[x], q_ - 2.0) / ground_[x];
    }
    const std::size_t n = face.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> dense(ground_.size(), 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      for (const Atom& at : members_[face[a]]->atoms()) dense[at.index] += at.weight * curv[at.index];
      for (std::size_t b = a; b < n; ++b) {
        const double v = members_[face[b]]->integrate(dense);
        h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      }
      for (const Atom& at : members_[face[a]]->atoms()) dense[at.index] = 0.0;
    }
    return h;
  }

 private:
  std::span<const double> ground_;
  std::vector<const DiscreteMeasure*> members_;
  double q_;
  std::vector<double> s_;
  std::vector<double> w_;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

Barycenter plan_barycenter(const MeasurePlan& plan, std::span<const double> ground, double q) {
  if (plan.support.size() != plan.probabilities.size()) {
    fail(ErrorCode::invalid_input, "plan support and probabilities differ in length");
  }
  double total = 0.0;
  for (double w : plan.probabilities) {
    if (!(w >= 0.0)) fail(ErrorCode::invalid_input, "plan probabilities must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    fail(ErrorCode::invalid_input, "plan probabilities sum to " + num(total) + ", not 1");
  }
  Barycenter out;
  out.g.assign(ground.size(), 0.0);
  for (std::size_t i = 0; i < plan.support.size(); ++i) {
    if (plan.probabilities[i] == 0.0) continue;
    for (const Atom& a : plan.support[i].atoms()) {
      if (a.index >= ground.size()) fail(ErrorCode::invalid_input, "plan charges an unknown point");
      if (ground[a.index] == 0.0) {
        fail(ErrorCode::no_barycenter,
             "plan charges point " + std::to_string(a.index) + " of zero reference measure");
      }
      out.g[a.index] += plan.probabilities[i] * a.weight;
    }
  }
  double norm = 0.0;
  for (std::size_t x = 0; x < ground.size(); ++x) {
    if (out.g[x] == 0.0) continue;
    out.g[x] /= ground[x];
    norm += ground[x] * std::pow(out.g[x], q);
  }
  out.c_q = std::pow(norm, 1.0 / q);
  return out;
}

ContentSolution solve_content(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                              Exponent p, const ContentOptions& opts) {
  const double q = p.q();
  ContentSolution sol;
  sol.weights.assign(measures.size(), 0.0);
  const detail::Prepared prep = detail::prepare_members(ground, measures);
  sol.vanishing_support = prep.vanishing;
  if (prep.has_zero) {
    sol.contains_zero_measure = true;
    sol.value = infinity;
    return sol;
  }
  if (prep.kept.empty()) {
    sol.barycenter.g.assign(ground.size(), 0.0);
    return sol;
  }

  double lightest = infinity;
  double heaviest = 0.0;
  std::vector<const DiscreteMeasure*> members;
  for (std::size_t i : prep.kept) {
    members.push_back(&measures[i]);
    lightest = std::min(lightest, measures[i].total());
    heaviest = std::max(heaviest, measures[i].total());
  }
  if (heaviest > 1e12 * lightest) {
    sol.warnings.push_back("member masses span more than 12 orders of magnitude (ratio " +
                           num(heaviest / lightest) + ")");
  }

  ContentObjective objective(ground, std::move(members), q);
  const std::size_t k = prep.kept.size();
  std::vector<double> lambda(k, 1.0 / static_cast<double>(k));
  std::vector<double> grad;
  double value = objective.evaluate(lambda, grad);

  constexpr std::size_t memory = 10;
  constexpr double armijo = 1e-4;
  std::deque<double> recent{value};
  double step = 1.0 / std::max(1e-300, *std::max_element(grad.begin(), grad.end()));
  std::vector<double> trial(k);
  std::vector<double> trial_grad;
  std::vector<double> direction(k);
  double gap = infinity;
  bool converged = false;
  std::size_t it = 0;
  for (; it < opts.max_iter; ++it) {
    const double gmin = *std::min_element(grad.begin(), grad.end());
    gap = std::inner_product(grad.begin(), grad.end(), lambda.begin(), 0.0) - gmin;
    if (gap <= opts.gap_tol * value) {
      converged = true;
      break;
    }
    for (std::size_t i = 0; i < k; ++i) direction[i] = lambda[i] - step * grad[i];
    project_simplex(direction);
    double slope = 0.0;
    double dmax = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      direction[i] -= lambda[i];
      slope += grad[i] * direction[i];
      dmax = std::max(dmax, std::abs(direction[i]));
    }
    if (dmax == 0.0 || slope >= 0.0) break;

    const double reference = *std::max_element(recent.begin(), recent.end());
    double t = 1.0;
    double trial_value = 0.0;
    bool accepted = false;
    while (t > 1e-30) {
      for (std::size_t i = 0; i < k; ++i) trial[i] = std::max(0.0, lambda[i] + t * direction[i]);
      trial_value = objective.evaluate(trial, trial_grad);
      if (trial_value <= reference + armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Values no longer resolve the decrease; minimise along the segment
      // using the sign of the directional derivative instead.
      auto derivative = [&](double tt) {
        for (std::size_t i = 0; i < k; ++i) trial[i] = std::max(0.0, lambda[i] + tt * direction[i]);
        trial_value = objective.evaluate(trial, trial_grad);
        return std::inner_product(trial_grad.begin(), trial_grad.end(), direction.begin(), 0.0);
      };
      double lo = 0.0;
      double hi = 1.0;
      if (derivative(1.0) > 0.0) {
        for (int b = 0; b < 60; ++b) {
          const double mid = 0.5 * (lo + hi);
          (derivative(mid) > 0.0 ? hi : lo) = mid;
        }
        if (lo == 0.0) break;
        derivative(lo);
      }
    }

    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double si = trial[i] - lambda[i];
      ss += si * si;
      sy += si * (trial_grad[i] - grad[i]);
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-30, 1e30) : step * 4.0;
    lambda.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    recent.push_back(value);
    if (recent.size() > memory) recent.pop_front();
  }
  if (!converged && it < opts.max_iter) {
    // The descent above only sees values; near the optimum the decrease drops
    // below rounding. Finish with Newton steps on the active face, judged by the gap.
    auto fw_gap = [&](const std::vector<double>& l, const std::vector<double>& g) {
      return std::inner_product(g.begin(), g.end(), l.begin(), 0.0) - *std::min_element(g.begin(), g.end());
    };
    for (int round = 0; round < 100; ++round) {
      value = objective.evaluate(lambda, grad);
      gap = fw_gap(lambda, grad);
      if (gap <= opts.gap_tol * value) {
        converged = true;
        break;
      }
      std::vector<std::size_t> face;
      const auto entering = static_cast<std::size_t>(std::min_element(grad.begin(), grad.end()) - grad.begin());
      for (std::size_t i = 0; i < k; ++i) {
        if (lambda[i] > 0.0 || i == entering) face.push_back(i);
      }
      Eigen::VectorXd d;
      for (;;) {
        const auto n = static_cast<Eigen::Index>(face.size());
        const Eigen::MatrixXd h = objective.hessian(face);
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
        kkt.topLeftCorner(n, n) = h;
        for (Eigen::Index a = 0; a < n; ++a) {
          kkt(a, n) = 1.0;
          kkt(n, a) = 1.0;
          rhs(a) = -grad[face[static_cast<std::size_t>(a)]];
        }
        d = kkt.completeOrthogonalDecomposition().solve(rhs).head(n);
        // members sitting at zero that Newton would push negative leave the face
        std::vector<std::size_t> kept_face;
        for (Eigen::Index a = 0; a < n; ++a) {
          const std::size_t i = face[static_cast<std::size_t>(a)];
          if (lambda[i] > 0.0 || d(a) >= 0.0) kept_face.push_back(i);
        }
        if (kept_face.size() == face.size() || kept_face.empty()) break;
        face.swap(kept_face);
      }
      double tmax = 1.0;
      for (std::size_t a = 0; a < face.size(); ++a) {
        const double da = d(static_cast<Eigen::Index>(a));
        if (da < 0.0) tmax = std::min(tmax, -lambda[face[a]] / da);
      }
      bool improved = false;
      for (double t = tmax; t > 1e-12 * tmax; t *= 0.5) {
        trial = lambda;
        for (std::size_t a = 0; a < face.size(); ++a) {
          const double da = d(static_cast<Eigen::Index>(a));
          trial[face[a]] = std::max(0.0, lambda[face[a]] + t * da);
          if (t == tmax && da < 0.0 && -lambda[face[a]] / da == tmax) trial[face[a]] = 0.0;
        }
        const double total = std::accumulate(trial.begin(), trial.end(), 0.0);
        for (double& w : trial) w /= total;
        const double trial_value = objective.evaluate(trial, trial_grad);
        if (fw_gap(trial, trial_grad) < gap) {
          lambda.swap(trial);
          grad.swap(trial_grad);
          value = trial_value;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
  }
  sol.iterations = it;
  sol.fw_gap = gap / value;
  // Stalls at rounding level are accepted; anything looser is reported.
  if (!converged && it == opts.max_iter) {
    sol.warnings.push_back("iteration budget exhausted with relative Frank-Wolfe gap " + num(sol.fw_gap));
  } else if (!converged && sol.fw_gap > 1e-10) {
    fail(ErrorCode::no_convergence, "content descent stopped after " + std::to_string(it) +
                                        " iterations with relative Frank-Wolfe gap " + num(sol.fw_gap));
  }

  // Weights at rounding level are projection residue, not plan mass.
  for (double& w : lambda) {
    if (w < 64.0 * std::numeric_limits<double>::epsilon()) w = 0.0;
  }
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double w = lambda[j] / total;
    sol.weights[prep.kept[j]] = w;
    if (w > 0.0) {
      sol.plan.support.push_back(measures[prep.kept[j]]);
      sol.plan.probabilities.push_back(w);
      sol.plan.members.push_back(prep.kept[j]);
    }
  }
  // Renormalise the stored plan so that its probabilities sum to 1 up to rounding.
  const double plan_total =
      std::accumulate(sol.plan.probabilities.begin(), sol.plan.probabilities.end(), 0.0);
  for (double& w : sol.plan.probabilities) w /= plan_total;
  sol.barycenter = plan_barycenter(sol.plan, ground, q);
  sol.value = 1.0 / sol.barycenter.c_q;
  return sol;
}

DualityCertificate check_duality(std::span<const double> ground, const ModulusSolution& primal,
                                 const ContentSolution& dual, Exponent p) {
  DualityCertificate cert;
  cert.mod_root = std::pow(primal.value, 1.0 / p.p());
  cert.content = dual.value;
  if (std::isinf(cert.mod_root) || std::isinf(cert.content)) {
    cert.gap = cert.mod_root == cert.content ? 0.0 : infinity;
  } else {
    cert.gap = std::abs(cert.mod_root - cert.content);
  }
  cert.tolerance = 1e-6 * std::max(1.0, std::isfinite(cert.mod_root) ? cert.mod_root : 1.0);
  cert.identity_ok = cert.gap <= cert.tolerance;

  // Weak duality for the pair: eta(Sigma) <= int int f dmu deta <= c_q ||f||_p.
  if (std::isinf(primal.value) || dual.plan.support.empty()) {
    cert.weak_ok = true;
    return cert;
  }
  double norm = 0.0;
  for (std::size_t x = 0; x < ground.size(); ++x) norm += ground[x] * std::pow(primal.f[x], p.p());
  norm = std::pow(norm, 1.0 / p.p());
  for (std::size_t i = 0; i < dual.plan.support.size(); ++i) {
    cert.weak_lhs += dual.plan.probabilities[i];
    cert.weak_mid += dual.plan.probabilities[i] * dual.plan.support[i].integrate(primal.f);
  }
  cert.weak_rhs = dual.barycenter.c_q * norm;
  cert.weak_ok = cert.weak_lhs <= cert.weak_mid + 1e-9 &&
                 cert.weak_mid <= cert.weak_rhs * (1.0 + 1e-12) + 1e-12;
  return cert;
}

OptimalityReport check_optimality_conditions(std::span<const double> ground,
                                             std::span<const DiscreteMeasure> measures,
                                             const ModulusSolution& primal,
                                             const ContentSolution& dual, Exponent p, double tol,
                                             std::span<const double> candidate) {
  (void)measures;
  OptimalityReport rep;
  if (!std::isfinite(primal.value) || primal.value == 0.0 || dual.plan.support.empty()) return rep;
  const double pp = p.p();
  std::span<const double> f = primal.f;

  for (std::size_t i = 0; i < dual.plan.support.size(); ++i) {
    if (dual.plan.probabilities[i] <= 0.0) continue;
    rep.saturation =
        std::max(rep.saturation, std::abs(dual.plan.support[i].integrate(f) - 1.0));
  }
  if (rep.saturation > tol) {
    rep.violations.push_back("plan charges an unsaturated member (residual " + num(rep.saturation) + ")");
  }

  double norm_p = 0.0;
  for (std::size_t x = 0; x < ground.size(); ++x) norm_p += ground[x] * std::pow(f[x], pp);
  for (std::size_t x = 0; x < ground.size(); ++x) {
    if (ground[x] == 0.0) continue;
    const double target = std::pow(f[x], pp - 1.0) / norm_p;
    rep.barycenter = std::max(rep.barycenter, std::abs(dual.barycenter.g[x] - target));
  }
  if (rep.barycenter > tol) {
    rep.violations.push_back("barycenter differs from f^{p-1}/||f||_p^p (residual " +
                             num(rep.barycenter) + ")");
  }

  std::span<const double> h = candidate.empty() ? f : candidate;
  bool saturates = true;
  for (std::size_t i = 0; i < dual.plan.support.size(); ++i) {
    saturates = saturates && dual.plan.support[i].integrate(h) >= 1.0 - tol;
  }
  if (saturates) {
    for (std::size_t x = 0; x < ground.size(); ++x) rep.converse_norm += ground[x] * std::pow(h[x], pp);
    rep.converse_bound = std::pow(dual.value, pp);
    if (rep.converse_norm < rep.converse_bound - tol * std::max(1.0, rep.converse_bound)) {
      rep.violations.push_back("density saturating the plan has energy " + num(rep.converse_norm) +
                               " below C^p = " + num(rep.converse_bound));
    }
  }
  return rep;
}

ContentSolution content_of_curve_family(const MetricMeasureSpace& space,
                                        std::span<const ParametricCurve> curves, Exponent p,
                                        CurveMap map, const ContentOptions& opts) {
  std::vector<DiscreteMeasure> measures;
  measures.reserve(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (is_constant(curves[i])) {
      fail(ErrorCode::constant_curve, "curve " + std::to_string(i) + " is constant");
    }
    measures.push_back(map == CurveMap::j ? j_map(curves[i]) : m_map(curves[i]));
  }
  return solve_content(space.measure(), measures, p, opts);
}

}  // namespace modcap
