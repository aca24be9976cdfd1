#include "modcap/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "modcap/error.hpp"
#include "modulus_detail.hpp"

namespace modcap {
namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

// Concave dual of the modulus program restricted to the kept members:
//   g(lambda) = sum lambda_i - (p-1) sum_x m_x (s_x / (p m_x))^{p/(p-1)},
//   s = sum lambda_i mu_i,  f_x = (s_x / (p m_x))^{1/(p-1)},
//   dg/dlambda_i = 1 - <f, mu_i>.
class DualFunction {
 public:
  DualFunction(std::span<const double> ground, std::vector<const DiscreteMeasure*> members, double p)
      : ground_(ground), members_(std::move(members)), p_(p), s_(ground.size()) {}

  struct Point {
    std::vector<double> lambda;
    std::vector<double> f;
    std::vector<double> grad;
    double value = 0.0;
    double energy = 0.0;  // sum m f^p
  };

  void evaluate(Point& pt) {
    std::fill(s_.begin(), s_.end(), 0.0);
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (pt.lambda[i] == 0.0) continue;
      for (const Atom& a : members_[i]->atoms()) s_[a.index] += pt.lambda[i] * a.weight;
    }
    pt.f.assign(ground_.size(), 0.0);
    double energy = 0.0;
    const double inv = 1.0 / (p_ - 1.0);
    for (std::size_t x = 0; x < ground_.size(); ++x) {
      if (s_[x] <= 0.0) continue;
      const double u = s_[x] / (p_ * ground_[x]);
      const double fx = std::pow(u, inv);
      pt.f[x] = fx;
      energy += ground_[x] * u * fx;
    }
    double lambda_sum = 0.0;
    pt.grad.resize(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) {
      lambda_sum += pt.lambda[i];
      pt.grad[i] = 1.0 - members_[i]->integrate(pt.f);
    }
    pt.energy = energy;
    pt.value = lambda_sum - (p_ - 1.0) * energy;
  }

  std::size_t size() const { return members_.size(); }

 private:
  std::span<const double> ground_;
  std::vector<const DiscreteMeasure*> members_;
  double p_;
  std::vector<double> s_;
};

std::string format_gap(double gap) {
  std::ostringstream os;
  os.precision(3);
  os << gap;
  return os.str();
}

}  // namespace

Exponent::Exponent(double p) : p_(p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    fail(ErrorCode::invalid_input, "exponent p must be a finite number greater than 1");
  }
}

Exponent Exponent::from_conjugate(double q) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    fail(ErrorCode::invalid_input, "conjugate exponent q must be a finite number greater than 1");
  }
  return Exponent(q / (q - 1.0));
}

ModulusSolution solve_modulus(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                              Exponent exponent, const SolveOptions& opts,
                              std::span<const double> warm_start) {
  const double p = exponent.p();
  ModulusSolution sol;
  sol.multipliers.assign(measures.size(), 0.0);
  sol.f.assign(ground.size(), 0.0);

  const detail::Prepared prep = detail::prepare_members(ground, measures);
  sol.vanishing_support = prep.vanishing;
  if (prep.has_zero) {
    sol.contains_zero_measure = true;
    sol.value = infinity;
    sol.dual_value = infinity;
    return sol;
  }
  if (measures.empty()) sol.empty_family = true;
  if (prep.kept.empty()) return sol;

  std::vector<const DiscreteMeasure*> members;
  for (std::size_t i : prep.kept) members.push_back(&measures[i]);
  DualFunction dual(ground, std::move(members), p);
  const std::size_t k = dual.size();

  DualFunction::Point cur;
  cur.lambda.assign(k, 1.0 / static_cast<double>(k));
  if (warm_start.size() == measures.size()) {
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      cur.lambda[j] = std::max(0.0, warm_start[prep.kept[j]]);
      any = any || cur.lambda[j] > 0.0;
    }
    if (!any) std::fill(cur.lambda.begin(), cur.lambda.end(), 1.0 / static_cast<double>(k));
  }
  dual.evaluate(cur);

  // Best feasible density seen so far (rescaled so that min <f, mu_i> = 1)
  // and the matching multipliers.
  double best_upper = infinity;
  double best_lower = -infinity;
  std::vector<double> best_f;
  std::vector<double> best_lambda;

  constexpr std::size_t memory = 10;
  constexpr double armijo = 1e-4;
  constexpr double step_min = 1e-14;
  constexpr double step_max = 1e14;
  std::deque<double> recent{cur.value};
  double step = 1.0;

  DualFunction::Point trial;
  std::vector<double> direction(k);
  bool converged = false;
  bool stalled = false;
  std::size_t it = 0;
  for (; it < opts.max_iter; ++it) {
    const double c = 1.0 - *std::max_element(cur.grad.begin(), cur.grad.end());
    if (c > 0.0) {
      const double upper = cur.energy / std::pow(c, p);
      if (upper < best_upper) {
        best_upper = upper;
        best_f = cur.f;
        for (double& v : best_f) v /= c;
        best_lambda = cur.lambda;
        const double shrink = std::pow(c, p - 1.0);
        for (double& v : best_lambda) v /= shrink;
      }
    }
    best_lower = std::max(best_lower, cur.value);
    if (best_upper < infinity && best_upper - best_lower <= opts.gap_tol * best_upper) {
      converged = true;
      break;
    }
    if (stalled) break;

    double slope = 0.0;
    double dmax = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      direction[i] = std::max(0.0, cur.lambda[i] + step * cur.grad[i]) - cur.lambda[i];
      slope += cur.grad[i] * direction[i];
      dmax = std::max(dmax, std::abs(direction[i]));
    }
    if (dmax == 0.0) {
      // Projected gradient vanishes: lambda is a maximiser.
      stalled = true;
      continue;
    }

    const double reference = *std::min_element(recent.begin(), recent.end());
    double t = 1.0;
    trial.lambda.resize(k);
    while (true) {
      for (std::size_t i = 0; i < k; ++i) {
        trial.lambda[i] = std::max(0.0, cur.lambda[i] + t * direction[i]);
      }
      dual.evaluate(trial);
      if (trial.value >= reference + armijo * t * slope) break;
      t *= 0.5;
      if (t < 1e-30) {
        stalled = true;
        break;
      }
    }
    if (stalled) continue;

    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double si = trial.lambda[i] - cur.lambda[i];
      const double yi = cur.grad[i] - trial.grad[i];
      ss += si * si;
      sy += si * yi;
    }
    step = sy > 0.0 ? std::clamp(ss / sy, step_min, step_max) : step_max;
    std::swap(cur, trial);
    recent.push_back(cur.value);
    if (recent.size() > memory) recent.pop_front();
  }

  sol.iterations = it;
  if (best_upper == infinity) {
    fail(ErrorCode::no_convergence, "dual ascent never produced a feasible density");
  }
  const double gap = (best_upper - best_lower) / best_upper;
  sol.primal_dual_gap = std::max(gap, 0.0);
  // A stall within a few ulps of the target still counts as converged.
  if (!converged && gap > std::max(opts.gap_tol, 64 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorCode::no_convergence,
         "dual ascent stopped after " + std::to_string(it) + " iterations with relative gap " +
             format_gap(gap));
  }

  sol.value = best_upper;
  sol.dual_value = best_lower;
  sol.f = std::move(best_f);
  for (std::size_t j = 0; j < k; ++j) {
    sol.multipliers[prep.kept[j]] = best_lambda[j];
    if (best_lambda[j] > 0.0) sol.active_set.push_back(prep.kept[j]);
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  return sol;
}

ModulusSolution solve_modulus_explicit(const MetricMeasureSpace& space,
                                       std::span<const DiscreteMeasure> measures, Exponent p,
                                       const SolveOptions& opts) {
  return solve_modulus(space.measure(), measures, p, opts);
}

ModulusSolution solve_modulus_paths(const MetricMeasureSpace& space, const PathMembers& family,
                                    Exponent p, const SolveOptions& opts) {
  MeasureFamily wrapped{"paths", family};
  validate_family(wrapped, space);
  const Ground ground = ground_of(wrapped);
  const std::span<const double> m = ground_measure(space, ground);

  std::vector<double> density(m.size(), 1.0);
  auto first = cheapest_path(space, family, density);
  ModulusSolution sol;
  sol.ground = ground;
  if (!first) {
    sol.empty_family = true;
    sol.f.assign(m.size(), 0.0);
    return sol;
  }

  std::vector<PointPath> paths{first->nodes};
  std::vector<DiscreteMeasure> measures{path_measure(space, first->nodes, family.quadrature)};
  std::vector<double> warm;
  std::size_t total_iterations = 0;
  const std::size_t max_rounds = 100000;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    ModulusSolution restricted = solve_modulus(m, measures, p, opts, warm);
    total_iterations += restricted.iterations;
    if (restricted.contains_zero_measure || restricted.active_set.empty()) {
      restricted.ground = ground;
      restricted.paths = std::move(paths);
      restricted.measures = std::move(measures);
      restricted.iterations = total_iterations;
      return restricted;
    }
    auto worst = cheapest_path(space, family, restricted.f);
    if (!worst || worst->cost >= 1.0 - opts.feas_tol) {
      restricted.ground = ground;
      restricted.paths = std::move(paths);
      restricted.measures = std::move(measures);
      restricted.iterations = total_iterations;
      return restricted;
    }
    if (std::find(paths.begin(), paths.end(), worst->nodes) != paths.end()) {
      fail(ErrorCode::no_convergence,
           "separation oracle returned a path already in the working set (cost " +
               format_gap(worst->cost) + ")");
    }
    paths.push_back(worst->nodes);
    measures.push_back(path_measure(space, worst->nodes, family.quadrature));
    warm = restricted.multipliers;
    warm.push_back(0.0);
  }
  fail(ErrorCode::no_convergence, "constraint generation exceeded its round limit");
}

double single_member_modulus(std::span<const double> ground, const DiscreteMeasure& mu, Exponent p) {
  if (mu.is_zero()) return infinity;
  double norm_q = 0.0;
  const double q = p.q();
  for (const Atom& a : mu.atoms()) {
    if (ground[a.index] == 0.0) return 0.0;
    norm_q += std::pow(a.weight, q) * std::pow(ground[a.index], 1.0 - q);
  }
  return std::pow(norm_q, -(p.p() - 1.0));
}

KktResiduals kkt_residuals(std::span<const double> ground, std::span<const DiscreteMeasure> measures,
                           const ModulusSolution& sol, Exponent p) {
  KktResiduals r;
  if (!std::isfinite(sol.value)) return r;
  std::vector<double> s(ground.size(), 0.0);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const double lam = sol.multipliers[i];
    if (lam == 0.0) continue;
    for (const Atom& a : measures[i].atoms()) s[a.index] += lam * a.weight;
  }
  for (std::size_t x = 0; x < ground.size(); ++x) {
    if (ground[x] == 0.0) continue;
    const double lhs = p.p() * ground[x] * std::pow(sol.f[x], p.p() - 1.0);
    r.stationarity = std::max(r.stationarity, std::abs(lhs - s[x]));
  }
  const detail::Prepared prep = detail::prepare_members(ground, measures);
  for (std::size_t i : prep.kept) {
    const double integral = measures[i].integrate(sol.f);
    r.complementarity = std::max(r.complementarity, sol.multipliers[i] * (integral - 1.0));
    r.infeasibility = std::max(r.infeasibility, 1.0 - integral);
  }
  return r;
}

std::vector<std::size_t> saturated_subfamily(const ModulusSolution& sol,
                                             std::span<const DiscreteMeasure> measures,
                                             double sat_tol) {
  std::vector<std::size_t> out;
  if (!std::isfinite(sol.value)) return out;
  const std::span<const double> f = sol.f;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    if (measures[i].is_zero() || measures[i].max_index() >= f.size()) continue;
    if (std::find(sol.vanishing_support.begin(), sol.vanishing_support.end(), i) !=
        sol.vanishing_support.end()) {
      continue;
    }
    if (std::abs(measures[i].integrate(f) - 1.0) <= sat_tol) out.push_back(i);
  }
  return out;
}

PropertiesReport mod_properties_check(const MetricMeasureSpace& space,
                                      std::span<const DiscreteMeasure> a,
                                      std::span<const DiscreteMeasure> b, Exponent p,
                                      const SolveOptions& opts) {
  constexpr double tol = 1e-7;
  constexpr double null_level = 1e-10;
  auto mod = [&](std::span<const DiscreteMeasure> fam) {
    return solve_modulus_explicit(space, fam, p, opts).value;
  };
  auto slack = [](double v) { return tol * std::max(1.0, std::isfinite(v) ? v : 1.0); };

  PropertiesReport rep;
  std::vector<DiscreteMeasure> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  rep.mod_a = mod(a);
  rep.mod_b = mod(b);
  rep.mod_union = mod(all);

  if (rep.mod_a > rep.mod_union + slack(rep.mod_union) ||
      rep.mod_b > rep.mod_union + slack(rep.mod_union)) {
    rep.violations.push_back("monotonicity");
  }
  const double root_sum = std::pow(rep.mod_a, 1.0 / p.p()) + std::pow(rep.mod_b, 1.0 / p.p());
  const double root_union = std::pow(rep.mod_union, 1.0 / p.p());
  if (root_union > root_sum + slack(root_sum)) rep.violations.push_back("subadditivity");

  const std::size_t n = all.size();
  for (std::size_t part = 1; part <= 3; ++part) {
    const std::size_t len = (n * part + 2) / 3;
    rep.chain.push_back(mod(std::span<const DiscreteMeasure>(all).first(len)));
  }
  for (std::size_t i = 1; i < rep.chain.size(); ++i) {
    if (rep.chain[i - 1] > rep.chain[i] + slack(rep.chain[i])) {
      rep.violations.push_back("continuity from below (chain not monotone)");
    }
  }
  if (!(std::abs(rep.chain.back() - rep.mod_union) <= slack(rep.mod_union)) &&
      !(std::isinf(rep.chain.back()) && std::isinf(rep.mod_union))) {
    rep.violations.push_back("continuity from below (limit differs)");
  }

  auto check_null = [&](std::span<const DiscreteMeasure> fam, double value, const char* label) {
    if (value > null_level) return;
    for (double c : {0.5, 2.0}) {
      std::vector<DiscreteMeasure> scaled;
      for (const DiscreteMeasure& mu : fam) scaled.push_back(mu.scaled(c));
      if (mod(scaled) > null_level) {
        rep.violations.push_back(std::string("scaling of null family ") + label);
      }
    }
  };
  check_null(a, rep.mod_a, "A");
  check_null(b, rep.mod_b, "B");
  return rep;
}

}  // namespace modcap
