#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "modcap/curves.hpp"
#include "modcap/duality.hpp"
#include "modcap/error.hpp"
#include "modcap/family.hpp"
#include "modcap/gradients.hpp"
#include "modcap/instance.hpp"
#include "modcap/modulus.hpp"
#include "modcap/plans.hpp"
#include "oracles.hpp"

using namespace modcap;

namespace acceptance {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(u01(rng) * static_cast<double>(n)));
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Random walk with occasional stays and random increasing times; at least
// one move.
ParametricCurve random_walk(const MetricMeasureSpace& space, std::mt19937_64& rng, std::size_t steps,
                            bool uniform_times = false, double stay_prob = 0.2) {
  std::vector<PointId> nodes{pick(rng, space.size())};
  for (std::size_t i = 0; i < steps; ++i) {
    const auto nb = space.neighbors(nodes.back());
    if (i > 0 && u01(rng) < stay_prob) {
      nodes.push_back(nodes.back());
    } else {
      nodes.push_back(nb[pick(rng, nb.size())].to);
    }
  }
  std::vector<double> times{0.0};
  if (uniform_times) {
    for (std::size_t i = 1; i < nodes.size(); ++i) times.push_back(static_cast<double>(i) / steps);
  } else {
    std::vector<double> gaps;
    double total = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      gaps.push_back(0.05 + u01(rng));
      total += gaps.back();
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      acc += gaps[i];
      times.push_back(acc / total);
    }
  }
  times.back() = 1.0;
  return ParametricCurve::from_nodes(space, nodes, times);
}

CurvePlan random_plan(const MetricMeasureSpace& space, std::mt19937_64& rng, std::size_t n_curves,
                      std::size_t max_steps) {
  std::vector<ParametricCurve> curves;
  std::vector<double> probs;
  double total = 0.0;
  for (std::size_t i = 0; i < n_curves; ++i) {
    curves.push_back(random_walk(space, rng, 1 + pick(rng, max_steps)));
    probs.push_back(0.2 + u01(rng));
    total += probs.back();
  }
  for (double& w : probs) w /= total;
  return CurvePlan(std::move(curves), std::move(probs));
}

std::vector<PointId> grid_column(std::size_t n, std::size_t i) {
  std::vector<PointId> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back(j * n + i);
  return out;
}

// ---------------------------------------------------------------------------

Outcome remark_instance() {
  Outcome o{1, "two half-intervals and the full interval: Mod = 2^p, f = 2, saturated {left,right}", true, "", 0};
  const auto space = build_grid_space(200, 1);
  std::vector<Atom> left, right, full;
  for (PointId x = 0; x < 200; ++x) {
    (x < 100 ? left : right).push_back({x, space.measure(x)});
    full.push_back({x, space.measure(x)});
  }
  const std::vector<DiscreteMeasure> fam{DiscreteMeasure::from_atoms(left), DiscreteMeasure::from_atoms(right),
                                         DiscreteMeasure::from_atoms(full)};
  std::ostringstream d;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto t0 = Clock::now();
    const ModulusSolution sol = solve_modulus_explicit(space, fam, Exponent(p));
    const double dt = seconds_since(t0);
    const double rel = std::abs(sol.value - std::pow(2.0, p)) / std::pow(2.0, p);
    double dev = 0.0;
    for (double v : sol.f) dev = std::max(dev, std::abs(v - 2.0));
    const auto sat = saturated_subfamily(sol, fam);
    const bool ok = rel <= 1e-6 && dev <= 1e-4 && sat == std::vector<std::size_t>{0, 1} && dt < 1.0;
    o.pass = o.pass && ok;
    d << " p=" << p << ": rel.err " << fmt(rel) << ", sup|f-2| " << fmt(dev) << ", saturated "
      << sat.size() << ", " << fmt(dt * 1e3) << " ms" << (ok ? "" : " [FAIL]") << ";";
  }
  o.detail = d.str();
  return o;
}

Outcome duality_identity() {
  Outcome o{2, "duality identity, complementary slackness, barycenter identity on 50 random instances", true, "", 0};
  const auto t0 = Clock::now();
  double worst_gap = 0.0, worst_slack = 0.0, worst_bary = 0.0;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 10 + seed % 41;
    const std::size_t k = 5 + seed % 16;
    const double pv = seed % 2 ? 3.0 : 2.0;
    const Exponent p(pv);
    const Instance inst = generate_random_instance(seed, n, k, 0.3);
    const auto& measures = std::get<ExplicitMembers>(inst.family("random").members).measures;
    const auto ground = inst.space.measure();
    try {
      const ModulusSolution primal = solve_modulus(ground, measures, p);
      const ContentSolution dual = solve_content(ground, measures, p);
      const DualityCertificate cert = check_duality(ground, primal, dual, p);
      const OptimalityReport opt = check_optimality_conditions(ground, measures, primal, dual, p, 1e-6);
      double slack = 0.0;
      for (std::size_t i = 0; i < measures.size(); ++i) {
        const double r = std::abs(measures[i].integrate(primal.f) - 1.0);
        slack = std::max({slack, primal.multipliers[i] * r, dual.weights[i] * r});
      }
      worst_gap = std::max(worst_gap, cert.gap / cert.tolerance * 1e-6);
      worst_slack = std::max(worst_slack, slack);
      worst_bary = std::max(worst_bary, opt.barycenter);
      if (!cert.ok() || slack > 1e-6 || opt.barycenter > 1e-6) ++failures;
    } catch (const Error& e) {
      ++failures;
      o.detail += " seed " + std::to_string(seed) + ": " + e.what() + ";";
    }
  }
  const double dt = seconds_since(t0);
  o.pass = failures == 0 && dt < 60.0;
  o.detail = " worst |Mod^(1/p)-C|/max(1,Mod^(1/p)) " + fmt(worst_gap) + ", slackness " + fmt(worst_slack) +
             ", barycenter " + fmt(worst_bary) + ", failures " + std::to_string(failures) + ", " +
             fmt(dt) + " s;" + o.detail;
  return o;
}

Outcome vertical_columns() {
  Outcome o{3, "column family: Mod = 1 for every k and p, columns plan C_min = k", true, "", 0};
  std::ostringstream d;
  for (std::size_t k : {8, 16, 32}) {
    const auto space = build_grid_space(k, k);
    const auto curves = column_curves(space, k);
    std::vector<DiscreteMeasure> fam;
    for (const auto& c : curves) fam.push_back(m_map(c));
    double worst = 0.0;
    for (double p : {1.5, 2.0, 3.0}) {
      const ModulusSolution sol = solve_modulus_explicit(space, fam, Exponent(p));
      worst = std::max(worst, std::abs(sol.value - 1.0));
    }
    const TestPlanReport tp = testplan_check(CurvePlan::uniform(curves), space.measure());
    const bool ok = worst <= 1e-9 && tp.c_min == static_cast<double>(k);
    o.pass = o.pass && ok;
    d << " k=" << k << ": max|Mod-1| " << fmt(worst) << ", C_min " << fmt(tp.c_min, 12) << ", C_min/k "
      << fmt(tp.c_min / k, 12) << (ok ? "" : " [FAIL]") << ";";
  }
  o.detail = d.str();
  return o;
}

Outcome capacity() {
  Outcome o{4, "left-right path modulus equals the Dirichlet capacity (p = 2)", true, "", 0};
  const auto t0 = Clock::now();
  std::ostringstream d;
  for (std::size_t n : {8, 16}) {
    const auto space = build_grid_space(n, n);
    PathMembers fam;
    fam.source = grid_column(n, 0);
    fam.target = grid_column(n, n - 1);
    fam.quadrature = Quadrature::edge;
    const ModulusSolution sol = solve_modulus_paths(space, fam, Exponent(2.0));
    const double cap = oracle::dirichlet_capacity(space, fam.source, fam.target);
    const double rel = std::abs(sol.value - cap) / cap;
    const bool ok = rel <= 1e-4;
    o.pass = o.pass && ok;
    d << " " << n << "x" << n << ": Mod " << fmt(sol.value, 10) << ", capacity " << fmt(cap, 10)
      << ", rel " << fmt(rel) << ", paths " << sol.paths.size() << (ok ? "" : " [FAIL]") << ";";
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < 10.0;
  d << " " << fmt(dt) << " s";
  o.detail = d.str();
  return o;
}

Outcome cross_validation() {
  Outcome o{5, "dual ascent vs primal barrier agree; lattice search brackets the optimum", true, "", 0};
  double worst_value = 0.0, worst_f = 0.0;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 5 + seed % 16;
    const std::size_t k = 2 + seed % 9;
    const Exponent p(std::array<double, 3>{1.5, 2.0, 3.0}[seed % 3]);
    const Instance inst = generate_random_instance(1000 + seed, n, k, 0.4);
    const auto& measures = std::get<ExplicitMembers>(inst.family("random").members).measures;
    const auto ground = inst.space.measure();
    try {
      const ModulusSolution a = solve_modulus(ground, measures, p);
      const ModulusSolution b = solve_modulus_primal(ground, measures, p);
      const double rel = std::abs(a.value - b.value) / b.value;
      double df = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        if (ground[x] > 0.0) df = std::max(df, std::abs(a.f[x] - b.f[x]));
      }
      worst_value = std::max(worst_value, rel);
      worst_f = std::max(worst_f, df);
      if (rel > 1e-6 || df > 1e-5) ++failures;
    } catch (const Error& e) {
      ++failures;
      o.detail += " seed " + std::to_string(seed) + ": " + e.what() + ";";
    }
  }
  int bracket_failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 3;
    const std::size_t k = 1 + seed % 3;
    std::vector<double> m(n);
    for (double& v : m) v = 0.2 + u01(rng);
    std::vector<std::vector<double>> dense;
    std::vector<DiscreteMeasure> measures;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> w(n);
      for (double& v : w) v = u01(rng) < 0.7 ? 0.1 + u01(rng) : 0.0;
      if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[pick(rng, n)] = 0.5;
      measures.push_back(DiscreteMeasure::from_dense(w));
      dense.push_back(w);
    }
    const double pv = std::array<double, 3>{1.5, 2.0, 3.0}[seed % 3];
    const double value = solve_modulus(m, measures, Exponent(pv)).value;
    const oracle::Bracket b = oracle::lattice_bracket(m, dense, pv);
    if (!(b.lower <= value * (1 + 1e-12) && value <= b.upper * (1 + 1e-12))) ++bracket_failures;
  }
  o.pass = failures == 0 && bracket_failures == 0;
  o.detail = " worst value rel.diff " + fmt(worst_value) + ", worst |f_a - f_b| " + fmt(worst_f) +
             ", solver failures " + std::to_string(failures) + ", bracket failures " +
             std::to_string(bracket_failures) + "/20;" + o.detail;
  return o;
}

Outcome curve_calculus() {
  Outcome o{6, "curve calculus on 1000 random walks per grid", true, "", 0};
  int bad_mass = 0, bad_area = 0, bad_j = 0, bad_jensen = 0, m_changes = 0, constant_speed = 0;
  std::mt19937_64 rng(6);
  for (std::size_t n : {4, 6}) {
    const auto space = build_grid_space(n, n);
    for (int w = 0; w < 1000; ++w) {
      const bool uniform = w % 10 == 0;
      const ParametricCurve c = random_walk(space, rng, 1 + pick(rng, 20), uniform, uniform ? 0.0 : 0.2);
      const double len = length(c);
      if (std::abs(j_map(c).total() - len) > 1e-12 * len) ++bad_mass;
      double area = 0.0;
      const DiscreteMeasure mult = multiplicity(c);
      for (const Atom& a : mult.atoms()) area += a.weight * space.edge(a.index).length;
      if (std::abs(area - len) > 1e-12 * len) ++bad_area;
      const ParametricCurve k = constant_speed_reparam(c);
      const DiscreteMeasure jc = j_map(c), jk = j_map(k);
      const auto ja = jc.atoms();
      const auto jb = jk.atoms();
      bool same = ja.size() == jb.size();
      for (std::size_t i = 0; same && i < ja.size(); ++i) {
        same = ja[i].index == jb[i].index && std::abs(ja[i].weight - jb[i].weight) <= 1e-12 * len;
      }
      if (!same) ++bad_j;
      const auto ma = m_map(c).dense(space.size());
      const auto mb = m_map(k).dense(space.size());
      for (std::size_t x = 0; x < ma.size(); ++x) {
        if (std::abs(ma[x] - mb[x]) > 1e-9) {
          ++m_changes;
          break;
        }
      }
      const auto speeds = metric_speed(c);
      const auto [lo, hi] = std::minmax_element(speeds.begin(), speeds.end());
      const bool is_constant_speed = *lo > 0.0 && (*hi - *lo) <= 1e-9 * *hi;
      constant_speed += is_constant_speed;
      for (double q : {1.5, 2.0, 3.0}) {
        const double e_c = energy(c, q);
        const double e_k = energy(k, q);
        const double lq = std::pow(len, q);
        const bool ok = std::abs(e_k - lq) <= 1e-9 * lq &&
                        (is_constant_speed ? std::abs(e_c - lq) <= 1e-9 * lq : e_c > lq * (1 + 1e-9));
        if (!ok) ++bad_jensen;
      }
    }
  }
  o.pass = bad_mass == 0 && bad_area == 0 && bad_j == 0 && bad_jensen == 0 && m_changes > 0;
  o.detail = " failures: J mass " + std::to_string(bad_mass) + ", area " + std::to_string(bad_area) +
             ", J invariance " + std::to_string(bad_j) + ", Jensen " + std::to_string(bad_jensen) +
             "; M changed under reparametrisation on " + std::to_string(m_changes) +
             " walks; constant-speed walks " + std::to_string(constant_speed);
  return o;
}

Outcome reparametrisation() {
  Outcome o{7, "barycenter improvement: h <= 1/z, z <= 1/eps, energy/barycenter bound via J-plan", true, "", 0};
  double worst_bary = -1e300, worst_z = -1e300, worst_eq8 = -1e300;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(700 + seed);
    const auto space = seed % 2 ? build_grid_space(5, 5) : build_grid_space(12, 1);
    const CurvePlan plan = random_plan(space, rng, 2 + pick(rng, 4), 8);
    const double q = seed % 2 ? 3.0 : 2.0;
    const double p = q / (q - 1.0);
    const auto g = parametric_barycenter(plan, space.measure(), q);
    const double eps = (0.2 + 0.7 * u01(rng)) * g.sup;
    try {
      const ImproveResult r = improve_barycenter(plan, space.measure(), q, eps);
      MeasurePlan jplan;
      for (std::size_t i = 0; i < r.plan.size(); ++i) {
        jplan.support.push_back(j_map(r.plan.curves()[i]));
        jplan.probabilities.push_back(r.plan.probabilities()[i]);
        jplan.members.push_back(i);
      }
      const double cq = plan_barycenter(jplan, space.measure(), q).c_q;
      const double rhs = std::pow(r.energy, 1.0 / q) * std::pow(r.barycenter_sup, 1.0 / p);
      worst_bary = std::max(worst_bary, r.barycenter_sup - 1.0 / r.z);
      worst_z = std::max(worst_z, r.z - 1.0 / eps);
      worst_eq8 = std::max(worst_eq8, cq - rhs);
      const bool ok = r.barycenter_sup <= 1.0 / r.z + 1e-8 && r.z <= 1.0 / eps + 1e-12 && cq <= rhs + 1e-6 &&
                      r.energy <= r.energy_bound * (1 + 1e-9);
      if (!ok) ++failures;
    } catch (const Error& e) {
      ++failures;
      o.detail += std::string(" ") + e.what() + ";";
    }
  }
  o.pass = failures == 0;
  o.detail = " max(sup h - 1/z) " + fmt(worst_bary) + ", max(z - 1/eps) " + fmt(worst_z) +
             ", max(c_q - bound) " + fmt(worst_eq8) + ", failures " + std::to_string(failures) + ";" + o.detail;
  return o;
}

Outcome stretch_average_bound() {
  Outcome o{8, "stretch-average marginal bound with halving quadrature term (n_tau 64 -> 128)", true, "", 0};
  int failures = 0;
  double worst_ratio = 0.0, worst_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(800 + seed);
    const auto space = build_grid_space(4, 4);
    const CurvePlan plan = random_plan(space, rng, 2 + pick(rng, 3), 6);
    const double eps = 0.1 + 0.35 * u01(rng);
    const StretchReport a = stretch_average(plan, space.measure(), eps, 64);
    const StretchReport b = stretch_average(plan, space.measure(), eps, 128);
    const bool halves = std::abs(b.quadrature_term - a.quadrature_term / 2) <= 1e-12 * a.quadrature_term;
    const bool ok = a.within_bound && b.within_bound && halves &&
                    a.measured_error <= a.quadrature_term + 1e-12 && b.measured_error <= b.quadrature_term + 1e-12;
    worst_ratio = std::max({worst_ratio, a.c_min / (a.bound + a.quadrature_term),
                            b.c_min / (b.bound + b.quadrature_term)});
    worst_err = std::max({worst_err, a.measured_error / a.quadrature_term, b.measured_error / b.quadrature_term});
    if (!ok) ++failures;
  }
  o.pass = failures == 0;
  o.detail = " max C_min/(bound + term) " + fmt(worst_ratio) + ", max measured/term " + fmt(worst_err) +
             ", failures " + std::to_string(failures);
  return o;
}

Outcome gradient_checks() {
  Outcome o{9, "upper-gradient checks: calibrated, step pair, Mod-null implies plan-null", true, "", 0};
  std::ostringstream d;
  const std::size_t n = 4;
  const auto space = build_grid_space(n, n);
  PathMembers fam;
  fam.source = grid_column(n, 0);
  fam.target = grid_column(n, n - 1);
  const auto curves = path_family_curves(space, fam, 200000);
  const Exponent p(2.0);

  std::vector<double> fx(space.size()), ones(space.size(), 1.0), zeros(space.size(), 0.0), step(space.size());
  for (PointId x = 0; x < space.size(); ++x) {
    fx[x] = space.coords()[x][0];
    step[x] = fx[x] > 0.5 ? 1.0 : 0.0;
  }
  const GradientCheckReport cal = modulus_of_violating_family(space, fx, ones, curves, p);
  const bool cal_ok = cal.n_violations == 0 && cal.modulus_of_violations == 0.0;
  d << " calibrated: " << cal.n_violations << " violations of " << cal.n_curves << ";";

  const GradientCheckReport st = modulus_of_violating_family(space, step, zeros, curves, p);
  const double connecting = solve_modulus_paths(space, fam, p).value;
  const double rel = std::abs(st.modulus_of_violations - connecting) / connecting;
  const bool step_ok = st.n_violations == curves.size() && rel <= 1e-6;
  d << " step: " << st.n_violations << " violations, Mod " << fmt(st.modulus_of_violations, 10)
    << " vs connecting " << fmt(connecting, 10) << ";";

  int implication_failures = 0, null_cases = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(900 + seed);
    const auto grid = build_grid_space(4 + seed % 3, 4 + seed % 3);
    std::vector<double> f(grid.size()), g(grid.size(), 0.0);
    for (double& v : f) v = u01(rng);
    for (PointId x = 0; x < grid.size(); ++x) {
      for (const Neighbor& nb : grid.neighbors(x)) {
        g[x] = std::max(g[x], std::abs(f[x] - f[nb.to]) / grid.edge(nb.edge).length);
      }
    }
    std::vector<CurvePlan> plans{random_plan(grid, rng, 3, 6), random_plan(grid, rng, 4, 6)};
    std::vector<ParametricCurve> family;
    for (int i = 0; i < 20; ++i) family.push_back(random_walk(grid, rng, 1 + pick(rng, 8)));
    for (double scale : {1.0, 0.3}) {
      std::vector<double> gs(g);
      for (double& v : gs) v *= scale;
      const EquivalenceRecord rec = equivalence_experiment(grid, f, gs, family, plans, p);
      null_cases += rec.modulus_null;
      if (!rec.implication_holds) ++implication_failures;
    }
  }
  d << " implication failures " << implication_failures << " (Mod-null cases " << null_cases << "/20)";
  o.pass = cal_ok && step_ok && implication_failures == 0;
  o.detail = d.str();
  return o;
}

}  // namespace

std::vector<Outcome> run_all(std::ostream& out, bool verbose) {
  const std::vector<std::function<Outcome()>> criteria{
      remark_instance, duality_identity, vertical_columns, capacity,     cross_validation,
      curve_calculus,  reparametrisation, stretch_average_bound, gradient_checks};
  std::vector<Outcome> results;
  for (const auto& run : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {static_cast<int>(results.size() + 1), "criterion aborted", false, e.what(), 0};
    }
    o.seconds = seconds_since(t0);
    out << (o.pass ? "PASS" : "FAIL") << " [" << o.id << "] " << o.title << " (" << fmt(o.seconds) << " s)\n";
    if (verbose || !o.pass) out << "      " << o.detail << "\n";
    out.flush();
    results.push_back(o);
  }
  return results;
}

}  // namespace acceptance

extern "C" int modcap_acceptance_run(int verbose) {
  const auto results = acceptance::run_all(std::cout, verbose != 0);
  const bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  return all ? 0 : 4;
}
