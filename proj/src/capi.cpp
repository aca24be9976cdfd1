#include "modcap/modcap.h"

#include <chrono>
#include <limits>
#include <memory>
#include <cmath>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modcap/duality.hpp"
#include "modcap/error.hpp"
#include "modcap/gradients.hpp"
#include "modcap/instance.hpp"
#include "modcap/modulus.hpp"
#include "modcap/plans.hpp"

using json = nlohmann::ordered_json;
using namespace modcap;

struct modcap_instance {
  Instance inst;
};

struct modcap_solution {
  ModulusSolution sol;
  std::vector<DiscreteMeasure> measures;
  std::vector<double> ground;
  std::string instance;
  std::string family;
  double p = 0.0;
  double wall_ms = 0.0;
};

namespace {

thread_local std::string last_error;

modcap_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return MODCAP_INVALID_INPUT;
    case ErrorCode::no_convergence: return MODCAP_NO_CONVERGENCE;
    case ErrorCode::certificate_failed: return MODCAP_CERTIFICATE_FAILED;
    case ErrorCode::io: return MODCAP_IO;
    case ErrorCode::no_barycenter: return MODCAP_NO_BARYCENTER;
    case ErrorCode::constant_curve: return MODCAP_CONSTANT_CURVE;
    case ErrorCode::cap_exceeded: return MODCAP_CAP_EXCEEDED;
  }
  return MODCAP_INTERNAL;
}

template <class F>
modcap_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return MODCAP_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

json atoms_json(const DiscreteMeasure& mu) {
  json out = json::array();
  for (const Atom& a : mu.atoms()) out.push_back(json::array({a.index, a.weight}));
  return out;
}

SolveOptions solve_options(const modcap_solve_options* opts) {
  SolveOptions o;
  if (opts != nullptr) {
    if (opts->gap_tol > 0.0) o.gap_tol = opts->gap_tol;
    if (opts->max_iter > 0) o.max_iter = opts->max_iter;
  }
  return o;
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) fail(ErrorCode::invalid_input, std::string(what) + " must not be null");
}

modcap_solution* solve_family(const Instance& inst, const std::string& name, double p_value,
                              const SolveOptions& opts) {
  const Exponent p(p_value);
  const MeasureFamily& family = inst.family(name);
  auto out = std::make_unique<modcap_solution>();
  out->instance = inst.name;
  out->family = name;
  out->p = p_value;
  const auto start = std::chrono::steady_clock::now();
  if (const auto* paths = std::get_if<PathMembers>(&family.members)) {
    out->sol = solve_modulus_paths(inst.space, *paths, p, opts);
    out->measures = out->sol.measures;
    const auto ground = ground_measure(inst.space, out->sol.ground);
    out->ground.assign(ground.begin(), ground.end());
  } else {
    out->measures = enumerate_family(family, inst.space, std::numeric_limits<std::size_t>::max()).measures;
    out->ground.assign(inst.space.measure().begin(), inst.space.measure().end());
    out->sol = solve_modulus(out->ground, out->measures, p, opts);
  }
  out->wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out.release();
}

json curve_json(const ParametricCurve& c) { return json::parse(serialize_curve(c)); }

}  // namespace

extern "C" {

const char* modcap_last_error(void) { return last_error.c_str(); }

int modcap_exit_code(modcap_status status) {
  switch (status) {
    case MODCAP_OK: return 0;
    case MODCAP_NO_CONVERGENCE: return 3;
    case MODCAP_CERTIFICATE_FAILED: return 4;
    default: return 2;
  }
}

void modcap_string_free(char* s) { delete[] s; }

modcap_status modcap_instance_load(const char* path, modcap_instance** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new modcap_instance{load_instance(path)};
    return MODCAP_OK;
  });
}

modcap_status modcap_instance_parse(const char* text, modcap_instance** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new modcap_instance{parse_instance(text)};
    return MODCAP_OK;
  });
}

modcap_status modcap_instance_generate(uint64_t seed, size_t n_points, size_t n_measures,
                                       double sparsity, modcap_instance** out) {
  return guarded([&] {
    require(out, "out");
    *out = new modcap_instance{generate_random_instance(seed, n_points, n_measures, sparsity)};
    return MODCAP_OK;
  });
}

modcap_status modcap_instance_serialize(const modcap_instance* inst, char** out) {
  return guarded([&] {
    require(inst, "instance");
    require(out, "out");
    *out = dup(serialize_instance(inst->inst));
    return MODCAP_OK;
  });
}

const char* modcap_instance_name(const modcap_instance* inst) {
  return inst ? inst->inst.name.c_str() : "";
}

size_t modcap_instance_points(const modcap_instance* inst) { return inst ? inst->inst.space.size() : 0; }

void modcap_instance_free(modcap_instance* inst) { delete inst; }

modcap_status modcap_solve(const modcap_instance* inst, const char* family, double p,
                           const modcap_solve_options* opts, modcap_solution** out) {
  return guarded([&] {
    require(inst, "instance");
    require(family, "family");
    require(out, "out");
    *out = solve_family(inst->inst, family, p, solve_options(opts));
    return MODCAP_OK;
  });
}

double modcap_solution_value(const modcap_solution* s) { return s->sol.value; }
double modcap_solution_dual_value(const modcap_solution* s) { return s->sol.dual_value; }
double modcap_solution_gap(const modcap_solution* s) { return s->sol.primal_dual_gap; }
size_t modcap_solution_iterations(const modcap_solution* s) { return s->sol.iterations; }
size_t modcap_solution_active(const modcap_solution* s) { return s->sol.active_set.size(); }
int modcap_solution_empty_family(const modcap_solution* s) { return s->sol.empty_family ? 1 : 0; }

size_t modcap_solution_density(const modcap_solution* s, double* buf, size_t len) {
  const std::vector<double>& f = s->sol.f;
  for (size_t i = 0; i < len && i < f.size(); ++i) buf[i] = f[i];
  return f.size();
}

void modcap_solution_free(modcap_solution* s) { delete s; }

modcap_status modcap_results_write(const modcap_solution* const* sols, size_t n, const char* path,
                                   const char* format, uint64_t seed) {
  return guarded([&] {
    const auto fmt = parse_format(format ? format : "csv");
    if (!fmt) fail(ErrorCode::invalid_input, "format must be csv or ndjson");
    std::vector<ResultRecord> records;
    for (size_t i = 0; i < n; ++i) {
      const modcap_solution& s = *sols[i];
      records.push_back({s.instance, s.family, s.p, s.sol.value, s.sol.dual_value,
                         s.sol.primal_dual_gap, s.sol.iterations, s.wall_ms, seed,
                         s.sol.active_set.size()});
    }
    if (path == nullptr || std::string(path) == "-") {
      emit_results(std::cout, records, *fmt);
    } else {
      emit_results(std::string(path), records, *fmt);
    }
    return MODCAP_OK;
  });
}

modcap_status modcap_duality(const modcap_instance* inst, const char* family, double p_value,
                             const modcap_solve_options* opts, char** report_json,
                             char** plan_json) {
  return guarded([&] {
    require(inst, "instance");
    require(family, "family");
    require(report_json, "report_json");
    const Exponent p(p_value);
    std::unique_ptr<modcap_solution> primal(solve_family(inst->inst, family, p_value, solve_options(opts)));
    const ContentSolution dual = solve_content(primal->ground, primal->measures, p);
    const DualityCertificate cert = check_duality(primal->ground, primal->sol, dual, p);
    const OptimalityReport opt =
        check_optimality_conditions(primal->ground, primal->measures, primal->sol, dual, p, 1e-6);

    json r;
    r["instance"] = inst->inst.name;
    r["family"] = family;
    r["p"] = p_value;
    r["modulus"] = num(primal->sol.value);
    r["modulus_root"] = num(cert.mod_root);
    r["content"] = num(cert.content);
    r["gap"] = num(cert.gap);
    r["tolerance"] = cert.tolerance;
    r["identity_ok"] = cert.identity_ok;
    r["weak_duality"] = {{"plan_mass", cert.weak_lhs},
                         {"paired", cert.weak_mid},
                         {"holder_bound", cert.weak_rhs},
                         {"ok", cert.weak_ok}};
    r["optimality"] = {{"saturation", opt.saturation},
                       {"barycenter", opt.barycenter},
                       {"energy", opt.converse_norm},
                       {"content_p", opt.converse_bound},
                       {"violations", opt.violations},
                       {"ok", opt.ok()}};
    r["members"] = primal->measures.size();
    r["warnings"] = dual.warnings;
    *report_json = dup(r.dump(2) + "\n");
    if (plan_json != nullptr) {
      *plan_json = dup(serialize_measure_plan_json(dual.plan.members, dual.plan.probabilities,
                                                   dual.barycenter.g, dual.barycenter.c_q));
    }
    if (!cert.ok() || !opt.ok()) {
      last_error = "duality certificate failed: Mod^(1/p) = " + format_number(cert.mod_root) +
                   ", C = " + format_number(cert.content);
      return MODCAP_CERTIFICATE_FAILED;
    }
    return MODCAP_OK;
  });
}

modcap_status modcap_curve_op(const modcap_instance* inst, const char* curve, const char* op,
                              char** out_json) {
  return guarded([&] {
    require(inst, "instance");
    require(curve, "curve");
    require(op, "op");
    require(out_json, "out_json");
    const ParametricCurve& c = inst->inst.curve(curve);
    const std::string which = op;
    json r;
    r["curve"] = curve;
    r["length"] = length(c);
    if (which == "resample") {
      const ParametricCurve k = constant_speed_reparam(c);
      r["resampled"] = curve_json(k);
      r["speed"] = metric_speed(k);
    } else if (which == "jmap") {
      r["points"] = atoms_json(j_map(c));
    } else if (which == "mmap") {
      r["points"] = atoms_json(m_map(c));
    } else if (which == "mult") {
      r["edges"] = atoms_json(multiplicity(c));
    } else {
      fail(ErrorCode::invalid_input, "unknown curve operation '" + which + "'");
    }
    *out_json = dup(r.dump(2) + "\n");
    return MODCAP_OK;
  });
}

modcap_status modcap_plan_op(const modcap_instance* inst, const char* plan, const char* op,
                             double q, double eps, size_t n_tau, char** report_json,
                             char** plan_out) {
  return guarded([&] {
    require(inst, "instance");
    require(plan, "plan");
    require(op, "op");
    require(report_json, "report_json");
    if (!(q > 1.0)) fail(ErrorCode::invalid_input, "q must be greater than 1");
    const CurvePlan& rho = inst->inst.plan(plan).plan;
    std::span<const double> ground = inst->inst.space.measure();
    const std::string which = op;
    json r;
    r["plan"] = plan;
    bool ok = true;
    if (which == "check") {
      const TestPlanReport tp = testplan_check(rho, ground);
      const ParametricBarycenter h = parametric_barycenter(rho, ground, q);
      r["is_test_plan"] = tp.is_test_plan;
      r["c_min"] = num(tp.c_min);
      r["worst_time"] = tp.worst_time;
      r["worst_point"] = tp.worst_point;
      r["barycenter_norm_q"] = h.norm_q;
      r["barycenter_sup"] = h.sup;
      r["q_energy"] = q_energy(rho, q);
    } else if (which == "improve") {
      const ImproveResult res = improve_barycenter(rho, ground, q, eps);
      r["z"] = res.z;
      r["barycenter_sup"] = res.barycenter_sup;
      r["barycenter_bound"] = 1.0 / res.z;
      r["q_energy"] = res.energy;
      r["energy_bound"] = res.energy_bound;
      ok = res.barycenter_sup <= 1.0 / res.z + 1e-8 && res.z <= 1.0 / eps + 1e-12 &&
           res.energy <= res.energy_bound * (1.0 + 1e-9) + 1e-9;
      r["ok"] = ok;
      if (plan_out) *plan_out = dup(serialize_plan(res.plan));
    } else if (which == "stretch") {
      const StretchReport res = stretch_average(rho, ground, eps, n_tau);
      r["c_input"] = res.c_input;
      r["bound"] = res.bound;
      r["c_min"] = res.c_min;
      r["quadrature_term"] = res.quadrature_term;
      r["measured_error"] = res.measured_error;
      ok = res.within_bound && res.measured_error <= res.quadrature_term + 1e-9;
      r["ok"] = ok;
      if (plan_out) *plan_out = dup(serialize_plan(res.plan));
    } else {
      fail(ErrorCode::invalid_input, "unknown plan operation '" + which + "'");
    }
    *report_json = dup(r.dump(2) + "\n");
    if (!ok) {
      last_error = "plan bound check failed";
      return MODCAP_CERTIFICATE_FAILED;
    }
    return MODCAP_OK;
  });
}

modcap_status modcap_grad_check(const modcap_instance* inst, const char* f_col, const char* g_col,
                                const char* family, const char* const* plans, size_t n_plans,
                                double p, char** report_json) {
  return guarded([&] {
    require(inst, "instance");
    require(f_col, "f column");
    require(g_col, "g column");
    require(family, "family");
    require(report_json, "report_json");
    const Instance& in = inst->inst;
    const std::vector<double>& f = in.column(f_col);
    const std::vector<double>& g = in.column(g_col);
    const MeasureFamily& fam = in.family(family);
    std::vector<ParametricCurve> curves;
    if (const auto* paths = std::get_if<PathMembers>(&fam.members)) {
      curves = path_family_curves(in.space, *paths, 100000);
    } else if (const auto* cm = std::get_if<CurveMembers>(&fam.members)) {
      curves = cm->curves;
    } else {
      fail(ErrorCode::invalid_input, "gradient checks need a paths or curves family");
    }
    std::vector<CurvePlan> plan_list;
    for (size_t i = 0; i < n_plans; ++i) plan_list.push_back(in.plan(plans[i]).plan);
    const EquivalenceRecord rec = equivalence_experiment(in.space, f, g, curves, plan_list, Exponent(p));

    json r;
    r["family"] = family;
    r["n_curves"] = rec.curves.n_curves;
    r["n_violations"] = rec.curves.n_violations;
    r["violating"] = rec.curves.violating;
    r["worst_residual"] = num(rec.curves.worst_residual);
    r["modulus_of_violations"] = num(rec.modulus_of_violations);
    json pj = json::array();
    for (size_t i = 0; i < rec.plans.plans.size(); ++i) {
      const PlanViolation& v = rec.plans.plans[i];
      pj.push_back({{"plan", plans[i]},
                    {"is_test_plan", v.is_test_plan},
                    {"c_min", num(v.c_min)},
                    {"violating_probability", v.violating_probability}});
    }
    r["plans"] = std::move(pj);
    r["warnings"] = rec.plans.warnings;
    r["implication_holds"] = rec.implication_holds;
    *report_json = dup(r.dump(2) + "\n");
    if (!rec.implication_holds) {
      last_error = "modulus-null violations are not negligible for some test plan";
      return MODCAP_CERTIFICATE_FAILED;
    }
    return MODCAP_OK;
  });
}

}  // extern "C"
