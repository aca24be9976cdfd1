// modcap: command line front end over the C API.
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "modcap/modcap.h"

namespace {

struct Config {
  std::string instance;
  double p = 2.0;
  double q = 0.0;  // 0: conjugate of p
  double tol = 0.0;
  std::size_t max_iter = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";

  std::vector<std::string> families;
  std::string family;
  std::string curve;
  std::string plan;
  std::vector<std::string> plans;
  std::string emit_plan;
  std::string f_col;
  std::string g_col;
  double eps = 0.25;
  std::size_t n_tau = 64;
  std::size_t points = 20;
  std::size_t measures = 10;
  double sparsity = 0.3;
  bool quiet = false;
};

struct InstanceDeleter {
  void operator()(modcap_instance* p) const { modcap_instance_free(p); }
};
using InstancePtr = std::unique_ptr<modcap_instance, InstanceDeleter>;

struct Text {
  char* s = nullptr;
  ~Text() { modcap_string_free(s); }
};

int report(modcap_status st) {
  if (st != MODCAP_OK) std::cerr << "modcap: " << modcap_last_error() << "\n";
  return modcap_exit_code(st);
}

// Writes to --out when given, else stdout. Returns false if the file cannot
// be opened.
bool write_text(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return true;
  }
  std::ofstream f(path);
  if (!f) return false;
  f << text;
  return static_cast<bool>(f);
}

int load(const Config& cfg, InstancePtr& out) {
  if (cfg.instance.empty()) {
    std::cerr << "modcap: --instance is required\n";
    return 2;
  }
  modcap_instance* raw = nullptr;
  const modcap_status st = modcap_instance_load(cfg.instance.c_str(), &raw);
  out.reset(raw);
  return report(st);
}

modcap_solve_options solve_opts(const Config& cfg) { return {cfg.tol, cfg.max_iter}; }

double conjugate(const Config& cfg) { return cfg.q > 0.0 ? cfg.q : cfg.p / (cfg.p - 1.0); }

int run_solve(const Config& cfg) {
  InstancePtr inst;
  if (int rc = load(cfg, inst)) return rc;
  const modcap_solve_options opts = solve_opts(cfg);
  std::vector<modcap_solution*> sols;
  int rc = 0;
  for (const std::string& fam : cfg.families) {
    modcap_solution* sol = nullptr;
    const modcap_status st = modcap_solve(inst.get(), fam.c_str(), cfg.p, &opts, &sol);
    if (st != MODCAP_OK) {
      rc = report(st);
      break;
    }
    sols.push_back(sol);
  }
  if (rc == 0) {
    rc = report(modcap_results_write(sols.data(), sols.size(), cfg.out.empty() ? nullptr : cfg.out.c_str(),
                                     cfg.format.c_str(), cfg.seed));
  }
  for (modcap_solution* s : sols) modcap_solution_free(s);
  return rc;
}

int run_duality(const Config& cfg) {
  InstancePtr inst;
  if (int rc = load(cfg, inst)) return rc;
  const modcap_solve_options opts = solve_opts(cfg);
  Text rep, plan;
  const modcap_status st = modcap_duality(inst.get(), cfg.family.c_str(), cfg.p, &opts, &rep.s,
                                          cfg.emit_plan.empty() ? nullptr : &plan.s);
  if (rep.s != nullptr && !write_text(cfg.out, rep.s)) return report(MODCAP_IO);
  if (plan.s != nullptr && !write_text(cfg.emit_plan, plan.s)) {
    std::cerr << "modcap: cannot write " << cfg.emit_plan << "\n";
    return 2;
  }
  return report(st);
}

int run_curve(const Config& cfg, const std::string& op) {
  InstancePtr inst;
  if (int rc = load(cfg, inst)) return rc;
  Text out;
  const modcap_status st = modcap_curve_op(inst.get(), cfg.curve.c_str(), op.c_str(), &out.s);
  if (st == MODCAP_OK && !write_text(cfg.out, out.s)) return report(MODCAP_IO);
  return report(st);
}

int run_plan(const Config& cfg, const std::string& op) {
  InstancePtr inst;
  if (int rc = load(cfg, inst)) return rc;
  Text rep, plan;
  const modcap_status st = modcap_plan_op(inst.get(), cfg.plan.c_str(), op.c_str(), conjugate(cfg), cfg.eps,
                                          cfg.n_tau, &rep.s, &plan.s);
  if (rep.s != nullptr) std::cout << rep.s;
  if (plan.s != nullptr && !cfg.out.empty() && !write_text(cfg.out, plan.s)) return report(MODCAP_IO);
  return report(st);
}

int run_grad(const Config& cfg) {
  InstancePtr inst;
  if (int rc = load(cfg, inst)) return rc;
  std::vector<const char*> names;
  for (const std::string& s : cfg.plans) names.push_back(s.c_str());
  Text rep;
  const modcap_status st = modcap_grad_check(inst.get(), cfg.f_col.c_str(), cfg.g_col.c_str(), cfg.family.c_str(),
                                             names.data(), names.size(), cfg.p, &rep.s);
  if (rep.s != nullptr && !write_text(cfg.out, rep.s)) return report(MODCAP_IO);
  return report(st);
}

int run_gen(const Config& cfg) {
  modcap_instance* raw = nullptr;
  modcap_status st = modcap_instance_generate(cfg.seed, cfg.points, cfg.measures, cfg.sparsity, &raw);
  InstancePtr inst(raw);
  if (st != MODCAP_OK) return report(st);
  Text out;
  st = modcap_instance_serialize(inst.get(), &out.s);
  if (st == MODCAP_OK && !write_text(cfg.out, out.s)) return report(MODCAP_IO);
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"p-modulus and plan content of finite measure families"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--instance", cfg.instance, "instance file (JSON)");
  app.add_option("--p", cfg.p, "exponent p > 1")->capture_default_str();
  app.add_option("--tol", cfg.tol, "relative gap tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", cfg.max_iter, "iteration budget")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "seed, echoed in results")->capture_default_str();
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--format", cfg.format, "results format")
      ->check(CLI::IsMember({"csv", "ndjson"}))
      ->capture_default_str();

  std::function<int()> action;

  auto* solve = app.add_subcommand("solve", "modulus of one or more families");
  solve->add_option("--family", cfg.families, "family name (repeatable)")->required();
  solve->callback([&] { action = [&] { return run_solve(cfg); }; });

  auto* duality = app.add_subcommand("duality", "modulus, content and their certificate");
  duality->add_option("--family", cfg.family)->required();
  duality->add_option("--emit-plan", cfg.emit_plan, "write the optimal plan here");
  duality->callback([&] { action = [&] { return run_duality(cfg); }; });

  auto* curve = app.add_subcommand("curve", "operations on a named curve");
  curve->require_subcommand(1);
  for (const char* op : {"resample", "jmap", "mmap", "mult"}) {
    auto* sub = curve->add_subcommand(op);
    sub->add_option("--curve", cfg.curve)->required();
    sub->callback([&cfg, &action, name = std::string(op)] { action = [&cfg, name] { return run_curve(cfg, name); }; });
  }

  auto* plan = app.add_subcommand("plan", "operations on a named curve plan");
  plan->require_subcommand(1);
  for (const char* op : {"check", "improve", "stretch"}) {
    auto* sub = plan->add_subcommand(op);
    sub->add_option("--plan", cfg.plan)->required();
    sub->add_option("--q", cfg.q, "barycenter exponent (default p/(p-1))");
    sub->add_option("--eps", cfg.eps)->capture_default_str();
    sub->add_option("--ntau", cfg.n_tau)->check(CLI::PositiveNumber)->capture_default_str();
    sub->callback([&cfg, &action, name = std::string(op)] { action = [&cfg, name] { return run_plan(cfg, name); }; });
  }

  auto* grad = app.add_subcommand("grad", "upper-gradient checks");
  grad->require_subcommand(1);
  auto* check = grad->add_subcommand("check");
  check->add_option("--f", cfg.f_col, "column holding f")->required();
  check->add_option("--g", cfg.g_col, "column holding g")->required();
  check->add_option("--family", cfg.family, "paths or curves family")->required();
  check->add_option("--plans", cfg.plans, "plan names");
  check->callback([&] { action = [&] { return run_grad(cfg); }; });

  auto* gen = app.add_subcommand("gen", "random instance");
  gen->add_option("--points", cfg.points)->capture_default_str();
  gen->add_option("--measures", cfg.measures)->capture_default_str();
  gen->add_option("--sparsity", cfg.sparsity)->capture_default_str();
  gen->callback([&] { action = [&] { return run_gen(cfg); }; });

  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_flag("--quiet", cfg.quiet, "only the PASS/FAIL lines");
  selftest->callback([&] { action = [&] { return modcap_acceptance_run(cfg.quiet ? 0 : 1); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (!(cfg.p > 1.0) || (cfg.q != 0.0 && !(cfg.q > 1.0))) {
    std::cerr << "modcap: exponents must be greater than 1\n";
    return 2;
  }
  return action ? action() : 2;
}
