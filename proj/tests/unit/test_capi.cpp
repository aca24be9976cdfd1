#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "modcap/modcap.h"

namespace {

const std::string data_dir = MODCAP_DATA_DIR;

modcap_instance* load(const std::string& name) {
  modcap_instance* inst = nullptr;
  REQUIRE(modcap_instance_load((data_dir + "/" + name).c_str(), &inst) == MODCAP_OK);
  return inst;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  modcap_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("exit-code contract") {
  CHECK(modcap_exit_code(MODCAP_OK) == 0);
  CHECK(modcap_exit_code(MODCAP_INVALID_INPUT) == 2);
  CHECK(modcap_exit_code(MODCAP_NO_CONVERGENCE) == 3);
  CHECK(modcap_exit_code(MODCAP_CERTIFICATE_FAILED) == 4);
  CHECK(modcap_exit_code(MODCAP_IO) == 2);
  CHECK(modcap_exit_code(MODCAP_NO_BARYCENTER) == 2);
  CHECK(modcap_exit_code(MODCAP_CAP_EXCEEDED) == 2);
}

TEST_CASE("instances through the C API") {
  modcap_instance* inst = load("minimal.json");
  CHECK(std::string(modcap_instance_name(inst)) == "minimal");
  CHECK(modcap_instance_points(inst) == 2);
  char* text = nullptr;
  REQUIRE(modcap_instance_serialize(inst, &text) == MODCAP_OK);
  modcap_instance* again = nullptr;
  REQUIRE(modcap_instance_parse(text, &again) == MODCAP_OK);
  modcap_string_free(text);
  modcap_instance_free(again);
  modcap_instance_free(inst);

  modcap_instance* bad = nullptr;
  CHECK(modcap_instance_parse("{\"space\": 3}", &bad) == MODCAP_INVALID_INPUT);
  CHECK(bad == nullptr);
  CHECK(std::strlen(modcap_last_error()) > 0);
  CHECK(modcap_instance_load("/nonexistent.json", &bad) == MODCAP_IO);
  CHECK(modcap_instance_generate(0, 1000, 1, 0.5, &bad) == MODCAP_CAP_EXCEEDED);
  CHECK(modcap_instance_load(nullptr, &bad) == MODCAP_INVALID_INPUT);
}

TEST_CASE("solve and write results") {
  modcap_instance* inst = load("minimal.json");
  modcap_solution* a = nullptr;
  modcap_solution* b = nullptr;
  REQUIRE(modcap_solve(inst, "both", 2.0, nullptr, &a) == MODCAP_OK);
  REQUIRE(modcap_solve(inst, "edge", 2.0, nullptr, &b) == MODCAP_OK);
  // f = 1 on both points
  CHECK(modcap_solution_value(a) == doctest::Approx(1.0).epsilon(1e-9));
  // single edge, split half and half: f = 1
  CHECK(modcap_solution_value(b) == doctest::Approx(1.0).epsilon(1e-9));
  double f[2] = {0, 0};
  CHECK(modcap_solution_density(b, f, 2) == 2);
  CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(modcap_solution_gap(a) <= 1e-9);
  CHECK(modcap_solution_empty_family(a) == 0);

  const std::string path = (std::filesystem::temp_directory_path() / ("modcap_capi_" + std::to_string(std::random_device{}()) + ".csv")).string();
  const modcap_solution* sols[] = {a, b};
  REQUIRE(modcap_results_write(sols, 2, path.c_str(), "csv", 9) == MODCAP_OK);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string csv = ss.str();
  CHECK(csv.rfind("instance,family,p,value,dual_value,gap,iters,wall_ms,seed,n_active\n", 0) == 0);
  CHECK(csv.find("minimal,both,2,") != std::string::npos);
  CHECK(csv.find("minimal,edge,2,") != std::string::npos);
  CHECK(csv.find(",9,") != std::string::npos);
  std::remove(path.c_str());
  CHECK(modcap_results_write(sols, 2, "/nonexistent/x.csv", "csv", 0) == MODCAP_IO);
  CHECK(modcap_results_write(sols, 2, nullptr, "xml", 0) == MODCAP_INVALID_INPUT);

  modcap_solution* none = nullptr;
  CHECK(modcap_solve(inst, "missing", 2.0, nullptr, &none) == MODCAP_INVALID_INPUT);
  CHECK(modcap_solve(inst, "both", 1.0, nullptr, &none) == MODCAP_INVALID_INPUT);
  modcap_solution_free(a);
  modcap_solution_free(b);
  modcap_instance_free(inst);
}

TEST_CASE("duality, curve, plan and gradient operations") {
  modcap_instance* inst = load("square.json");
  char* report = nullptr;
  char* plan = nullptr;
  CHECK(modcap_duality(inst, "pair", 2.0, nullptr, &report, &plan) == MODCAP_OK);
  const std::string r = take(report);
  CHECK(r.find("\"identity_ok\": true") != std::string::npos);
  CHECK(take(plan).find("\"probs\"") != std::string::npos);

  modcap_solve_options starved{0.0, 1};
  report = nullptr;
  const modcap_status st = modcap_duality(inst, "lr", 2.0, &starved, &report, nullptr);
  CHECK(st != MODCAP_OK);
  modcap_string_free(report);

  char* out = nullptr;
  REQUIRE(modcap_curve_op(inst, "top", "resample", &out) == MODCAP_OK);
  CHECK(take(out).find("\"speed\"") != std::string::npos);
  REQUIRE(modcap_curve_op(inst, "bottom", "mmap", &out) == MODCAP_OK);
  take(out);
  CHECK(modcap_curve_op(inst, "bottom", "twist", &out) == MODCAP_INVALID_INPUT);

  report = plan = nullptr;
  REQUIRE(modcap_plan_op(inst, "rows", "check", 2.0, 0.0, 0, &report, &plan) == MODCAP_OK);
  CHECK(take(report).find("\"is_test_plan\": true") != std::string::npos);
  CHECK(plan == nullptr);
  REQUIRE(modcap_plan_op(inst, "mixed", "improve", 2.0, 1.0, 0, &report, &plan) == MODCAP_OK);
  take(report);
  CHECK(take(plan).find("\"probs\"") != std::string::npos);
  REQUIRE(modcap_plan_op(inst, "mixed", "stretch", 2.0, 0.25, 32, &report, &plan) == MODCAP_OK);
  take(report);
  take(plan);
  CHECK(modcap_plan_op(inst, "rows", "stretch", 2.0, 0.75, 32, &report, &plan) == MODCAP_INVALID_INPUT);

  const char* plans[] = {"rows"};
  REQUIRE(modcap_grad_check(inst, "x", "one", "lr", plans, 1, 2.0, &report) == MODCAP_OK);
  const std::string g = take(report);
  CHECK(g.find("\"n_violations\": 0") != std::string::npos);
  REQUIRE(modcap_grad_check(inst, "step", "zero", "lr", plans, 1, 2.0, &report) == MODCAP_OK);
  CHECK(take(report).find("\"implication_holds\": true") != std::string::npos);
  CHECK(modcap_grad_check(inst, "x", "one", "pair", plans, 1, 2.0, &report) == MODCAP_INVALID_INPUT);
  modcap_instance_free(inst);
}
