#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace {

const std::string cli = MODCAP_CLI;
const std::string data = MODCAP_DATA_DIR;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = cli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& suffix) {
  static std::random_device rd;
  return (std::filesystem::temp_directory_path() / ("modcap_cli_" + std::to_string(rd()) + suffix)).string();
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("solve --instance " + data + "/minimal.json").code == 2);  // --family missing
  CHECK(run("solve --instance " + data + "/minimal.json --family both --p 1").code == 2);
  CHECK(run("solve --instance " + data + "/minimal.json --family both --format xml").code == 2);
  CHECK(run("solve --instance /nonexistent.json --family both").code == 2);
}

TEST_CASE("solve writes csv with the seed echoed") {
  const Run r = run("solve --instance " + data + "/square.json --family pair --family lr --p 2 --seed 5");
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, a, b, extra;
  std::getline(lines, header);
  std::getline(lines, a);
  std::getline(lines, b);
  CHECK(header == "instance,family,p,value,dual_value,gap,iters,wall_ms,seed,n_active");
  CHECK(a.rfind("square,pair,2,", 0) == 0);
  CHECK(b.rfind("square,lr,2,", 0) == 0);
  CHECK(b.find(",5,") != std::string::npos);
  CHECK_FALSE(std::getline(lines, extra));

  const std::string out = tmp(".ndjson");
  REQUIRE(run("solve --instance " + data + "/square.json --family pair --format ndjson --out " + out).code == 0);
  CHECK(slurp(out).find("\"family\":\"pair\"") != std::string::npos);
  std::remove(out.c_str());
}

TEST_CASE("duality command") {
  const std::string plan = tmp(".json");
  const Run r = run("duality --instance " + data + "/square.json --family lr --p 3 --emit-plan " + plan);
  CHECK(r.code == 0);
  CHECK(r.out.find("\"identity_ok\": true") != std::string::npos);
  CHECK(slurp(plan).find("\"barycenter\"") != std::string::npos);
  std::remove(plan.c_str());
  // starving the solver must never report success
  const Run starved = run("duality --instance " + data + "/square.json --family lr --max-iter 1");
  CHECK(starved.code != 0);
}

TEST_CASE("curve, plan and gradient commands") {
  const std::string sq = " --instance " + data + "/square.json";
  CHECK(run("curve jmap" + sq + " --curve wander").code == 0);
  CHECK(run("curve mult" + sq + " --curve wander").out.find("\"edges\"") != std::string::npos);
  CHECK(run("curve resample" + sq + " --curve nope").code == 2);
  CHECK(run("plan check" + sq + " --plan rows").out.find("\"c_min\"") != std::string::npos);
  const std::string out = tmp(".json");
  CHECK(run("plan improve" + sq + " --plan mixed --q 3 --eps 1.5 --out " + out).code == 0);
  CHECK(slurp(out).find("\"curves\"") != std::string::npos);
  CHECK(run("plan stretch" + sq + " --plan mixed --eps 0.2 --ntau 16 --out " + out).code == 0);
  std::remove(out.c_str());
  CHECK(run("plan stretch" + sq + " --plan mixed --eps 0.7").code == 2);
  const Run g = run("grad check" + sq + " --f x --g one --family lr --plans rows mixed");
  CHECK(g.code == 0);
  CHECK(g.out.find("\"n_violations\": 0") != std::string::npos);
}

TEST_CASE("gen is deterministic and loads back") {
  const std::string a = tmp(".json"), b = tmp(".json");
  REQUIRE(run("gen --seed 3 --points 12 --measures 4 --out " + a).code == 0);
  REQUIRE(run("gen --seed 3 --points 12 --measures 4 --out " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(run("solve --instance " + a + " --family random").code == 0);
  CHECK(run("gen --points 999").code == 2);
  std::remove(a.c_str());
  std::remove(b.c_str());
}
