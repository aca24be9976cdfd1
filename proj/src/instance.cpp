#include "modcap/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "modcap/error.hpp"

namespace modcap {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::invalid_input, where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                std::initializer_list<const char*> required = {}) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) bad(where, "unknown key '" + item.key() + "'");
  }
  for (const char* k : required) {
    if (!obj.contains(k)) bad(where, "missing key '" + std::string(k) + "'");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where, "expected a finite number");
  return x;
}

std::size_t index(const json& v, const std::string& where, std::size_t bound) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(where, "expected a nonnegative integer");
  const auto i = v.get<std::size_t>();
  if (i >= bound) bad(where, "index " + std::to_string(i) + " is out of range (" + std::to_string(bound) + " points)");
  return i;
}

const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array");
  return v;
}

std::string at(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

std::vector<double> numbers(const json& v, const std::string& where) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(v, where).size(); ++i) out.push_back(number(v[i], at(where, i)));
  return out;
}

std::vector<PointId> point_list(const json& v, const std::string& where, std::size_t n) {
  std::vector<PointId> out;
  for (std::size_t i = 0; i < array(v, where).size(); ++i) out.push_back(index(v[i], at(where, i), n));
  return out;
}

MetricMeasureSpace parse_space(const json& s) {
  check_keys(s, "space", {"points", "edges", "measure", "edge_measure", "coords"},
             {"points", "edges", "measure"});
  if (!s["points"].is_number_integer() || s["points"].get<long long>() < 1) {
    bad("space.points", "expected a positive integer");
  }
  const auto n = s["points"].get<std::size_t>();
  std::vector<Edge> edges;
  const json& ej = array(s["edges"], "space.edges");
  for (std::size_t i = 0; i < ej.size(); ++i) {
    const std::string where = at("space.edges", i);
    if (!ej[i].is_array() || ej[i].size() != 3) bad(where, "expected [u, v, length]");
    const PointId u = index(ej[i][0], where + ".u", n);
    const PointId v = index(ej[i][1], where + ".v", n);
    const double len = number(ej[i][2], where + ".length");
    if (!(len > 0.0)) bad(where, "edge length must be positive");
    if (u == v) bad(where, "self-loop at point " + std::to_string(u));
    edges.push_back({u, v, len});
  }
  std::vector<double> measure = numbers(s["measure"], "space.measure");
  if (measure.size() != n) bad("space.measure", "expected " + std::to_string(n) + " entries");
  for (std::size_t x = 0; x < n; ++x) {
    if (measure[x] < 0.0) bad(at("space.measure", x), "negative measure at point " + std::to_string(x));
  }
  std::optional<std::vector<double>> edge_measure;
  if (s.contains("edge_measure")) {
    edge_measure = numbers(s["edge_measure"], "space.edge_measure");
    if (edge_measure->size() != edges.size()) bad("space.edge_measure", "expected one entry per edge");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if ((*edge_measure)[e] < 0.0) bad(at("space.edge_measure", e), "negative edge measure");
    }
  }
  std::vector<std::array<double, 2>> coords;
  if (s.contains("coords")) {
    const json& cj = array(s["coords"], "space.coords");
    if (cj.size() != n) bad("space.coords", "expected one coordinate pair per point");
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> xy = numbers(cj[i], at("space.coords", i));
      if (xy.size() != 2) bad(at("space.coords", i), "expected [x, y]");
      coords.push_back({xy[0], xy[1]});
    }
  }
  try {
    return MetricMeasureSpace(n, std::move(edges), std::move(measure), std::move(edge_measure),
                              std::move(coords));
  } catch (const Error& e) {
    bad("space", e.what());
  }
}

ParametricCurve parse_curve(const json& c, const std::string& where, const MetricMeasureSpace& space) {
  check_keys(c, where, {"nodes", "times"}, {"nodes", "times"});
  std::vector<Position> positions;
  const json& nj = array(c["nodes"], where + ".nodes");
  for (std::size_t i = 0; i < nj.size(); ++i) {
    const std::string w = at(where + ".nodes", i);
    if (nj[i].is_array()) {
      if (nj[i].size() != 3) bad(w, "expected a point id or [u, v, s]");
      positions.push_back({index(nj[i][0], w, space.size()), index(nj[i][1], w, space.size()),
                           number(nj[i][2], w)});
    } else {
      positions.push_back(Position::node(index(nj[i], w, space.size())));
    }
  }
  const std::vector<double> times = numbers(c["times"], where + ".times");
  try {
    return ParametricCurve::from_positions(space, positions, times);
  } catch (const Error& e) {
    bad(where, e.what());
  }
}

json curve_json(const ParametricCurve& curve) {
  json nodes = json::array();
  for (const Position& p : curve.vertices()) {
    if (p.is_node()) {
      nodes.push_back(p.a);
    } else {
      nodes.push_back(json::array({p.a, p.b, p.s}));
    }
  }
  json out;
  out["nodes"] = std::move(nodes);
  out["times"] = std::vector<double>(curve.times().begin(), curve.times().end());
  return out;
}

json measure_json(const DiscreteMeasure& mu) {
  json atoms = json::array();
  for (const Atom& a : mu.atoms()) atoms.push_back(json::array({a.index, a.weight}));
  return atoms;
}

MeasureFamily parse_family(const std::string& name, const json& f, const Instance& inst) {
  const std::string where = "families." + name;
  if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string()) {
    bad(where, "expected an object with a string 'kind'");
  }
  const std::string kind = f["kind"].get<std::string>();
  const std::size_t n = inst.space.size();
  MeasureFamily fam{name, ExplicitMembers{}};
  if (kind == "explicit") {
    check_keys(f, where, {"kind", "measures"}, {"measures"});
    ExplicitMembers members;
    const json& mj = array(f["measures"], where + ".measures");
    for (std::size_t i = 0; i < mj.size(); ++i) {
      const std::string w = at(where + ".measures", i);
      std::vector<Atom> atoms;
      for (std::size_t j = 0; j < array(mj[i], w).size(); ++j) {
        const std::string wa = at(w, j);
        if (!mj[i][j].is_array() || mj[i][j].size() != 2) bad(wa, "expected [point, weight]");
        const double weight = number(mj[i][j][1], wa);
        if (weight < 0.0) bad(wa, "negative weight");
        atoms.push_back({index(mj[i][j][0], wa, n), weight});
      }
      members.measures.push_back(DiscreteMeasure::from_atoms(std::move(atoms)));
    }
    fam.members = std::move(members);
  } else if (kind == "paths") {
    check_keys(f, where, {"kind", "source", "target", "max_hops", "quadrature"}, {"source", "target"});
    PathMembers members;
    members.source = point_list(f["source"], where + ".source", n);
    members.target = point_list(f["target"], where + ".target", n);
    if (f.contains("max_hops")) {
      if (!f["max_hops"].is_number_integer() || f["max_hops"].get<long long>() < 1) {
        bad(where + ".max_hops", "expected a positive integer");
      }
      members.max_hops = f["max_hops"].get<std::size_t>();
    }
    if (f.contains("quadrature")) {
      const std::string q = f["quadrature"].is_string() ? f["quadrature"].get<std::string>() : "";
      if (q == "node") {
        members.quadrature = Quadrature::node;
      } else if (q == "edge") {
        members.quadrature = Quadrature::edge;
      } else {
        bad(where + ".quadrature", "expected \"node\" or \"edge\"");
      }
    }
    fam.members = std::move(members);
  } else if (kind == "curves") {
    check_keys(f, where, {"kind", "curves", "map"}, {"curves"});
    CurveMembers members;
    const json& cj = array(f["curves"], where + ".curves");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      if (!cj[i].is_string()) bad(at(where + ".curves", i), "expected a curve name");
      const std::string key = cj[i].get<std::string>();
      auto it = std::find_if(inst.curves.begin(), inst.curves.end(),
                             [&](const NamedCurve& c) { return c.name == key; });
      if (it == inst.curves.end()) bad(at(where + ".curves", i), "unknown curve '" + key + "'");
      members.names.push_back(key);
      members.curves.push_back(it->curve);
    }
    if (f.contains("map")) {
      const std::string m = f["map"].is_string() ? f["map"].get<std::string>() : "";
      if (m == "J") {
        members.map = CurveMap::j;
      } else if (m == "M") {
        members.map = CurveMap::m;
      } else {
        bad(where + ".map", "expected \"J\" or \"M\"");
      }
    }
    fam.members = std::move(members);
  } else {
    bad(where + ".kind", "unknown kind '" + kind + "' (expected explicit, paths or curves)");
  }
  try {
    validate_family(fam, inst.space);
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return fam;
}

NamedPlan parse_plan(const std::string& name, const json& p, const Instance& inst) {
  const std::string where = "plans." + name;
  check_keys(p, where, {"curves", "probs"}, {"curves", "probs"});
  NamedPlan out{name, {}, {}};
  std::vector<ParametricCurve> curves;
  const json& cj = array(p["curves"], where + ".curves");
  for (std::size_t i = 0; i < cj.size(); ++i) {
    const std::string w = at(where + ".curves", i);
    if (cj[i].is_string()) {
      const std::string key = cj[i].get<std::string>();
      auto it = std::find_if(inst.curves.begin(), inst.curves.end(),
                             [&](const NamedCurve& c) { return c.name == key; });
      if (it == inst.curves.end()) bad(w, "unknown curve '" + key + "'");
      out.refs.push_back(key);
      curves.push_back(it->curve);
    } else {
      out.refs.emplace_back();
      curves.push_back(parse_curve(cj[i], w, inst.space));
    }
  }
  std::vector<double> probs = numbers(p["probs"], where + ".probs");
  try {
    out.plan = CurvePlan(std::move(curves), std::move(probs));
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return out;
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(u01(rng) * static_cast<double>(n)));
}

}  // namespace

const MeasureFamily& Instance::family(const std::string& key) const {
  for (const MeasureFamily& f : families) {
    if (f.name == key) return f;
  }
  fail(ErrorCode::invalid_input, "no family named '" + key + "'");
}

const ParametricCurve& Instance::curve(const std::string& key) const {
  for (const NamedCurve& c : curves) {
    if (c.name == key) return c.curve;
  }
  fail(ErrorCode::invalid_input, "no curve named '" + key + "'");
}

const NamedPlan& Instance::plan(const std::string& key) const {
  for (const NamedPlan& p : plans) {
    if (p.name == key) return p;
  }
  fail(ErrorCode::invalid_input, "no plan named '" + key + "'");
}

const std::vector<double>& Instance::column(const std::string& key) const {
  for (const NamedColumn& c : columns) {
    if (c.name == key) return c.values;
  }
  fail(ErrorCode::invalid_input, "no column named '" + key + "'");
}

Instance parse_instance(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::invalid_input, "syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  check_keys(doc, "instance", {"name", "space", "families", "curves", "plans", "columns"}, {"space"});
  Instance inst{name, parse_space(doc["space"]), {}, {}, {}, {}};
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) bad("name", "expected a string");
    inst.name = doc["name"].get<std::string>();
  }
  if (doc.contains("curves")) {
    if (!doc["curves"].is_object()) bad("curves", "expected an object");
    for (const auto& item : doc["curves"].items()) {
      inst.curves.push_back({item.key(), parse_curve(item.value(), "curves." + item.key(), inst.space)});
    }
  }
  if (doc.contains("families")) {
    if (!doc["families"].is_object()) bad("families", "expected an object");
    for (const auto& item : doc["families"].items()) {
      inst.families.push_back(parse_family(item.key(), item.value(), inst));
    }
  }
  if (doc.contains("plans")) {
    if (!doc["plans"].is_object()) bad("plans", "expected an object");
    for (const auto& item : doc["plans"].items()) {
      inst.plans.push_back(parse_plan(item.key(), item.value(), inst));
    }
  }
  if (doc.contains("columns")) {
    if (!doc["columns"].is_object()) bad("columns", "expected an object");
    for (const auto& item : doc["columns"].items()) {
      std::vector<double> values = numbers(item.value(), "columns." + item.key());
      if (values.size() != inst.space.size()) {
        bad("columns." + item.key(), "expected " + std::to_string(inst.space.size()) + " entries");
      }
      inst.columns.push_back({item.key(), std::move(values)});
    }
  }
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  return parse_instance(buf.str(), stem);
}

std::string serialize_instance(const Instance& inst) {
  json doc;
  doc["name"] = inst.name;
  json space;
  space["points"] = inst.space.size();
  json edges = json::array();
  for (const Edge& e : inst.space.edges()) edges.push_back(json::array({e.u, e.v, e.length}));
  space["edges"] = std::move(edges);
  space["measure"] = std::vector<double>(inst.space.measure().begin(), inst.space.measure().end());
  if (inst.space.has_explicit_edge_measure()) {
    space["edge_measure"] =
        std::vector<double>(inst.space.edge_measure().begin(), inst.space.edge_measure().end());
  }
  if (!inst.space.coords().empty()) {
    json coords = json::array();
    for (const auto& c : inst.space.coords()) coords.push_back(json::array({c[0], c[1]}));
    space["coords"] = std::move(coords);
  }
  doc["space"] = std::move(space);

  json families = json::object();
  for (const MeasureFamily& f : inst.families) {
    json fj;
    if (const auto* ex = std::get_if<ExplicitMembers>(&f.members)) {
      fj["kind"] = "explicit";
      json ms = json::array();
      for (const DiscreteMeasure& mu : ex->measures) ms.push_back(measure_json(mu));
      fj["measures"] = std::move(ms);
    } else if (const auto* pm = std::get_if<PathMembers>(&f.members)) {
      fj["kind"] = "paths";
      fj["source"] = pm->source;
      fj["target"] = pm->target;
      if (pm->max_hops) fj["max_hops"] = *pm->max_hops;
      fj["quadrature"] = pm->quadrature == Quadrature::node ? "node" : "edge";
    } else {
      const auto& cm = std::get<CurveMembers>(f.members);
      fj["kind"] = "curves";
      fj["curves"] = cm.names;
      fj["map"] = cm.map == CurveMap::j ? "J" : "M";
    }
    families[f.name] = std::move(fj);
  }
  doc["families"] = std::move(families);

  json curves = json::object();
  for (const NamedCurve& c : inst.curves) curves[c.name] = curve_json(c.curve);
  doc["curves"] = std::move(curves);

  json plans = json::object();
  for (const NamedPlan& p : inst.plans) {
    json cj = json::array();
    for (std::size_t i = 0; i < p.plan.size(); ++i) {
      if (i < p.refs.size() && !p.refs[i].empty()) {
        cj.push_back(p.refs[i]);
      } else {
        cj.push_back(curve_json(p.plan.curves()[i]));
      }
    }
    json pj;
    pj["curves"] = std::move(cj);
    pj["probs"] = std::vector<double>(p.plan.probabilities().begin(), p.plan.probabilities().end());
    plans[p.name] = std::move(pj);
  }
  doc["plans"] = std::move(plans);

  json columns = json::object();
  for (const NamedColumn& c : inst.columns) columns[c.name] = c.values;
  doc["columns"] = std::move(columns);
  return doc.dump(2) + "\n";
}

std::string serialize_curve(const ParametricCurve& curve) { return curve_json(curve).dump() + "\n"; }

std::string serialize_plan(const CurvePlan& plan) {
  json cj = json::array();
  for (const ParametricCurve& c : plan.curves()) cj.push_back(curve_json(c));
  json out;
  out["curves"] = std::move(cj);
  out["probs"] = std::vector<double>(plan.probabilities().begin(), plan.probabilities().end());
  return out.dump() + "\n";
}

std::string serialize_measure_plan_json(const std::vector<std::size_t>& members,
                                        const std::vector<double>& probabilities,
                                        const std::vector<double>& barycenter, double c_q) {
  json out;
  out["members"] = members;
  out["probs"] = probabilities;
  out["barycenter"] = barycenter;
  out["c_q"] = c_q;
  return out.dump(2) + "\n";
}

Instance generate_random_instance(std::uint64_t seed, std::size_t n_points, std::size_t n_measures,
                                  double sparsity) {
  if (n_points == 0 || n_points > max_random_points) {
    fail(ErrorCode::cap_exceeded, "n_points must lie in [1, " + std::to_string(max_random_points) + "]");
  }
  if (n_measures > max_random_measures) {
    fail(ErrorCode::cap_exceeded, "n_measures must be at most " + std::to_string(max_random_measures));
  }
  if (!(sparsity > 0.0 && sparsity <= 1.0)) {
    fail(ErrorCode::invalid_input, "sparsity must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  std::set<std::pair<PointId, PointId>> seen;
  for (PointId v = 1; v < n_points; ++v) {
    const PointId u = pick(rng, v);
    edges.push_back({u, v, 0.5 + u01(rng)});
    seen.insert({u, v});
  }
  for (std::size_t extra = 0; extra < n_points / 2; ++extra) {
    PointId a = pick(rng, n_points);
    PointId b = pick(rng, n_points);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    edges.push_back({a, b, 0.5 + u01(rng)});
  }
  std::vector<double> measure(n_points);
  for (double& m : measure) m = 0.1 + u01(rng);

  ExplicitMembers members;
  for (std::size_t i = 0; i < n_measures; ++i) {
    std::vector<Atom> atoms;
    for (PointId x = 0; x < n_points; ++x) {
      if (u01(rng) < sparsity) atoms.push_back({x, 0.1 + u01(rng)});
    }
    if (atoms.empty()) atoms.push_back({pick(rng, n_points), 0.1 + u01(rng)});
    members.measures.push_back(DiscreteMeasure::from_atoms(std::move(atoms)));
  }
  Instance inst{"random-" + std::to_string(seed),
                MetricMeasureSpace(n_points, std::move(edges), std::move(measure)),
                {},
                {},
                {},
                {}};
  inst.families.push_back({"random", std::move(members)});
  if (n_points >= 2) {
    PathMembers paths;
    paths.source = {0};
    paths.target = {n_points - 1};
    inst.families.push_back({"paths", std::move(paths)});
  }
  return inst;
}

std::optional<ResultFormat> parse_format(const std::string& text) {
  if (text == "csv") return ResultFormat::csv;
  if (text == "ndjson") return ResultFormat::ndjson;
  return std::nullopt;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_results(std::ostream& out, const std::vector<ResultRecord>& records, ResultFormat format) {
  if (format == ResultFormat::csv) {
    out << "instance,family,p,value,dual_value,gap,iters,wall_ms,seed,n_active\n";
    for (const ResultRecord& r : records) {
      out << r.instance << ',' << r.family << ',' << format_number(r.p) << ','
          << format_number(r.value) << ',' << format_number(r.dual_value) << ','
          << format_number(r.gap) << ',' << r.iters << ',' << format_number(r.wall_ms) << ','
          << r.seed << ',' << r.n_active << '\n';
    }
    return;
  }
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  for (const ResultRecord& r : records) {
    json j;
    j["instance"] = r.instance;
    j["family"] = r.family;
    j["p"] = num(r.p);
    j["value"] = num(r.value);
    j["dual_value"] = num(r.dual_value);
    j["gap"] = num(r.gap);
    j["iters"] = r.iters;
    j["wall_ms"] = num(r.wall_ms);
    j["seed"] = r.seed;
    j["n_active"] = r.n_active;
    out << j.dump() << '\n';
  }
}

void emit_results(const std::string& path, const std::vector<ResultRecord>& records,
                  ResultFormat format) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write results to '" + path + "'");
  emit_results(out, records, format);
  if (!out) fail(ErrorCode::io, "error while writing '" + path + "'");
}

}  // namespace modcap
