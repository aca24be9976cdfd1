#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modcap/curves.hpp"
#include "modcap/family.hpp"
#include "modcap/plans.hpp"
#include "modcap/space.hpp"

namespace modcap {

struct NamedCurve {
  std::string name;
  ParametricCurve curve;
};

struct NamedPlan {
  std::string name;
  /// Curve name per support atom; empty for curves given inline.
  std::vector<std::string> refs;
  CurvePlan plan;
};

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

struct Instance {
  std::string name;
  MetricMeasureSpace space;
  std::vector<MeasureFamily> families;
  std::vector<NamedCurve> curves;
  std::vector<NamedPlan> plans;
  std::vector<NamedColumn> columns;

  const MeasureFamily& family(const std::string& key) const;
  const ParametricCurve& curve(const std::string& key) const;
  const NamedPlan& plan(const std::string& key) const;
  const std::vector<double>& column(const std::string& key) const;
};

/// Parses and validates an instance document. Errors name the offending
/// field (e.g. `space.edges[3]`) or the line and column of a syntax error.
Instance parse_instance(const std::string& text, const std::string& name = "instance");
Instance load_instance(const std::string& path);
std::string serialize_instance(const Instance& inst);

std::string serialize_curve(const ParametricCurve& curve);
std::string serialize_plan(const CurvePlan& plan);
std::string serialize_measure_plan_json(const std::vector<std::size_t>& members,
                                        const std::vector<double>& probabilities,
                                        const std::vector<double>& barycenter, double c_q);

inline constexpr std::size_t max_random_points = 200;
inline constexpr std::size_t max_random_measures = 1000;

/// Connected random graph with a positive measure and one explicit family
/// named "random" whose members each charge about `sparsity * n_points`
/// points. Deterministic per seed.
Instance generate_random_instance(std::uint64_t seed, std::size_t n_points, std::size_t n_measures,
                                  double sparsity);

struct ResultRecord {
  std::string instance;
  std::string family;
  double p = 0.0;
  double value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  std::size_t iters = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_active = 0;
};

enum class ResultFormat { csv, ndjson };

std::optional<ResultFormat> parse_format(const std::string& text);
/// Writes `inf` for infinite values. csv gets a header line.
void emit_results(std::ostream& out, const std::vector<ResultRecord>& records, ResultFormat format);
void emit_results(const std::string& path, const std::vector<ResultRecord>& records,
                  ResultFormat format);
std::string format_number(double v);

}  // namespace modcap
