#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "modcap/curves.hpp"
#include "modcap/space.hpp"

namespace modcap {

/// Where densities live: on points (reference measure m) or on edges
/// (reference measure m_e).
enum class Ground { points, edges };

/// How a path is turned into a measure: arc length split between the two
/// halves of every edge (node), or kept on the edges themselves (edge).
enum class Quadrature { node, edge };

enum class CurveMap { j, m };

struct ExplicitMembers {
  std::vector<DiscreteMeasure> measures;
};

/// Simple paths that start in `source`, never return to it, and stop at the
/// first point of `target`.
struct PathMembers {
  std::vector<PointId> source;
  std::vector<PointId> target;
  std::optional<std::size_t> max_hops;
  Quadrature quadrature = Quadrature::node;
};

struct CurveMembers {
  std::vector<std::string> names;
  std::vector<ParametricCurve> curves;
  CurveMap map = CurveMap::j;
};

struct MeasureFamily {
  std::string name;
  std::variant<ExplicitMembers, PathMembers, CurveMembers> members;
};

Ground ground_of(const MeasureFamily& family);
std::span<const double> ground_measure(const MetricMeasureSpace& space, Ground ground);

/// Throws `invalid_input` when the family does not fit the space.
void validate_family(const MeasureFamily& family, const MetricMeasureSpace& space);

using PointPath = std::vector<PointId>;

/// Measure of a path: its arc-length measure under the given quadrature.
DiscreteMeasure path_measure(const MetricMeasureSpace& space, std::span<const PointId> path,
                             Quadrature quadrature);

struct PathEnumeration {
  std::vector<PointPath> paths;
  bool truncated = false;
};

/// Depth-first enumeration in lexicographic order of point sequences,
/// stopping after `limit` paths.
PathEnumeration enumerate_simple_paths(const MetricMeasureSpace& space, const PathMembers& members,
                                       std::size_t limit);

struct FamilyEnumeration {
  std::vector<DiscreteMeasure> measures;
  std::vector<PointPath> paths;  // filled for path families
  Ground ground = Ground::points;
  bool truncated = false;
};

FamilyEnumeration enumerate_family(const MeasureFamily& family, const MetricMeasureSpace& space,
                                   std::size_t limit);

struct OraclePath {
  PointPath nodes;
  double cost;
};

/// Cheapest member of a path family under `density` (on points or edges as
/// given by the quadrature). Ties: fewer hops, then the lexicographically
/// smallest point sequence. Empty when no member exists.
std::optional<OraclePath> cheapest_path(const MetricMeasureSpace& space, const PathMembers& members,
                                        std::span<const double> density);

}  // namespace modcap
