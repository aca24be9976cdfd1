#include "modcap/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "modcap/error.hpp"

namespace modcap {
namespace {

std::vector<char> membership(std::size_t n, std::span<const PointId> ids) {
  std::vector<char> in(n, 0);
  for (PointId x : ids) in[x] = 1;
  return in;
}

double edge_weight(const MetricMeasureSpace& space, EdgeId e, Quadrature quadrature,
                   std::span<const double> density) {
  const Edge& ed = space.edge(e);
  if (quadrature == Quadrature::edge) return ed.length * density[e];
  return ed.length * 0.5 * (density[ed.u] + density[ed.v]);
}

}  // namespace

Ground ground_of(const MeasureFamily& family) {
  if (const auto* paths = std::get_if<PathMembers>(&family.members)) {
    return paths->quadrature == Quadrature::edge ? Ground::edges : Ground::points;
  }
  return Ground::points;
}

std::span<const double> ground_measure(const MetricMeasureSpace& space, Ground ground) {
  return ground == Ground::edges ? space.edge_measure() : space.measure();
}

void validate_family(const MeasureFamily& family, const MetricMeasureSpace& space) {
  const std::string where = "family '" + family.name + "': ";
  if (const auto* ex = std::get_if<ExplicitMembers>(&family.members)) {
    for (std::size_t i = 0; i < ex->measures.size(); ++i) {
      const DiscreteMeasure& mu = ex->measures[i];
      if (!mu.is_zero() && mu.max_index() >= space.size()) {
        fail(ErrorCode::invalid_input,
             where + "measure " + std::to_string(i) + " charges missing point " +
                 std::to_string(mu.max_index()));
      }
    }
  } else if (const auto* pm = std::get_if<PathMembers>(&family.members)) {
    if (pm->source.empty() || pm->target.empty()) {
      fail(ErrorCode::invalid_input, where + "source and target must be nonempty");
    }
    for (PointId x : pm->source) {
      if (x >= space.size()) fail(ErrorCode::invalid_input, where + "source point out of range");
    }
    for (PointId x : pm->target) {
      if (x >= space.size()) fail(ErrorCode::invalid_input, where + "target point out of range");
    }
    auto in_source = membership(space.size(), pm->source);
    for (PointId x : pm->target) {
      if (in_source[x]) {
        fail(ErrorCode::invalid_input,
             where + "point " + std::to_string(x) + " is both source and target");
      }
    }
  }
}

DiscreteMeasure path_measure(const MetricMeasureSpace& space, std::span<const PointId> path,
                             Quadrature quadrature) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const EdgeId e = space.edge_between(path[i], path[i + 1]);
    if (e == no_edge) {
      fail(ErrorCode::invalid_input, "path points " + std::to_string(path[i]) + " and " +
                                         std::to_string(path[i + 1]) + " are not adjacent");
    }
    const double len = space.edge(e).length;
    if (quadrature == Quadrature::edge) {
      atoms.push_back({e, len});
    } else {
      atoms.push_back({path[i], 0.5 * len});
      atoms.push_back({path[i + 1], 0.5 * len});
    }
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

PathEnumeration enumerate_simple_paths(const MetricMeasureSpace& space, const PathMembers& members,
                                       std::size_t limit) {
  const std::size_t n = space.size();
  auto in_source = membership(n, members.source);
  auto in_target = membership(n, members.target);
  const std::size_t max_hops = members.max_hops.value_or(n);

  PathEnumeration out;
  std::vector<char> visited(n, 0);
  PointPath path;

  // Returns false once limit + 1 paths have been seen.
  auto dfs = [&](auto&& self) -> bool {
    const PointId x = path.back();
    if (path.size() - 1 >= max_hops) return true;
    for (const Neighbor& nb : space.neighbors(x)) {
      const PointId y = nb.to;
      if (in_target[y]) {
        if (out.paths.size() == limit) {
          out.truncated = true;
          return false;
        }
        path.push_back(y);
        out.paths.push_back(path);
        path.pop_back();
        continue;
      }
      if (in_source[y] || visited[y]) continue;
      visited[y] = 1;
      path.push_back(y);
      const bool go_on = self(self);
      path.pop_back();
      visited[y] = 0;
      if (!go_on) return false;
    }
    return true;
  };

  std::vector<PointId> sources(members.source);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  for (PointId s : sources) {
    path.assign(1, s);
    if (!dfs(dfs)) break;
  }
  return out;
}

FamilyEnumeration enumerate_family(const MeasureFamily& family, const MetricMeasureSpace& space,
                                   std::size_t limit) {
  validate_family(family, space);
  FamilyEnumeration out;
  out.ground = ground_of(family);
  if (const auto* ex = std::get_if<ExplicitMembers>(&family.members)) {
    out.measures = ex->measures;
    if (out.measures.size() > limit) {
      out.measures.resize(limit);
      out.truncated = true;
    }
  } else if (const auto* pm = std::get_if<PathMembers>(&family.members)) {
    PathEnumeration paths = enumerate_simple_paths(space, *pm, limit);
    out.truncated = paths.truncated;
    for (const PointPath& path : paths.paths) {
      out.measures.push_back(path_measure(space, path, pm->quadrature));
    }
    out.paths = std::move(paths.paths);
  } else {
    const auto& cm = std::get<CurveMembers>(family.members);
    for (const ParametricCurve& curve : cm.curves) {
      if (out.measures.size() == limit) {
        out.truncated = true;
        break;
      }
      out.measures.push_back(cm.map == CurveMap::j ? j_map(curve) : m_map(curve));
    }
  }
  return out;
}

std::optional<OraclePath> cheapest_path(const MetricMeasureSpace& space, const PathMembers& members,
                                        std::span<const double> density) {
  const std::size_t n = space.size();
  const double inf = std::numeric_limits<double>::infinity();
  auto in_source = membership(n, members.source);
  auto in_target = membership(n, members.target);
  const std::size_t budget = std::min(members.max_hops.value_or(n - 1), n - 1);

  // Layer h holds, per point, the cheapest (cost, hops) continuation to the
  // target set using at most h hops through non-source, non-target points.
  struct Label {
    double cost;
    std::size_t hops;
  };
  auto better = [](const Label& a, const Label& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.hops < b.hops);
  };
  std::vector<std::vector<Label>> layers(budget + 1,
                                         std::vector<Label>(n, Label{inf, 0}));
  for (PointId t : members.target) layers[0][t] = {0.0, 0};
  for (std::size_t h = 1; h <= budget; ++h) {
    const auto& prev = layers[h - 1];
    auto& cur = layers[h];
    cur = prev;
    bool changed = false;
    for (PointId x = 0; x < n; ++x) {
      if (in_target[x]) continue;
      for (const Neighbor& nb : space.neighbors(x)) {
        const PointId y = nb.to;
        if (in_source[y] || prev[y].cost == inf) continue;
        Label cand{edge_weight(space, nb.edge, members.quadrature, density) + prev[y].cost,
                   prev[y].hops + 1};
        if (better(cand, cur[x])) {
          cur[x] = cand;
          changed = true;
        }
      }
    }
    if (!changed) {
      layers.resize(h + 1);
      break;
    }
  }
  const std::size_t top = layers.size() - 1;

  std::vector<PointId> sources(members.source);
  std::sort(sources.begin(), sources.end());
  PointId start = n;
  for (PointId s : sources) {
    if (layers[top][s].cost == inf) continue;
    if (start == n || better(layers[top][s], layers[top][start])) start = s;
  }
  if (start == n) return std::nullopt;

  OraclePath out{{start}, layers[top][start].cost};
  std::vector<char> visited(n, 0);
  visited[start] = 1;
  PointId x = start;
  Label want = layers[top][start];
  std::size_t h = top;
  while (!in_target[x]) {
    const auto& prev = layers[h - 1];
    const double slack = 1e-12 * std::max(1.0, want.cost);
    PointId next = n;
    for (const Neighbor& nb : space.neighbors(x)) {
      const PointId y = nb.to;
      if (in_source[y] || visited[y] || prev[y].cost == inf) continue;
      if (prev[y].hops + 1 != want.hops) continue;
      const double w = edge_weight(space, nb.edge, members.quadrature, density);
      if (std::abs(w + prev[y].cost - want.cost) <= slack) {
        next = y;
        break;
      }
    }
    if (next == n) fail(ErrorCode::invalid_input, "shortest-path reconstruction failed");
    visited[next] = 1;
    out.nodes.push_back(next);
    want = prev[next];
    x = next;
    --h;
  }
  return out;
}

}  // namespace modcap
