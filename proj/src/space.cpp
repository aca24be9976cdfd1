#include "modcap/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <utility>

#include "modcap/error.hpp"

namespace modcap {

DiscreteMeasure DiscreteMeasure::from_atoms(std::vector<Atom> atoms) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.weight) || a.weight < 0.0) {
      fail(ErrorCode::invalid_input,
           "measure weight at index " + std::to_string(a.index) +
               " must be finite and nonnegative");
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.index < b.index; });
  DiscreteMeasure mu;
  for (const Atom& a : atoms) {
    if (!mu.atoms_.empty() && mu.atoms_.back().index == a.index) {
      mu.atoms_.back().weight += a.weight;
    } else {
      mu.atoms_.push_back(a);
    }
  }
  std::erase_if(mu.atoms_, [](const Atom& a) { return a.weight == 0.0; });
  for (const Atom& a : mu.atoms_) mu.total_ += a.weight;
  return mu;
}

DiscreteMeasure DiscreteMeasure::from_dense(std::span<const double> weights) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) atoms.push_back({i, weights[i]});
  }
  return from_atoms(std::move(atoms));
}

DiscreteMeasure DiscreteMeasure::dirac(std::size_t index, double weight) {
  return from_atoms({{index, weight}});
}

double DiscreteMeasure::at(std::size_t index) const {
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), index,
      [](const Atom& a, std::size_t i) { return a.index < i; });
  return (it != atoms_.end() && it->index == index) ? it->weight : 0.0;
}

std::size_t DiscreteMeasure::max_index() const {
  return atoms_.empty() ? 0 : atoms_.back().index;
}

DiscreteMeasure DiscreteMeasure::scaled(double c) const {
  std::vector<Atom> atoms(atoms_);
  for (Atom& a : atoms) a.weight *= c;
  return from_atoms(std::move(atoms));
}

double DiscreteMeasure::integrate(std::span<const double> f) const {
  double sum = 0.0;
  for (const Atom& a : atoms_) sum += f[a.index] * a.weight;
  return sum;
}

std::vector<double> DiscreteMeasure::dense(std::size_t size) const {
  std::vector<double> out(size, 0.0);
  for (const Atom& a : atoms_) out[a.index] += a.weight;
  return out;
}

double measure_total(const DiscreteMeasure& mu) {
  double sum = 0.0;
  for (const Atom& a : mu.atoms()) sum += a.weight;
  return sum;
}

MetricMeasureSpace::MetricMeasureSpace(
    std::size_t n_points, std::vector<Edge> edges, std::vector<double> measure,
    std::optional<std::vector<double>> edge_measure,
    std::vector<std::array<double, 2>> coords)
    : edges_(std::move(edges)),
      measure_(std::move(measure)),
      coords_(std::move(coords)) {
  if (n_points == 0) fail(ErrorCode::invalid_input, "space has no points");
  if (measure_.size() != n_points) {
    fail(ErrorCode::invalid_input,
         "measure has " + std::to_string(measure_.size()) +
             " entries, expected " + std::to_string(n_points));
  }
  for (std::size_t x = 0; x < n_points; ++x) {
    if (!std::isfinite(measure_[x]) || measure_[x] < 0.0) {
      fail(ErrorCode::invalid_input,
           "measure of point " + std::to_string(x) + " is negative or not finite");
    }
  }
  if (!coords_.empty() && coords_.size() != n_points) {
    fail(ErrorCode::invalid_input, "coords size does not match point count");
  }

  std::set<std::pair<PointId, PointId>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    const std::string tag = "edge " + std::to_string(e) + " (" +
                            std::to_string(ed.u) + ", " + std::to_string(ed.v) + ")";
    if (ed.u >= n_points || ed.v >= n_points) {
      fail(ErrorCode::invalid_input, tag + " references a missing point");
    }
    if (ed.u == ed.v) fail(ErrorCode::invalid_input, tag + " is a self-loop");
    if (!std::isfinite(ed.length) || ed.length <= 0.0) {
      fail(ErrorCode::invalid_input, tag + " must have positive finite length");
    }
    auto key = std::minmax(ed.u, ed.v);
    if (!seen.insert({key.first, key.second}).second) {
      fail(ErrorCode::invalid_input, tag + " duplicates an earlier edge");
    }
  }

  if (edge_measure) {
    if (edge_measure->size() != edges_.size()) {
      fail(ErrorCode::invalid_input, "edge_measure size does not match edge count");
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      double w = (*edge_measure)[e];
      if (!std::isfinite(w) || w < 0.0) {
        fail(ErrorCode::invalid_input,
             "edge_measure of edge " + std::to_string(e) + " is negative or not finite");
      }
    }
    edge_measure_ = std::move(*edge_measure);
    explicit_edge_measure_ = true;
  } else {
    edge_measure_.reserve(edges_.size());
    for (const Edge& ed : edges_) edge_measure_.push_back(ed.length * ed.length);
  }

  std::vector<std::size_t> degree(n_points, 0);
  for (const Edge& ed : edges_) {
    ++degree[ed.u];
    ++degree[ed.v];
  }
  adjacency_offsets_.assign(n_points + 1, 0);
  for (std::size_t x = 0; x < n_points; ++x) {
    adjacency_offsets_[x + 1] = adjacency_offsets_[x] + degree[x];
  }
  adjacency_.resize(adjacency_offsets_.back());
  std::vector<std::size_t> fill(adjacency_offsets_.begin(), adjacency_offsets_.end() - 1);
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    adjacency_[fill[edges_[e].u]++] = {edges_[e].v, e};
    adjacency_[fill[edges_[e].v]++] = {edges_[e].u, e};
  }
  for (std::size_t x = 0; x < n_points; ++x) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[x]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[x + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.to < b.to; });
  }
}

double MetricMeasureSpace::total_mass() const {
  double sum = 0.0;
  for (double w : measure_) sum += w;
  return sum;
}

std::span<const Neighbor> MetricMeasureSpace::neighbors(PointId x) const {
  return std::span<const Neighbor>(adjacency_).subspan(
      adjacency_offsets_[x], adjacency_offsets_[x + 1] - adjacency_offsets_[x]);
}

EdgeId MetricMeasureSpace::edge_between(PointId a, PointId b) const {
  if (a >= size() || b >= size()) return no_edge;
  auto nb = neighbors(a);
  auto it = std::lower_bound(nb.begin(), nb.end(), b,
                             [](const Neighbor& n, PointId y) { return n.to < y; });
  return (it != nb.end() && it->to == b) ? it->edge : no_edge;
}

std::vector<double> MetricMeasureSpace::distances_from(PointId source) const {
  std::vector<double> dist(size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, PointId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, x] = heap.top();
    heap.pop();
    if (d > dist[x]) continue;
    for (const Neighbor& nb : neighbors(x)) {
      double nd = d + edges_[nb.edge].length;
      if (nd < dist[nb.to]) {
        dist[nb.to] = nd;
        heap.push({nd, nb.to});
      }
    }
  }
  return dist;
}

MetricMeasureSpace build_grid_space(std::size_t nx, std::size_t ny, CellMeasure mode,
                                    std::span<const double> weights) {
  if (nx == 0 || ny == 0) fail(ErrorCode::invalid_input, "grid dimensions must be positive");
  const std::size_t n = nx * ny;
  const double hx = 1.0 / static_cast<double>(std::max<std::size_t>(nx - 1, 1));
  const double hy = 1.0 / static_cast<double>(std::max<std::size_t>(ny - 1, 1));

  std::vector<Edge> edges;
  edges.reserve(2 * n);
  auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      if (i + 1 < nx) edges.push_back({id(i, j), id(i + 1, j), hx});
      if (j + 1 < ny) edges.push_back({id(i, j), id(i, j + 1), hy});
    }
  }

  std::vector<double> measure;
  if (mode == CellMeasure::uniform) {
    measure.assign(n, 1.0 / static_cast<double>(n));
  } else {
    if (weights.size() != n) {
      fail(ErrorCode::invalid_input, "custom grid weights must have nx*ny entries");
    }
    measure.assign(weights.begin(), weights.end());
  }

  std::vector<std::array<double, 2>> coords(n);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      coords[id(i, j)] = {nx > 1 ? static_cast<double>(i) * hx : 0.0,
                          ny > 1 ? static_cast<double>(j) * hy : 0.0};
    }
  }
  // Five-point-stencil weights: every edge carries one cell of area hx*hy.
  std::vector<double> edge_measure(edges.size(), hx * hy);
  return MetricMeasureSpace(n, std::move(edges), std::move(measure),
                            std::move(edge_measure), std::move(coords));
}

}  // namespace modcap
