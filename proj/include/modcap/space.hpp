#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace modcap {

using PointId = std::size_t;
using EdgeId = std::size_t;

inline constexpr EdgeId no_edge = static_cast<EdgeId>(-1);

struct Edge {
  PointId u;
  PointId v;
  double length;
};

struct Neighbor {
  PointId to;
  EdgeId edge;
};

/// One weighted atom of a finitely supported measure.
struct Atom {
  std::size_t index;
  double weight;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Nonnegative finitely supported measure. Indices refer to points, or to
/// edges for the edge-indexed variants produced by the curve maps; the
/// meaning is fixed by the producer.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Sorts atoms, merges repeated indices and drops exact zeros. Throws on
  /// negative or non-finite weights.
  static DiscreteMeasure from_atoms(std::vector<Atom> atoms);
  static DiscreteMeasure from_dense(std::span<const double> weights);
  static DiscreteMeasure dirac(std::size_t index, double weight = 1.0);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t support_size() const { return atoms_.size(); }
  bool is_zero() const { return atoms_.empty(); }
  double total() const { return total_; }
  double at(std::size_t index) const;
  std::size_t max_index() const;

  DiscreteMeasure scaled(double c) const;
  /// Integral of a dense function against this measure.
  double integrate(std::span<const double> f) const;
  /// Dense copy with `size` entries.
  std::vector<double> dense(std::size_t size) const;

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<Atom> atoms_;
  double total_ = 0.0;
};

double measure_total(const DiscreteMeasure& mu);

/// Finite graph with edge lengths and a reference measure on points. The
/// distance is the shortest-path metric. An optional measure on edges is
/// used by the edge quadrature of the path-family solver.
class MetricMeasureSpace {
 public:
  MetricMeasureSpace(std::size_t n_points, std::vector<Edge> edges,
                     std::vector<double> measure,
                     std::optional<std::vector<double>> edge_measure = {},
                     std::vector<std::array<double, 2>> coords = {});

  std::size_t size() const { return measure_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  std::span<const double> measure() const { return measure_; }
  double measure(PointId x) const { return measure_[x]; }
  bool is_null(PointId x) const { return measure_[x] == 0.0; }
  double total_mass() const;

  /// Measure on edges: the explicit one if given, else length squared.
  std::span<const double> edge_measure() const { return edge_measure_; }
  bool has_explicit_edge_measure() const { return explicit_edge_measure_; }

  std::span<const std::array<double, 2>> coords() const { return coords_; }

  /// Neighbours sorted by point id.
  std::span<const Neighbor> neighbors(PointId x) const;
  EdgeId edge_between(PointId a, PointId b) const;

  std::vector<double> distances_from(PointId source) const;

 private:
  std::vector<Edge> edges_;
  std::vector<double> measure_;
  std::vector<double> edge_measure_;
  bool explicit_edge_measure_ = false;
  std::vector<std::array<double, 2>> coords_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
};

enum class CellMeasure { uniform, custom };

/// nx-by-ny four-neighbour grid embedded in the unit square. Point (i, j)
/// has id j*nx + i. Uniform mode gives every point mass 1/(nx*ny); custom
/// mode takes `weights` (size nx*ny).
MetricMeasureSpace build_grid_space(std::size_t nx, std::size_t ny,
                                    CellMeasure mode = CellMeasure::uniform,
                                    std::span<const double> weights = {});

}  // namespace modcap
