#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modcap/space.hpp"

namespace modcap {

/// A location on the metric graph: a node, or the point at fraction `s` of
/// the way from `a` to `b` along the edge joining them.
struct Position {
  PointId a = 0;
  PointId b = 0;
  double s = 0.0;

  static Position node(PointId x) { return {x, x, 0.0}; }
  bool is_node() const { return a == b; }
  /// Endpoint the position is attributed to by the occupation rule: the
  /// first half of an edge belongs to `a`, the second half (from the
  /// midpoint on) to `b`.
  PointId nearest() const { return s < 0.5 ? a : b; }

  friend bool operator==(const Position&, const Position&) = default;
};

/// Straight piece of a curve: either a stay at a node (`edge == no_edge`,
/// `a == b`) or a monotone run along one edge from fraction `s0` to `s1`,
/// measured from the edge's `u` end (stored as `a`).
struct Segment {
  EdgeId edge = no_edge;
  PointId a = 0;
  PointId b = 0;
  double s0 = 0.0;
  double s1 = 0.0;
  double edge_length = 0.0;

  double length() const;
  Position start() const;
  Position finish() const;
  /// Share of the segment (in length, equivalently in time) attributed to `a`.
  double share_of_a() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Time interval during which a curve is attributed to a single node.
struct OccupationPiece {
  double t0;
  double t1;
  PointId node;
};

/// Piecewise-linear curve on [0,1]: `segments()[i]` is traversed at
/// constant speed during [times()[i], times()[i+1]].
class ParametricCurve {
 public:
  /// Validates continuity and the time grid (strictly increasing, from 0 to 1).
  ParametricCurve(std::vector<Segment> segments, std::vector<double> times);

  static ParametricCurve from_nodes(const MetricMeasureSpace& space,
                                    std::span<const PointId> nodes,
                                    std::span<const double> times);
  static ParametricCurve from_positions(const MetricMeasureSpace& space,
                                        std::span<const Position> positions,
                                        std::span<const double> times);

  std::span<const Segment> segments() const { return segments_; }
  std::span<const double> times() const { return times_; }
  std::vector<Position> vertices() const;
  bool nodes_only() const;

  Position start() const { return segments_.front().start(); }
  Position finish() const { return segments_.back().finish(); }
  Position at(double t) const;
  std::vector<OccupationPiece> occupation() const;

  friend bool operator==(const ParametricCurve&, const ParametricCurve&) = default;

 private:
  std::vector<Segment> segments_;
  std::vector<double> times_;
};

std::vector<double> metric_speed(const ParametricCurve& curve);
double length(const ParametricCurve& curve);
/// Integral of |speed|^q over [0,1]; `q >= 1`.
double energy(const ParametricCurve& curve, double q);
/// Largest segment speed (Lipschitz constant of the curve).
double lipschitz_bound(const ParametricCurve& curve);
bool is_constant(const ParametricCurve& curve);

/// Constant-speed representative: stays are removed, consecutive runs along
/// the same edge in the same direction are merged, and time is arc length
/// over total length. Throws `constant_curve` for zero length.
ParametricCurve constant_speed_reparam(const ParametricCurve& curve);

/// Arc-length measure projected on nodes (each run's length goes to its
/// nearer endpoint). Total mass equals the curve length.
DiscreteMeasure j_map(const ParametricCurve& curve);
/// Arc-length measure indexed by edge id (length times coverage).
DiscreteMeasure j_map_edges(const ParametricCurve& curve);
/// Time-occupation probability measure on nodes.
DiscreteMeasure m_map(const ParametricCurve& curve);
/// Number of traversals of each edge, indexed by edge id. Fractional for
/// partially traversed edges.
DiscreteMeasure multiplicity(const ParametricCurve& curve);

/// t -> curve(a + t (b - a)); requires 0 <= a < b <= 1.
ParametricCurve stretch(const ParametricCurve& curve, double a, double b);
ParametricCurve reversed(const ParametricCurve& curve);

inline constexpr double default_equivalence_tol = 1e-9;

/// True when both curves have the same constant-speed representative up to
/// `tol` in fractions and times. Constant curves are never equivalent here.
bool curves_equivalent(const ParametricCurve& a, const ParametricCurve& b,
                       double tol = default_equivalence_tol);

}  // namespace modcap
