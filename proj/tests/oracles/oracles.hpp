#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the solver code paths they are compared against.

#include <array>
#include <cstddef>
#include <vector>

#include "modcap/space.hpp"

namespace oracle {

using modcap::MetricMeasureSpace;
using modcap::PointId;

/// Simple paths from `source` to `target` (start in the source set, never
/// return to it, stop at the first target), by plain depth-first search.
std::vector<std::vector<PointId>> dfs_paths(const MetricMeasureSpace& space,
                                            const std::vector<PointId>& source,
                                            const std::vector<PointId>& target);

/// Arc-length measure of a node path with each edge split evenly between
/// its endpoints, as a dense vector.
std::vector<double> half_split_measure(const MetricMeasureSpace& space, const std::vector<PointId>& path);

/// min sum_e (m_e / len_e^2) (u_a - u_b)^2 with u = 0 on `zero`, u = 1 on
/// `one`, by a sparse Cholesky solve of the interior equations.
double dirichlet_capacity(const MetricMeasureSpace& space, const std::vector<PointId>& zero,
                          const std::vector<PointId>& one);

struct Bracket {
  double lower;
  double upper;
};

/// Lattice search with `levels` values per point in [0, (V0/m_x)^{1/p}].
/// upper: best feasible lattice point; lower: best lattice point whose
/// upper cell corner is feasible.
Bracket lattice_bracket(const std::vector<double>& m, const std::vector<std::vector<double>>& measures,
                        double p, int levels = 21);

/// Arc-length reparametrisation of a polyline with per-segment lengths and
/// vertex times: returns the vertex times of the constant-speed version by
/// midpoint quadrature of the speed and bisection.
std::vector<double> arc_length_times(const std::vector<double>& seg_lengths,
                                     const std::vector<double>& times, int samples = 200000);

/// Planar position of a node polyline at time t (coordinates interpolated).
std::array<double, 2> polyline_at(const MetricMeasureSpace& space, const std::vector<PointId>& nodes,
                                  const std::vector<double>& times, double t);

/// Time occupation by midpoint sampling: on each segment the first half
/// of the edge belongs to the start node, the rest to the end node.
std::vector<double> sampled_occupation(std::size_t n_points, const std::vector<PointId>& nodes,
                                       const std::vector<double>& times, int samples);

}  // namespace oracle
