#include "modcap/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "modcap/error.hpp"

namespace modcap {
namespace {

constexpr double snap_tol = 1e-13;
constexpr double continuity_tol = 1e-12;

double snap_fraction(double s) {
  if (std::abs(s) < snap_tol) return 0.0;
  if (std::abs(1.0 - s) < snap_tol) return 1.0;
  return s;
}

Position make_position(PointId a, PointId b, double s) {
  if (a == b || s == 0.0) return Position::node(a);
  if (s == 1.0) return Position::node(b);
  return {a, b, s};
}

bool same_place(const Position& p, const Position& q) {
  if (p.is_node() || q.is_node()) return p == q;
  if (p.a == q.a && p.b == q.b) return std::abs(p.s - q.s) <= continuity_tol;
  if (p.a == q.b && p.b == q.a) return std::abs(p.s - (1.0 - q.s)) <= continuity_tol;
  return false;
}

std::string describe(const Position& p) {
  if (p.is_node()) return std::to_string(p.a);
  return "[" + std::to_string(p.a) + ", " + std::to_string(p.b) + ", " +
         std::to_string(p.s) + "]";
}

// Fraction of the run attributed to `a` under the nearest-endpoint rule.
double share_below_half(double s0, double s1) {
  if (s0 == s1) return s0 < 0.5 ? 1.0 : 0.0;
  const double lo = std::min(s0, s1);
  const double hi = std::max(s0, s1);
  return (std::clamp(0.5, lo, hi) - lo) / (hi - lo);
}

}  // namespace

double Segment::length() const {
  return edge == no_edge ? 0.0 : std::abs(s1 - s0) * edge_length;
}

Position Segment::start() const {
  return edge == no_edge ? Position::node(a) : make_position(a, b, s0);
}

Position Segment::finish() const {
  return edge == no_edge ? Position::node(a) : make_position(a, b, s1);
}

double Segment::share_of_a() const {
  return edge == no_edge ? 1.0 : share_below_half(s0, s1);
}

ParametricCurve::ParametricCurve(std::vector<Segment> segments, std::vector<double> times)
    : segments_(std::move(segments)), times_(std::move(times)) {
  if (segments_.empty()) fail(ErrorCode::invalid_input, "curve needs at least two vertices");
  if (times_.size() != segments_.size() + 1) {
    fail(ErrorCode::invalid_input, "curve times must have one entry per vertex");
  }
  if (times_.front() != 0.0 || times_.back() != 1.0) {
    fail(ErrorCode::invalid_input, "curve times must start at 0 and end at 1");
  }
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i] < times_[i + 1])) {
      fail(ErrorCode::invalid_input,
           "curve times must be strictly increasing (index " + std::to_string(i + 1) + ")");
    }
  }
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
    if (!same_place(segments_[i].finish(), segments_[i + 1].start())) {
      fail(ErrorCode::invalid_input,
           "curve is discontinuous between " + describe(segments_[i].finish()) + " and " +
               describe(segments_[i + 1].start()));
    }
  }
}

ParametricCurve ParametricCurve::from_nodes(const MetricMeasureSpace& space,
                                            std::span<const PointId> nodes,
                                            std::span<const double> times) {
  std::vector<Position> positions;
  positions.reserve(nodes.size());
  for (PointId x : nodes) positions.push_back(Position::node(x));
  return from_positions(space, positions, times);
}

ParametricCurve ParametricCurve::from_positions(const MetricMeasureSpace& space,
                                                std::span<const Position> positions,
                                                std::span<const double> times) {
  if (positions.size() < 2) fail(ErrorCode::invalid_input, "curve needs at least two vertices");
  if (positions.size() != times.size()) {
    fail(ErrorCode::invalid_input, "curve nodes and times must have the same length");
  }

  // Canonical form of each position relative to the stored edge orientation.
  struct Placed {
    Position pos;
    EdgeId edge;  // edge carrying an interior position, else no_edge
  };
  std::vector<Placed> placed;
  for (const Position& p : positions) {
    if (p.a >= space.size() || p.b >= space.size()) {
      fail(ErrorCode::invalid_input, "curve references missing point " + describe(p));
    }
    if (!(p.s >= 0.0 && p.s <= 1.0)) {
      fail(ErrorCode::invalid_input, "edge fraction outside [0,1] in " + describe(p));
    }
    Position q = make_position(p.a, p.b, p.s);
    if (q.is_node()) {
      placed.push_back({q, no_edge});
      continue;
    }
    EdgeId e = space.edge_between(q.a, q.b);
    if (e == no_edge) {
      fail(ErrorCode::invalid_input,
           "points " + std::to_string(q.a) + " and " + std::to_string(q.b) + " are not adjacent");
    }
    const Edge& ed = space.edge(e);
    if (ed.u != q.a) q = {ed.u, ed.v, 1.0 - q.s};
    placed.push_back({q, e});
  }

  std::vector<Segment> segments;
  segments.reserve(positions.size() - 1);
  for (std::size_t i = 0; i + 1 < placed.size(); ++i) {
    const Placed& p = placed[i];
    const Placed& q = placed[i + 1];
    EdgeId e = p.edge != no_edge ? p.edge : q.edge;
    if (e == no_edge) {
      if (p.pos.a == q.pos.a) {
        segments.push_back({no_edge, p.pos.a, p.pos.a, 0.0, 0.0, 0.0});
        continue;
      }
      e = space.edge_between(p.pos.a, q.pos.a);
      if (e == no_edge) {
        fail(ErrorCode::invalid_input, "consecutive nodes " + std::to_string(p.pos.a) + " and " +
                                           std::to_string(q.pos.a) + " are not adjacent");
      }
    }
    const Edge& ed = space.edge(e);
    auto fraction_on = [&](const Placed& r) -> double {
      if (r.edge == e) return r.pos.s;
      if (r.edge == no_edge && r.pos.a == ed.u) return 0.0;
      if (r.edge == no_edge && r.pos.a == ed.v) return 1.0;
      fail(ErrorCode::invalid_input, "consecutive positions " + describe(p.pos) + " and " +
                                         describe(q.pos) + " do not share an edge");
    };
    segments.push_back({e, ed.u, ed.v, fraction_on(p), fraction_on(q), ed.length});
  }
  return ParametricCurve(std::move(segments), std::vector<double>(times.begin(), times.end()));
}

std::vector<Position> ParametricCurve::vertices() const {
  std::vector<Position> out;
  out.reserve(times_.size());
  for (const Segment& seg : segments_) out.push_back(seg.start());
  out.push_back(segments_.back().finish());
  return out;
}

bool ParametricCurve::nodes_only() const {
  return std::ranges::all_of(vertices(), [](const Position& p) { return p.is_node(); });
}

Position ParametricCurve::at(double t) const {
  if (t <= 0.0) return start();
  if (t >= 1.0) return finish();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  const Segment& seg = segments_[i];
  if (seg.edge == no_edge) return Position::node(seg.a);
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return make_position(seg.a, seg.b, snap_fraction(seg.s0 + w * (seg.s1 - seg.s0)));
}

std::vector<OccupationPiece> ParametricCurve::occupation() const {
  std::vector<OccupationPiece> pieces;
  pieces.reserve(2 * segments_.size());
  auto push = [&pieces](double t0, double t1, PointId x) {
    if (!(t1 > t0)) return;
    if (!pieces.empty() && pieces.back().node == x && pieces.back().t1 == t0) {
      pieces.back().t1 = t1;
    } else {
      pieces.push_back({t0, t1, x});
    }
  };
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& seg = segments_[i];
    const double t0 = times_[i];
    const double t1 = times_[i + 1];
    if (seg.edge == no_edge || seg.s0 == seg.s1) {
      push(t0, t1, seg.start().nearest());
      continue;
    }
    const double lo = std::min(seg.s0, seg.s1);
    const double hi = std::max(seg.s0, seg.s1);
    const PointId first = seg.s0 < 0.5 ? seg.a : seg.b;
    if (lo < 0.5 && 0.5 < hi) {
      const double tc = t0 + (0.5 - seg.s0) / (seg.s1 - seg.s0) * (t1 - t0);
      push(t0, tc, first);
      push(tc, t1, first == seg.a ? seg.b : seg.a);
    } else if (seg.s0 == 0.5 && seg.s1 < 0.5) {
      push(t0, t1, seg.a);
    } else {
      push(t0, t1, first);
    }
  }
  return pieces;
}

std::vector<double> metric_speed(const ParametricCurve& curve) {
  std::vector<double> speed;
  auto seg = curve.segments();
  auto t = curve.times();
  speed.reserve(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) speed.push_back(seg[i].length() / (t[i + 1] - t[i]));
  return speed;
}

double length(const ParametricCurve& curve) {
  double sum = 0.0;
  for (const Segment& seg : curve.segments()) sum += seg.length();
  return sum;
}

double energy(const ParametricCurve& curve, double q) {
  if (!(q >= 1.0)) fail(ErrorCode::invalid_input, "energy exponent must be at least 1");
  auto seg = curve.segments();
  auto t = curve.times();
  double sum = 0.0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    const double len = seg[i].length();
    if (len > 0.0) sum += std::pow(len / dt, q) * dt;
  }
  return sum;
}

double lipschitz_bound(const ParametricCurve& curve) {
  double best = 0.0;
  for (double v : metric_speed(curve)) best = std::max(best, v);
  return best;
}

bool is_constant(const ParametricCurve& curve) { return length(curve) == 0.0; }

ParametricCurve constant_speed_reparam(const ParametricCurve& curve) {
  std::vector<Segment> runs;
  for (const Segment& seg : curve.segments()) {
    if (seg.length() == 0.0) continue;
    if (!runs.empty()) {
      Segment& last = runs.back();
      const bool same_direction = (last.s1 - last.s0) * (seg.s1 - seg.s0) > 0.0;
      if (last.edge == seg.edge && same_direction) {
        last.s1 = seg.s1;
        continue;
      }
    }
    runs.push_back(seg);
  }
  if (runs.empty()) fail(ErrorCode::constant_curve, "constant curve has no constant-speed representative");

  double total = 0.0;
  for (const Segment& seg : runs) total += seg.length();
  std::vector<double> times;
  times.reserve(runs.size() + 1);
  times.push_back(0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    acc += runs[i].length();
    times.push_back(acc / total);
  }
  times.push_back(1.0);
  return ParametricCurve(std::move(runs), std::move(times));
}

DiscreteMeasure j_map(const ParametricCurve& curve) {
  std::vector<Atom> atoms;
  for (const Segment& seg : curve.segments()) {
    const double len = seg.length();
    if (len == 0.0) continue;
    const double share = seg.share_of_a();
    atoms.push_back({seg.a, len * share});
    atoms.push_back({seg.b, len * (1.0 - share)});
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

DiscreteMeasure j_map_edges(const ParametricCurve& curve) {
  std::vector<Atom> atoms;
  for (const Segment& seg : curve.segments()) {
    if (seg.length() > 0.0) atoms.push_back({seg.edge, seg.length()});
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

DiscreteMeasure m_map(const ParametricCurve& curve) {
  std::vector<Atom> atoms;
  auto seg = curve.segments();
  auto t = curve.times();
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    if (seg[i].edge == no_edge || seg[i].s0 == seg[i].s1) {
      atoms.push_back({seg[i].start().nearest(), dt});
      continue;
    }
    const double share = seg[i].share_of_a();
    atoms.push_back({seg[i].a, dt * share});
    atoms.push_back({seg[i].b, dt * (1.0 - share)});
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

DiscreteMeasure multiplicity(const ParametricCurve& curve) {
  std::vector<Atom> atoms;
  for (const Segment& seg : curve.segments()) {
    if (seg.length() > 0.0) atoms.push_back({seg.edge, std::abs(seg.s1 - seg.s0)});
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

ParametricCurve stretch(const ParametricCurve& curve, double a, double b) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) {
    fail(ErrorCode::invalid_input, "stretch needs 0 <= a < b <= 1");
  }
  if (a == 0.0 && b == 1.0) return curve;

  auto seg = curve.segments();
  auto t = curve.times();
  const double width = b - a;
  std::vector<Segment> pieces;
  std::vector<double> starts;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const double lo = std::max(t[i], a);
    const double hi = std::min(t[i + 1], b);
    if (!(hi > lo)) continue;
    Segment piece = seg[i];
    if (piece.edge != no_edge) {
      const double dt = t[i + 1] - t[i];
      const double ds = seg[i].s1 - seg[i].s0;
      if (lo > t[i]) piece.s0 = snap_fraction(seg[i].s0 + ds * (lo - t[i]) / dt);
      if (hi < t[i + 1]) piece.s1 = snap_fraction(seg[i].s0 + ds * (hi - t[i]) / dt);
    }
    pieces.push_back(piece);
    starts.push_back((lo - a) / width);
  }
  // Rounding can leave an empty first or last sliver; drop it.
  if (pieces.size() > 1 && !(starts[1] > 0.0)) {
    pieces.erase(pieces.begin());
    starts.erase(starts.begin());
  }
  std::vector<double> times = std::move(starts);
  times.front() = 0.0;
  times.push_back(1.0);
  while (pieces.size() > 1 && !(times[times.size() - 2] < 1.0)) {
    pieces.pop_back();
    times.erase(times.end() - 2);
  }
  return ParametricCurve(std::move(pieces), std::move(times));
}

ParametricCurve reversed(const ParametricCurve& curve) {
  std::vector<Segment> segs(curve.segments().rbegin(), curve.segments().rend());
  for (Segment& s : segs) std::swap(s.s0, s.s1);
  std::vector<double> times;
  auto t = curve.times();
  for (auto it = t.rbegin(); it != t.rend(); ++it) times.push_back(1.0 - *it);
  times.front() = 0.0;
  times.back() = 1.0;
  return ParametricCurve(std::move(segs), std::move(times));
}

bool curves_equivalent(const ParametricCurve& a, const ParametricCurve& b, double tol) {
  if (is_constant(a) || is_constant(b)) return false;
  const ParametricCurve ca = constant_speed_reparam(a);
  const ParametricCurve cb = constant_speed_reparam(b);
  auto sa = ca.segments();
  auto sb = cb.segments();
  if (sa.size() != sb.size()) return false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].edge != sb[i].edge) return false;
    if (std::abs(sa[i].s0 - sb[i].s0) > tol || std::abs(sa[i].s1 - sb[i].s1) > tol) return false;
  }
  auto ta = ca.times();
  auto tb = cb.times();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (std::abs(ta[i] - tb[i]) > tol) return false;
  }
  return true;
}

}  // namespace modcap
