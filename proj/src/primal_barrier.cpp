#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "modcap/error.hpp"
#include "modcap/modulus.hpp"
#include "modulus_detail.hpp"

namespace modcap {
namespace {

struct Constraint {
  std::vector<std::pair<int, double>> terms;  // local index, weight
};

}  // namespace

// Log-barrier on the primal program
//   min sum m f^p  s.t.  <mu_i, f> >= 1,  f > 0,
// restricted to the points charged by some member. Newton steps with a
// dense Cholesky factorisation; t grows geometrically.
ModulusSolution solve_modulus_primal(std::span<const double> ground,
                                     std::span<const DiscreteMeasure> measures, Exponent exponent,
                                     const SolveOptions& opts) {
  const double p = exponent.p();
  ModulusSolution sol;
  sol.multipliers.assign(measures.size(), 0.0);
  sol.f.assign(ground.size(), 0.0);

  const detail::Prepared prep = detail::prepare_members(ground, measures);
  sol.vanishing_support = prep.vanishing;
  if (prep.has_zero) {
    sol.contains_zero_measure = true;
    sol.value = std::numeric_limits<double>::infinity();
    sol.dual_value = sol.value;
    return sol;
  }
  if (measures.empty()) sol.empty_family = true;
  if (prep.kept.empty()) return sol;

  std::vector<int> local(ground.size(), -1);
  std::vector<std::size_t> points;
  std::vector<Constraint> cons;
  double min_total = std::numeric_limits<double>::infinity();
  for (std::size_t i : prep.kept) {
    Constraint c;
    for (const Atom& a : measures[i].atoms()) {
      if (local[a.index] < 0) {
        local[a.index] = static_cast<int>(points.size());
        points.push_back(a.index);
      }
      c.terms.emplace_back(local[a.index], a.weight);
    }
    min_total = std::min(min_total, measures[i].total());
    cons.push_back(std::move(c));
  }
  const int n = static_cast<int>(points.size());
  const std::size_t k = cons.size();
  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) m[j] = ground[points[j]];

  auto residuals = [&](const Eigen::VectorXd& f, Eigen::VectorXd& r) {
    r.resize(static_cast<int>(k));
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (auto [j, w] : cons[i].terms) s += w * f[j];
      r[static_cast<int>(i)] = s - 1.0;
    }
  };
  auto energy = [&](const Eigen::VectorXd& f) {
    double e = 0.0;
    for (int j = 0; j < n; ++j) e += m[j] * std::pow(f[j], p);
    return e;
  };
  auto barrier = [&](const Eigen::VectorXd& f, double t) {
    Eigen::VectorXd r;
    residuals(f, r);
    if (f.minCoeff() <= 0.0 || r.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    return t * energy(f) - r.array().log().sum() - f.array().log().sum();
  };

  // The f > 0 barrier keeps points whose optimal density is 0 at roughly
  // (1/t)^{1/p}. Newton on the KKT equations of the constraints the
  // barrier found active removes that bias.
  auto polish = [&](const std::vector<double>& start) {
    const double top = *std::max_element(start.begin(), start.end());
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < k; ++i) {
      if (start[i] > 1e-6 * top) act.push_back(i);
    }
    const int na = static_cast<int>(act.size());
    Eigen::VectorXd lam(na);
    for (int a = 0; a < na; ++a) lam[a] = start[act[a]];
    Eigen::VectorXd dens(n), deriv(n);
    auto density = [&](const Eigen::VectorXd& l) {
      Eigen::VectorXd sx = Eigen::VectorXd::Zero(n);
      for (int a = 0; a < na; ++a) {
        for (auto [j, w] : cons[act[a]].terms) sx[j] += l[a] * w;
      }
      for (int j = 0; j < n; ++j) {
        dens[j] = sx[j] > 0.0 ? std::pow(sx[j] / (p * m[j]), 1.0 / (p - 1.0)) : 0.0;
        deriv[j] = sx[j] > 0.0 ? dens[j] / ((p - 1.0) * sx[j]) : 0.0;
      }
    };
    auto system = [&](const Eigen::VectorXd& l, Eigen::VectorXd& out) {
      density(l);
      out.resize(na);
      for (int a = 0; a < na; ++a) {
        double v = -1.0;
        for (auto [j, w] : cons[act[a]].terms) v += w * dens[j];
        out[a] = v;
      }
      return out.lpNorm<Eigen::Infinity>();
    };
    Eigen::VectorXd res;
    double norm = system(lam, res);
    for (int it = 0; it < 60 && norm > 1e-15; ++it) {
      Eigen::MatrixXd jac(na, na);
      std::vector<double> dense_row(n);
      for (int a = 0; a < na; ++a) {
        std::fill(dense_row.begin(), dense_row.end(), 0.0);
        for (auto [j, w] : cons[act[a]].terms) dense_row[j] = w * deriv[j];
        for (int b = 0; b < na; ++b) {
          double v = 0.0;
          for (auto [j, w] : cons[act[b]].terms) v += w * dense_row[j];
          jac(a, b) = v;
        }
      }
      const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-res);
      double alpha = 1.0;
      Eigen::VectorXd trial_res;
      while (alpha > 1e-12) {
        const Eigen::VectorXd next = lam + alpha * delta;
        if (next.minCoeff() >= 0.0) {
          const double nn = system(next, trial_res);
          if (nn < norm) {
            lam = next;
            norm = nn;
            res = trial_res;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (alpha <= 1e-12) break;
    }
    if (norm > 1e-12) return false;
    density(lam);
    Eigen::VectorXd all;
    residuals(dens, all);
    if (all.minCoeff() < -1e-12) return false;
    for (int j = 0; j < n; ++j) sol.f[points[j]] = dens[j];
    sol.value = energy(dens);
    double lam_sum = 0.0;
    for (int a = 0; a < na; ++a) {
      sol.multipliers[prep.kept[act[a]]] = lam[a];
      lam_sum += lam[a];
    }
    sol.dual_value = lam_sum - (p - 1.0) * sol.value;
    sol.primal_dual_gap = std::abs(sol.value - sol.dual_value) / sol.value;
    for (std::size_t idx : prep.kept) {
      if (sol.multipliers[idx] > opts.kkt_tol) sol.active_set.push_back(idx);
    }
    return true;
  };

  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, 2.0 / min_total);
  const double n_barriers = static_cast<double>(k) + n;
  double t = std::max(1.0, n_barriers / std::max(energy(f), 1e-300));
  constexpr double growth = 8.0;
  std::size_t newton_steps = 0;

  Eigen::VectorXd r;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  while (true) {
    for (int inner = 0; inner < 200; ++inner) {
      if (++newton_steps > opts.max_iter) {
        fail(ErrorCode::no_convergence, "primal barrier exceeded its Newton step budget");
      }
      residuals(f, r);
      grad.setZero();
      hess.setZero();
      for (int j = 0; j < n; ++j) {
        grad[j] = t * p * m[j] * std::pow(f[j], p - 1.0) - 1.0 / f[j];
        hess(j, j) = t * p * (p - 1.0) * m[j] * std::pow(f[j], p - 2.0) + 1.0 / (f[j] * f[j]);
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double ri = r[static_cast<int>(i)];
        for (auto [a, wa] : cons[i].terms) {
          grad[a] -= wa / ri;
          for (auto [b, wb] : cons[i].terms) hess(a, b) += wa * wb / (ri * ri);
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      if (llt.info() != Eigen::Success) {
        fail(ErrorCode::no_convergence, "primal barrier Hessian is not positive definite");
      }
      const Eigen::VectorXd step = -llt.solve(grad);
      const double decrement = -grad.dot(step);
      if (decrement / 2.0 <= 1e-13) break;

      const double current = barrier(f, t);
      double alpha = 1.0;
      Eigen::VectorXd next;
      while (true) {
        next = f + alpha * step;
        const double val = barrier(next, t);
        if (val <= current - 0.25 * alpha * decrement) break;
        alpha *= 0.5;
        if (alpha < 1e-16) break;
      }
      if (alpha < 1e-16) break;  // no further progress at this precision
      f = next;
    }
    const double value = energy(f);
    if (n_barriers / t <= 1e-12 * std::max(value, 1e-300)) break;
    t *= growth;
  }

  residuals(f, r);
  std::vector<double> lambda(k);
  for (std::size_t i = 0; i < k; ++i) lambda[i] = 1.0 / (t * r[static_cast<int>(i)]);
  sol.iterations = newton_steps;
  if (polish(lambda)) return sol;

  const double c = 1.0 + r.minCoeff();
  const double scale = 1.0 / c;  // c >= 1: rescaling keeps feasibility and lowers the value
  for (int j = 0; j < n; ++j) sol.f[points[j]] = f[j] * scale;
  sol.value = energy(f) * std::pow(scale, p);
  sol.dual_value = std::max(0.0, energy(f) - n_barriers / t);
  sol.primal_dual_gap = (sol.value - sol.dual_value) / sol.value;
  for (std::size_t i = 0; i < k; ++i) sol.multipliers[prep.kept[i]] = lambda[i];
  for (std::size_t idx : prep.kept) {
    if (sol.multipliers[idx] > opts.kkt_tol) sol.active_set.push_back(idx);
  }
  return sol;
}

}  // namespace modcap
