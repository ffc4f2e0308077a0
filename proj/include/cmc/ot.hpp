#pragma once

// Entropic optimal transport between grid marginals. The Kantorovich optimum
// of the pair cost c = -L0 xi bounds from below what any dynamic coupling of
// two particles can achieve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "cmc/error.hpp"
#include "cmc/estimators.hpp"
#include "cmc/model.hpp"
#include "cmc/poisson.hpp"

namespace cmc {

struct DiscreteMarginal {
  std::vector<double> nodes;
  std::vector<double> weights;

  void validate() const {
    if (nodes.empty() || nodes.size() != weights.size())
      throw ConfigError("marginal needs matching nonempty nodes and weights");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("marginal weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("marginal weights must sum to 1");
  }

  double entropy() const {
    double h = 0.0;
    for (double w : weights)
      if (w > 0.0) h -= w * std::log(w);
    return h;
  }
};

/// Grid marginal on `size` uniform nodes of [-halfwidth, halfwidth] with
/// trapezoid mass of exp(-V).
inline DiscreteMarginal grid_marginal(const TargetModel1D& model, std::size_t size,
                                      double halfwidth) {
  if (size < 2) throw ConfigError("marginal grid needs at least 2 nodes");
  UniformGrid g{-halfwidth, halfwidth, size};
  DiscreteMarginal m;
  m.nodes = g.nodes();
  m.weights = trapezoid_weights(g);
  double vmin = std::numeric_limits<double>::infinity();
  for (double x : m.nodes) vmin = std::min(vmin, model.potential(x));
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    m.weights[i] *= std::exp(-(model.potential(m.nodes[i]) - vmin));
    total += m.weights[i];
  }
  for (double& w : m.weights) w /= total;
  return m;
}

/// c(x, y) = (f0(x) phi(y) + phi(x) f0(y)) / 4, the generator of the
/// independent pair applied to -phi(x) phi(y) / 4 with L phi = -f0 substituted.
class PairCost {
 public:
  PairCost(const PoissonSolution& ps, const Observable1D& f) : ps_(ps), f_(f) {}

  double operator()(double x, double y) const {
    const double f0x = f_.value(x) - ps_.observable_mean, f0y = f_.value(y) - ps_.observable_mean;
    return 0.25 * (f0x * ps_.phi_at(y) + ps_.phi_at(x) * f0y);
  }

  /// Largest difference over fine-grid nodes with |x|, |y| <= box between the
  /// closed form and a finite-difference evaluation of -(L_x + L_y) xi.
  double finite_difference_gap(const TargetModel1D& model, double box = 4.0,
                               std::size_t stride = 50, std::size_t offset = 4) const {
    const auto& x = ps_.nodes;
    const double h = ps_.grid.step() * static_cast<double>(offset);
    auto lphi = [&](std::size_t k) {
      const double up = ps_.phi[k + offset], mid = ps_.phi[k], down = ps_.phi[k - offset];
      return -model.grad(x[k]) * (up - down) / (2.0 * h) + (up - 2.0 * mid + down) / (h * h);
    };
    std::vector<std::size_t> idx;
    for (std::size_t k = offset; k + offset < x.size(); k += stride)
      if (std::abs(x[k]) <= box) idx.push_back(k);
    double worst = 0.0;
    for (std::size_t a : idx) {
      for (std::size_t b : idx) {
        const double fd = -0.25 * (lphi(a) * ps_.phi[b] + ps_.phi[a] * lphi(b));
        const double f0a = f_.value(x[a]) - ps_.observable_mean;
        const double f0b = f_.value(x[b]) - ps_.observable_mean;
        const double closed = 0.25 * (f0a * ps_.phi[b] + ps_.phi[a] * f0b);
        worst = std::max(worst, std::abs(fd - closed));
      }
    }
    return worst;
  }

 private:
  const PoissonSolution& ps_;
  const Observable1D& f_;
};

/// Cost matrix on the marginal grids, after the finite-difference self-check.
inline Eigen::MatrixXd assemble_cost(const TargetModel1D& model, const Observable1D& f,
                                     const PoissonSolution& ps, std::span<const double> grid_x,
                                     std::span<const double> grid_y, double check_tol = 1e-2) {
  const PairCost cost(ps, f);
  const double gap = cost.finite_difference_gap(model);
  if (gap > check_tol)
    throw AssertionError("cost self-check failed: finite-difference gap " + std::to_string(gap));
  Eigen::MatrixXd c(grid_x.size(), grid_y.size());
  for (std::size_t i = 0; i < grid_x.size(); ++i)
    for (std::size_t j = 0; j < grid_y.size(); ++j) c(i, j) = cost(grid_x[i], grid_y[j]);
  return c;
}

struct TransportPlan {
  Eigen::MatrixXd plan;
  double cost_value = 0.0;
  double marginal_error = 0.0;
  double epsilon = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// cost_value - epsilon * min(H(mu), H(nu)); never above the unregularized optimum.
  double lower_bound = 0.0;
  Eigen::VectorXd f_potential, g_potential;
};

namespace detail {

inline double log_sum_exp(const double* v, std::size_t n, std::size_t stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, v[k * stride]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k * stride] - m);
  return m + std::log(s);
}

}  // namespace detail

/// Log-domain Sinkhorn for min <P, C> + eps KL(P | mu x nu). Warm starts from
/// the given dual potentials when their sizes match.
inline TransportPlan sinkhorn(const DiscreteMarginal& mu, const DiscreteMarginal& nu,
                              const Eigen::MatrixXd& cost, double epsilon,
                              std::size_t max_iters = 10000, double tol = 1e-9,
                              const Eigen::VectorXd* f_init = nullptr,
                              const Eigen::VectorXd* g_init = nullptr) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  mu.validate();
  nu.validate();
  const auto n = static_cast<Eigen::Index>(mu.weights.size());
  const auto m = static_cast<Eigen::Index>(nu.weights.size());
  if (cost.rows() != n || cost.cols() != m) throw ConfigError("cost matrix shape mismatch");

  Eigen::VectorXd logmu(n), lognu(m);
  for (Eigen::Index i = 0; i < n; ++i)
    logmu(i) = mu.weights[i] > 0 ? std::log(mu.weights[i]) : -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j)
    lognu(j) = nu.weights[j] > 0 ? std::log(nu.weights[j]) : -std::numeric_limits<double>::infinity();

  Eigen::VectorXd f = (f_init && f_init->size() == n) ? *f_init : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = (g_init && g_init->size() == m) ? *g_init : Eigen::VectorXd::Zero(m);
  // Row-major scratch so both reductions run over contiguous memory.
  std::vector<double> row(static_cast<std::size_t>(m)), col(static_cast<std::size_t>(n));

  auto row_log_mass = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < m; ++j) row[j] = (f(i) + g(j) - cost(i, j)) / epsilon + lognu(j);
    return detail::log_sum_exp(row.data(), static_cast<std::size_t>(m), 1) + logmu(i);
  };

  TransportPlan out;
  out.epsilon = epsilon;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(logmu(i))) continue;
      for (Eigen::Index j = 0; j < m; ++j) row[j] = (g(j) - cost(i, j)) / epsilon + lognu(j);
      f(i) = -epsilon * detail::log_sum_exp(row.data(), static_cast<std::size_t>(m), 1);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isfinite(lognu(j))) continue;
      for (Eigen::Index i = 0; i < n; ++i) col[i] = (f(i) - cost(i, j)) / epsilon + logmu(i);
      g(j) = -epsilon * detail::log_sum_exp(col.data(), static_cast<std::size_t>(n), 1);
    }
    out.iterations = it;
    if (it % 10 == 0 || it == max_iters) {
      double err = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(logmu(i))) continue;
        err += std::abs(std::exp(row_log_mass(i)) - mu.weights[i]);
      }
      out.marginal_error = err;
      if (err < tol) {
        out.converged = true;
        break;
      }
    }
  }

  out.plan.resize(n, m);
  out.cost_value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double p = std::isfinite(logmu(i)) && std::isfinite(lognu(j))
                           ? std::exp((f(i) + g(j) - cost(i, j)) / epsilon + logmu(i) + lognu(j))
                           : 0.0;
      out.plan(i, j) = p;
      out.cost_value += p * cost(i, j);
    }
  double err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) err += std::abs(out.plan.row(i).sum() - mu.weights[i]);
  for (Eigen::Index j = 0; j < m; ++j) err += std::abs(out.plan.col(j).sum() - nu.weights[j]);
  out.marginal_error = err;
  out.lower_bound = out.cost_value - epsilon * std::min(mu.entropy(), nu.entropy());
  out.f_potential = f;
  out.g_potential = g;
  return out;
}

/// Geometric epsilon ladder from `start` down to `target`, warm-started; the
/// plan at every rung is returned, the last one at `target`.
inline std::vector<TransportPlan> sinkhorn_ladder(const DiscreteMarginal& mu,
                                                  const DiscreteMarginal& nu,
                                                  const Eigen::MatrixXd& cost, double start,
                                                  double target, double factor = 0.5,
                                                  std::size_t max_iters = 10000, double tol = 1e-9) {
  if (!(target > 0.0) || !(start >= target)) throw ConfigError("invalid epsilon ladder");
  std::vector<double> eps;
  for (double e = start; e > target * (1.0 + 1e-12); e *= factor) eps.push_back(e);
  eps.push_back(target);
  std::vector<TransportPlan> out;
  for (double e : eps) {
    const Eigen::VectorXd* f0 = out.empty() ? nullptr : &out.back().f_potential;
    const Eigen::VectorXd* g0 = out.empty() ? nullptr : &out.back().g_potential;
    out.push_back(sinkhorn(mu, nu, cost, e, max_iters, tol, f0, g0));
  }
  return out;
}

/// Standard deviation of the cost under mu x nu.
inline double cost_spread(const DiscreteMarginal& mu, const DiscreteMarginal& nu,
                          const Eigen::MatrixXd& cost) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < mu.weights.size(); ++i)
    for (std::size_t j = 0; j < nu.weights.size(); ++j) {
      const double w = mu.weights[i] * nu.weights[j], c = cost(i, j);
      m1 += w * c;
      m2 += w * c * c;
    }
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

/// Plan mass with |x + sign * y| < delta (sign = +1: antidiagonal y = -x).
inline double mass_near_diagonal(const TransportPlan& tp, const DiscreteMarginal& mu,
                                 const DiscreteMarginal& nu, double delta, double sign = 1.0) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    for (std::size_t j = 0; j < nu.nodes.size(); ++j)
      if (std::abs(mu.nodes[i] + sign * nu.nodes[j]) < delta) s += tp.plan(i, j);
  return s;
}

/// Time average of c(x_t, y_t) over a post-burn-in sample path with a
/// batch-means confidence half-width.
inline Summary plan_cost_of_empirical(std::span<const double> xs, std::span<const double> ys,
                                      const std::function<double(double, double)>& cost,
                                      std::size_t n_batches = 20) {
  if (xs.empty() || xs.size() != ys.size()) throw ConfigError("empty or mismatched samples");
  if (xs.size() < 2 * n_batches) throw ConfigError("too few samples for batch means");
  const std::size_t m = xs.size() / n_batches;
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t k = b * m; k < (b + 1) * m; ++k) acc += cost(xs[k], ys[k]);
    means[b] = acc / static_cast<double>(m);
  }
  return summarize(means);
}

}  // namespace cmc
