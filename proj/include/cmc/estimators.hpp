#pragma once

// Ergodic averages and batch-means estimates of the CLT variance.
// Convention: asym_var estimates 2 sigma_F^2, the variance in
//   sqrt(T) * (time average of F - pi(f)) -> N(0, 2 sigma_F^2).

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cmc/error.hpp"
#include "cmc/model.hpp"
#include "cmc/parallel.hpp"
#include "cmc/poisson.hpp"

namespace cmc {

inline constexpr double kDefaultConfidence = 0.95;

inline double student_t_quantile(double confidence, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

/// Sample mean with a Student-t confidence half-width.
struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double halfwidth = 0.0;
  std::size_t count = 0;

  double lo() const { return mean - halfwidth; }
  double hi() const { return mean + halfwidth; }
};

inline Summary summarize(std::span<const double> values, double confidence = kDefaultConfidence) {
  Summary s;
  s.count = values.size();
  if (s.count == 0) throw NumericalError("cannot summarize an empty sample");
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  s.halfwidth = student_t_quantile(confidence, static_cast<double>(s.count - 1)) * s.sd /
                std::sqrt(static_cast<double>(s.count));
  return s;
}

inline bool disjoint(const Summary& a, const Summary& b) { return a.hi() < b.lo() || b.hi() < a.lo(); }

struct VarianceReport {
  double mean = 0.0;
  double mean_ci = 0.0;
  double asym_var = 0.0;
  /// Half-width of the confidence interval for asym_var.
  double ci = 0.0;
  double asym_var_lo = 0.0;
  double asym_var_hi = 0.0;
  std::size_t n_batches = 0;
  std::size_t replicate_count = 1;
};

/// Variance estimate from precomputed batch means over batches of duration
/// t_batch. The asym_var interval is the chi-square interval for a normal
/// variance.
inline VarianceReport variance_from_batch_means(std::span<const double> batch_means, double t_batch,
                                                double confidence = kDefaultConfidence) {
  const std::size_t nb = batch_means.size();
  if (nb < 2) throw ConfigError("batch means need at least 2 batches");
  const Summary s = summarize(batch_means, confidence);
  VarianceReport r;
  r.mean = s.mean;
  r.mean_ci = s.halfwidth;
  r.n_batches = nb;
  const double var = s.sd * s.sd;
  r.asym_var = t_batch * var;
  const double dof = static_cast<double>(nb - 1);
  boost::math::chi_squared chi(dof);
  const double q_hi = boost::math::quantile(chi, 0.5 + 0.5 * confidence);
  const double q_lo = boost::math::quantile(chi, 0.5 - 0.5 * confidence);
  r.asym_var_lo = r.asym_var * dof / q_hi;
  r.asym_var_hi = r.asym_var * dof / q_lo;
  r.ci = 0.5 * (r.asym_var_hi - r.asym_var_lo);
  return r;
}

/// Splits a series sampled at spacing dt into n_batches contiguous batches
/// (trailing remainder dropped) and estimates 2 sigma^2 = T_batch * Var(batch mean).
inline VarianceReport batch_means_variance(std::span<const double> series, double dt,
                                           std::size_t n_batches = 50,
                                           double confidence = kDefaultConfidence) {
  if (n_batches < 2) throw ConfigError("n_batches must be at least 2");
  if (series.size() < 10 * n_batches)
    throw ConfigError("series too short for batch means: need at least 10 samples per batch");
  const std::size_t m = series.size() / n_batches;
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += series[b * m + k];
    means[b] = acc / static_cast<double>(m);
  }
  return variance_from_batch_means(means, static_cast<double>(m) * dt, confidence);
}

/// Pools per-replicate reports: mean and asym_var are averaged across
/// replicates with Student-t half-widths from the replicate spread.
inline VarianceReport pool_replicates(std::span<const VarianceReport> reps,
                                      double confidence = kDefaultConfidence) {
  if (reps.empty()) throw NumericalError("no replicates to pool");
  std::vector<double> means, vars;
  for (const auto& r : reps) {
    means.push_back(r.mean);
    vars.push_back(r.asym_var);
  }
  VarianceReport out;
  out.replicate_count = reps.size();
  out.n_batches = reps.front().n_batches;
  if (reps.size() == 1) return reps.front();
  const Summary m = summarize(means, confidence), v = summarize(vars, confidence);
  out.mean = m.mean;
  out.mean_ci = m.halfwidth;
  out.asym_var = v.mean;
  out.ci = v.halfwidth;
  out.asym_var_lo = v.lo();
  out.asym_var_hi = v.hi();
  return out;
}

inline Summary asym_var_summary(const VarianceReport& r) {
  Summary s;
  s.mean = r.asym_var;
  s.halfwidth = r.ci;
  s.count = r.replicate_count;
  return s;
}

struct SweepRow {
  double beta = 0.0;
  std::string kind;
  VarianceReport report;
  /// Per-replicate asym_var estimates, indexed by replicate (seed = base + r).
  std::vector<double> replicate_asym_var;
  std::vector<double> replicate_mean;
};

/// Runs runner(beta, seed) for every beta and replicate r with seed = base_seed + r,
/// the same seeds for every beta, and pools each beta's replicates.
inline std::vector<SweepRow> replicate_sweep(
    const std::string& kind, std::span<const double> beta_grid, std::size_t n_replicates,
    std::uint64_t base_seed, const std::function<VarianceReport(double, std::uint64_t)>& runner,
    std::size_t workers = 1) {
  if (n_replicates == 0) throw ConfigError("replicates must be positive");
  const std::size_t nb = beta_grid.size();
  std::vector<VarianceReport> results(nb * n_replicates);
  parallel_for_index(nb * n_replicates, workers, [&](std::size_t job) {
    const std::size_t b = job / n_replicates, r = job % n_replicates;
    const std::uint64_t seed = base_seed + r;
    try {
      results[job] = runner(beta_grid[b], seed);
    } catch (const Error& e) {
      const std::string where =
          " [beta=" + std::to_string(beta_grid[b]) + ", seed=" + std::to_string(seed) + "]";
      if (auto* d = dynamic_cast<const DivergenceError*>(&e))
        throw DivergenceError(std::string("state diverged") + where, d->step());
      switch (e.kind()) {
        case ErrorKind::config: throw ConfigError(e.what() + where);
        case ErrorKind::assertion: throw AssertionError(e.what() + where);
        default: throw NumericalError(e.what() + where);
      }
    }
  });
  std::vector<SweepRow> rows;
  for (std::size_t b = 0; b < nb; ++b) {
    std::span<const VarianceReport> reps(results.data() + b * n_replicates, n_replicates);
    SweepRow row;
    row.beta = beta_grid[b];
    row.kind = kind;
    row.report = pool_replicates(reps);
    for (const auto& r : reps) {
      row.replicate_asym_var.push_back(r.asym_var);
      row.replicate_mean.push_back(r.mean);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// sigma_f^2 = <f0, phi> under pi by quadrature.
inline double one_particle_sigma_quadrature(const TargetModel1D& model, const PoissonSolution& ps,
                                            const Observable1D& f) {
  const auto x = model.nodes();
  const auto m = model.node_mass();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += m[i] * (f.value(x[i]) - ps.observable_mean) * ps.phi[i];
  return acc;
}

inline double one_particle_sigma_quadrature(const TargetModel1D& model, const Observable1D& f) {
  return one_particle_sigma_quadrature(model, solve_poisson_overdamped_1d(model, f), f);
}

}  // namespace cmc
