#pragma once

// Experiment drivers shared by the command-line tool and the acceptance suite.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cmc/coupling.hpp"
#include "cmc/estimators.hpp"
#include "cmc/langevin.hpp"
#include "cmc/model.hpp"
#include "cmc/ot.hpp"
#include "cmc/parallel.hpp"
#include "cmc/poisson.hpp"
#include "cmc/variance.hpp"
#include "cmc/zigzag.hpp"

namespace cmc {

struct SweepSettings {
  LangevinConfig base;
  std::size_t replicates = 20;
  std::size_t n_batches = 50;
  std::uint64_t base_seed = 1;
  std::size_t workers = 1;
};

/// Variance-vs-beta sweep of scalar couplings for n = 2 overdamped particles.
/// beta = 0 is the independent coupling for every kind, so it is simulated once
/// and shared (identical under common random numbers).
inline std::vector<SweepRow> sweep_scalar(const TargetModel1D& model, const Observable1D& f,
                                          const std::vector<ScalarKind>& kinds,
                                          const std::vector<double>& betas,
                                          const SweepSettings& s) {
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_overdamped_1d(model, f));
  auto runner_for = [&](ScalarKind kind) {
    return [&, kind](double beta, std::uint64_t seed) {
      LangevinConfig cfg = s.base;
      cfg.seed = seed;
      ScalarCoupling1D c(kind, beta);
      c.poisson = ps;
      c.observable_gradient = f.gradient;
      return langevin_variance(cfg, model, f, c, s.n_batches);
    };
  };
  std::vector<double> zero, nonzero;
  for (double b : betas) (b == 0.0 ? zero : nonzero).push_back(b);
  std::vector<SweepRow> base_rows;
  if (!zero.empty())
    base_rows = replicate_sweep("independent", zero, s.replicates, s.base_seed,
                                runner_for(ScalarKind::independent), s.workers);
  std::vector<SweepRow> out;
  for (ScalarKind k : kinds) {
    auto rows = nonzero.empty() ? std::vector<SweepRow>{}
                                : replicate_sweep(to_string(k), nonzero, s.replicates, s.base_seed,
                                                  runner_for(k), s.workers);
    std::size_t next = 0;
    for (double b : betas) {
      if (b == 0.0) {
        SweepRow r = base_rows.front();
        r.kind = to_string(k);
        out.push_back(std::move(r));
      } else {
        out.push_back(rows[next++]);
      }
    }
  }
  return out;
}

inline const SweepRow& find_row(const std::vector<SweepRow>& rows, const std::string& kind,
                                double beta) {
  for (const auto& r : rows)
    if (r.kind == kind && std::abs(r.beta - beta) < 1e-12) return r;
  throw ConfigError("no sweep row for kind " + kind);
}

/// Pooled replicate summary of asym_var for a row.
inline Summary row_summary(const SweepRow& r) { return summarize(r.replicate_asym_var); }

// ---------------------------------------------------------------------------
// Sorted vs unsorted pairwise reflection couplings in d dimensions

inline std::vector<SweepRow> sweep_block(const TargetModelND& model, const ObservableND& f,
                                         MatrixKind matrix_kind,
                                         const std::vector<PairingKind>& pairings,
                                         const std::vector<double>& betas, const SweepSettings& s) {
  const std::size_t n = s.base.n_particles;
  auto runner_for = [&](PairingKind pk, bool independent) {
    return [&, pk, independent](double beta, std::uint64_t seed) {
      LangevinConfig cfg = s.base;
      cfg.seed = seed;
      MatrixCouplingND src =
          independent ? MatrixCouplingND(MatrixKind::independent, 0.0, model.dim())
                      : MatrixCouplingND::from_observable(f, matrix_kind, beta, model.dim());
      BlockCoupling bc(WeightScheme(pk, independent ? 0.0 : beta, n), src);
      const LangevinRun run = run_langevin(cfg, model, f, NoiseCoupler::block(std::move(bc)));
      return batch_means_variance(run.f_series, cfg.dt, s.n_batches);
    };
  };
  std::vector<double> zero, nonzero;
  for (double b : betas) (b == 0.0 ? zero : nonzero).push_back(b);
  std::vector<SweepRow> base_rows;
  if (!zero.empty())
    base_rows = replicate_sweep("independent", zero, s.replicates, s.base_seed,
                                runner_for(PairingKind::pairwise_fixed, true), s.workers);
  std::vector<SweepRow> out;
  for (PairingKind pk : pairings) {
    const std::string name = pk == PairingKind::pairwise_sorted ? "sorted" : "unsorted";
    auto rows = nonzero.empty() ? std::vector<SweepRow>{}
                                : replicate_sweep(name, nonzero, s.replicates, s.base_seed,
                                                  runner_for(pk, false), s.workers);
    std::size_t next = 0;
    for (double b : betas) {
      if (b == 0.0) {
        SweepRow r = base_rows.front();
        r.kind = name;
        out.push_back(std::move(r));
      } else {
        out.push_back(rows[next++]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zigzag sweeps

struct ZigzagRow {
  std::string kind;
  double beta = 0.0;
  VarianceReport report;  // pooled over replicates
  Summary var_x, opposite_fraction, mean_abs_diff, mean_x;
  std::vector<double> replicate_asym_var, replicate_var_x, replicate_opposite, replicate_abs_diff;
  std::size_t events_x = 0, events_y = 0, events_xy = 0;
  std::vector<ZigzagLogEntry> event_log;
};

inline std::vector<ZigzagRow> sweep_zigzag(const TargetModel1D& model, const Observable1D& f,
                                           const RateSpec& rates,
                                           const std::vector<ZigzagKind>& kinds,
                                           const std::vector<double>& betas,
                                           const ZigzagConfig& base, std::size_t replicates,
                                           std::uint64_t base_seed, std::size_t workers = 1) {
  if (replicates == 0) throw ConfigError("replicates must be positive");
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_zigzag_1d(model, f));
  const std::size_t jobs = kinds.size() * betas.size() * replicates;
  std::vector<ZigzagStats> stats(jobs);
  parallel_for_index(jobs, workers, [&](std::size_t job) {
    const std::size_t r = job % replicates, kb = job / replicates;
    const ZigzagKind kind = kinds[kb / betas.size()];
    const double beta = betas[kb % betas.size()];
    ZigzagConfig cfg = base;
    cfg.seed = base_seed + r;
    if (r != 0) cfg.event_log_limit = 0;
    stats[job] = simulate_coupled_zigzag(cfg, rates, ZigzagCoupling(kind, beta, ps), f);
  });
  std::vector<ZigzagRow> out;
  for (std::size_t kb = 0; kb < kinds.size() * betas.size(); ++kb) {
    ZigzagRow row;
    row.kind = to_string(kinds[kb / betas.size()]);
    row.beta = betas[kb % betas.size()];
    std::vector<VarianceReport> reps;
    std::vector<double> mx;
    for (std::size_t r = 0; r < replicates; ++r) {
      const ZigzagStats& st = stats[kb * replicates + r];
      reps.push_back(st.f_report);
      row.replicate_asym_var.push_back(st.f_report.asym_var);
      row.replicate_var_x.push_back(st.var_x.mean);
      row.replicate_opposite.push_back(st.opposite_fraction.mean);
      row.replicate_abs_diff.push_back(st.mean_abs_diff.mean);
      mx.push_back(st.mean_x.mean);
      row.events_x += st.events_x;
      row.events_y += st.events_y;
      row.events_xy += st.events_xy;
    }
    row.report = pool_replicates(reps);
    if (replicates >= 2) {
      row.var_x = summarize(row.replicate_var_x);
      row.opposite_fraction = summarize(row.replicate_opposite);
      row.mean_abs_diff = summarize(row.replicate_abs_diff);
      row.mean_x = summarize(mx);
    } else {
      const ZigzagStats& st = stats[kb * replicates];
      row.var_x = st.var_x;
      row.opposite_fraction = st.opposite_fraction;
      row.mean_abs_diff = st.mean_abs_diff;
      row.mean_x = st.mean_x;
    }
    row.event_log = std::move(stats[kb * replicates].event_log);
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kantorovich comparison

struct EmpiricalCost {
  std::string kind;
  Summary value;
  /// Fraction of samples with |x + y| < delta.
  double antidiagonal_fraction = 0.0;
  /// Sample histogram on the marginal grid (probability per cell).
  Eigen::MatrixXd histogram;
};

struct OtComparison {
  DiscreteMarginal marginal;
  TransportPlan plan;
  double cost_spread = 0.0;
  double antidiagonal_mass = 0.0;
  double diagonal_mass = 0.0;
  double delta = 0.2;
  std::vector<EmpiricalCost> empirical;
};

struct OtSettings {
  std::size_t nodes = 400;
  double halfwidth = 5.0;
  /// Target regularization as a multiple of the cost spread.
  double epsilon_factor = 1e-2;
  double delta = 0.2;
  std::size_t max_iters = 20000;
  double tol = 1e-9;
  LangevinConfig run;
  std::size_t n_batches = 20;
};

inline OtComparison ot_compare(const TargetModel1D& model, const Observable1D& f,
                               const std::vector<ScalarKind>& kinds, const OtSettings& s) {
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_overdamped_1d(model, f));
  OtComparison out;
  out.delta = s.delta;
  out.marginal = grid_marginal(model, s.nodes, s.halfwidth);
  const Eigen::MatrixXd cost =
      assemble_cost(model, f, *ps, out.marginal.nodes, out.marginal.nodes);
  out.cost_spread = cost_spread(out.marginal, out.marginal, cost);
  const double target = s.epsilon_factor * std::max(out.cost_spread, 1e-12);
  auto ladder = sinkhorn_ladder(out.marginal, out.marginal, cost, std::max(out.cost_spread, target),
                                target, 0.5, s.max_iters, s.tol);
  out.plan = std::move(ladder.back());
  out.antidiagonal_mass = mass_near_diagonal(out.plan, out.marginal, out.marginal, s.delta, 1.0);
  out.diagonal_mass = mass_near_diagonal(out.plan, out.marginal, out.marginal, s.delta, -1.0);

  const PairCost pc(*ps, f);
  const auto& nodes = out.marginal.nodes;
  const double h = nodes[1] - nodes[0];
  for (ScalarKind k : kinds) {
    ScalarCoupling1D c(k, k == ScalarKind::independent ? 0.0 : kMaxBeta);
    c.poisson = ps;
    c.observable_gradient = f.gradient;
    LangevinConfig cfg = s.run;
    cfg.n_particles = 2;
    if (cfg.trajectory_stride == 0) cfg.trajectory_stride = 10;
    const LangevinRun run = run_langevin(cfg, model, f, c);
    const auto& tr = run.trajectory;
    std::vector<double> xs(tr.size()), ys(tr.size());
    EmpiricalCost ec;
    ec.kind = to_string(k);
    ec.histogram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes.size()),
                                         static_cast<Eigen::Index>(nodes.size()));
    std::size_t near = 0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      xs[t] = tr.position(t, 0);
      ys[t] = tr.position(t, 1);
      if (std::abs(xs[t] + ys[t]) < s.delta) ++near;
      auto cell = [&](double v) {
        const double u = std::round((v - nodes.front()) / h);
        return static_cast<Eigen::Index>(std::clamp(u, 0.0, static_cast<double>(nodes.size() - 1)));
      };
      ec.histogram(cell(xs[t]), cell(ys[t])) += 1.0;
    }
    if (tr.size() > 0) ec.histogram /= static_cast<double>(tr.size());
    ec.antidiagonal_fraction = tr.size() ? static_cast<double>(near) / static_cast<double>(tr.size()) : 0.0;
    ec.value = plan_cost_of_empirical(xs, ys, [&](double x, double y) { return pc(x, y); }, s.n_batches);
    out.empirical.push_back(std::move(ec));
  }
  return out;
}

}  // namespace cmc
