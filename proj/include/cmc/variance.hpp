#pragma once

// Linearized variance objective
//   delta sigma_F^2 = E_{pi x pi}[ alpha(x,y) phi'(x) phi'(y) ]
// for scalar diffusion couplings, and its zigzag analogue
//   (1/4) E_{pi x pi}[ alpha~(x,y) phi~'(x) phi~'(y) ],
//   alpha~ = alpha_{++} + alpha_{--} - alpha_{+-} - alpha_{-+}.
// Along alpha = eps * s(x,y) the slope of 2 sigma_F^2 at eps = 0 is the
// value of this integral for the unit-strength pattern s.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmc/coupling.hpp"
#include "cmc/error.hpp"
#include "cmc/estimators.hpp"
#include "cmc/langevin.hpp"
#include "cmc/model.hpp"
#include "cmc/poisson.hpp"
#include "cmc/rng.hpp"
#include "cmc/zigzag.hpp"

namespace cmc {

struct DeltaSigmaReport {
  double value = 0.0;
  std::size_t quadrature_grid = 0;
  std::optional<double> mc_value;
  std::optional<double> mc_ci;
};

namespace detail {

/// sum_i sum_j m_i m_j k(i, j) with one partial sum per row.
template <class K>
double tensor_quadrature(std::span<const double> mass, K&& kernel) {
  const std::size_t n = mass.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mass[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mass[j] != 0.0) row += mass[j] * kernel(i, j);
    total += mass[i] * row;
  }
  return total;
}

}  // namespace detail

/// Exact sampling from the grid approximation of pi: inverse CDF of the
/// node masses with uniform placement inside the chosen cell.
class GridSampler {
 public:
  explicit GridSampler(const TargetModel1D& model) : grid_(model.grid()) {
    const auto m = model.node_mass();
    cdf_.resize(m.size());
    std::partial_sum(m.begin(), m.end(), cdf_.begin());
    for (double& c : cdf_) c /= cdf_.back();
  }
  double sample(CounterRng& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    const double h = grid_.step();
    const double x = grid_.node(i) + (rng.uniform() - 0.5) * h;
    return std::clamp(x, grid_.lo, grid_.hi);
  }

 private:
  UniformGrid grid_;
  std::vector<double> cdf_;
};

inline DeltaSigmaReport delta_sigma_overdamped_1d(const TargetModel1D& model,
                                                  const PoissonSolution& ps,
                                                  const ScalarCoupling1D& coupling,
                                                  std::size_t mc_samples = 0,
                                                  std::uint64_t mc_seed = 1) {
  DeltaSigmaReport r;
  r.quadrature_grid = model.grid().size;
  if (coupling.kind == ScalarKind::independent) return r;
  const auto x = model.nodes();
  r.value = detail::tensor_quadrature(model.node_mass(), [&](std::size_t i, std::size_t j) {
    return alpha_1d(coupling, x[i], x[j]) * ps.dphi[i] * ps.dphi[j];
  });
  if (mc_samples > 1) {
    GridSampler sampler(model);
    CounterRng rng(mc_seed);
    std::vector<double> vals(mc_samples);
    for (auto& v : vals) {
      const double a = sampler.sample(rng), b = sampler.sample(rng);
      v = alpha_1d(coupling, a, b) * ps.dphi_at(a) * ps.dphi_at(b);
    }
    const Summary s = summarize(vals);
    r.mc_value = s.mean;
    r.mc_ci = s.halfwidth;
  }
  return r;
}

inline double zigzag_alpha_tilde(const ZigzagCoupling& c, const RateSpec& rates, double x, double y) {
  auto a = [&](int tx, int ty) {
    return zigzag_alpha(c, x, y, tx, ty, rates.lambda(x, tx), rates.lambda(y, ty));
  };
  return a(1, 1) + a(-1, -1) - a(1, -1) - a(-1, 1);
}

inline DeltaSigmaReport delta_sigma_zigzag(const TargetModel1D& model,
                                           const PoissonSolution& ps_tilde,
                                           const ZigzagCoupling& coupling, const RateSpec& rates) {
  DeltaSigmaReport r;
  r.quadrature_grid = model.grid().size;
  if (coupling.kind == ZigzagKind::independent || coupling.beta == 0.0) return r;
  const auto x = model.nodes();
  r.value = 0.25 * detail::tensor_quadrature(model.node_mass(), [&](std::size_t i, std::size_t j) {
              if (ps_tilde.dphi[i] == 0.0 || ps_tilde.dphi[j] == 0.0) return 0.0;
              return zigzag_alpha_tilde(coupling, rates, x[i], x[j]) * ps_tilde.dphi[i] *
                     ps_tilde.dphi[j];
            });
  return r;
}

/// -(E|phi'|)^2, the value attained by the Poisson coupling at full strength.
inline double optimal_delta_sigma(const TargetModel1D& model, const PoissonSolution& ps) {
  const auto m = model.node_mass();
  double e = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) e += m[i] * std::abs(ps.dphi[i]);
  return -e * e;
}

struct ScanEntry {
  std::string kind;
  double value = 0.0;
};

/// Evaluates delta sigma^2 at full strength for each kind and checks that the
/// Poisson kind attains the minimum (within tol). Entries are returned in
/// ascending order of value.
inline std::vector<ScanEntry> optimality_scan(const TargetModel1D& model, const Observable1D& f,
                                              const std::vector<ScalarKind>& kinds,
                                              double tol = 1e-9) {
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_overdamped_1d(model, f));
  std::vector<ScanEntry> out;
  double poisson_value = 0.0;
  bool has_poisson = false;
  for (ScalarKind k : kinds) {
    ScalarCoupling1D c(k, kMaxBeta);
    if (k == ScalarKind::poisson) c.poisson = ps;
    if (k == ScalarKind::observable_grad) c.observable_gradient = f.gradient;
    const double v = delta_sigma_overdamped_1d(model, *ps, c).value;
    out.push_back({to_string(k), v});
    if (k == ScalarKind::poisson) {
      poisson_value = v;
      has_poisson = true;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScanEntry& a, const ScanEntry& b) { return a.value < b.value; });
  if (has_poisson && !out.empty() && poisson_value > out.front().value + tol) {
    std::ostringstream msg;
    msg << "poisson coupling is not minimal:";
    for (const auto& e : out) msg << ' ' << e.kind << '=' << e.value;
    throw AssertionError(msg.str());
  }
  return out;
}

inline std::vector<ScanEntry> optimality_scan_zigzag(const TargetModel1D& model,
                                                     const Observable1D& f, const RateSpec& rates,
                                                     const std::vector<ZigzagKind>& kinds,
                                                     double tol = 1e-9) {
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_zigzag_1d(model, f));
  std::vector<ScanEntry> out;
  double poisson_value = 0.0;
  bool has_poisson = false;
  for (ZigzagKind k : kinds) {
    ZigzagCoupling c(k, 1.0, ps);
    const double v = delta_sigma_zigzag(model, *ps, c, rates).value;
    out.push_back({to_string(k), v});
    if (k == ZigzagKind::poisson_flip) {
      poisson_value = v;
      has_poisson = true;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScanEntry& a, const ScanEntry& b) { return a.value < b.value; });
  if (has_poisson && poisson_value > out.front().value + tol) {
    std::ostringstream msg;
    msg << "poisson_flip coupling is not minimal:";
    for (const auto& e : out) msg << ' ' << e.kind << '=' << e.value;
    throw AssertionError(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo side

/// One overdamped run of n particles; returns the batch-means report of F.
inline VarianceReport langevin_variance(const LangevinConfig& cfg, const TargetModel1D& model,
                                        const Observable1D& f, const ScalarCoupling1D& coupling,
                                        std::size_t n_batches) {
  const LangevinRun run = run_langevin(cfg, model, f, coupling);
  return batch_means_variance(run.f_series, cfg.dt, n_batches);
}

/// Builds the scalar coupling of `kind` with alpha = eps * direction * s(x,y).
inline ScalarCoupling1D coupling_with_strength(ScalarKind kind, double eps, double direction,
                                               std::shared_ptr<const PoissonSolution> ps,
                                               std::function<double(double)> df) {
  ScalarCoupling1D c(kind, 0.5 * std::asin(std::clamp(eps, 0.0, 1.0)), direction);
  c.poisson = std::move(ps);
  c.observable_gradient = std::move(df);
  return c;
}

struct DerivativeCheck {
  /// Central-difference slope of 2 sigma_F^2 along alpha = eps * s, pooled over replicates.
  Summary slope;
  double predicted = 0.0;
  double relative_discrepancy = 0.0;
  /// The replicate CI covers zero.
  bool inconclusive = false;
};

/// Central differences of the batch-means estimate at alpha = +-eps * s with
/// common random numbers, compared with the quadrature value of delta sigma^2.
inline DerivativeCheck finite_difference_derivative_check(
    const TargetModel1D& model, const Observable1D& f, ScalarKind kind, double eps,
    const LangevinConfig& base, std::size_t n_replicates, std::size_t n_batches,
    std::uint64_t base_seed, std::size_t workers = 1) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
  auto ps = std::make_shared<const PoissonSolution>(solve_poisson_overdamped_1d(model, f));
  DerivativeCheck out;
  {
    ScalarCoupling1D unit = coupling_with_strength(kind, 1.0, 1.0, ps, f.gradient);
    out.predicted = delta_sigma_overdamped_1d(model, *ps, unit).value;
  }
  std::vector<double> slopes(n_replicates);
  parallel_for_index(n_replicates, workers, [&](std::size_t r) {
    LangevinConfig cfg = base;
    cfg.seed = base_seed + r;
    const auto plus = coupling_with_strength(kind, eps, 1.0, ps, f.gradient);
    const auto minus = coupling_with_strength(kind, eps, -1.0, ps, f.gradient);
    const double vp = langevin_variance(cfg, model, f, plus, n_batches).asym_var;
    const double vm = langevin_variance(cfg, model, f, minus, n_batches).asym_var;
    slopes[r] = (vp - vm) / (2.0 * eps);
  });
  out.slope = summarize(slopes);
  out.inconclusive = out.slope.lo() <= 0.0 && out.slope.hi() >= 0.0;
  const double scale = std::max(std::abs(out.predicted), 1e-12);
  out.relative_discrepancy = std::abs(out.slope.mean - out.predicted) / scale;
  return out;
}

}  // namespace cmc
