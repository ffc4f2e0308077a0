#pragma once

// Finite-difference spectrum of -L = -(-V' d/dx + d^2/dx^2) on L^2(pi),
// discretized in flux form so the generator is self-adjoint in the
// pi-weighted inner product, with Dirichlet truncation at the domain edges.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmc/error.hpp"
#include "cmc/estimators.hpp"
#include "cmc/model.hpp"

namespace cmc {

/// Symmetrized operator S = W^{1/2} (-A) W^{-1/2}, tridiagonal with
/// off-diagonal -1/h^2. A is the generator matrix with w_i A_ij = w_j A_ji.
struct TridiagonalOperator {
  UniformGrid grid;
  std::vector<double> nodes;
  std::vector<double> potential;
  std::vector<double> diag;
  double off = 0.0;
  /// Unnormalized weights exp(-(V - min V)).
  std::vector<double> weights;

  std::size_t size() const { return diag.size(); }

  /// Dense generator A (small grids only).
  Eigen::MatrixXd dense_generator() const {
    const std::size_t n = size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = -diag[i];
      if (i + 1 < n) {
        const double s = std::sqrt(weights[i + 1] / weights[i]);
        a(i, i + 1) = -off * s;
        a(i + 1, i) = -off / s;
      }
    }
    return a;
  }
};

inline TridiagonalOperator discretize_generator(const TargetModel1D& model,
                                                std::size_t grid_size = 0) {
  TridiagonalOperator op;
  op.grid = model.grid();
  if (grid_size != 0) op.grid.size = grid_size;
  if (op.grid.size < 3) throw ConfigError("spectral grid needs at least 3 nodes");
  const std::size_t n = op.grid.size;
  const double h = op.grid.step();
  op.nodes = op.grid.nodes();
  op.potential.resize(n);
  for (std::size_t i = 0; i < n; ++i) op.potential[i] = model.potential(op.nodes[i]);
  const double v_lo = model.potential(op.grid.lo - h), v_hi = model.potential(op.grid.hi + h);
  const double vmin = *std::min_element(op.potential.begin(), op.potential.end());
  op.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) op.weights[i] = std::exp(-(op.potential[i] - vmin));
  op.diag.resize(n);
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t i = 0; i < n; ++i) {
    const double vl = i == 0 ? v_lo : op.potential[i - 1];
    const double vr = i + 1 == n ? v_hi : op.potential[i + 1];
    const double vi = op.potential[i];
    op.diag[i] = (std::exp(-0.5 * (vr - vi)) + std::exp(-0.5 * (vl - vi))) * inv_h2;
  }
  op.off = -inv_h2;
  return op;
}

/// All eigenvalues of the tridiagonal operator, ascending.
inline std::vector<double> tridiagonal_eigenvalues(const TridiagonalOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(op.diag.data(), n);
  Eigen::VectorXd e = Eigen::VectorXd::Constant(n - 1, op.off);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
  const Eigen::VectorXd ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Eigenvector for an isolated eigenvalue by shifted inverse iteration,
/// solving each tridiagonal system with the Thomas algorithm.
inline std::vector<double> inverse_iteration(const TridiagonalOperator& op, double lambda,
                                             int iterations = 4) {
  const std::size_t n = op.size();
  const double shift = lambda - 1e-10 * std::max(1.0, std::abs(lambda));
  std::vector<double> v(n), c(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(0.37 * static_cast<double>(i) + 0.1);
  for (int it = 0; it < iterations; ++it) {
    rhs = v;
    double denom = op.diag[0] - shift;
    c[0] = op.off / denom;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = (op.diag[i] - shift) - op.off * c[i - 1];
      if (denom == 0.0) denom = 1e-300;
      c[i] = op.off / denom;
      rhs[i] = (rhs[i] - op.off * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    double norm = 0.0;
    for (double x : rhs) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("inverse iteration failed");
    for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / norm;
  }
  return v;
}

enum class Parity { even, odd, none };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    case Parity::none: return "none";
  }
  return "none";
}

/// <s, R s> / <s, s> with R the reflection i -> n-1-i.
inline double reflection_overlap(std::span<const double> s) {
  const std::size_t n = s.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += s[i] * s[n - 1 - i];
    den += s[i] * s[i];
  }
  return num / den;
}

inline Parity classify_parity(double overlap, double threshold = 0.99) {
  if (overlap >= threshold) return Parity::even;
  if (overlap <= -threshold) return Parity::odd;
  return Parity::none;
}

struct SpectralReport {
  /// Nonzero eigenvalues of -L in ascending order (the constant mode removed).
  std::vector<double> eigenvalues;
  /// Parities of the first computed eigenfunctions (parities.size() <= eigenvalues.size()).
  std::vector<Parity> parities;
  std::vector<double> overlaps;
  double ground_value = 0.0;
  double ground_overlap = 0.0;
  double one_particle_rate = 0.0;
  bool symmetric = false;
};

inline SpectralReport spectral_analysis(const TargetModel1D& model, std::size_t grid_size = 0,
                                        std::size_t n_modes = 6) {
  const TridiagonalOperator op = discretize_generator(model, grid_size);
  const std::vector<double> all = tridiagonal_eigenvalues(op);
  if (all.size() < n_modes + 1) throw ConfigError("grid too small for requested modes");

  SpectralReport r;
  r.ground_value = all[0];
  {
    const auto v = inverse_iteration(op, all[0]);
    double dot = 0.0, nw = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double s = std::sqrt(op.weights[i]);
      dot += v[i] * s;
      nw += s * s;
    }
    r.ground_overlap = std::abs(dot) / std::sqrt(nw);
  }
  if (r.ground_overlap < 0.99)
    throw NumericalError("lowest mode is not the constant function; domain too small");
  r.eigenvalues.assign(all.begin() + 1, all.end());

  double asym = 0.0;
  for (std::size_t i = 0; i < op.size(); ++i)
    asym = std::max(asym, std::abs(op.potential[i] - op.potential[op.size() - 1 - i]) /
                              (1.0 + std::abs(op.potential[i])));
  r.symmetric = op.grid.symmetric() && asym <= 1e-9;

  for (std::size_t k = 0; k < n_modes; ++k) {
    const auto v = inverse_iteration(op, r.eigenvalues[k]);
    const double ov = reflection_overlap(v);
    r.overlaps.push_back(ov);
    r.parities.push_back(classify_parity(ov));
  }
  r.one_particle_rate = r.eigenvalues.front();
  return r;
}

/// Smallest eigenvalue with an even eigenfunction: odd modes are the ones the
/// mirror quotient removes.
inline double coupled_rate_mirror(const SpectralReport& r, std::size_t classify = 5) {
  if (!r.symmetric || r.parities.size() < classify)
    throw ConfigError("potential not even or grid asymmetric");
  for (std::size_t k = 0; k < classify; ++k)
    if (r.parities[k] == Parity::none) throw ConfigError("potential not even or grid asymmetric");
  for (std::size_t k = 0; k < r.parities.size(); ++k)
    if (r.parities[k] == Parity::even) return r.eigenvalues[k];
  throw ConfigError("no even mode among the computed eigenfunctions");
}

// ---------------------------------------------------------------------------
// Empirical decay of autocovariances

struct DecayFit {
  Summary rate;
  /// Rate fitted on the whole series.
  double full_rate = 0.0;
  bool inconclusive = false;
  bool degenerate = false;
};

namespace detail {

/// Least-squares slope of log C(tau) over lags; nullopt if any C <= 0.
inline std::optional<double> fit_log_autocov(std::span<const double> x, double dt,
                                             std::span<const std::size_t> lags) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> tx, ty;
  for (std::size_t lag : lags) {
    if (lag >= n) return std::nullopt;
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (x[i] - mean) * (x[i + lag] - mean);
    acc /= static_cast<double>(n - lag);
    if (!(acc > 0.0)) return std::nullopt;
    tx.push_back(static_cast<double>(lag) * dt);
    ty.push_back(std::log(acc));
  }
  const double k = static_cast<double>(tx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    sx += tx[i];
    sy += ty[i];
    sxx += tx[i] * tx[i];
    sxy += tx[i] * ty[i];
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return -slope;
}

}  // namespace detail

/// Fits C(tau) ~ exp(-rate * tau) over lags in [lag_min, lag_max] (time units,
/// `n_lags` equally spaced). The CI comes from per-batch fits; at least half
/// the batches must give a fit.
inline DecayFit empirical_decay_rate(std::span<const double> series, double dt, double lag_min,
                                     double lag_max, std::size_t n_lags = 12,
                                     std::size_t n_batches = 20) {
  if (!(lag_max > lag_min) || lag_min < 0.0 || n_lags < 2) throw ConfigError("invalid lag window");
  DecayFit out;
  double mean = 0.0, var = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (double v : series) var += (v - mean) * (v - mean);
  if (series.size() < 2 || !(var > 1e-300 * static_cast<double>(series.size()))) {
    out.degenerate = true;
    return out;
  }
  std::vector<std::size_t> lags;
  for (std::size_t k = 0; k < n_lags; ++k) {
    const double tau = lag_min + (lag_max - lag_min) * static_cast<double>(k) / static_cast<double>(n_lags - 1);
    lags.push_back(static_cast<std::size_t>(std::llround(tau / dt)));
  }
  const auto full = detail::fit_log_autocov(series, dt, lags);
  if (!full) {
    out.inconclusive = true;
    return out;
  }
  out.full_rate = *full;
  const std::size_t m = series.size() / n_batches;
  std::vector<double> rates;
  // Batches whose autocovariance dips to zero inside the window are dropped.
  for (std::size_t b = 0; b < n_batches; ++b)
    if (const auto r = detail::fit_log_autocov(series.subspan(b * m, m), dt, lags)) rates.push_back(*r);
  if (2 * rates.size() < n_batches || rates.size() < 2) {
    out.inconclusive = true;
    return out;
  }
  out.rate = summarize(rates);
  return out;
}

}  // namespace cmc
