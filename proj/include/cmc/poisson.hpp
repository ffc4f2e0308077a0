#pragma once

// One-dimensional Poisson equation -(-V' phi' + phi'') = f - pi(f), pi(phi) = 0,
// solved by variation of constants:
//   phi'(x) = -exp(V(x)) * integral_a^x f0(s) exp(-V(s)) ds.

#include <cmath>
#include <span>
#include <vector>

#include "cmc/error.hpp"
#include "cmc/model.hpp"

namespace cmc {

inline constexpr double kSignDeadBand = 1e-9;

struct PoissonSolution {
  UniformGrid grid;
  std::vector<double> nodes;
  std::vector<double> phi;
  std::vector<double> dphi;
  /// Pointwise residual of -(-V' phi' + phi'') - f0; zero where excluded.
  std::vector<double> residual;
  /// Nodes whose tail integral vanished below roundoff; phi' is set to 0 there.
  std::vector<bool> excluded;
  double residual_max = 0.0;
  double observable_mean = 0.0;
  bool centered = false;

  double dphi_at(double x) const { return interpolate(grid, dphi, x); }
  double phi_at(double x) const { return interpolate(grid, phi, x); }
};

inline int sign_with_dead_band(double v, double band = kSignDeadBand) {
  if (std::abs(v) < band) return 0;
  return v > 0.0 ? 1 : -1;
}

/// Per-node sign of phi', with |phi'| < 1e-9 mapped to 0.
inline std::vector<int> sign_structure(const PoissonSolution& ps) {
  std::vector<int> out(ps.dphi.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sign_with_dead_band(ps.dphi[i]);
  return out;
}

namespace detail {

/// Mass of f0 e^{-V} beyond the edge b, times e^{V(b)}, by two steps of
/// integration by parts: q + q'/V' with q = f0/V'. Zero unless V' points
/// outward and the second term is small against the first.
inline double tail_mass(const TargetModel1D& model, const Observable1D& obs, double mean,
                        double b, double side) {
  auto q = [&](double x) { return (obs.value(x) - mean) / model.grad(x); };
  const double vp = model.grad(b);
  if (!(side * vp > 0.0)) return 0.0;
  const double d = 1e-4 * std::max(1.0, std::abs(b));
  const double q0 = q(b), q1 = (q(b + d) - q(b - d)) / (2.0 * d);
  const double second = q1 / vp;
  if (!std::isfinite(q0) || !std::isfinite(second) || std::abs(second) > 0.25 * std::abs(q0))
    return 0.0;
  return side * (q0 + second);
}

}  // namespace detail

inline PoissonSolution solve_poisson_overdamped_1d(const TargetModel1D& model,
                                                   const Observable1D& obs) {
  const auto& grid = model.grid();
  const std::size_t n = grid.size;
  const double h = grid.step();
  const auto x = model.nodes();
  const auto v = model.potential_at_nodes();
  const auto mass = model.node_mass();

  // Centering uses the quadrature mean so the discrete integral of f0 vanishes.
  const double mean = quadrature_expectation(model, obs.value);
  std::vector<double> f0(n), g(n), dg(n), scale(n);
  double vref = v[0];
  for (double vi : v) vref = std::min(vref, vi);
  double abs_total = 0.0, f_max = std::abs(mean), f0_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f0[i] = obs.value(x[i]) - mean;
    f_max = std::max(f_max, std::abs(f0[i] + mean));
    f0_max = std::max(f0_max, std::abs(f0[i]));
  }
  // A constant observable leaves only roundoff in f0; its solution is zero.
  const bool constant = f0_max <= 64.0 * std::numeric_limits<double>::epsilon() * f_max;
  if (constant) std::fill(f0.begin(), f0.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    scale[i] = std::exp(-(v[i] - vref));
    g[i] = f0[i] * scale[i];
    dg[i] = (obs.gradient(x[i]) - model.grad(x[i]) * f0[i]) * scale[i];
    abs_total += std::abs(g[i]) * h;
  }

  // Left cumulative integral where the left tail holds at most half the mass,
  // otherwise minus the right cumulative integral; each is then a sum of small
  // terms rather than a difference of large ones. Both use the endpoint-
  // corrected trapezoid rule with the exact derivative of the integrand.
  const double c2 = h * h / 12.0;
  std::vector<double> left(n, 0.0), right(n, 0.0);
  if (!constant) {
    left[0] = detail::tail_mass(model, obs, mean, grid.lo, -1.0) * std::exp(-(v[0] - vref));
    right[n - 1] = detail::tail_mass(model, obs, mean, grid.hi, 1.0) * std::exp(-(v[n - 1] - vref));
  }
  for (std::size_t i = 1; i < n; ++i)
    left[i] = left[i - 1] + 0.5 * h * (g[i - 1] + g[i]) - c2 * (dg[i] - dg[i - 1]);
  for (std::size_t i = n - 1; i-- > 0;)
    right[i] = right[i + 1] + 0.5 * h * (g[i] + g[i + 1]) - c2 * (dg[i + 1] - dg[i]);

  PoissonSolution ps;
  ps.grid = grid;
  ps.nodes.assign(x.begin(), x.end());
  ps.dphi.assign(n, 0.0);
  ps.excluded.assign(n, false);
  ps.observable_mean = mean;

  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * abs_total;
  double left_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    left_mass += mass[i];
    const double integral = left_mass <= 0.5 ? left[i] : -right[i];
    if (integral == 0.0 || scale[i] == 0.0) {
      ps.excluded[i] = scale[i] == 0.0;
      continue;
    }
    const double expo = (v[i] - vref) + std::log(std::abs(integral));
    if (expo > 700.0) {
      if (std::abs(integral) <= roundoff) {
        ps.excluded[i] = true;
        continue;
      }
      throw NumericalError("unstable tail; widen tolerance or shrink domain");
    }
    ps.dphi[i] = -std::copysign(std::exp(expo), integral);
  }

  // phi'' = V' phi' - f0 supplies the endpoint correction for phi.
  std::vector<double> d2phi(n);
  for (std::size_t i = 0; i < n; ++i) d2phi[i] = model.grad(x[i]) * ps.dphi[i] - f0[i];
  ps.phi.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    ps.phi[i] = ps.phi[i - 1] + 0.5 * h * (ps.dphi[i - 1] + ps.dphi[i]) -
                c2 * (d2phi[i] - d2phi[i - 1]);
  double phi_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) phi_mean += mass[i] * ps.phi[i];
  for (double& p : ps.phi) p -= phi_mean;
  ps.centered = true;

  ps.residual.assign(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    bool skip = false;
    for (std::size_t j = i - 2; j <= i + 2; ++j) skip = skip || ps.excluded[j];
    if (skip) continue;
    const double d2 = (-ps.phi[i + 2] + 16.0 * ps.phi[i + 1] - 30.0 * ps.phi[i] +
                       16.0 * ps.phi[i - 1] - ps.phi[i - 2]) /
                      (12.0 * h * h);
    const double r = model.grad(x[i]) * ps.dphi[i] - d2 - f0[i];
    ps.residual[i] = r;
    ps.residual_max = std::max(ps.residual_max, std::abs(r));
  }
  return ps;
}

/// The zigzag Poisson problem for phi~' = (phi_+ - phi_-)/2 reduces to the
/// same first-order equation as the overdamped case.
inline PoissonSolution solve_poisson_zigzag_1d(const TargetModel1D& model,
                                               const Observable1D& obs) {
  return solve_poisson_overdamped_1d(model, obs);
}

}  // namespace cmc
