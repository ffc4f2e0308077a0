#pragma once

// Two coupled 1D zigzag processes. Each particle moves at velocity theta in
// {-1,+1} and flips at rate lambda(x,theta) = max(0, theta V'(x)) + gamma(x);
// the coupling moves rate alpha from the two single flips to a joint flip.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmc/coupling.hpp"
#include "cmc/error.hpp"
#include "cmc/estimators.hpp"
#include "cmc/model.hpp"
#include "cmc/rng.hpp"

namespace cmc {

struct ZigzagState {
  double x = 0.0;
  double y = 0.0;
  int theta_x = 1;
  int theta_y = 1;
  double t = 0.0;
};

struct RateSpec {
  std::function<double(double)> grad_potential;
  /// Constant excess rate, used when `excess` is empty.
  double gamma = 0.1;
  std::function<double(double)> excess;
  /// Upper bound of the excess rate, required with `excess`.
  double gamma_max = 0.1;
  /// Lipschitz constant of V' used by the thinning bound.
  double lipschitz = 1.0;
  double horizon = 0.5;

  static RateSpec for_model(const TargetModel1D& m, double gamma) {
    RateSpec r;
    r.grad_potential = m.grad_fn();
    r.gamma = gamma;
    r.gamma_max = gamma;
    r.lipschitz = m.grad_lipschitz();
    return r;
  }

  double excess_at(double x) const { return excess ? excess(x) : gamma; }
  double excess_bound() const { return excess ? gamma_max : gamma; }
  double lambda(double x, int theta) const {
    return std::max(0.0, theta * grad_potential(x)) + excess_at(x);
  }
};

struct EventRates {
  double r_x = 0.0;
  double r_y = 0.0;
  double r_xy = 0.0;
  double lambda_x = 0.0;
  double lambda_y = 0.0;
  double total() const { return r_x + r_y + r_xy; }
};

inline EventRates coupled_event_rates(const ZigzagState& s, const RateSpec& rates,
                                      const ZigzagCoupling& c) {
  EventRates e;
  e.lambda_x = rates.lambda(s.x, s.theta_x);
  e.lambda_y = rates.lambda(s.y, s.theta_y);
  const double a = zigzag_alpha(c, s.x, s.y, s.theta_x, s.theta_y, e.lambda_x, e.lambda_y);
  e.r_x = e.lambda_x - a;
  e.r_y = e.lambda_y - a;
  e.r_xy = a;
  if (e.r_x < -1e-12 || e.r_y < -1e-12 || e.r_xy < -1e-12)
    throw AssertionError("coupling not admissible: negative event rate");
  e.r_x = std::max(0.0, e.r_x);
  e.r_y = std::max(0.0, e.r_y);
  const double identity_gap = e.total() - (e.lambda_x + e.lambda_y - a);
  if (std::abs(identity_gap) > 1e-12 * (1.0 + e.lambda_x + e.lambda_y))
    throw AssertionError("total event rate differs from lambda_x + lambda_y - alpha");
  return e;
}

enum class ZigzagEvent { x, y, xy };

inline const char* to_string(ZigzagEvent e) {
  switch (e) {
    case ZigzagEvent::x: return "x";
    case ZigzagEvent::y: return "y";
    case ZigzagEvent::xy: return "xy";
  }
  return "?";
}

struct ZigzagLogEntry {
  double t;
  double x, y;
  int theta_x, theta_y;
  ZigzagEvent type;
};

struct ZigzagConfig {
  double t_total = 5e4;
  double burn_in = 5e3;
  std::uint64_t seed = 1;
  std::size_t n_batches = 50;
  ZigzagState initial{};
  /// Maximum number of logged events; 0 disables the log.
  std::size_t event_log_limit = 0;
};

struct ZigzagStats {
  /// Batch-means report for F = (f(x) + f(y))/2.
  VarianceReport f_report;
  Summary mean_x, mean_y;
  /// Var(x) with a delta-method half-width from batch statistics.
  Summary var_x, var_y;
  /// Fraction of time with theta_x * theta_y = -1.
  Summary opposite_fraction;
  Summary mean_abs_diff;
  std::size_t events_x = 0, events_y = 0, events_xy = 0, rejected = 0;
  std::vector<ZigzagLogEntry> event_log;
};

namespace detail {

struct ZigzagBatch {
  double f = 0.0, x = 0.0, x2 = 0.0, y = 0.0, y2 = 0.0, opp = 0.0, absdiff = 0.0;
};

inline double integral_abs_linear(double d0, double slope, double s) {
  const double d1 = d0 + slope * s;
  if (slope == 0.0 || d0 * d1 >= 0.0) return 0.5 * s * (std::abs(d0) + std::abs(d1));
  const double tc = -d0 / slope;
  return 0.5 * tc * std::abs(d0) + 0.5 * (s - tc) * std::abs(d1);
}

inline double integral_x(double x0, int th, double s) { return s * x0 + 0.5 * th * s * s; }
inline double integral_x2(double x0, int th, double s) {
  return x0 * x0 * s + x0 * th * s * s + s * s * s / 3.0;
}

}  // namespace detail

inline ZigzagStats simulate_coupled_zigzag(const ZigzagConfig& cfg, const RateSpec& rates,
                                           const ZigzagCoupling& coupling, const Observable1D& f) {
  if (!(cfg.t_total > cfg.burn_in) || cfg.burn_in < 0.0)
    throw ConfigError("empty observation window");
  if (cfg.n_batches < 2) throw ConfigError("n_batches must be at least 2");
  if (!(rates.horizon > 0.0) || rates.lipschitz < 0.0) throw ConfigError("invalid thinning bound");
  if (cfg.initial.theta_x * cfg.initial.theta_x != 1 || cfg.initial.theta_y * cfg.initial.theta_y != 1)
    throw ConfigError("velocities must be +1 or -1");

  CounterRng rng(cfg.seed);
  ZigzagState s = cfg.initial;
  s.t = 0.0;
  const double window = cfg.t_total - cfg.burn_in;
  const double t_batch = window / static_cast<double>(cfg.n_batches);
  std::vector<detail::ZigzagBatch> batches(cfg.n_batches);
  ZigzagStats out;

  // Accumulates statistics of the straight segment from state s over [t, t + len],
  // split at batch boundaries.
  auto accumulate = [&](double len) {
    double t0 = s.t, x0 = s.x, y0 = s.y;
    double remaining = len;
    if (t0 < cfg.burn_in) {
      const double skip = std::min(remaining, cfg.burn_in - t0);
      t0 += skip;
      x0 += s.theta_x * skip;
      y0 += s.theta_y * skip;
      remaining -= skip;
    }
    while (remaining > 0.0) {
      auto b = static_cast<std::size_t>((t0 - cfg.burn_in) / t_batch);
      if (b >= cfg.n_batches) b = cfg.n_batches - 1;
      double batch_end = cfg.burn_in + static_cast<double>(b + 1) * t_batch;
      if (batch_end <= t0 && b + 1 < cfg.n_batches) {
        ++b;
        batch_end += t_batch;
      }
      const double piece = b + 1 == cfg.n_batches ? remaining : std::min(remaining, batch_end - t0);
      auto& acc = batches[b];
      const double xm = x0 + 0.5 * s.theta_x * piece, ym = y0 + 0.5 * s.theta_y * piece;
      const double x1 = x0 + s.theta_x * piece, y1 = y0 + s.theta_y * piece;
      const double fa = 0.5 * (f.value(x0) + f.value(y0));
      const double fm = 0.5 * (f.value(xm) + f.value(ym));
      const double fb = 0.5 * (f.value(x1) + f.value(y1));
      acc.f += piece / 6.0 * (fa + 4.0 * fm + fb);
      acc.x += detail::integral_x(x0, s.theta_x, piece);
      acc.x2 += detail::integral_x2(x0, s.theta_x, piece);
      acc.y += detail::integral_x(y0, s.theta_y, piece);
      acc.y2 += detail::integral_x2(y0, s.theta_y, piece);
      if (s.theta_x * s.theta_y < 0) acc.opp += piece;
      acc.absdiff += detail::integral_abs_linear(x0 - y0, s.theta_x - s.theta_y, piece);
      t0 += piece;
      x0 = x1;
      y0 = y1;
      remaining -= piece;
    }
  };

  auto advance = [&](double len) {
    accumulate(len);
    s.x += s.theta_x * len;
    s.y += s.theta_y * len;
    s.t += len;
  };

  const double h = rates.horizon;
  const double slack = rates.lipschitz * h + rates.excess_bound();
  while (s.t < cfg.t_total) {
    const double bx = std::max(0.0, s.theta_x * rates.grad_potential(s.x)) + slack;
    const double by = std::max(0.0, s.theta_y * rates.grad_potential(s.y)) + slack;
    const double bound = bx + by;
    const double tau = rng.exponential(bound);
    const double limit = std::min(h, cfg.t_total - s.t);
    if (tau >= limit) {
      advance(limit);
      continue;
    }
    advance(tau);
    const EventRates e = coupled_event_rates(s, rates, coupling);
    if (e.lambda_x > bx * (1.0 + 1e-12) || e.lambda_y > by * (1.0 + 1e-12))
      throw AssertionError("thinning bound too small");
    const double u = rng.uniform() * bound;
    std::optional<ZigzagEvent> ev;
    if (u < e.r_x) {
      ev = ZigzagEvent::x;
    } else if (u < e.r_x + e.r_y) {
      ev = ZigzagEvent::y;
    } else if (u < e.total()) {
      ev = ZigzagEvent::xy;
    }
    if (!ev) {
      ++out.rejected;
      continue;
    }
    const int before = s.theta_x * s.theta_y;
    switch (*ev) {
      case ZigzagEvent::x: s.theta_x = -s.theta_x; break;
      case ZigzagEvent::y: s.theta_y = -s.theta_y; break;
      case ZigzagEvent::xy:
        s.theta_x = -s.theta_x;
        s.theta_y = -s.theta_y;
        break;
    }
    const int after = s.theta_x * s.theta_y;
    if ((*ev == ZigzagEvent::xy) != (after == before))
      throw AssertionError("flip changed the velocity product incorrectly");
    if (s.t >= cfg.burn_in) {
      switch (*ev) {
        case ZigzagEvent::x: ++out.events_x; break;
        case ZigzagEvent::y: ++out.events_y; break;
        case ZigzagEvent::xy: ++out.events_xy; break;
      }
      if (out.event_log.size() < cfg.event_log_limit)
        out.event_log.push_back({s.t, s.x, s.y, s.theta_x, s.theta_y, *ev});
    }
  }

  const std::size_t nb = cfg.n_batches;
  std::vector<double> fm(nb), m1x(nb), m2x(nb), m1y(nb), m2y(nb), opp(nb), ad(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    fm[b] = batches[b].f / t_batch;
    m1x[b] = batches[b].x / t_batch;
    m2x[b] = batches[b].x2 / t_batch;
    m1y[b] = batches[b].y / t_batch;
    m2y[b] = batches[b].y2 / t_batch;
    opp[b] = batches[b].opp / t_batch;
    ad[b] = batches[b].absdiff / t_batch;
  }
  out.f_report = variance_from_batch_means(fm, t_batch);
  out.mean_x = summarize(m1x);
  out.mean_y = summarize(m1y);
  auto variance_summary = [&](const std::vector<double>& m1, const std::vector<double>& m2,
                              const Summary& mean) {
    const double second = std::accumulate(m2.begin(), m2.end(), 0.0) / static_cast<double>(nb);
    std::vector<double> lin(nb);
    for (std::size_t b = 0; b < nb; ++b) lin[b] = m2[b] - 2.0 * mean.mean * m1[b];
    Summary v = summarize(lin);
    v.mean = second - mean.mean * mean.mean;
    return v;
  };
  out.var_x = variance_summary(m1x, m2x, out.mean_x);
  out.var_y = variance_summary(m1y, m2y, out.mean_y);
  out.opposite_fraction = summarize(opp);
  out.mean_abs_diff = summarize(ad);
  return out;
}

}  // namespace cmc
