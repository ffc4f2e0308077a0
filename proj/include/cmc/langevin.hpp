#pragma once

// Euler-Maruyama simulation of n coupled overdamped or underdamped Langevin
// particles driven by correlated Brownian increments G xi.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cmc/coupling.hpp"
#include "cmc/error.hpp"
#include "cmc/model.hpp"
#include "cmc/rng.hpp"

namespace cmc {

inline constexpr double kDivergenceBound = 1e8;

/// Maps i.i.d. standard normals xi (n*d, particle-major) to coupled noise G xi,
/// with G evaluated at the given positions.
class NoiseCoupler {
 public:
  static NoiseCoupler independent(std::size_t n, std::size_t d) {
    NoiseCoupler c;
    c.mode_ = Mode::identity;
    c.n_ = n;
    c.d_ = d;
    return c;
  }

  /// Pairs (0,1),(2,3),... of 1D particles coupled by a scalar alpha(x,y).
  static NoiseCoupler scalar(const ScalarCoupling1D& sc, std::size_t n) {
    NoiseCoupler c;
    c.n_ = n;
    c.d_ = 1;
    c.scalar_ = sc;
    if (sc.kind == ScalarKind::independent || sc.strength() == 0.0) {
      c.mode_ = Mode::identity;
      return c;
    }
    if (n % 2 != 0) throw ConfigError("scalar couplings require an even particle count");
    c.mode_ = Mode::scalar;
    for (int s = -1; s <= 1; ++s) c.pair_g_[s + 1] = mixing_matrix_1d(sc.strength() * s);
    return c;
  }

  static NoiseCoupler block(BlockCoupling bc) {
    NoiseCoupler c;
    c.n_ = bc.scheme().n;
    c.d_ = bc.source().dim;
    c.mode_ = bc.is_identity() ? Mode::identity : Mode::block;
    c.block_.emplace(std::move(bc));
    return c;
  }

  std::size_t particles() const { return n_; }
  std::size_t dim() const { return d_; }

  void apply(std::span<const double> positions, std::span<const double> xi, std::span<double> out) {
    switch (mode_) {
      case Mode::identity:
        std::copy(xi.begin(), xi.end(), out.begin());
        return;
      case Mode::scalar:
        for (std::size_t i = 0; i < n_; i += 2) {
          const auto& g = pair_g_[scalar_.pattern(positions[i], positions[i + 1]) + 1];
          out[i] = g(0, 0) * xi[i] + g(0, 1) * xi[i + 1];
          out[i + 1] = g(1, 0) * xi[i] + g(1, 1) * xi[i + 1];
        }
        return;
      case Mode::block:
        block_->prepare(positions);
        block_->apply(xi, out);
        return;
    }
  }

 private:
  enum class Mode { identity, scalar, block };
  Mode mode_ = Mode::identity;
  std::size_t n_ = 0, d_ = 0;
  ScalarCoupling1D scalar_;
  std::array<Eigen::Matrix2d, 3> pair_g_;
  std::optional<BlockCoupling> block_;
};

enum class Dynamics { overdamped, underdamped };

struct LangevinConfig {
  std::size_t n_particles = 2;
  double dt = 1e-2;
  double t_total = 1e4;
  double burn_in = 1e3;
  std::uint64_t seed = 1;
  Dynamics dynamics = Dynamics::overdamped;
  double gamma = 1.0;
  double mass = 1.0;
  /// n*d starting positions (zeros when empty) and momenta.
  std::vector<double> initial_q;
  std::vector<double> initial_p;
  /// Record every stride-th post-burn-in state; 0 disables the trajectory.
  std::size_t trajectory_stride = 0;

  void validate() const {
    if (n_particles == 0) throw ConfigError("n_particles must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(t_total > burn_in) || burn_in < 0.0) throw ConfigError("require t_total > burn_in >= 0");
    if (dynamics == Dynamics::underdamped && !(gamma > 0.0 && mass > 0.0))
      throw ConfigError("underdamped dynamics require gamma > 0 and mass > 0");
  }
  std::size_t total_steps() const { return static_cast<std::size_t>(std::llround(t_total / dt)); }
  std::size_t burn_steps() const { return static_cast<std::size_t>(std::llround(burn_in / dt)); }
};

struct TrajectorySample {
  std::size_t n_particles = 0;
  std::size_t dim = 0;
  std::vector<double> times;
  /// Per recorded time, n*d positions (particle-major).
  std::vector<double> positions;
  std::vector<double> momenta;

  std::size_t size() const { return times.size(); }
  double position(std::size_t t, std::size_t particle, std::size_t k = 0) const {
    return positions[(t * n_particles + particle) * dim + k];
  }
};

struct LangevinRun {
  double dt = 0.0;
  /// F = (1/n) sum_i f(x_i) at every post-burn-in step.
  std::vector<double> f_series;
  TrajectorySample trajectory;
};

inline void check_finite_state(std::span<const double> s, std::size_t step) {
  for (double v : s)
    if (!std::isfinite(v) || std::abs(v) > kDivergenceBound)
      throw DivergenceError("state diverged", static_cast<long long>(step));
}

/// X+ = X - grad V(X) dt + sqrt(2 dt) * noise, noise = G xi already applied.
inline void step_overdamped(std::span<double> q, double dt, const TargetModelND& model,
                            std::span<const double> coupled_noise, std::span<double> grad_buf) {
  const std::size_t d = model.dim();
  const double amp = std::sqrt(2.0 * dt);
  for (std::size_t i = 0; i * d < q.size(); ++i) {
    auto qi = q.subspan(i * d, d);
    model.grad(qi, grad_buf);
    for (std::size_t k = 0; k < d; ++k)
      qi[k] = qi[k] - grad_buf[k] * dt + amp * coupled_noise[i * d + k];
  }
}

/// q+ = q + p/M dt; p+ = p - grad V(q) dt - gamma p dt + sqrt(2 gamma dt) * noise,
/// both from the pre-step state.
inline void step_underdamped(std::span<double> q, std::span<double> p, double dt,
                             const TargetModelND& model, double gamma, double mass,
                             std::span<const double> coupled_noise, std::span<double> grad_buf) {
  const std::size_t d = model.dim();
  const double amp = std::sqrt(2.0 * gamma * dt);
  for (std::size_t i = 0; i * d < q.size(); ++i) {
    auto qi = q.subspan(i * d, d);
    auto pi = p.subspan(i * d, d);
    model.grad(qi, grad_buf);
    for (std::size_t k = 0; k < d; ++k) {
      const double p0 = pi[k];
      qi[k] = qi[k] + p0 / mass * dt;
      pi[k] = p0 - grad_buf[k] * dt - gamma * p0 * dt + amp * coupled_noise[i * d + k];
    }
  }
}

inline LangevinRun run_langevin(const LangevinConfig& cfg, const TargetModelND& model,
                                const ObservableND& f, NoiseCoupler coupler) {
  cfg.validate();
  const std::size_t n = cfg.n_particles, d = model.dim(), nd = n * d;
  if (coupler.particles() != n || coupler.dim() != d)
    throw ConfigError("coupling does not match particle count or dimension");

  std::vector<double> q(nd, 0.0), p(nd, 0.0);
  if (!cfg.initial_q.empty()) {
    if (cfg.initial_q.size() != nd) throw ConfigError("initial state must have n*d entries");
    q = cfg.initial_q;
  }
  if (!cfg.initial_p.empty()) {
    if (cfg.initial_p.size() != nd) throw ConfigError("initial momenta must have n*d entries");
    p = cfg.initial_p;
  }

  CounterRng rng(cfg.seed);
  std::vector<double> xi(nd), noise(nd), grad(d);
  const std::size_t steps = cfg.total_steps(), burn = cfg.burn_steps();

  LangevinRun run;
  run.dt = cfg.dt;
  run.f_series.reserve(steps - std::min(steps, burn));
  run.trajectory.n_particles = n;
  run.trajectory.dim = d;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t step = 1; step <= steps; ++step) {
    for (double& v : xi) v = rng.normal();
    coupler.apply(q, xi, noise);
    if (cfg.dynamics == Dynamics::overdamped)
      step_overdamped(q, cfg.dt, model, noise, grad);
    else
      step_underdamped(q, p, cfg.dt, model, cfg.gamma, cfg.mass, noise, grad);
    check_finite_state(q, step);
    if (cfg.dynamics == Dynamics::underdamped) check_finite_state(p, step);
    if (step <= burn) continue;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f.value(std::span<const double>(q).subspan(i * d, d));
    run.f_series.push_back(acc * inv_n);

    if (cfg.trajectory_stride > 0 && (step - burn) % cfg.trajectory_stride == 0) {
      run.trajectory.times.push_back(static_cast<double>(step) * cfg.dt);
      run.trajectory.positions.insert(run.trajectory.positions.end(), q.begin(), q.end());
      if (cfg.dynamics == Dynamics::underdamped)
        run.trajectory.momenta.insert(run.trajectory.momenta.end(), p.begin(), p.end());
    }
  }
  return run;
}

/// 1D convenience overload.
inline LangevinRun run_langevin(const LangevinConfig& cfg, const TargetModel1D& model,
                                const Observable1D& f, const ScalarCoupling1D& coupling) {
  return run_langevin(cfg, TargetModelND(model), lift(f),
                      NoiseCoupler::scalar(coupling, cfg.n_particles));
}

}  // namespace cmc
