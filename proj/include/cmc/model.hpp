#pragma once

// Target distributions pi ~ exp(-V), observables, and the uniform-grid
// trapezoid quadrature that every 1D computation in the library shares.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmc/error.hpp"

namespace cmc {

struct UniformGrid {
  double lo = -8.0;
  double hi = 8.0;
  std::size_t size = 2001;

  double step() const { return (hi - lo) / static_cast<double>(size - 1); }
  double node(std::size_t i) const {
    return i + 1 == size ? hi : lo + static_cast<double>(i) * step();
  }
  std::vector<double> nodes() const {
    std::vector<double> out(size);
    for (std::size_t i = 0; i < size; ++i) out[i] = node(i);
    return out;
  }
  bool symmetric() const { return std::abs(lo + hi) <= 1e-12 * std::max(1.0, hi - lo); }
};

/// Composite trapezoid weights on a uniform grid.
inline std::vector<double> trapezoid_weights(const UniformGrid& grid) {
  std::vector<double> w(grid.size, grid.step());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// out[i] = integral from the first node to node i of the piecewise-linear
/// interpolant of `values`.
inline std::vector<double> cumulative_trapezoid(std::span<const double> values, double h) {
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 1; i < values.size(); ++i)
    out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
  return out;
}

/// Linear interpolation of grid data, clamped to the end values outside the grid.
inline double interpolate(const UniformGrid& grid, std::span<const double> values, double x) {
  if (x <= grid.lo) return values.front();
  if (x >= grid.hi) return values.back();
  const double u = (x - grid.lo) / grid.step();
  auto i = static_cast<std::size_t>(u);
  if (i >= grid.size - 1) i = grid.size - 2;
  const double t = u - static_cast<double>(i);
  return (1.0 - t) * values[i] + t * values[i + 1];
}

/// One-dimensional target pi(dx) = exp(-V(x)) dx / Z truncated to [lo, hi].
/// Immutable after construction; the normalizer and the nodal density are
/// computed once by trapezoid quadrature.
class TargetModel1D {
 public:
  using Fn = std::function<double(double)>;

  TargetModel1D(std::string name, Fn potential, Fn grad_potential, UniformGrid grid,
                bool even, double grad_lipschitz)
      : name_(std::move(name)),
        potential_(std::move(potential)),
        grad_(std::move(grad_potential)),
        grid_(grid),
        even_(even),
        grad_lipschitz_(grad_lipschitz) {
    if (grid_.size < 3) throw ConfigError("grid_size must be at least 3");
    if (!(grid_.hi > grid_.lo)) throw ConfigError("model domain must have hi > lo");
    nodes_ = grid_.nodes();
    weights_ = trapezoid_weights(grid_);
    v_.resize(grid_.size);
    for (std::size_t i = 0; i < grid_.size; ++i) {
      v_[i] = potential_(nodes_[i]);
      if (!std::isfinite(v_[i])) throw ConfigError("potential is not finite on the grid");
    }
    const double vmin = *std::min_element(v_.begin(), v_.end());
    double z = 0.0;
    for (std::size_t i = 0; i < grid_.size; ++i) z += weights_[i] * std::exp(-(v_[i] - vmin));
    log_norm_ = std::log(z) - vmin;
    density_.resize(grid_.size);
    mass_.resize(grid_.size);
    for (std::size_t i = 0; i < grid_.size; ++i) {
      density_[i] = std::exp(-v_[i] - log_norm_);
      mass_[i] = weights_[i] * density_[i];
    }
  }

  const std::string& name() const { return name_; }
  double potential(double x) const { return potential_(x); }
  double grad(double x) const { return grad_(x); }
  const Fn& potential_fn() const { return potential_; }
  const Fn& grad_fn() const { return grad_; }
  const UniformGrid& grid() const { return grid_; }
  double log_norm() const { return log_norm_; }
  bool is_even() const { return even_; }
  /// Lipschitz constant of V' on the domain (used for event-rate bounds).
  double grad_lipschitz() const { return grad_lipschitz_; }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> potential_at_nodes() const { return v_; }
  /// Normalized density exp(-V)/Z at the nodes.
  std::span<const double> density() const { return density_; }
  /// Trapezoid weight times density; sums to one.
  std::span<const double> node_mass() const { return mass_; }
  std::span<const double> quad_weights() const { return weights_; }

  /// Largest deviation of V' from a centered difference of V over interior
  /// nodes, relative to 1 + |V'|.
  double gradient_consistency() const {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < grid_.size; ++i) {
      const double x = nodes_[i];
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      const double fd = (potential_(x + h) - potential_(x - h)) / (2.0 * h);
      const double g = grad_(x);
      worst = std::max(worst, std::abs(fd - g) / (1.0 + std::abs(g)));
    }
    return worst;
  }

 private:
  std::string name_;
  Fn potential_;
  Fn grad_;
  UniformGrid grid_;
  bool even_;
  double grad_lipschitz_;
  double log_norm_ = 0.0;
  std::vector<double> nodes_, weights_, v_, density_, mass_;
};

/// Expectation of g under the model's target, by composite trapezoid.
template <class G>
double quadrature_expectation(const TargetModel1D& model, G&& g) {
  const auto x = model.nodes();
  const auto m = model.node_mass();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gi = g(x[i]);
    if (!std::isfinite(gi)) throw NumericalError("non-finite integrand");
    acc += m[i] * gi;
  }
  return acc;
}

/// V = x^2 / (2 sigma^2) on [-halfwidth, halfwidth].
inline TargetModel1D build_gaussian_model(double sigma, double domain_halfwidth = 8.0,
                                          std::size_t grid_size = 2001) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (domain_halfwidth < 6.0 * sigma) throw ConfigError("domain_halfwidth must be at least 6 sigma");
  if (grid_size < 3) throw ConfigError("grid_size must be at least 3");
  const double inv_var = 1.0 / (sigma * sigma);
  return TargetModel1D(
      "gaussian", [inv_var](double x) { return 0.5 * x * x * inv_var; },
      [inv_var](double x) { return x * inv_var; },
      UniformGrid{-domain_halfwidth, domain_halfwidth, grid_size}, true, inv_var);
}

/// V = a x^4 - b x^2.
inline TargetModel1D build_double_well_model(double a, double b, double domain_halfwidth = 3.0,
                                             std::size_t grid_size = 2001) {
  if (!(a > 0.0)) throw ConfigError("double_well requires a > 0");
  if (grid_size < 3) throw ConfigError("grid_size must be at least 3");
  const double edge = domain_halfwidth;
  const double lipschitz = std::max(std::abs(12.0 * a * edge * edge - 2.0 * b), std::abs(2.0 * b));
  return TargetModel1D(
      "double_well", [a, b](double x) { return a * x * x * x * x - b * x * x; },
      [a, b](double x) { return 4.0 * a * x * x * x - 2.0 * b * x; },
      UniformGrid{-domain_halfwidth, domain_halfwidth, grid_size}, true, lipschitz);
}

/// V = log(1 + x^2), a Cauchy target. |V'| <= 1 and |V''| <= 2.
inline TargetModel1D build_cauchy_model(double domain_halfwidth = 200.0,
                                        std::size_t grid_size = 20001) {
  if (grid_size < 3) throw ConfigError("grid_size must be at least 3");
  return TargetModel1D(
      "cauchy", [](double x) { return std::log1p(x * x); },
      [](double x) { return 2.0 * x / (1.0 + x * x); },
      UniformGrid{-domain_halfwidth, domain_halfwidth, grid_size}, true, 2.0);
}

/// Scalar observable f with derivative and its mean under the target.
struct Observable1D {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> gradient;
  double mean = 0.0;

  double centered(double x) const { return value(x) - mean; }
};

/// Builds an observable whose mean is taken from quadrature on `model`.
inline Observable1D make_observable(const TargetModel1D& model, std::string name,
                                    std::function<double(double)> f,
                                    std::function<double(double)> df) {
  Observable1D obs{std::move(name), std::move(f), std::move(df), 0.0};
  obs.mean = quadrature_expectation(model, obs.value);
  return obs;
}

/// f = c1 x^2 + c2 x + c0.
inline Observable1D polynomial_observable(const TargetModel1D& model, std::string name, double c1,
                                          double c2, double c0 = 0.0) {
  return make_observable(
      model, std::move(name), [=](double x) { return c1 * x * x + c2 * x + c0; },
      [=](double x) { return 2.0 * c1 * x + c2; });
}

inline Observable1D linear_observable(const TargetModel1D& m) {
  return polynomial_observable(m, "linear", 0.0, 1.0);
}
inline Observable1D quadratic_observable(const TargetModel1D& m) {
  return polynomial_observable(m, "quadratic", 1.0, 0.0);
}
inline Observable1D mixed_observable(const TargetModel1D& m, double c1, double c2) {
  return polynomial_observable(m, "mixed", c1, c2);
}
inline Observable1D constant_observable(const TargetModel1D& m, double c) {
  return polynomial_observable(m, "constant", 0.0, 0.0, c);
}

// ---------------------------------------------------------------------------
// d-dimensional targets

class TargetModelND {
 public:
  using PotentialFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  TargetModelND(std::string name, std::size_t dim, PotentialFn potential, GradFn grad,
                std::optional<double> gaussian_sigma = std::nullopt)
      : name_(std::move(name)),
        dim_(dim),
        potential_(std::move(potential)),
        grad_(std::move(grad)),
        gaussian_sigma_(gaussian_sigma) {
    if (dim_ == 0) throw ConfigError("dimension must be positive");
  }

  /// Lifts a 1D model (d = 1).
  explicit TargetModelND(const TargetModel1D& m)
      : TargetModelND(
            m.name(), 1, [v = m.potential_fn()](std::span<const double> x) { return v(x[0]); },
            [g = m.grad_fn()](std::span<const double> x, std::span<double> out) {
              out[0] = g(x[0]);
            }) {}

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  double potential(std::span<const double> x) const { return potential_(x); }
  void grad(std::span<const double> x, std::span<double> out) const { grad_(x, out); }
  /// Set for isotropic Gaussian targets, where Poisson solutions are analytic.
  std::optional<double> gaussian_sigma() const { return gaussian_sigma_; }

 private:
  std::string name_;
  std::size_t dim_;
  PotentialFn potential_;
  GradFn grad_;
  std::optional<double> gaussian_sigma_;
};

inline TargetModelND build_gaussian_model_nd(std::size_t dim, double sigma = 1.0) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const double inv_var = 1.0 / (sigma * sigma);
  return TargetModelND(
      "gaussian", dim,
      [inv_var](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return 0.5 * s * inv_var;
      },
      [inv_var](std::span<const double> x, std::span<double> out) {
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] * inv_var;
      },
      sigma);
}

/// Relative gradient-consistency error at `points` (flattened, dim each).
inline double gradient_consistency(const TargetModelND& model, std::span<const double> points) {
  const std::size_t d = model.dim();
  std::vector<double> x(d), g(d);
  double worst = 0.0;
  for (std::size_t p = 0; p + d <= points.size(); p += d) {
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(p), d, x.begin());
    model.grad(x, g);
    for (std::size_t k = 0; k < d; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
      const double keep = x[k];
      x[k] = keep + h;
      const double up = model.potential(x);
      x[k] = keep - h;
      const double down = model.potential(x);
      x[k] = keep;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / (1.0 + std::abs(g[k])));
    }
  }
  return worst;
}

struct ObservableND {
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  std::string name;
  ValueFn value;
  GradFn gradient;
  std::optional<double> mean;
  /// Gradient of the Poisson solution, when known in closed form.
  GradFn poisson_gradient;
};

/// f = c |x|^2 + l * sum_k x_k. Mean and Poisson gradient are filled in for
/// isotropic Gaussian targets: grad phi = c sigma^2 x + l sigma^2 (1,...,1).
inline ObservableND norm_sq_plus_linear_observable(const TargetModelND& model, double c, double l) {
  const std::size_t d = model.dim();
  ObservableND obs;
  obs.name = l == 0.0 ? "norm_sq" : "norm_sq_plus_linear";
  obs.value = [c, l](std::span<const double> x) {
    double s = 0.0, t = 0.0;
    for (double v : x) {
      s += v * v;
      t += v;
    }
    return c * s + l * t;
  };
  obs.gradient = [c, l](std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = 2.0 * c * x[k] + l;
  };
  if (auto sigma = model.gaussian_sigma()) {
    const double s2 = (*sigma) * (*sigma);
    obs.mean = c * static_cast<double>(d) * s2;
    obs.poisson_gradient = [c, l, s2](std::span<const double> x, std::span<double> out) {
      for (std::size_t k = 0; k < x.size(); ++k) out[k] = c * s2 * x[k] + l * s2;
    };
  }
  return obs;
}

inline ObservableND norm_sq_observable(const TargetModelND& model, double c) {
  return norm_sq_plus_linear_observable(model, c, 0.0);
}

/// Lifts a 1D observable to d = 1.
inline ObservableND lift(const Observable1D& f) {
  ObservableND obs;
  obs.name = f.name;
  obs.value = [v = f.value](std::span<const double> x) { return v(x[0]); };
  obs.gradient = [g = f.gradient](std::span<const double> x, std::span<double> out) {
    out[0] = g(x[0]);
  };
  obs.mean = f.mean;
  return obs;
}

}  // namespace cmc
