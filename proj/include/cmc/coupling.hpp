#pragma once

// Coupling fields alpha(x,y) and the noise-mixing matrices G that realize them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmc/error.hpp"
#include "cmc/model.hpp"
#include "cmc/poisson.hpp"

namespace cmc {

inline constexpr double kMaxBeta = std::numbers::pi / 4.0;

// ---------------------------------------------------------------------------
// Scalar couplings for pairs of 1D diffusions

enum class ScalarKind { independent, synchronous, mirror, symmetric, poisson, observable_grad };

inline std::string to_string(ScalarKind k) {
  switch (k) {
    case ScalarKind::independent: return "independent";
    case ScalarKind::synchronous: return "synchronous";
    case ScalarKind::mirror: return "mirror";
    case ScalarKind::symmetric: return "symmetric";
    case ScalarKind::poisson: return "poisson";
    case ScalarKind::observable_grad: return "observable_grad";
  }
  return "unknown";
}

inline ScalarKind parse_scalar_kind(const std::string& s) {
  for (auto k : {ScalarKind::independent, ScalarKind::synchronous, ScalarKind::mirror,
                 ScalarKind::symmetric, ScalarKind::poisson, ScalarKind::observable_grad})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown coupling kind '" + s + "'");
}

inline void check_beta(double beta, double hi = kMaxBeta) {
  if (!(beta >= 0.0 && beta <= hi + 1e-12))
    throw ConfigError("coupling.beta must lie in [0, " + std::to_string(hi) + "]");
}

/// alpha(x,y) = direction * sin(2 beta) * s(x,y), with s the kind's sign pattern.
/// `direction` = -1 flips the pattern, which is still admissible and is used
/// for two-sided derivative probes.
struct ScalarCoupling1D {
  ScalarKind kind = ScalarKind::independent;
  double beta = 0.0;
  double direction = 1.0;
  std::shared_ptr<const PoissonSolution> poisson;
  std::function<double(double)> observable_gradient;

  ScalarCoupling1D() = default;
  ScalarCoupling1D(ScalarKind k, double b, double dir = 1.0) : kind(k), beta(b), direction(dir) {
    check_beta(beta);
  }

  static ScalarCoupling1D with_poisson(std::shared_ptr<const PoissonSolution> ps, double b,
                                       double dir = 1.0) {
    ScalarCoupling1D c(ScalarKind::poisson, b, dir);
    c.poisson = std::move(ps);
    return c;
  }
  static ScalarCoupling1D with_observable(std::function<double(double)> df, double b,
                                          double dir = 1.0) {
    ScalarCoupling1D c(ScalarKind::observable_grad, b, dir);
    c.observable_gradient = std::move(df);
    return c;
  }

  /// Sign pattern s(x,y) in {-1, 0, +1}.
  int pattern(double x, double y) const {
    switch (kind) {
      case ScalarKind::independent: return 0;
      case ScalarKind::synchronous: return 1;
      case ScalarKind::mirror: return -1;
      case ScalarKind::symmetric: return x * y <= 0.0 ? 1 : -1;
      case ScalarKind::poisson: {
        if (!poisson) throw ConfigError("poisson coupling requires a Poisson solution");
        return -sign_with_dead_band(poisson->dphi_at(x)) * sign_with_dead_band(poisson->dphi_at(y));
      }
      case ScalarKind::observable_grad: {
        if (!observable_gradient) throw ConfigError("observable_grad coupling requires f'");
        return -sign_with_dead_band(observable_gradient(x)) *
               sign_with_dead_band(observable_gradient(y));
      }
    }
    return 0;
  }

  double strength() const { return direction * std::sin(2.0 * beta); }
};

inline double alpha_1d(const ScalarCoupling1D& c, double x, double y) {
  const int s = c.pattern(x, y);
  return s == 0 ? 0.0 : c.strength() * s;
}

/// G = [[cos b, g sin b], [g sin b, cos b]] with sin 2b = |alpha|, g = sgn alpha,
/// so that G G^T = [[1, alpha], [alpha, 1]]. Half-angle forms keep cos b and
/// sin b bit-identical at |alpha| = 1.
inline Eigen::Matrix2d mixing_matrix_1d(double alpha) {
  if (!std::isfinite(alpha) || std::abs(alpha) > 1.0 + 1e-12)
    throw AssertionError("coupling not admissible: |alpha| > 1");
  const double a = std::min(1.0, std::abs(alpha));
  const double r = std::sqrt((1.0 - a) * (1.0 + a));
  const double c = std::sqrt(0.5 * (1.0 + r));
  // s = a / (2c) avoids the cancellation in 1 - r at small |alpha|.
  const double s = a > 0.5 ? std::sqrt(0.5 * (1.0 - r)) : a / (2.0 * c);
  const double off = alpha < 0.0 ? -s : s;
  Eigen::Matrix2d g;
  g << c, off, off, c;
  return g;
}

// ---------------------------------------------------------------------------
// Matrix couplings in d dimensions

/// Householder reflection I - 2 w w^T / |w|^2 with w = u + v, or the identity
/// when u or v is zero or u + v vanishes. For unit u, v the result M satisfies
/// v . (M u) = -1.
inline Eigen::MatrixXd reflection_matrix(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (!u.allFinite() || !v.allFinite()) throw NumericalError("non-finite reflection input");
  const auto d = u.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  if (u.squaredNorm() == 0.0 || v.squaredNorm() == 0.0) return m;
  const Eigen::VectorXd w = u + v;
  const double w2 = w.squaredNorm();
  if (w2 <= 1e-24) return m;
  m.noalias() -= (2.0 / w2) * w * w.transpose();
  return m;
}

enum class MatrixKind { independent, reflection_poisson, reflection_observable };

inline std::string to_string(MatrixKind k) {
  switch (k) {
    case MatrixKind::independent: return "independent";
    case MatrixKind::reflection_poisson: return "reflection_poisson";
    case MatrixKind::reflection_observable: return "reflection_observable";
  }
  return "unknown";
}

/// Pair coupling alpha(x,y) = sin(2 beta) * reflection in the plane of the
/// unit gradients at x and y. `gradient` is grad phi (reflection_poisson) or
/// grad f (reflection_observable).
struct MatrixCouplingND {
  MatrixKind kind = MatrixKind::independent;
  double beta = 0.0;
  std::size_t dim = 1;
  std::function<void(std::span<const double>, std::span<double>)> gradient;

  MatrixCouplingND() = default;
  MatrixCouplingND(MatrixKind k, double b, std::size_t d,
                   std::function<void(std::span<const double>, std::span<double>)> grad = {})
      : kind(k), beta(b), dim(d), gradient(std::move(grad)) {
    check_beta(beta);
    if (kind != MatrixKind::independent && !gradient)
      throw ConfigError("reflection coupling requires a gradient field");
  }

  static MatrixCouplingND from_observable(const ObservableND& f, MatrixKind kind, double beta,
                                          std::size_t dim) {
    if (kind == MatrixKind::reflection_poisson) {
      if (!f.poisson_gradient)
        throw ConfigError("no closed-form Poisson gradient for this model and observable");
      return {kind, beta, dim, f.poisson_gradient};
    }
    if (kind == MatrixKind::reflection_observable) return {kind, beta, dim, f.gradient};
    return {kind, beta, dim, {}};
  }
};

enum class PairingKind { pairwise_fixed, pairwise_sorted };

inline PairingKind parse_pairing(const std::string& s) {
  if (s == "pairwise_fixed" || s == "fixed") return PairingKind::pairwise_fixed;
  if (s == "pairwise_sorted" || s == "sorted") return PairingKind::pairwise_sorted;
  throw ConfigError("unknown pairing scheme '" + s + "'");
}

struct WeightScheme {
  PairingKind kind = PairingKind::pairwise_fixed;
  double beta = 0.0;
  std::size_t n = 2;

  WeightScheme() = default;
  WeightScheme(PairingKind k, double b, std::size_t particles) : kind(k), beta(b), n(particles) {
    check_beta(beta);
    if (n == 0 || n % 2 != 0) throw ConfigError("pairwise schemes require an even particle count");
  }
};

/// Pairs particles (0,1),(2,3),... or, for the sorted scheme, consecutive
/// entries of the order by descending |gradient|; ties go to the lower index.
inline std::vector<std::pair<std::size_t, std::size_t>> make_pairs(std::span<const double> norms,
                                                                   PairingKind kind) {
  const std::size_t n = norms.size();
  if (n % 2 != 0) throw ConfigError("pairwise schemes require an even particle count");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (kind == PairingKind::pairwise_sorted)
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n / 2);
  for (std::size_t k = 0; k < n; k += 2) pairs.emplace_back(order[k], order[k + 1]);
  return pairs;
}

/// Evaluates the pair structure at a configuration: pairs plus unit gradients.
class BlockCoupling {
 public:
  BlockCoupling(WeightScheme scheme, MatrixCouplingND source)
      : scheme_(scheme), source_(std::move(source)), cos_b_(std::cos(scheme_.beta)),
        sin_b_(std::sin(scheme_.beta)) {}

  const WeightScheme& scheme() const { return scheme_; }
  const MatrixCouplingND& source() const { return source_; }
  bool is_identity() const { return source_.kind == MatrixKind::independent || scheme_.beta == 0.0; }

  /// positions: n*d values, particle-major.
  void prepare(std::span<const double> positions) {
    const std::size_t n = scheme_.n, d = source_.dim;
    if (positions.size() != n * d) throw ConfigError("position array has wrong size");
    unit_.assign(n * d, 0.0);
    norms_.assign(n, 0.0);
    if (is_identity()) {
      pairs_ = make_pairs(norms_, PairingKind::pairwise_fixed);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> g(unit_.data() + i * d, d);
      source_.gradient(positions.subspan(i * d, d), g);
      double s = 0.0;
      for (double v : g) s += v * v;
      const double norm = std::sqrt(s);
      if (!std::isfinite(norm)) throw NumericalError("non-finite coupling gradient");
      norms_[i] = norm;
      for (double& v : g) v = norm > 0.0 ? v / norm : 0.0;
    }
    pairs_ = make_pairs(norms_, scheme_.kind);
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }

  /// out = G xi for the configuration passed to prepare(); the reflection is
  /// applied as xi - 2 w (w.xi)/|w|^2 without forming matrices.
  void apply(std::span<const double> xi, std::span<double> out) const {
    const std::size_t d = source_.dim;
    if (is_identity()) {
      std::copy(xi.begin(), xi.end(), out.begin());
      return;
    }
    std::vector<double> w(d), mi(d), mj(d);
    for (auto [i, j] : pairs_) {
      const double* ui = unit_.data() + i * d;
      const double* uj = unit_.data() + j * d;
      const double* xi_i = xi.data() + i * d;
      const double* xi_j = xi.data() + j * d;
      reflect(ui, uj, xi_j, w, mi);
      reflect(ui, uj, xi_i, w, mj);
      for (std::size_t k = 0; k < d; ++k) {
        out[i * d + k] = cos_b_ * xi_i[k] + sin_b_ * mi[k];
        out[j * d + k] = cos_b_ * xi_j[k] + sin_b_ * mj[k];
      }
    }
  }

  /// Dense (nd)x(nd) matrix for the prepared configuration.
  Eigen::MatrixXd dense() const {
    const std::size_t n = scheme_.n, d = source_.dim;
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n * d, n * d);
    if (is_identity()) return g;
    g *= cos_b_;
    for (auto [i, j] : pairs_) {
      Eigen::Map<const Eigen::VectorXd> ui(unit_.data() + i * d, d), uj(unit_.data() + j * d, d);
      const Eigen::MatrixXd m = reflection_matrix(ui, uj);
      g.block(i * d, j * d, d, d) = sin_b_ * m;
      g.block(j * d, i * d, d, d) = sin_b_ * m;
    }
    return g;
  }

 private:
  void reflect(const double* u, const double* v, const double* in, std::vector<double>& w,
               std::vector<double>& out) const {
    const std::size_t d = source_.dim;
    double u2 = 0.0, v2 = 0.0, w2 = 0.0, wx = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      w[k] = u[k] + v[k];
      u2 += u[k] * u[k];
      v2 += v[k] * v[k];
      w2 += w[k] * w[k];
      wx += w[k] * in[k];
    }
    if (u2 == 0.0 || v2 == 0.0 || w2 <= 1e-24) {
      std::copy_n(in, d, out.begin());
      return;
    }
    const double f = 2.0 * wx / w2;
    for (std::size_t k = 0; k < d; ++k) out[k] = in[k] - f * w[k];
  }

  WeightScheme scheme_;
  MatrixCouplingND source_;
  double cos_b_, sin_b_;
  std::vector<double> unit_, norms_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

inline Eigen::MatrixXd assemble_block_G(std::span<const double> positions,
                                        const WeightScheme& scheme,
                                        const MatrixCouplingND& source) {
  BlockCoupling bc(scheme, source);
  bc.prepare(positions);
  return bc.dense();
}

/// Largest deviation of sum_j G_ij G_ij^T from the identity over particle rows.
inline double row_orthonormality_error(const Eigen::MatrixXd& g, std::size_t n, std::size_t d) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::MatrixXd b = g.block(i * d, j * d, d, d);
      acc += b * b.transpose();
    }
    worst = std::max(worst, (acc - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Zigzag flip couplings

enum class ZigzagKind { independent, mirror_flip, symmetric_flip, poisson_flip };

inline std::string to_string(ZigzagKind k) {
  switch (k) {
    case ZigzagKind::independent: return "independent";
    case ZigzagKind::mirror_flip: return "mirror_flip";
    case ZigzagKind::symmetric_flip: return "symmetric_flip";
    case ZigzagKind::poisson_flip: return "poisson_flip";
  }
  return "unknown";
}

inline ZigzagKind parse_zigzag_kind(const std::string& s) {
  for (auto k : {ZigzagKind::independent, ZigzagKind::mirror_flip, ZigzagKind::symmetric_flip,
                 ZigzagKind::poisson_flip})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown zigzag coupling kind '" + s + "'");
}

/// Double-flip rate beta * min(lambda_x, lambda_y) where the kind's condition
/// holds. beta in [0, 1].
struct ZigzagCoupling {
  ZigzagKind kind = ZigzagKind::independent;
  double beta = 0.0;
  std::shared_ptr<const PoissonSolution> poisson;

  ZigzagCoupling() = default;
  ZigzagCoupling(ZigzagKind k, double b, std::shared_ptr<const PoissonSolution> ps = nullptr)
      : kind(k), beta(b), poisson(std::move(ps)) {
    check_beta(beta, 1.0);
    if (kind == ZigzagKind::poisson_flip && !poisson)
      throw ConfigError("poisson_flip requires a Poisson solution");
  }

  bool active(double x, double y, int tx, int ty) const {
    switch (kind) {
      case ZigzagKind::independent: return false;
      case ZigzagKind::mirror_flip: return tx * ty <= 0;
      case ZigzagKind::symmetric_flip: return x * y * tx * ty <= 0.0;
      case ZigzagKind::poisson_flip: {
        const int sx = sign_with_dead_band(poisson->dphi_at(x));
        const int sy = sign_with_dead_band(poisson->dphi_at(y));
        return sx != 0 && sy != 0 && sx * sy * tx * ty < 0;
      }
    }
    return false;
  }
};

inline double zigzag_alpha(const ZigzagCoupling& c, double x, double y, int tx, int ty,
                           double lambda_x, double lambda_y) {
  if (c.beta == 0.0 || !c.active(x, y, tx, ty)) return 0.0;
  return c.beta * std::min(lambda_x, lambda_y);
}

}  // namespace cmc
