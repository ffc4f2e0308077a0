// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cmc/cmc.hpp"

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kPi4 = std::numbers::pi / 4.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double max_abs_diff(const cmc::PoissonSolution& ps, const std::function<double(double)>& exact) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.nodes.size(); ++i)
    worst = std::max(worst, std::abs(ps.phi[i] - exact(ps.nodes[i])));
  return worst;
}

bool interval_disjoint(double lo1, double hi1, double lo2, double hi2) { return hi1 < lo2 || hi2 < lo1; }

cmc::SweepSettings sweep_settings(double t_total) {
  cmc::SweepSettings s;
  s.base.n_particles = 2;
  s.base.dt = 1e-2;
  s.base.t_total = t_total;
  s.base.burn_in = 0.1 * t_total;
  s.replicates = 20;
  s.n_batches = 50;
  s.base_seed = 1;
  s.workers = workers();
  return s;
}

const std::vector<double> kBetas{0.0, kPi4 / 2.0, kPi4};

cmc::Summary at(const std::vector<cmc::SweepRow>& rows, const std::string& kind, double beta) {
  return cmc::row_summary(cmc::find_row(rows, kind, beta));
}

bool strictly_decreasing(const std::vector<cmc::SweepRow>& rows, const std::string& kind) {
  const auto a = at(rows, kind, kBetas[0]), b = at(rows, kind, kBetas[1]), c = at(rows, kind, kBetas[2]);
  return a.mean > b.mean && b.mean > c.mean && cmc::disjoint(a, c);
}

bool strictly_increasing(const std::vector<cmc::SweepRow>& rows, const std::string& kind) {
  const auto a = at(rows, kind, kBetas[0]), b = at(rows, kind, kBetas[1]), c = at(rows, kind, kBetas[2]);
  return a.mean < b.mean && b.mean < c.mean && cmc::disjoint(a, c);
}

std::string trend(const std::vector<cmc::SweepRow>& rows, const std::string& kind) {
  std::string s = kind + "=";
  for (double b : kBetas) {
    const auto v = at(rows, kind, b);
    s += (b == 0.0 ? "" : "/") + num(v.mean) + "+-" + num(v.halfwidth);
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome poisson_exactness() {
  const auto m = cmc::build_gaussian_model(1.0, 8.0, 2001);
  const auto lin = cmc::solve_poisson_overdamped_1d(m, cmc::linear_observable(m));
  const auto quad = cmc::solve_poisson_overdamped_1d(m, cmc::quadratic_observable(m));
  const double e1 = max_abs_diff(lin, [](double x) { return x; });
  const double e2 = max_abs_diff(quad, [](double x) { return 0.5 * (x * x - 1.0); });
  return {e1 <= 1e-3 && e2 <= 1e-3, "max|phi-x|=" + num(e1) + " max|phi-(x^2-1)/2|=" + num(e2)};
}

Outcome one_particle_variance() {
  const auto m = cmc::build_gaussian_model(1.0);
  const double q1 = cmc::one_particle_sigma_quadrature(m, cmc::linear_observable(m));
  const double q2 = cmc::one_particle_sigma_quadrature(m, cmc::quadratic_observable(m));
  bool ok = std::abs(q1 - 1.0) <= 1e-4 && std::abs(q2 - 1.0) <= 1e-4;
  std::string d = "sigma2(x)=" + num(q1) + " sigma2(x^2)=" + num(q2);
  // Two step sizes bound the discretization bias.
  for (double dt : {1e-2, 5e-3}) {
    cmc::LangevinConfig cfg;
    cfg.n_particles = 1;
    cfg.dt = dt;
    cfg.t_total = 1e5;
    cfg.burn_in = 100.0;
    cfg.seed = 11;
    const auto rep = cmc::langevin_variance(cfg, m, cmc::linear_observable(m), cmc::ScalarCoupling1D(), 1000);
    ok = ok && std::abs(rep.asym_var - 2.0) <= 0.15 * 2.0;
    d += " 2sigma2(dt=" + num(dt) + ")=" + num(rep.asym_var);
  }
  return {ok, d};
}

Outcome independent_halving() {
  const auto m = cmc::build_gaussian_model(1.0);
  cmc::LangevinConfig cfg;
  cfg.n_particles = 2;
  cfg.dt = 1e-2;
  cfg.t_total = 1e5;
  cfg.burn_in = 100.0;
  cfg.seed = 12;
  const auto rep = cmc::langevin_variance(cfg, m, cmc::linear_observable(m), cmc::ScalarCoupling1D(), 1000);
  return {std::abs(rep.asym_var - 1.0) <= 0.2, "2sigma_F^2=" + num(rep.asym_var)};
}

Outcome mirror_antithesis() {
  const auto m = cmc::build_gaussian_model(1.0);
  cmc::LangevinConfig cfg;
  cfg.n_particles = 2;
  cfg.t_total = 2e4;
  cfg.burn_in = 0.0;
  cfg.initial_q = {1.7, -1.7};
  cfg.seed = 13;
  const auto run = cmc::run_langevin(cfg, m, cmc::linear_observable(m),
                                     cmc::ScalarCoupling1D(cmc::ScalarKind::mirror, kPi4));
  double worst = 0.0;
  for (double v : run.f_series) worst = std::max(worst, std::abs(v));
  return {worst <= 1e-15, "max|F|=" + num(worst) + " over " + std::to_string(run.f_series.size()) + " steps"};
}

Outcome sweep_orderings() {
  const auto m = cmc::build_gaussian_model(1.0);
  const auto s = sweep_settings(2e4);
  using K = cmc::ScalarKind;
  std::string d;

  const auto a = cmc::sweep_scalar(m, cmc::linear_observable(m), {K::mirror, K::poisson, K::symmetric}, kBetas, s);
  const auto sym0 = at(a, "symmetric", 0.0), sym1 = at(a, "symmetric", kPi4);
  const bool pa = strictly_decreasing(a, "mirror") && strictly_decreasing(a, "poisson") &&
                  std::abs(sym1.mean - sym0.mean) <= sym1.halfwidth;
  d += "(a) " + trend(a, "mirror") + " " + trend(a, "poisson") + " " + trend(a, "symmetric") + (pa ? " ok" : " BAD");

  const auto b = cmc::sweep_scalar(m, cmc::quadratic_observable(m), {K::symmetric, K::poisson, K::mirror}, kBetas, s);
  const bool pb = strictly_decreasing(b, "symmetric") && strictly_decreasing(b, "poisson") &&
                  strictly_increasing(b, "mirror");
  d += "; (b) " + trend(b, "symmetric") + " " + trend(b, "poisson") + " " + trend(b, "mirror") + (pb ? " ok" : " BAD");

  const auto c = cmc::sweep_scalar(m, cmc::mixed_observable(m, 1.0, -1.0),
                                   {K::mirror, K::symmetric, K::poisson, K::observable_grad}, {0.0, kPi4}, s);
  const double vp = at(c, "poisson", kPi4).mean, vo = at(c, "observable_grad", kPi4).mean;
  bool minimal = true;
  for (const char* k : {"mirror", "symmetric", "observable_grad"}) minimal = minimal && vp <= at(c, k, kPi4).mean;
  const bool pc = minimal && std::abs(vo - vp) <= 0.2 * vp;
  d += "; (c) poisson=" + num(vp) + " observable_grad=" + num(vo) + " mirror=" + num(at(c, "mirror", kPi4).mean) +
       " symmetric=" + num(at(c, "symmetric", kPi4).mean) + (pc ? " ok" : " BAD");
  return {pa && pb && pc, d};
}

Outcome delta_sigma_closed_forms() {
  const auto m = cmc::build_gaussian_model(1.0);
  using K = cmc::ScalarKind;
  const auto lin = cmc::linear_observable(m), quad = cmc::quadratic_observable(m);
  const auto mixed = cmc::mixed_observable(m, 1.0, -1.0);
  auto ps_lin = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_overdamped_1d(m, lin));
  auto ps_quad = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_overdamped_1d(m, quad));
  const double mirror = cmc::delta_sigma_overdamped_1d(m, *ps_lin, cmc::make_scalar_coupling(K::mirror, kPi4, lin, ps_lin)).value;
  const double pois = cmc::delta_sigma_overdamped_1d(m, *ps_quad, cmc::make_scalar_coupling(K::poisson, kPi4, quad, ps_quad)).value;
  const double indep = cmc::delta_sigma_overdamped_1d(m, *ps_lin, cmc::ScalarCoupling1D()).value;
  bool ok = std::abs(mirror + 1.0) <= 1e-3 && std::abs(pois + 2.0 / std::numbers::pi) <= 1e-3 && indep == 0.0;
  std::string d = "mirror(x)=" + num(mirror) + " poisson(x^2)=" + num(pois) + " independent=" + num(indep);

  // Monotone f: mirror attains the optimum. Even f: symmetric attains it.
  // General f: poisson is minimal and strictly beats the sign-agnostic kinds.
  const std::vector<K> all{K::independent, K::synchronous, K::mirror, K::symmetric, K::poisson, K::observable_grad};
  auto value = [](const std::vector<cmc::ScanEntry>& s, const std::string& k) {
    return std::find_if(s.begin(), s.end(), [&](const auto& e) { return e.kind == k; })->value;
  };
  try {
    const auto sl = cmc::optimality_scan(m, lin, all);
    const auto sq = cmc::optimality_scan(m, quad, all);
    const auto sm = cmc::optimality_scan(m, mixed, all);
    const bool rl = std::abs(value(sl, "mirror") - value(sl, "poisson")) <= 1e-3;
    const bool rq = std::abs(value(sq, "symmetric") - value(sq, "poisson")) <= 1e-3 && value(sq, "mirror") > value(sq, "poisson") + 0.1;
    const bool rm = sm.front().kind == "poisson" && value(sm, "observable_grad") > value(sm, "poisson") &&
                    value(sm, "mirror") > value(sm, "poisson") && value(sm, "symmetric") > value(sm, "poisson");
    ok = ok && rl && rq && rm;
    d += " scan(x):" + std::string(rl ? "ok" : "BAD") + " scan(x^2):" + (rq ? "ok" : "BAD") +
         " scan(x^2-x):" + (rm ? "ok" : "BAD") + " best=" + sm.front().kind + ":" + num(sm.front().value);
  } catch (const cmc::AssertionError& e) {
    ok = false;
    d += std::string(" scan assertion: ") + e.what();
  }
  return {ok, d};
}

Outcome derivative_consistency() {
  const auto m = cmc::build_gaussian_model(1.0);
  cmc::LangevinConfig base;
  base.n_particles = 2;
  base.t_total = 2e4;
  base.burn_in = 2e3;
  struct Case {
    const char* label;
    cmc::Observable1D f;
    cmc::ScalarKind kind;
  };
  const std::vector<Case> cases{{"x/mirror", cmc::linear_observable(m), cmc::ScalarKind::mirror},
                                {"x^2/poisson", cmc::quadratic_observable(m), cmc::ScalarKind::poisson},
                                {"x^2-x/poisson", cmc::mixed_observable(m, 1.0, -1.0), cmc::ScalarKind::poisson}};
  bool ok = true;
  std::string d;
  for (const auto& c : cases) {
    const auto chk = cmc::finite_difference_derivative_check(m, c.f, c.kind, 0.25, base, 20, 50, 1, workers());
    const bool sign = (chk.slope.mean > 0.0) == (chk.predicted > 0.0);
    const bool separated = std::abs(chk.predicted) < 0.1 || !chk.inconclusive;
    ok = ok && sign && separated;
    d += std::string(d.empty() ? "" : "; ") + c.label + " slope=" + num(chk.slope.mean) + "+-" +
         num(chk.slope.halfwidth) + " dsigma2=" + num(chk.predicted);
  }
  return {ok, d};
}

Outcome ot_comparison() {
  const auto m = cmc::build_gaussian_model(1.0);
  cmc::OtSettings s;
  s.run.t_total = 2e4;
  s.run.burn_in = 2e3;
  s.run.seed = 1;
  using K = cmc::ScalarKind;
  const auto cmp = cmc::ot_compare(m, cmc::linear_observable(m), {K::independent, K::mirror, K::symmetric, K::poisson}, s);
  const double opt = cmp.plan.cost_value;
  const double slack = cmp.plan.cost_value - cmp.plan.lower_bound;
  bool ok = cmp.plan.converged && cmp.antidiagonal_mass >= 0.9;
  std::string d = "antidiagonal=" + num(cmp.antidiagonal_mass) + " eps=" + num(cmp.plan.epsilon) + " optimum=" +
                  num(opt) + " slack=" + num(slack);
  for (const auto& e : cmp.empirical) {
    const double v = e.value.mean, ci = e.value.halfwidth;
    ok = ok && v + ci >= opt - slack;
    if (e.kind == "mirror") ok = ok && std::abs(v + 0.5) <= ci && v > opt - slack && v - ci <= 0.0;
    d += " " + e.kind + "=" + num(v) + "+-" + num(ci);
  }
  return {ok, d};
}

Outcome zigzag_checks() {
  const auto m = cmc::build_gaussian_model(1.0);
  const auto f = cmc::linear_observable(m);
  const auto rates = cmc::RateSpec::for_model(m, 0.1);
  cmc::ZigzagConfig base;
  base.t_total = 5e4;
  base.burn_in = 5e3;
  using Z = cmc::ZigzagKind;
  const std::vector<double> betas{0.0, 0.5, 1.0};
  const auto rows = cmc::sweep_zigzag(m, f, rates, {Z::independent, Z::mirror_flip, Z::symmetric_flip, Z::poisson_flip},
                                      betas, base, 1, 1, workers());
  const double t49 = cmc::student_t_quantile(cmc::kDefaultConfidence, 49.0);
  bool marginal = true;
  double worst_z = 0.0;
  for (const auto& r : rows) {
    const double se = r.var_x.halfwidth / t49;
    const double z = std::abs(r.var_x.mean - 1.0) / se;
    worst_z = std::max(worst_z, z);
    marginal = marginal && z <= 4.0;
  }
  auto row = [&](double b) -> const cmc::ZigzagRow& {
    return *std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.kind == "mirror_flip" && r.beta == b; });
  };
  const auto &r0 = row(0.0), &r5 = row(0.5), &r1 = row(1.0);
  const bool variance = r1.report.asym_var < r0.report.asym_var &&
                        interval_disjoint(r1.report.asym_var_lo, r1.report.asym_var_hi, r0.report.asym_var_lo,
                                          r0.report.asym_var_hi);
  const bool opp = r0.opposite_fraction.mean < r5.opposite_fraction.mean &&
                   r5.opposite_fraction.mean < r1.opposite_fraction.mean &&
                   cmc::disjoint(r0.opposite_fraction, r1.opposite_fraction);
  const bool absd = r0.mean_abs_diff.mean < r5.mean_abs_diff.mean && r5.mean_abs_diff.mean < r1.mean_abs_diff.mean &&
                    cmc::disjoint(r0.mean_abs_diff, r1.mean_abs_diff);
  const std::string d = "max Var(x) z-score=" + num(worst_z) + " 2sigma_F^2 beta0=" + num(r0.report.asym_var) +
                        " beta1=" + num(r1.report.asym_var) + " opposite=" + num(r0.opposite_fraction.mean) + "/" +
                        num(r5.opposite_fraction.mean) + "/" + num(r1.opposite_fraction.mean) +
                        " |x-y|=" + num(r0.mean_abs_diff.mean) + "/" + num(r5.mean_abs_diff.mean) + "/" +
                        num(r1.mean_abs_diff.mean);
  return {marginal && variance && opp && absd, d};
}

Outcome sorting() {
  const auto model = cmc::build_gaussian_model_nd(10, 1.0);
  const auto f = cmc::norm_sq_observable(model, 0.5);
  cmc::SweepSettings s = sweep_settings(2000.0);
  s.base.n_particles = 10;
  const auto rows = cmc::sweep_block(model, f, cmc::MatrixKind::reflection_poisson,
                                     {cmc::PairingKind::pairwise_fixed, cmc::PairingKind::pairwise_sorted},
                                     {0.0, kPi4}, s);
  const auto ind = at(rows, "unsorted", 0.0), u = at(rows, "unsorted", kPi4), so = at(rows, "sorted", kPi4);
  const bool ok = so.mean <= u.mean && cmc::disjoint(so, u) && u.mean <= ind.mean && so.mean <= ind.mean;
  return {ok, "independent=" + num(ind.mean) + "+-" + num(ind.halfwidth) + " unsorted=" + num(u.mean) + "+-" +
                  num(u.halfwidth) + " sorted=" + num(so.mean) + "+-" + num(so.halfwidth)};
}

Outcome spectral_checks() {
  const auto m = cmc::build_gaussian_model(1.0, 8.0, 2001);
  const auto r = cmc::spectral_analysis(m, 2001, 6);
  const double mu1 = r.eigenvalues[0], mu2 = r.eigenvalues[1], mirror = cmc::coupled_rate_mirror(r);
  const bool spectrum = std::abs(mu1 - 1.0) <= 1e-2 && std::abs(mu2 - 2.0) <= 1e-2 &&
                        r.parities[0] == cmc::Parity::odd && std::abs(mirror - 2.0) <= 1e-2;

  const auto f = cmc::polynomial_observable(m, "x^2-1", 1.0, 0.0, -1.0);
  cmc::LangevinConfig cfg;
  cfg.n_particles = 2;
  cfg.t_total = 2e4;
  cfg.burn_in = 2e3;
  cfg.seed = 21;
  auto fit = [&](cmc::ScalarKind k) {
    const auto run = cmc::run_langevin(cfg, m, f, cmc::ScalarCoupling1D(k, k == cmc::ScalarKind::independent ? 0.0 : kPi4));
    return cmc::empirical_decay_rate(run.f_series, cfg.dt, 0.2, 1.5);
  };
  const auto ind = fit(cmc::ScalarKind::independent), mir = fit(cmc::ScalarKind::mirror);
  const bool usable = !ind.inconclusive && !ind.degenerate && !mir.inconclusive && !mir.degenerate;
  const bool ordering = usable && mir.rate.mean > ind.rate.mean && cmc::disjoint(mir.rate, ind.rate);
  return {spectrum && ordering, "mu1=" + num(mu1) + " mu2=" + num(mu2) + " e1=" + cmc::to_string(r.parities[0]) +
                                    " mirror_rate=" + num(mirror) + " decay independent=" + num(ind.rate.mean) +
                                    "+-" + num(ind.rate.halfwidth) + " mirror=" + num(mir.rate.mean) + "+-" +
                                    num(mir.rate.halfwidth)};
}

Outcome invariant_suites() {
  cmc::CounterRng rng(99);
  std::string d;
  bool ok = true;

  // Scalar coupling admissibility and the 2x2 noise factorization.
  double worst_gg = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = 2.0 * rng.uniform() - 1.0;
    const Eigen::Matrix2d g = cmc::mixing_matrix_1d(a);
    const Eigen::Matrix2d q = g * g.transpose();
    const double q00 = q(0, 0), q01 = q(0, 1), q11 = q(1, 1);
    worst_gg = std::max({worst_gg, std::abs(q00 - 1.0), std::abs(q11 - 1.0), std::abs(q01 - a)});
  }
  ok = ok && worst_gg <= 1e-12;
  d += "GG^T=" + num(worst_gg);

  const auto m = cmc::build_double_well_model(1.0, 2.0);
  const auto f = cmc::mixed_observable(m, 1.0, -1.0);
  auto ps = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_overdamped_1d(m, f));
  std::size_t violations = 0;
  for (auto k : {cmc::ScalarKind::independent, cmc::ScalarKind::synchronous, cmc::ScalarKind::mirror,
                 cmc::ScalarKind::symmetric, cmc::ScalarKind::poisson, cmc::ScalarKind::observable_grad}) {
    const auto c = cmc::make_scalar_coupling(k, kPi4, f, ps);
    for (int i = 0; i < 10000; ++i) {
      const double a = cmc::alpha_1d(c, 6.0 * rng.uniform() - 3.0, 6.0 * rng.uniform() - 3.0);
      if (!(std::abs(a) <= 1.0)) ++violations;
    }
  }
  ok = ok && violations == 0;
  d += " admissibility_violations=" + std::to_string(violations);

  // Row orthonormality of the block noise map in d = 10, n = 10.
  const auto model = cmc::build_gaussian_model_nd(10, 1.0);
  const auto fn = cmc::norm_sq_observable(model, 0.5);
  double worst_rows = 0.0;
  for (auto pk : {cmc::PairingKind::pairwise_fixed, cmc::PairingKind::pairwise_sorted}) {
    const cmc::WeightScheme scheme(pk, kPi4, 10);
    const auto src = cmc::MatrixCouplingND::from_observable(fn, cmc::MatrixKind::reflection_poisson, kPi4, 10);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> q(100);
      for (double& v : q) v = rng.normal();
      const Eigen::MatrixXd g = cmc::assemble_block_G(q, scheme, src);
      worst_rows = std::max(worst_rows, cmc::row_orthonormality_error(g, 10, 10));
    }
  }
  ok = ok && worst_rows <= 1e-12;
  d += " row_orthonormality=" + num(worst_rows);

  // Zigzag rates.
  const auto rates = cmc::RateSpec::for_model(m, 0.1);
  auto zps = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_zigzag_1d(m, f));
  std::size_t rate_failures = 0;
  for (auto k : {cmc::ZigzagKind::independent, cmc::ZigzagKind::mirror_flip, cmc::ZigzagKind::symmetric_flip,
                 cmc::ZigzagKind::poisson_flip}) {
    const cmc::ZigzagCoupling c(k, 1.0, zps);
    for (int i = 0; i < 10000; ++i) {
      const cmc::ZigzagState s{6.0 * rng.uniform() - 3.0, 6.0 * rng.uniform() - 3.0, rng.uniform() < 0.5 ? 1 : -1,
                               rng.uniform() < 0.5 ? 1 : -1};
      try {
        const auto e = cmc::coupled_event_rates(s, rates, c);
        const double a = cmc::zigzag_alpha(c, s.x, s.y, s.theta_x, s.theta_y, e.lambda_x, e.lambda_y);
        if (e.r_x < 0.0 || e.r_y < 0.0 || e.r_xy < 0.0 ||
            std::abs(e.total() - (e.lambda_x + e.lambda_y - a)) > 1e-12 * (1.0 + e.lambda_x + e.lambda_y))
          ++rate_failures;
      } catch (const cmc::AssertionError&) {
        ++rate_failures;
      }
    }
  }
  ok = ok && rate_failures == 0;
  d += " zigzag_rate_failures=" + std::to_string(rate_failures);

  // White-noise calibration pooled over seeds.
  std::vector<cmc::VarianceReport> reps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cmc::CounterRng g(1000 + seed);
    std::vector<double> w(100000);
    for (double& v : w) v = g.normal();
    reps.push_back(cmc::batch_means_variance(w, 1.0, 50));
  }
  const auto pooled = cmc::pool_replicates(reps);
  ok = ok && std::abs(pooled.asym_var - 1.0) <= 0.2 && pooled.asym_var_lo <= 1.0 && 1.0 <= pooled.asym_var_hi;
  d += " white_noise=" + num(pooled.asym_var) + "+-" + num(pooled.ci);
  return {ok, d};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "poisson solver exactness", 1.0, poisson_exactness},
      {2, "one-particle asymptotic variance", 0.0, one_particle_variance},
      {3, "independent coupling halves the variance", 0.0, independent_halving},
      {4, "mirror coupling exact antithesis", 0.0, mirror_antithesis},
      {5, "variance-vs-beta orderings", 300.0, sweep_orderings},
      {6, "delta sigma^2 closed forms and rankings", 0.0, delta_sigma_closed_forms},
      {7, "derivative sign consistency", 0.0, derivative_consistency},
      {8, "transport plan comparison", 0.0, ot_comparison},
      {9, "coupled zigzag", 300.0, zigzag_checks},
      {10, "sorted pairing", 600.0, sorting},
      {11, "spectral rates", 0.0, spectral_checks},
      {12, "invariant suites", 0.0, invariant_suites},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += " runtime over " + num(c.budget_s) + " s";
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
