/// Quadrature solution of the 1D Poisson equation -L phi = f - pi(f).

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cmc/estimators.hpp"
#include "cmc/poisson.hpp"

using Catch::Matchers::WithinAbs;

namespace {

double max_error_on(const cmc::PoissonSolution& ps, double box, double (*exact)(double),
                    const std::vector<double>& values) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.nodes.size(); ++i)
    if (std::abs(ps.nodes[i]) <= box) worst = std::max(worst, std::abs(values[i] - exact(ps.nodes[i])));
  return worst;
}

double pi_mean(const cmc::TargetModel1D& m, const std::vector<double>& v) {
  const auto mass = m.node_mass();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += mass[i] * v[i];
  return s;
}

}  // namespace

TEST_CASE("linear observable on the Gaussian gives phi = x", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0, 8.0, 2001);
  const auto ps = cmc::solve_poisson_overdamped_1d(m, cmc::linear_observable(m));
  CHECK(max_error_on(ps, 6.0, [](double x) { return x; }, ps.phi) <= 1e-3);
  CHECK(max_error_on(ps, 8.0, [](double x) { return x; }, ps.phi) <= 1e-3);
  CHECK(ps.centered);
}

TEST_CASE("quadratic observable on the Gaussian gives phi = (x^2 - 1)/2", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0, 8.0, 2001);
  const auto ps = cmc::solve_poisson_overdamped_1d(m, cmc::quadratic_observable(m));
  CHECK(max_error_on(ps, 6.0, [](double x) { return 0.5 * (x * x - 1.0); }, ps.phi) <= 1e-3);
  CHECK(max_error_on(ps, 8.0, [](double x) { return 0.5 * (x * x - 1.0); }, ps.phi) <= 1e-3);
  CHECK(max_error_on(ps, 6.0, [](double x) { return x; }, ps.dphi) <= 1e-3);
}

TEST_CASE("constant observable gives the zero solution", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0);
  for (auto solve : {&cmc::solve_poisson_overdamped_1d, &cmc::solve_poisson_zigzag_1d}) {
    const auto ps = solve(m, cmc::constant_observable(m, 3.5));
    for (std::size_t i = 0; i < ps.nodes.size(); ++i) {
      CHECK(ps.phi[i] == 0.0);
      CHECK(ps.dphi[i] == 0.0);
    }
    for (int s : cmc::sign_structure(ps)) CHECK(s == 0);
  }
}

TEST_CASE("zigzag Poisson derivative matches the overdamped one", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0);
  const auto lin = cmc::solve_poisson_zigzag_1d(m, cmc::linear_observable(m));
  CHECK(max_error_on(lin, 6.0, [](double) { return 1.0; }, lin.dphi) <= 1e-3);
  const auto sq = cmc::solve_poisson_zigzag_1d(m, cmc::polynomial_observable(m, "x2m1", 1.0, 0.0, -1.0));
  CHECK_THAT(sq.dphi_at(0.0), WithinAbs(0.0, 1e-3));
  const auto od = cmc::solve_poisson_overdamped_1d(m, cmc::mixed_observable(m, 1.0, -1.0));
  const auto zz = cmc::solve_poisson_zigzag_1d(m, cmc::mixed_observable(m, 1.0, -1.0));
  for (std::size_t i = 0; i < od.dphi.size(); ++i) CHECK(od.dphi[i] == zz.dphi[i]);
}

TEST_CASE("sign structure follows the observable shape", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0);
  for (int s : cmc::sign_structure(cmc::solve_poisson_overdamped_1d(m, cmc::linear_observable(m))))
    CHECK((s == 0 || s == 1));
  const auto sq = cmc::solve_poisson_overdamped_1d(m, cmc::quadratic_observable(m));
  const auto signs = cmc::sign_structure(sq);
  for (std::size_t i = 0; i < signs.size(); ++i) {
    const double x = sq.nodes[i];
    if (std::abs(x) > 1e-6 && std::abs(x) < 7.0) CHECK(signs[i] == (x > 0.0 ? 1 : -1));
  }
  CHECK(cmc::sign_with_dead_band(5e-10) == 0);
  CHECK(cmc::sign_with_dead_band(-2e-9) == -1);
}

TEST_CASE("residual and centering invariants hold for every solve", "[poisson][property]") {
  const std::vector<cmc::TargetModel1D> models{cmc::build_gaussian_model(1.0),
                                               cmc::build_gaussian_model(2.0, 16.0, 2001),
                                               cmc::build_double_well_model(1.0, 2.0)};
  for (const auto& m : models) {
    for (const auto& f : {cmc::linear_observable(m), cmc::quadratic_observable(m),
                          cmc::mixed_observable(m, 1.0, -1.0)}) {
      INFO(m.name() << " / " << f.name);
      const auto ps = cmc::solve_poisson_overdamped_1d(m, f);
      CHECK(ps.residual_max < 1e-3);
      CHECK(std::abs(pi_mean(m, ps.phi)) < 1e-6);
      for (double v : ps.phi) REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("integration by parts: E[f' phi'] = E[f0^2]", "[poisson][property]") {
  const auto m = cmc::build_gaussian_model(1.0, 8.0, 4001);
  for (const auto& f : {cmc::linear_observable(m), cmc::quadratic_observable(m),
                        cmc::mixed_observable(m, 1.0, -1.0)}) {
    const auto ps = cmc::solve_poisson_overdamped_1d(m, f);
    std::vector<double> lhs(ps.nodes.size()), rhs(ps.nodes.size());
    for (std::size_t i = 0; i < ps.nodes.size(); ++i) {
      lhs[i] = f.gradient(ps.nodes[i]) * ps.dphi[i];
      rhs[i] = std::pow(f.centered(ps.nodes[i]), 2);
    }
    CHECK_THAT(pi_mean(m, lhs), WithinAbs(pi_mean(m, rhs), 1e-4));
  }
}

TEST_CASE("monotone observables give nonnegative phi'", "[poisson][property]") {
  const std::vector<cmc::TargetModel1D> models{cmc::build_gaussian_model(1.0),
                                               cmc::build_double_well_model(1.0, 2.0),
                                               cmc::build_double_well_model(0.5, 0.5)};
  for (const auto& m : models) {
    const std::vector<cmc::Observable1D> fs{
        cmc::linear_observable(m),
        cmc::make_observable(m, "tanh", [](double x) { return std::tanh(x); },
                             [](double x) { return 1.0 / std::pow(std::cosh(x), 2); }),
        cmc::make_observable(m, "cubic", [](double x) { return x * x * x + x; },
                             [](double x) { return 3.0 * x * x + 1.0; })};
    for (const auto& f : fs) {
      INFO(m.name() << " / " << f.name);
      const auto ps = cmc::solve_poisson_overdamped_1d(m, f);
      CHECK(*std::min_element(ps.dphi.begin(), ps.dphi.end()) >= -1e-6);
    }
  }
}

TEST_CASE("even observables increasing in |x| give x phi' >= 0", "[poisson][property]") {
  const std::vector<cmc::TargetModel1D> models{cmc::build_gaussian_model(1.0),
                                               cmc::build_double_well_model(1.0, 2.0)};
  for (const auto& m : models) {
    const std::vector<cmc::Observable1D> fs{
        cmc::quadratic_observable(m),
        cmc::make_observable(m, "log1p", [](double x) { return std::log1p(x * x); },
                             [](double x) { return 2.0 * x / (1.0 + x * x); })};
    for (const auto& f : fs) {
      INFO(m.name() << " / " << f.name);
      const auto ps = cmc::solve_poisson_overdamped_1d(m, f);
      for (std::size_t i = 0; i < ps.nodes.size(); ++i) CHECK(ps.nodes[i] * ps.dphi[i] >= -1e-6);
    }
  }
}

TEST_CASE("one-particle variance by quadrature", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0);
  CHECK_THAT(cmc::one_particle_sigma_quadrature(m, cmc::linear_observable(m)), WithinAbs(1.0, 1e-4));
  CHECK_THAT(cmc::one_particle_sigma_quadrature(m, cmc::quadratic_observable(m)), WithinAbs(1.0, 1e-4));
  CHECK(cmc::one_particle_sigma_quadrature(m, cmc::constant_observable(m, 2.0)) == 0.0);
}

TEST_CASE("vanishing tails are excluded rather than amplified", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0, 40.0, 8001);
  const auto ps = cmc::solve_poisson_overdamped_1d(m, cmc::linear_observable(m));
  const auto excluded = std::count(ps.excluded.begin(), ps.excluded.end(), true);
  CHECK(excluded > 0);
  CHECK(max_error_on(ps, 6.0, [](double x) { return 1.0; }, ps.dphi) <= 1e-3);
  for (double v : ps.dphi) CHECK(std::isfinite(v));
}

TEST_CASE("a tail integral that does not vanish is reported as unstable", "[poisson]") {
  const auto m = cmc::build_gaussian_model(1.0, 37.94, 7589);
  const auto f = cmc::make_observable(m, "heavy", [](double x) { return std::exp(0.5 * x * x - 14.0); },
                                      [](double x) { return x * std::exp(0.5 * x * x - 14.0); });
  CHECK_THROWS_WITH(cmc::solve_poisson_overdamped_1d(m, f),
                    Catch::Matchers::ContainsSubstring("unstable tail"));
}
