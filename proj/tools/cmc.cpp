// Command-line front end: one subcommand per experiment, all results written
// as CSV (with '#' metadata lines) or JSON into --out-dir.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmc/cmc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
};

struct Context {
  cmc::Config cfg;
  cmc::RunMetadata meta;
  fs::path out;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
};

Context make_context(const CommonOptions& o) {
  Context ctx;
  ctx.cfg = o.config_path.empty() ? cmc::Config{} : cmc::Config::load(o.config_path);
  for (const auto& s : o.overrides) ctx.cfg.set(s);
  if (o.seed) ctx.cfg.set("numerics.seed", std::to_string(*o.seed));
  if (o.workers) ctx.cfg.set("numerics.workers", std::to_string(*o.workers));
  ctx.seed = ctx.cfg.get_u64("numerics.seed", 1);
  ctx.workers = std::max<std::size_t>(1, ctx.cfg.get_size("numerics.workers", 1));
  ctx.meta.config_hash = cmc::fnv1a(ctx.cfg.canonical());
  ctx.meta.seed = ctx.seed;
  ctx.out = o.out_dir;
  fs::create_directories(ctx.out);
  return ctx;
}

cmc::RunMetadata with_note(const Context& ctx, std::vector<std::pair<std::string, std::string>> extra) {
  cmc::RunMetadata m = ctx.meta;
  for (auto& e : extra) m.extra.push_back(std::move(e));
  return m;
}

const std::pair<std::string, std::string> kAsymVarNote{"asym_var", "estimates 2*sigma_F^2 (CLT variance)"};

cmc::LangevinConfig langevin_config(const Context& ctx) {
  const auto& c = ctx.cfg;
  cmc::LangevinConfig lc;
  lc.n_particles = c.get_size("numerics.n_particles", 2);
  lc.dt = c.get_double("numerics.dt", 1e-2);
  lc.t_total = c.get_double("numerics.t_total", 2e4);
  lc.burn_in = c.get_double("numerics.burn_in", 0.1 * lc.t_total);
  lc.seed = ctx.seed;
  const std::string dyn = c.get_string("numerics.dynamics", "overdamped");
  if (dyn == "overdamped") {
    lc.dynamics = cmc::Dynamics::overdamped;
  } else if (dyn == "underdamped") {
    lc.dynamics = cmc::Dynamics::underdamped;
  } else {
    throw cmc::ConfigError("numerics.dynamics must be overdamped or underdamped");
  }
  lc.gamma = c.get_double("numerics.gamma", 1.0);
  lc.mass = c.get_double("numerics.mass", 1.0);
  lc.initial_q = c.get_doubles("numerics.initial_state", {});
  lc.trajectory_stride = c.get_size("output.trajectory_stride", 0);
  lc.validate();
  return lc;
}

cmc::SweepSettings sweep_settings(const Context& ctx) {
  cmc::SweepSettings s;
  s.base = langevin_config(ctx);
  s.replicates = ctx.cfg.get_size("numerics.replicates", 20);
  s.n_batches = ctx.cfg.get_size("numerics.n_batches", 50);
  s.base_seed = ctx.seed;
  s.workers = ctx.workers;
  return s;
}

std::vector<std::string> sweep_row_cells(const cmc::SweepRow& r) {
  return {cmc::fmt_num(r.beta),           r.kind,
          cmc::fmt_num(r.report.mean),    cmc::fmt_num(r.report.asym_var),
          cmc::fmt_num(r.report.ci),      std::to_string(r.report.n_batches),
          std::to_string(r.report.replicate_count)};
}

const std::vector<std::string> kSweepColumns{"beta", "kind", "mean", "asym_var", "ci", "n_batches", "replicates"};

void write_dense(const fs::path& path, const cmc::RunMetadata& meta, const std::vector<double>& xs,
                 const std::vector<double>& ys, const Eigen::MatrixXd& m) {
  std::vector<std::string> header{"x"};
  for (double y : ys) header.push_back(cmc::fmt_num(y));
  cmc::CsvWriter w(path, meta, header);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row{cmc::fmt_num(xs[i])};
    for (std::size_t j = 0; j < ys.size(); ++j)
      row.push_back(cmc::fmt_num(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    w.write_row(row);
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cmc::Error(cmc::ErrorKind::numerical, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json meta_json(const Context& ctx) {
  return {{"version", cmc::kVersion},
          {"config_hash", cmc::hex64(ctx.meta.config_hash)},
          {"seed", ctx.seed},
          {"timestamp", cmc::utc_timestamp()}};
}

std::vector<cmc::ScalarKind> scalar_kinds(const cmc::Config& c, const std::vector<std::string>& fallback) {
  std::vector<cmc::ScalarKind> out;
  for (const auto& s : c.get_list("sweep.kinds", fallback)) out.push_back(cmc::parse_scalar_kind(s));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_poisson(const Context& ctx) {
  const auto model = cmc::make_model_1d(ctx.cfg);
  const auto f = cmc::make_observable_1d(ctx.cfg, model);
  const std::string dyn = ctx.cfg.get_string("poisson.dynamics", "overdamped");
  if (dyn != "overdamped" && dyn != "zigzag")
    throw cmc::ConfigError("poisson.dynamics must be overdamped or zigzag");
  const auto ps = dyn == "zigzag" ? cmc::solve_poisson_zigzag_1d(model, f)
                                  : cmc::solve_poisson_overdamped_1d(model, f);
  const double sigma2 = cmc::one_particle_sigma_quadrature(model, ps, f);
  cmc::CsvWriter w(ctx.out / "poisson.csv",
                   with_note(ctx, {{"residual_max", cmc::fmt_num(ps.residual_max)},
                                   {"sigma2_quadrature", cmc::fmt_num(sigma2)}}),
                   {"x", "phi", "dphi", "residual"});
  for (std::size_t i = 0; i < ps.nodes.size(); ++i)
    w.write_row({cmc::fmt_num(ps.nodes[i]), cmc::fmt_num(ps.phi[i]), cmc::fmt_num(ps.dphi[i]),
                 cmc::fmt_num(ps.residual[i])});
  return 0;
}

int cmd_delta_sigma(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto model = cmc::make_model_1d(c);
  const auto f = cmc::make_observable_1d(c, model);
  auto ps = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_overdamped_1d(model, f));
  const double beta = c.get_double("coupling.beta", cmc::kMaxBeta);
  const std::size_t mc = c.get_size("delta_sigma.mc_samples", 0);
  const auto kinds = scalar_kinds(c, {"independent", "synchronous", "mirror", "symmetric", "poisson",
                                      "observable_grad"});
  cmc::CsvWriter w(ctx.out / "delta_sigma.csv", ctx.meta,
                   {"dynamics", "kind", "beta", "value", "mc_value", "mc_ci", "quadrature_grid"});
  for (auto k : kinds) {
    const auto sc = cmc::make_scalar_coupling(k, beta, f, ps);
    const auto r = cmc::delta_sigma_overdamped_1d(model, *ps, sc, mc, ctx.seed);
    w.write_row({"overdamped", cmc::to_string(k), cmc::fmt_num(beta), cmc::fmt_num(r.value),
                 r.mc_value ? cmc::fmt_num(*r.mc_value) : "", r.mc_ci ? cmc::fmt_num(*r.mc_ci) : "",
                 std::to_string(r.quadrature_grid)});
  }
  if (c.get_bool("delta_sigma.zigzag", true)) {
    const auto rates = cmc::RateSpec::for_model(model, c.get_double("zigzag.gamma", 0.1));
    const double zb = c.get_double("zigzag.beta", 1.0);
    for (auto k : {cmc::ZigzagKind::independent, cmc::ZigzagKind::mirror_flip,
                   cmc::ZigzagKind::symmetric_flip, cmc::ZigzagKind::poisson_flip}) {
      const auto r = cmc::delta_sigma_zigzag(model, *ps, cmc::ZigzagCoupling(k, zb, ps), rates);
      w.write_row({"zigzag", cmc::to_string(k), cmc::fmt_num(zb), cmc::fmt_num(r.value), "", "",
                   std::to_string(r.quadrature_grid)});
    }
  }
  if (c.get_bool("delta_sigma.check_optimality", true)) cmc::optimality_scan(model, f, kinds);
  return 0;
}

int cmd_langevin(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto lc = langevin_config(ctx);
  const std::size_t n_batches = c.get_size("numerics.n_batches", 50);
  const std::size_t dim = c.get_size("model.dim", 1);
  const double beta = c.get_double("coupling.beta", cmc::kMaxBeta);
  std::string kind;
  cmc::LangevinRun run;
  if (dim <= 1) {
    const auto model = cmc::make_model_1d(c);
    const auto f = cmc::make_observable_1d(c, model);
    auto ps = std::make_shared<const cmc::PoissonSolution>(cmc::solve_poisson_overdamped_1d(model, f));
    const auto k = cmc::parse_scalar_kind(c.get_string("coupling.kind", "independent"));
    kind = cmc::to_string(k);
    run = cmc::run_langevin(lc, model, f, cmc::make_scalar_coupling(k, beta, f, ps));
  } else {
    const auto model = cmc::make_model_nd(c);
    const auto f = cmc::make_observable_nd(c, model);
    const std::string scheme = c.get_string("coupling.scheme", "reflection_poisson");
    cmc::MatrixKind mk = cmc::MatrixKind::independent;
    if (scheme == "reflection_poisson") mk = cmc::MatrixKind::reflection_poisson;
    else if (scheme == "reflection_observable") mk = cmc::MatrixKind::reflection_observable;
    else if (scheme != "independent") throw cmc::ConfigError("unknown coupling.scheme '" + scheme + "'");
    const auto pairing = cmc::parse_pairing(c.get_string("coupling.pairing", "pairwise_fixed"));
    cmc::BlockCoupling bc(cmc::WeightScheme(pairing, mk == cmc::MatrixKind::independent ? 0.0 : beta,
                                            lc.n_particles),
                          cmc::MatrixCouplingND::from_observable(f, mk, beta, dim));
    kind = scheme + "/" + c.get_string("coupling.pairing", "pairwise_fixed");
    run = cmc::run_langevin(lc, model, f, cmc::NoiseCoupler::block(std::move(bc)));
  }
  const auto rep = cmc::batch_means_variance(run.f_series, lc.dt, n_batches);
  {
    cmc::CsvWriter w(ctx.out / "langevin.csv", with_note(ctx, {kAsymVarNote}), kSweepColumns);
    cmc::SweepRow row;
    row.beta = beta;
    row.kind = kind;
    row.report = rep;
    w.write_row(sweep_row_cells(row));
  }
  if (c.get_bool("output.f_series", false)) {
    cmc::CsvWriter w(ctx.out / "f_series.csv", ctx.meta, {"t", "F"});
    for (std::size_t i = 0; i < run.f_series.size(); ++i)
      w.write_row({cmc::fmt_num(lc.burn_in + static_cast<double>(i + 1) * lc.dt),
                   cmc::fmt_num(run.f_series[i])});
  }
  const auto& tr = run.trajectory;
  if (tr.size() > 0) {
    std::vector<std::string> cols{"t", "particle"};
    for (std::size_t k = 0; k < tr.dim; ++k) cols.push_back("x" + std::to_string(k));
    const bool mom = !tr.momenta.empty();
    if (mom)
      for (std::size_t k = 0; k < tr.dim; ++k) cols.push_back("p" + std::to_string(k));
    cmc::CsvWriter w(ctx.out / "trajectory.csv", ctx.meta, cols);
    for (std::size_t t = 0; t < tr.size(); ++t)
      for (std::size_t i = 0; i < tr.n_particles; ++i) {
        std::vector<std::string> row{cmc::fmt_num(tr.times[t]), std::to_string(i)};
        for (std::size_t k = 0; k < tr.dim; ++k) row.push_back(cmc::fmt_num(tr.position(t, i, k)));
        if (mom)
          for (std::size_t k = 0; k < tr.dim; ++k)
            row.push_back(cmc::fmt_num(tr.momenta[(t * tr.n_particles + i) * tr.dim + k]));
        w.write_row(row);
      }
  }
  return 0;
}

int cmd_zigzag(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto model = cmc::make_model_1d(c);
  const auto f = cmc::make_observable_1d(c, model);
  auto rates = cmc::RateSpec::for_model(model, c.get_double("zigzag.gamma", 0.1));
  rates.horizon = c.get_double("zigzag.horizon", 0.5);
  std::vector<cmc::ZigzagKind> kinds;
  for (const auto& s : c.get_list("zigzag.kinds", {"mirror_flip"})) kinds.push_back(cmc::parse_zigzag_kind(s));
  const auto betas = c.get_doubles("zigzag.betas", {0.0, 0.25, 0.5, 0.75, 1.0});
  for (double b : betas) cmc::check_beta(b, 1.0);
  cmc::ZigzagConfig zc;
  zc.t_total = c.get_double("numerics.t_total", 5e4);
  zc.burn_in = c.get_double("numerics.burn_in", 0.1 * zc.t_total);
  zc.n_batches = c.get_size("numerics.n_batches", 50);
  zc.event_log_limit = c.get_size("output.event_log_limit", 0);
  const std::size_t reps = c.get_size("numerics.replicates", 1);
  const auto rows = cmc::sweep_zigzag(model, f, rates, kinds, betas, zc, reps, ctx.seed, ctx.workers);

  cmc::CsvWriter w(ctx.out / "zigzag.csv", with_note(ctx, {kAsymVarNote}),
                   {"beta", "kind", "mean", "asym_var", "ci", "n_batches", "replicates", "var_x",
                    "var_x_ci", "opposite_fraction", "opposite_ci", "mean_abs_diff", "abs_diff_ci",
                    "events_x", "events_y", "events_xy"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.write_row({cmc::fmt_num(r.beta), r.kind, cmc::fmt_num(r.report.mean),
                 cmc::fmt_num(r.report.asym_var), cmc::fmt_num(r.report.ci),
                 std::to_string(r.report.n_batches), std::to_string(r.report.replicate_count),
                 cmc::fmt_num(r.var_x.mean), cmc::fmt_num(r.var_x.halfwidth),
                 cmc::fmt_num(r.opposite_fraction.mean), cmc::fmt_num(r.opposite_fraction.halfwidth),
                 cmc::fmt_num(r.mean_abs_diff.mean), cmc::fmt_num(r.mean_abs_diff.halfwidth),
                 std::to_string(r.events_x), std::to_string(r.events_y), std::to_string(r.events_xy)});
    if (zc.event_log_limit > 0) {
      cmc::CsvWriter ev(ctx.out / ("zigzag_events_" + r.kind + "_" + std::to_string(i) + ".csv"),
                        with_note(ctx, {{"kind", r.kind}, {"beta", cmc::fmt_num(r.beta)}}),
                        {"t", "x", "y", "theta_x", "theta_y", "event_type"});
      for (const auto& e : r.event_log)
        ev.write_row({cmc::fmt_num(e.t), cmc::fmt_num(e.x), cmc::fmt_num(e.y),
                      std::to_string(e.theta_x), std::to_string(e.theta_y), cmc::to_string(e.type)});
    }
  }
  return 0;
}

int cmd_variance_sweep(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto model = cmc::make_model_1d(c);
  const auto f = cmc::make_observable_1d(c, model);
  const auto kinds = scalar_kinds(c, {"mirror", "symmetric", "poisson"});
  const auto betas = c.get_doubles("sweep.betas", {0.0, cmc::kMaxBeta / 2.0, cmc::kMaxBeta});
  for (double b : betas) cmc::check_beta(b);
  const auto s = sweep_settings(ctx);
  if (s.base.n_particles != 2) throw cmc::ConfigError("variance-sweep uses numerics.n_particles = 2");
  const auto rows = cmc::sweep_scalar(model, f, kinds, betas, s);
  cmc::CsvWriter w(ctx.out / "variance_sweep.csv", with_note(ctx, {kAsymVarNote}), kSweepColumns);
  for (const auto& r : rows) w.write_row(sweep_row_cells(r));
  return 0;
}

int cmd_sort_compare(const Context& ctx) {
  cmc::Config c = ctx.cfg;
  if (!c.has("numerics.n_particles")) c.set("numerics.n_particles", "10");
  if (!c.has("numerics.t_total")) c.set("numerics.t_total", "2000");
  Context local = ctx;
  local.cfg = c;
  const auto model = cmc::make_model_nd(c);
  const auto f = cmc::make_observable_nd(c, model);
  const std::string scheme = c.get_string("coupling.scheme", "reflection_poisson");
  const cmc::MatrixKind mk = scheme == "reflection_observable" ? cmc::MatrixKind::reflection_observable
                                                               : cmc::MatrixKind::reflection_poisson;
  if (scheme != "reflection_observable" && scheme != "reflection_poisson")
    throw cmc::ConfigError("sort-compare needs coupling.scheme = reflection_poisson or reflection_observable");
  const auto betas = c.get_doubles("sweep.betas", {0.0, cmc::kMaxBeta});
  for (double b : betas) cmc::check_beta(b);
  const auto s = sweep_settings(local);
  const auto rows = cmc::sweep_block(model, f, mk,
                                     {cmc::PairingKind::pairwise_fixed, cmc::PairingKind::pairwise_sorted},
                                     betas, s);
  {
    cmc::CsvWriter w(ctx.out / "sort_compare_sweep.csv", with_note(ctx, {kAsymVarNote}), kSweepColumns);
    for (const auto& r : rows) w.write_row(sweep_row_cells(r));
  }
  cmc::CsvWriter w(ctx.out / "sort_compare.csv", with_note(ctx, {kAsymVarNote}),
                   {"beta", "unsorted", "unsorted_ci", "sorted", "sorted_ci"});
  for (double b : betas) {
    const auto& u = cmc::find_row(rows, "unsorted", b);
    const auto& so = cmc::find_row(rows, "sorted", b);
    w.write_row({cmc::fmt_num(b), cmc::fmt_num(u.report.asym_var), cmc::fmt_num(u.report.ci),
                 cmc::fmt_num(so.report.asym_var), cmc::fmt_num(so.report.ci)});
  }
  return 0;
}

int cmd_ot_compare(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto model = cmc::make_model_1d(c);
  const auto f = cmc::make_observable_1d(c, model);
  cmc::OtSettings s;
  s.nodes = c.get_size("ot.nodes", 400);
  if (s.nodes > 400) throw cmc::ConfigError("ot.nodes must be at most 400");
  s.halfwidth = c.get_double("ot.halfwidth", 5.0);
  s.epsilon_factor = c.get_double("ot.epsilon_factor", 1e-2);
  s.delta = c.get_double("ot.delta", 0.2);
  s.max_iters = c.get_size("ot.max_iters", 20000);
  s.tol = c.get_double("ot.tol", 1e-9);
  s.run = langevin_config(ctx);
  if (s.run.trajectory_stride == 0) s.run.trajectory_stride = 10;
  s.n_batches = c.get_size("numerics.n_batches", 20);
  std::vector<cmc::ScalarKind> kinds;
  for (const auto& k : c.get_list("ot.kinds", {"independent", "mirror", "symmetric", "poisson"}))
    kinds.push_back(cmc::parse_scalar_kind(k));
  const auto cmp = cmc::ot_compare(model, f, kinds, s);

  const auto& nodes = cmp.marginal.nodes;
  write_dense(ctx.out / "ot_plan.csv", with_note(ctx, {{"epsilon", cmc::fmt_num(cmp.plan.epsilon)}}),
              nodes, nodes, cmp.plan.plan);
  json emp = json::object();
  for (const auto& e : cmp.empirical) {
    write_dense(ctx.out / ("ot_empirical_" + e.kind + ".csv"), with_note(ctx, {{"kind", e.kind}}),
                nodes, nodes, e.histogram);
    emp[e.kind] = {{"value", e.value.mean},
                   {"ci", e.value.halfwidth},
                   {"antidiagonal_fraction", e.antidiagonal_fraction}};
  }
  json summary = {{"cost_value", cmp.plan.cost_value},
                  {"marginal_error", cmp.plan.marginal_error},
                  {"epsilon", cmp.plan.epsilon},
                  {"lower_bound", cmp.plan.lower_bound},
                  {"converged", cmp.plan.converged},
                  {"cost_spread", cmp.cost_spread},
                  {"antidiagonal_mass", cmp.antidiagonal_mass},
                  {"diagonal_mass", cmp.diagonal_mass},
                  {"delta", cmp.delta},
                  {"empirical_values", emp},
                  {"meta", meta_json(ctx)}};
  write_json(ctx.out / "ot_summary.json", summary);
  return 0;
}

int cmd_spectral(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto model = cmc::make_model_1d(c);
  const auto rep = cmc::spectral_analysis(model, c.get_size("spectral.grid_size", 0),
                                          c.get_size("spectral.modes", 6));
  {
    cmc::CsvWriter w(ctx.out / "spectral.csv", ctx.meta, {"index", "eigenvalue", "parity", "overlap"});
    for (std::size_t k = 0; k < rep.parities.size(); ++k)
      w.write_row({std::to_string(k + 1), cmc::fmt_num(rep.eigenvalues[k]), cmc::to_string(rep.parities[k]),
                   cmc::fmt_num(rep.overlaps[k])});
  }
  json summary = {{"one_particle_rate", rep.one_particle_rate}, {"meta", meta_json(ctx)}};
  try {
    summary["mirror_coupled_rate"] = cmc::coupled_rate_mirror(rep);
  } catch (const cmc::ConfigError& e) {
    summary["mirror_coupled_rate"] = nullptr;
    summary["mirror_coupled_rate_error"] = e.what();
  }
  if (c.get_bool("spectral.empirical", false)) {
    const auto f = cmc::make_observable_1d(c, model);
    auto lc = langevin_config(ctx);
    lc.n_particles = 2;
    const double lo = c.get_double("spectral.lag_min", 0.2), hi = c.get_double("spectral.lag_max", 1.5);
    json fits = json::object();
    for (auto k : {cmc::ScalarKind::independent, cmc::ScalarKind::mirror}) {
      cmc::ScalarCoupling1D sc(k, k == cmc::ScalarKind::mirror ? cmc::kMaxBeta : 0.0);
      const auto run = cmc::run_langevin(lc, model, f, sc);
      const auto fit = cmc::empirical_decay_rate(run.f_series, lc.dt, lo, hi);
      fits[cmc::to_string(k)] = {{"rate", fit.rate.mean},
                                 {"ci", fit.rate.halfwidth},
                                 {"inconclusive", fit.inconclusive},
                                 {"degenerate", fit.degenerate}};
    }
    summary["empirical_decay"] = fits;
  }
  write_json(ctx.out / "spectral_summary.json", summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled Langevin and zigzag samplers: variance experiments"};
  app.require_subcommand(1);
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Context&);
  };
  const std::vector<Entry> entries{
      {"poisson", "Solve the 1D Poisson equation for an observable", cmd_poisson},
      {"delta-sigma", "Quadrature of the linearized variance objective per coupling kind", cmd_delta_sigma},
      {"langevin", "Single coupled Langevin run", cmd_langevin},
      {"zigzag", "Coupled zigzag runs over a strength grid", cmd_zigzag},
      {"variance-sweep", "Asymptotic variance versus coupling strength", cmd_variance_sweep},
      {"sort-compare", "Sorted versus unsorted pairwise reflection couplings", cmd_sort_compare},
      {"ot-compare", "Entropic transport bound versus empirical coupled measures", cmd_ot_compare},
      {"spectral", "Generator spectrum, parities and mirror-coupled rate", cmd_spectral},
  };
  std::vector<CommonOptions> opts(entries.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto* sub = app.add_subcommand(entries[i].name, entries[i].help);
    auto& o = opts[i];
    sub->add_option("--config", o.config_path, "Key-value config file");
    sub->add_option("--seed", o.seed, "Base seed (overrides numerics.seed)");
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads (overrides numerics.workers)");
    sub->add_option("--set", o.overrides, "Override key=value (repeatable)");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const Context ctx = make_context(opts[i]);
      return entries[i].fn(ctx);
    } catch (const cmc::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return cmc::exit_code(e.kind());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
