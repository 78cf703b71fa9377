// bridge: command-line front end for the bridge-profile laboratory.
//
// Subcommands: profile | curve | spectrum | gap | kernel | stability | oracle
// Exit codes:  0 success, 2 domain error (degenerate T, invalid inputs),
//              3 numerical failure, 4 I/O failure.
// Errors are emitted as a JSON object on standard error.  Identical flags
// and seed produce byte-identical output artifacts.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bridgelab/errors.hpp"
#include "bridgelab/geometry.hpp"
#include "bridgelab/harmonics.hpp"
#include "bridgelab/model_map.hpp"
#include "bridgelab/montecarlo.hpp"
#include "bridgelab/profile.hpp"
#include "bridgelab/report.hpp"
#include "bridgelab/robin.hpp"
#include "bridgelab/stability.hpp"
#include "bridgelab/version.hpp"

namespace bl = bridgelab;
using bl::json;

namespace {

struct RunConfig {
  int n = 3;
  std::optional<double> T;
  std::optional<double> T_ratio;
  std::optional<double> t;
  std::string branch = "spherical";
  int nodes = 1024;
  std::string scheme = "tanh-sinh";
  double tail = 1e16;
  double tol = 1e-14;
  int l_max = 10;
  int sector = 2;
  std::vector<double> eps;
  std::uint64_t seed = 42;
  long long samples = 1000000;
  std::string output = "-";
  std::string format = "json";
};

bl::QuadratureSpec quad_of(const RunConfig& cfg) {
  bl::QuadratureSpec spec;
  spec.node_count = cfg.nodes;
  spec.scheme = (cfg.scheme == "gauss-legendre") ? bl::QuadScheme::GaussLegendre
                                                 : bl::QuadScheme::TanhSinh;
  spec.tail_cutoff = cfg.tail;
  spec.tol = cfg.tol;
  return spec;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["n"] = cfg.n;
  if (cfg.T) j["T"] = *cfg.T;
  if (cfg.T_ratio) j["T_ratio"] = *cfg.T_ratio;
  if (cfg.t) {
    j["t"] = *cfg.t;
    j["branch"] = cfg.branch;
  }
  j["quad"] = {{"node_count", cfg.nodes},
               {"scheme", cfg.scheme},
               {"tail_cutoff", cfg.tail},
               {"tol", cfg.tol}};
  j["l_max"] = cfg.l_max;
  j["sector"] = cfg.sector;
  j["eps"] = cfg.eps;
  j["seed"] = cfg.seed;
  j["samples"] = cfg.samples;
  j["format"] = cfg.format;
  return j;
}

bl::BridgeProfile resolve_profile(const RunConfig& cfg) {
  if (cfg.n < 3) throw bl::DomainError("n must be >= 3");
  const auto quad = quad_of(cfg);
  const int selectors = int(bool(cfg.T)) + int(bool(cfg.T_ratio)) + int(bool(cfg.t));
  if (selectors != 1)
    throw bl::DomainError("exactly one of --T, --T-ratio, --t must be given");
  if (cfg.T) return bl::solve_profile(cfg.n, *cfg.T, quad);
  if (cfg.T_ratio) {
    const double te = bl::escobar_threshold(cfg.n, quad);
    return bl::solve_profile(cfg.n, *cfg.T_ratio * te, quad);
  }
  const bl::Branch branch =
      (cfg.branch == "hyperbolic") ? bl::Branch::hyperbolic() : bl::Branch::spherical();
  return bl::profile_from_t(cfg.n, branch, *cfg.t, quad);
}

void write_output(const RunConfig& cfg, const std::string& payload) {
  if (cfg.output == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw bl::IoError("cannot open output file: " + cfg.output);
  out << payload;
  if (!out) throw bl::IoError("write failed: " + cfg.output);
}

std::string csv_preamble(const std::string& command, const RunConfig& cfg) {
  std::string s;
  s += "# schema: " + std::string(bl::kSchema) + "\n";
  s += "# version: " + std::string(bl::kVersion) + "\n";
  s += "# command: " + command + "\n";
  s += "# config: " + config_to_json(cfg).dump() + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

std::string run_profile(const RunConfig& cfg) {
  const auto p = resolve_profile(cfg);
  const auto inv = bl::verify_profile_invariants(p, quad_of(cfg));
  if (cfg.format == "csv") {
    std::string s = csv_preamble("profile", cfg);
    s += bl::csv_row({"n", "branch", "t", "C", "lambda", "sigma", "T", "T_E", "phi_squared"});
    s += bl::csv_row({std::to_string(p.n), p.branch.name(), bl::format_double(p.t),
                      bl::format_double(p.C), bl::format_double(p.lambda),
                      bl::format_double(p.sigma), bl::format_double(p.T),
                      bl::format_double(p.T_E), bl::format_double(p.phi * p.phi)});
    return s;
  }
  json j = bl::envelope("profile", config_to_json(cfg));
  j["profile"] = bl::profile_to_json(p, inv);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

std::string run_curve(const RunConfig& cfg) {
  if (cfg.n < 3) throw bl::DomainError("n must be >= 3");
  const auto quad = quad_of(cfg);
  const double te = bl::escobar_threshold(cfg.n, quad);

  // Phi^2 hugs the Escobar parabola E_n T^2 near T_E, so the continuity
  // check needs tight bracketing rows on both sides of the threshold.
  std::vector<double> ratios;
  for (double r = 0.10; r < 0.95; r += 0.10) ratios.push_back(r);
  ratios.push_back(0.97);
  ratios.push_back(0.999);
  ratios.push_back(1.001);
  ratios.push_back(1.03);
  for (double r = 1.10; r <= 2.01; r += 0.10) ratios.push_back(r);
  for (double r = 2.25; r <= 3.01; r += 0.25) ratios.push_back(r);

  std::string s = csv_preamble("curve", cfg);
  s += bl::csv_row({"T", "t", "branch", "phi_squared", "lambda", "sigma", "kappa", "R", "beta"});

  std::vector<double> T_col, phi2_col;
  double phi2_below = 0.0, phi2_above = 0.0, phi2_first = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const auto p = bl::solve_profile(cfg.n, ratios[i] * te, quad);
    const auto ball = bl::model_ball_from_profile(p, quad);
    s += bl::csv_row({bl::format_double(p.T), bl::format_double(p.t), p.branch.name(),
                      bl::format_double(p.phi * p.phi), bl::format_double(p.lambda),
                      bl::format_double(p.sigma), bl::format_double(ball.kappa),
                      bl::format_double(ball.radius), bl::format_double(ball.beta)});
    T_col.push_back(p.T);
    phi2_col.push_back(p.phi * p.phi);
    if (i == 0) phi2_first = p.phi * p.phi;
    if (ratios[i] == 0.999) phi2_below = p.phi * p.phi;
    if (ratios[i] == 1.001) phi2_above = p.phi * p.phi;
  }

  // Diagnostics: column monotonicity and the endpoint/continuity checks.
  bool T_monotone = true, phi2_monotone = true;
  for (std::size_t i = 0; i + 1 < T_col.size(); ++i) {
    if (T_col[i + 1] <= T_col[i]) T_monotone = false;
    if (phi2_col[i + 1] >= phi2_col[i]) phi2_monotone = false;
  }
  // independent Sobolev constant from the whole-space bubble
  const double area = bl::sphere_surface(cfg.n);
  const int n = cfg.n;
  const double grad2 = (n - 2.0) * (n - 2.0) * area *
                       bl::integrate_half_line(
                           [&](double r) {
                             return std::pow(r, n + 1) * std::pow(1.0 + r * r, -n);
                           },
                           0.0, quad);
  const double mass = area * bl::integrate_half_line(
                                 [&](double r) {
                                   return std::pow(r, n - 1) * std::pow(1.0 + r * r, -n);
                                 },
                                 0.0, quad);
  const double sobolev = grad2 / std::pow(mass, (n - 2.0) / n);
  s += "# diagnostics:\n";
  s += "#   T_column_increasing: " + std::string(T_monotone ? "true" : "false") + "\n";
  s += "#   phi2_column_decreasing: " + std::string(phi2_monotone ? "true" : "false") + "\n";
  s += "#   first_row_phi2_vs_sobolev: " + bl::format_double(phi2_first / sobolev - 1.0) + "\n";
  s += "#   threshold_jump_rel: " + bl::format_double(std::abs(phi2_above - phi2_below) /
                                                      phi2_below) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// spectrum / gap
// ---------------------------------------------------------------------------

std::string run_gap(const RunConfig& cfg, bool table_only) {
  const auto p = resolve_profile(cfg);
  const auto quad = quad_of(cfg);
  const auto ball = bl::model_ball_from_profile(p, quad);
  const auto rep = bl::spectral_gap(ball, p, cfg.l_max);

  if (table_only || cfg.format == "csv") {
    std::string s = csv_preamble(table_only ? "spectrum" : "gap", cfg);
    s += bl::csv_row({"ell", "bottom", "constraint", "multiplicity", "fe_fine", "richardson",
                      "shoot", "shoot_fe_agreement"});
    for (const auto& row : rep.per_sector) {
      s += bl::csv_row({std::to_string(row.ell), bl::format_double(row.bottom), row.constraint,
                        std::to_string(row.multiplicity), bl::format_double(row.diag.fe_value),
                        bl::format_double(row.diag.richardson),
                        bl::format_double(row.diag.shoot_value),
                        bl::format_double(row.diag.shoot_fe_agreement)});
    }
    s += "# gap: " + bl::format_double(rep.gap) + "\n";
    s += "# ell1_unconstrained_bottom: " +
         bl::format_double(rep.kernel_residuals.ell1_bottom) + "\n";
    return s;
  }
  json j = bl::envelope("gap", config_to_json(cfg));
  j["profile"] = bl::profile_to_json(p, bl::verify_profile_invariants(p, quad));
  j["spectral"] = bl::spectral_to_json(rep);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

std::string run_kernel(const RunConfig& cfg) {
  const auto p = resolve_profile(cfg);
  const auto quad = quad_of(cfg);
  const bl::ModelMap map(p, quad);
  const auto kf = bl::kernel_fields(map);
  const auto kr = bl::kernel_residuals(map.ball());

  if (cfg.format == "csv") {
    std::string s = csv_preamble("kernel", cfg);
    s += bl::csv_row({"label", "coefficient", "expected", "relative_error"});
    for (std::size_t i = 0; i < kf.labels.size(); ++i) {
      const double rel = std::abs(kf.coefficients[i] / kf.expected_coefficients[i] - 1.0);
      s += bl::csv_row({std::to_string(kf.labels[i]), bl::format_double(kf.coefficients[i]),
                        bl::format_double(kf.expected_coefficients[i]), bl::format_double(rel)});
    }
    s += "# shoot_mismatch: " + bl::format_double(kr.shoot_mismatch) + "\n";
    s += "# profile_deviation: " + bl::format_double(kr.profile_deviation) + "\n";
    s += "# robin_beta_residual: " + bl::format_double(kr.robin_beta_residual) + "\n";
    return s;
  }
  json j = bl::envelope("kernel", config_to_json(cfg));
  j["ball"] = bl::ball_to_json(map.ball());
  json fields = json::array();
  for (std::size_t i = 0; i < kf.labels.size(); ++i) {
    json row;
    row["label"] = kf.labels[i];
    row["coefficient"] = kf.coefficients[i];
    row["expected"] = kf.expected_coefficients[i];
    row["relative_error"] = std::abs(kf.coefficients[i] / kf.expected_coefficients[i] - 1.0);
    fields.push_back(row);
  }
  j["fields"] = fields;
  j["max_profile_deviation"] = kf.max_deviation;
  j["gram"] = {{"min_eig", kf.gram_min_eig}, {"condition", kf.gram_cond}};
  j["h0_residuals"] = {{"volume", kf.h0_volume_residual},
                       {"boundary", kf.h0_boundary_residual}};
  j["residuals"] = {{"shoot_mismatch", kr.shoot_mismatch},
                    {"profile_deviation", kr.profile_deviation},
                    {"robin_beta_residual", kr.robin_beta_residual}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

bl::RadialFunction seeded_radial_profile(const bl::ModelBall& ball, int ell,
                                         std::uint64_t seed) {
  // smooth deterministic pseudo-random direction: r^ell (1 + c1 r/R + c2 (r/R)^2)
  std::mt19937_64 eng(seed);
  auto u = [&]() { return (eng() >> 11) * 0x1.0p-53 - 0.5; };
  const double c1 = u(), c2 = u();
  const double R = ball.radius;
  bl::RadialFunction f;
  f.ell = ell;
  f.grid = bl::cosine_grid(1e-6 * R, R, 800);
  f.values.resize(f.grid.size());
  f.derivs.resize(f.grid.size());
  for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
    const double r = f.grid[i], s = r / R;
    f.values[i] = std::pow(r, ell) * (1.0 + c1 * s + c2 * s * s);
    f.derivs[i] = ell * std::pow(r, ell - 1) * (1.0 + c1 * s + c2 * s * s) +
                  std::pow(r, ell) * (c1 / R + 2.0 * c2 * s / R);
  }
  return f;
}

std::string run_stability(const RunConfig& cfg) {
  const auto p = resolve_profile(cfg);
  const auto quad = quad_of(cfg);
  const bl::ModelMap map(p, quad);
  const auto& ball = map.ball();
  const auto gap_rep = bl::spectral_gap(ball, p, cfg.l_max);

  bl::RadialFunction direction;
  std::string pert_id;
  if (cfg.sector <= 2) {
    const auto sb = bl::sector_bottom(ball, p, cfg.sector);
    direction = sb.argmin;
    pert_id = "argmin_ell_" + std::to_string(cfg.sector) + " (" + sb.constraint + ")";
  } else {
    direction = seeded_radial_profile(ball, cfg.sector, cfg.seed);
    pert_id = "seeded_ell_" + std::to_string(cfg.sector);
  }

  std::vector<double> eps = cfg.eps;
  if (eps.empty()) eps = {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};

  const bl::LabQuad lab(ball);
  auto pert = bl::make_perturbation(map, direction, eps.front());
  auto rep = bl::stability_sweep(map, pert, eps, 0.5 * gap_rep.gap, lab);
  rep.profile_id = std::string(p.branch.name()) + " n=" + std::to_string(p.n) +
                   " T/T_E=" + bl::format_double(p.T / p.T_E);
  rep.perturbation_id = pert_id;

  if (cfg.format == "csv") {
    std::string s = csv_preamble("stability", cfg);
    s += bl::csv_row({"eps", "deficit", "distance", "ratio", "correction", "defect"});
    for (const auto& row : rep.sweep)
      s += bl::csv_row({bl::format_double(row.eps), bl::format_double(row.deficit),
                        bl::format_double(row.distance), bl::format_double(row.ratio),
                        bl::format_double(row.correction), bl::format_double(row.defect)});
    s += "# fitted_coefficient: " + bl::format_double(rep.fitted_coefficient) + "\n";
    s += "# q_half: " + bl::format_double(rep.q_half) + "\n";
    s += "# gap_half: " + bl::format_double(rep.gap_half) + "\n";
    return s;
  }
  json j = bl::envelope("stability", config_to_json(cfg));
  j["profile"] = bl::profile_to_json(p, bl::verify_profile_invariants(p, quad));
  j["stability"] = bl::stability_to_json(rep);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

std::string run_oracle(const RunConfig& cfg) {
  if (cfg.n < 3) throw bl::DomainError("n must be >= 3");
  const auto quad = quad_of(cfg);
  std::mt19937_64 eng(cfg.seed);
  auto u01 = [&]() { return (eng() >> 11) * 0x1.0p-53; };

  json rows = json::array();
  std::string csv = csv_preamble("oracle", cfg);
  csv += bl::csv_row({"domain", "branch", "t", "q", "quadrature", "estimate", "standard_error",
                      "sigmas"});
  const auto ex = bl::Exponents::of(cfg.n);
  for (int k = 0; k < 6; ++k) {
    const bool spherical = (k % 2 == 0);
    const bl::Branch branch = spherical ? bl::Branch::spherical() : bl::Branch::hyperbolic();
    const double t = spherical ? (4.0 * u01() - 2.0) : (-1.2 - 3.0 * u01());
    for (auto domain : {bl::McDomain::Bulk, bl::McDomain::Boundary}) {
      const double q = (domain == bl::McDomain::Bulk) ? ex.two_star : ex.two_sharp;
      const double exact = (domain == bl::McDomain::Bulk)
                               ? bl::bulk_integral(cfg.n, branch, t, q, quad)
                               : bl::boundary_integral(cfg.n, branch, t, quad);
      const auto mc = bl::mc_oracle(cfg.n, branch, t, q, cfg.samples,
                                    cfg.seed + 1000 + static_cast<std::uint64_t>(k), domain);
      const double sig = std::abs(mc.estimate - exact) / mc.standard_error;
      json row;
      row["domain"] = (domain == bl::McDomain::Bulk) ? "bulk" : "boundary";
      row["branch"] = branch.name();
      row["t"] = t;
      row["q"] = q;
      row["quadrature"] = exact;
      row["estimate"] = mc.estimate;
      row["standard_error"] = mc.standard_error;
      row["sigmas"] = sig;
      rows.push_back(row);
      csv += bl::csv_row({row["domain"].get<std::string>(), branch.name(), bl::format_double(t),
                          bl::format_double(q), bl::format_double(exact),
                          bl::format_double(mc.estimate), bl::format_double(mc.standard_error),
                          bl::format_double(sig)});
    }
  }
  if (cfg.format == "csv") return csv;
  json j = bl::envelope("oracle", config_to_json(cfg));
  j["comparisons"] = rows;
  return j.dump(2) + "\n";
}

void add_common_flags(CLI::App* cmd, RunConfig& cfg, bool with_selector) {
  cmd->add_option("--n", cfg.n, "dimension (>= 3)");
  if (with_selector) {
    auto* T = cmd->add_option("--T", cfg.T, "absolute trace norm target");
    auto* ratio = cmd->add_option("--T-ratio", cfg.T_ratio, "T as a multiple of T_E(n)");
    auto* t = cmd->add_option("--t", cfg.t, "branch shift (requires --branch)");
    cmd->add_option("--branch", cfg.branch, "spherical | hyperbolic")
        ->check(CLI::IsMember({"spherical", "hyperbolic"}));
    T->excludes(ratio);
    T->excludes(t);
    ratio->excludes(t);
  }
  cmd->add_option("--nodes", cfg.nodes, "quadrature node count");
  cmd->add_option("--scheme", cfg.scheme, "quadrature scheme")
      ->check(CLI::IsMember({"tanh-sinh", "gauss-legendre"}));
  cmd->add_option("--tail", cfg.tail, "half-line tail cutoff");
  cmd->add_option("--tol", cfg.tol, "quadrature tolerance target");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("-o,--output", cfg.output, "output path ('-' for stdout)");
  cmd->add_option("--format", cfg.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bridge: extremal bridge profiles, Robin spectra, and stability experiments"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto* c_profile = app.add_subcommand("profile", "solve the bridge minimizer for (n, T)");
  add_common_flags(c_profile, cfg, true);
  auto* c_curve = app.add_subcommand("curve", "sweep T across both branches; CSV output");
  add_common_flags(c_curve, cfg, false);
  auto* c_spectrum = app.add_subcommand("spectrum", "per-sector Robin bottoms table");
  add_common_flags(c_spectrum, cfg, true);
  c_spectrum->add_option("--l-max", cfg.l_max, "largest sector degree");
  auto* c_gap = app.add_subcommand("gap", "spectral gap report");
  add_common_flags(c_gap, cfg, true);
  c_gap->add_option("--l-max", cfg.l_max, "largest sector degree");
  auto* c_kernel = app.add_subcommand("kernel", "kernel fields and residual table");
  add_common_flags(c_kernel, cfg, true);
  auto* c_stability = app.add_subcommand("stability", "deficit vs distance sweep");
  add_common_flags(c_stability, cfg, true);
  c_stability->add_option("--l-max", cfg.l_max, "largest sector degree for the gap");
  c_stability->add_option("--sector", cfg.sector, "perturbation sector (0,1,2 argmin; >=3 seeded)");
  c_stability->add_option("--eps", cfg.eps, "amplitude sweep (decreasing)");
  auto* c_oracle = app.add_subcommand("oracle", "Monte Carlo vs quadrature comparison");
  add_common_flags(c_oracle, cfg, false);
  c_oracle->add_option("--samples", cfg.samples, "Monte Carlo samples per integral");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string payload;
    if (c_profile->parsed()) payload = run_profile(cfg);
    else if (c_curve->parsed()) payload = run_curve(cfg);
    else if (c_spectrum->parsed()) payload = run_gap(cfg, true);
    else if (c_gap->parsed()) payload = run_gap(cfg, false);
    else if (c_kernel->parsed()) payload = run_kernel(cfg);
    else if (c_stability->parsed()) payload = run_stability(cfg);
    else if (c_oracle->parsed()) payload = run_oracle(cfg);
    write_output(cfg, payload);
    return 0;
  } catch (const bl::Error& e) {
    json err;
    err["error"] = {{"type", e.name()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", "InternalError"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
}
