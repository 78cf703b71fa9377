#pragma once

// Machine-readable outputs: the bridge-lab/1 JSON schema and RFC-4180 CSV.
// Every artifact embeds the tool version, the resolved configuration, and an
// invariant-check summary, and is byte-stable for fixed inputs.

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridgelab/model_map.hpp"
#include "bridgelab/profile.hpp"
#include "bridgelab/robin.hpp"
#include "bridgelab/stability.hpp"
#include "bridgelab/version.hpp"

namespace bridgelab {

using json = nlohmann::ordered_json;

// 17 significant digits, '.' decimal separator, no locale surprises.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  bool needs = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(fields[i]);
  }
  out += '\n';
  return out;
}

inline json envelope(const std::string& command, const json& config) {
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  return j;
}

inline json profile_to_json(const BridgeProfile& p, const ProfileInvariants& inv) {
  json j;
  j["n"] = p.n;
  j["branch"] = p.branch.name();
  j["t"] = p.t;
  j["C"] = p.C;
  j["lambda"] = p.lambda;
  j["sigma"] = p.sigma;
  j["T"] = p.T;
  j["T_E"] = p.T_E;
  j["T_ratio"] = p.T / p.T_E;
  j["phi"] = p.phi;
  j["phi_squared"] = p.phi * p.phi;
  j["above_escobar_threshold"] = p.T > p.T_E;
  json checks;
  checks["bulk_norm"] = {{"value", inv.bulk_norm},
                         {"target", 1.0},
                         {"pass", std::abs(inv.bulk_norm - 1.0) < 1e-9}};
  checks["trace_norm"] = {{"value", inv.trace_norm},
                          {"target", p.T},
                          {"pass", std::abs(inv.trace_norm - p.T) < 1e-9 * p.T}};
  checks["lambda_kappa_identity"] = {{"residual", inv.lambda_residual},
                                     {"pass", inv.lambda_residual < 1e-8}};
  checks["phi_pohozaev_identity"] = {{"residual", inv.phi_residual},
                                     {"pass", inv.phi_residual < 1e-8}};
  checks["trace_scan_monotone"] = p.trace_scan_monotone;
  j["invariants"] = checks;
  return j;
}

inline json ball_to_json(const ModelBall& b) {
  json j;
  j["n"] = b.n;
  j["branch"] = b.branch.name();
  j["eta"] = b.branch.eta();
  j["alpha"] = b.alpha;
  j["kappa"] = b.kappa;
  j["radius"] = b.radius;
  j["beta"] = b.beta;
  j["robin_residual"] = b.robin_residual();
  return j;
}

inline json spectral_to_json(const SpectralReport& rep) {
  json j;
  j["ball"] = ball_to_json(rep.ball);
  json sectors = json::array();
  for (const auto& s : rep.per_sector) {
    json row;
    row["ell"] = s.ell;
    row["bottom"] = s.bottom;
    row["constraint"] = s.constraint;
    row["multiplicity"] = s.multiplicity;
    row["fe_fine"] = s.diag.fe_value;
    row["fe_coarse"] = s.diag.fe_value_coarse;
    row["richardson"] = s.diag.richardson;
    row["shoot"] = s.diag.shoot_value;
    row["shoot_fe_agreement"] = s.diag.shoot_fe_agreement;
    sectors.push_back(row);
  }
  j["per_sector"] = sectors;
  json kr;
  kr["ell1_shoot_mismatch"] = rep.kernel_residuals.shoot_mismatch;
  kr["ell1_profile_deviation"] = rep.kernel_residuals.profile_deviation;
  kr["robin_beta_residual"] = rep.kernel_residuals.robin_beta_residual;
  kr["ell1_unconstrained_bottom"] = rep.kernel_residuals.ell1_bottom;
  j["kernel_residuals"] = kr;
  j["gap"] = rep.gap;
  j["floor"] = rep.floor_value;
  j["gap_positive"] = rep.gap_positive;
  j["l_max"] = rep.l_max;
  json diag;
  diag["increasing_from_ell_2"] = rep.increasing_from_2;
  diag["l_max_bottom_largest"] = rep.lmax_largest;
  j["diagnostics"] = diag;
  return j;
}

inline json stability_to_json(const StabilityReport& rep) {
  json j;
  j["profile"] = rep.profile_id;
  j["perturbation"] = rep.perturbation_id;
  json rows = json::array();
  for (const auto& r : rep.sweep) {
    json row;
    row["eps"] = r.eps;
    row["deficit"] = r.deficit;
    row["distance"] = r.distance;
    row["ratio"] = r.ratio;
    row["correction"] = r.correction;
    row["defect"] = r.defect;
    rows.push_back(row);
  }
  j["sweep"] = rows;
  j["fitted_coefficient"] = rep.fitted_coefficient;
  j["q_half"] = rep.q_half;
  j["gap_half"] = rep.gap_half;
  j["correction_slope"] = rep.correction_slope;
  j["defect_slope"] = rep.defect_slope;
  return j;
}

}  // namespace bridgelab
