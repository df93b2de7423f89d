#include "subdrift/cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace subdrift::cli {

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json to_json(const Estimate& e) {
  return {{"mean", number(e.mean)},
          {"std_error", number(e.std_error)},
          {"replicates", e.replicates},
          {"censored_count", e.censored_count},
          {"non_finite_count", e.non_finite_count}};
}

json to_json(const StateCheck& c) {
  json j = {{"state", c.state}, {"margin", number(c.margin)}, {"verdict", to_string(c.verdict)}};
  if (c.k != 0) j["k"] = c.k;
  if (c.replicates > 0) {
    j["std_error"] = number(c.std_error);
    j["replicates"] = c.replicates;
  }
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

json to_json(const DriftCertificate& c) {
  json j = {{"variant", c.variant}, {"mode", to_string(c.mode)}, {"verdict", to_string(c.verdict)}};
  j["failing_states"] = c.failing_states();
  j["inconclusive_states"] = c.inconclusive_states();
  json rows = json::array();
  for (const auto& s : c.checks) rows.push_back(to_json(s));
  j["checks"] = rows;
  if (!c.secondary.empty()) {
    json sec = json::array();
    for (const auto& s : c.secondary) sec.push_back(to_json(s));
    j["secondary_checks"] = sec;
  }
  return j;
}

json to_json(const CheckReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"state", p.state}, {"margin", number(p.margin)}, {"judged", p.judged}});
  }
  return {{"condition", r.condition}, {"pass", r.pass},           {"shape_ok", r.shape_ok},
          {"shape_detail", r.shape_detail}, {"violations", r.violations}, {"points", pts}};
}

json to_json(const TameVerdict& v) {
  json w = json::array();
  for (const auto& t : v.witnesses) {
    w.push_back({{"state", t.state}, {"n", t.n}, {"margin", number(t.margin)}});
  }
  return {{"is_tame", v.is_tame},
          {"delta", v.delta},
          {"beta", v.beta},
          {"condition2_margin", number(v.condition2_margin)},
          {"violations", v.violations},
          {"witnesses", w}};
}

json to_json(const Provenance& p) {
  json c = json::object();
  for (const auto& [k, v] : p.constants) c[k] = number(v);
  return {{"source", to_string(p.source)}, {"detail", p.detail}, {"constants", c}};
}

json to_json(const MomentEstimate& m) {
  return {{"truncated", to_json(m.truncated)},
          {"censor_lower_bound", number(m.censor_lower_bound)},
          {"censored_fraction", m.censored_fraction},
          {"cap", m.cap},
          {"mean_tau", number(m.mean_tau)},
          {"flagged", m.flagged},
          {"warnings", m.warnings}};
}

json to_json(const MomentReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"state", row.state},
                    {"coordinate", number(row.coordinate)},
                    {"W", number(row.W)},
                    {"in_C", row.in_C},
                    {"estimate", to_json(row.estimate)},
                    {"bound_ratio", number(row.bound_ratio)},
                    {"lower_bound_ratio", number(row.lower_bound_ratio)}});
  }
  json j = {{"experiment", r.experiment},
            {"rate", r.rate},
            {"target", r.target},
            {"max_censored_fraction", r.max_censored_fraction},
            {"inner_max_ratio", number(r.inner_max_ratio)},
            {"outer_max_ratio", number(r.outer_max_ratio)},
            {"stabilization_tol", r.stabilization_tol},
            {"loglog_slope", r.loglog_slope ? number(*r.loglog_slope) : json(nullptr)},
            {"verdict", to_string(r.verdict)},
            {"notes", r.notes},
            {"rows", rows}};
  return j;
}

json to_json(const PathwiseReport& r) {
  return {{"paths", r.paths},
          {"censored", r.censored},
          {"violations", r.violations},
          {"min_relative_slack", number(r.min_relative_slack)},
          {"first_violations", r.first_violations}};
}

json to_json(const DomMomentReport& r) {
  json adm = json::array();
  for (const auto& a : r.admissibility) adm.push_back({{"z", a.z}, {"margin", number(a.margin)}});
  return {{"alpha", r.resolved.alpha},
          {"eta", r.resolved.eta},
          {"alpha_beta", r.resolved.alpha_beta},
          {"beta_prime", r.resolved.drift.beta_prime},
          {"b_prime", r.resolved.drift.b_prime},
          {"rate", r.resolved.rate.label()},
          {"constraint", r.resolved.constraint},
          {"admissibility", adm},
          {"moments", to_json(r.moments)}};
}

json to_json(const WnormDiagnostic& d, bool include_series) {
  json series = json::array();
  for (const auto& s : d.series) {
    json j = {{"x", s.x},
              {"x_prime", s.x_prime},
              {"sup_ratio", number(s.sup_ratio)},
              {"early_max", number(s.early_max)},
              {"late_max", number(s.late_max)},
              {"stabilized", s.stabilized}};
    if (include_series) {
      json r = json::array();
      for (double v : s.ratio) r.push_back(number(v));
      j["ratio"] = r;
    }
    series.push_back(j);
  }
  return {{"n_max", d.n_max}, {"pass", d.pass}, {"pairs", series}};
}

namespace {

std::string csv_cell(const json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_null()) {
    s = "";
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return s;
}

void flatten(const json& v, const std::string& prefix, json& out) {
  if (v.is_object()) {
    for (const auto& [k, x] : v.items()) flatten(x, prefix.empty() ? k : prefix + "." + k, out);
  } else if (!v.is_array()) {
    out[prefix] = v;
  }
}

}  // namespace

std::string to_csv(const json& rows) {
  std::ostringstream os;
  if (!rows.is_array() || rows.empty()) return "";
  std::vector<json> flat;
  for (const auto& r : rows) {
    json f = json::object();
    flatten(r, "", f);
    flat.push_back(std::move(f));
  }
  bool first = true;
  for (const auto& [k, v] : flat.front().items()) {
    os << (first ? "" : ",") << csv_cell(k);
    first = false;
  }
  os << "\n";
  for (const auto& f : flat) {
    first = true;
    for (const auto& [k, v] : flat.front().items()) {
      os << (first ? "" : ",") << (f.contains(k) ? csv_cell(f[k]) : "");
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace subdrift::cli
