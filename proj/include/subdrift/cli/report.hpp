#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "subdrift/domproc.hpp"
#include "subdrift/drift.hpp"
#include "subdrift/moments.hpp"
#include "subdrift/planner.hpp"
#include "subdrift/wnorm.hpp"

namespace subdrift::cli {

using json = nlohmann::ordered_json;

/// Numbers that may be NaN or infinite are written as strings so the JSON
/// stays valid and the value survives.
json number(double v);

json to_json(const Estimate& e);
json to_json(const StateCheck& c);
json to_json(const DriftCertificate& c);
json to_json(const CheckReport& r);
json to_json(const TameVerdict& v);
json to_json(const Provenance& p);
json to_json(const MomentEstimate& m);
json to_json(const MomentReport& r);
json to_json(const PathwiseReport& r);
json to_json(const DomMomentReport& r);
json to_json(const WnormDiagnostic& d, bool include_series);

/// A grid of rows with identical keys, as CSV.
std::string to_csv(const json& rows);

/// Stable 64-bit FNV-1a of the config text, as hex.
std::string config_hash(const std::string& text);

}  // namespace subdrift::cli
