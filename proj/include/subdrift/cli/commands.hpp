#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "subdrift/cli/config.hpp"
#include "subdrift/cli/report.hpp"

namespace subdrift::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;  // FAIL, INCONCLUSIVE or OUT_OF_SCOPE

const std::vector<std::string>& command_names();

struct CommandResult {
  /// PASS, FAIL, INCONCLUSIVE, OUT_OF_SCOPE or DONE (no verdict to give).
  std::string status;
  json results;
  /// Grid rows for CSV output.
  json table = json::array();
};

/// Runs one command on a loaded config. Throws config_error for schema
/// problems and contract_error for invalid inputs the library rejects.
CommandResult execute(const std::string& command, const Document& doc, int workers);

int exit_code(const std::string& status);

struct RunOptions {
  std::string config_path;
  int workers = 0;
  std::string out;  // empty: stdout
  std::string format = "json";
};

/// Full front door: load, execute, write the report; never throws.
int run(const std::string& command, const RunOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace subdrift::cli
