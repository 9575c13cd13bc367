#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "erc/problems.hpp"

namespace erc {

/// Config-file violation (unknown key, bad type, missing field).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double threshold = 0.0;
};

/// In-memory result of one experiment run. exit_code follows the CLI
/// contract: 0 all embedded checks pass, 1 a check failed (first failure in
/// failed_check).
struct RunOutcome {
    int exit_code = 0;
    nlohmann::ordered_json report;
    std::string csv;
    std::vector<CheckResult> checks;
    std::string failed_check;
};

struct RunOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

/// Validate (fail-closed: unknown keys rejected) and execute a config.
/// Throws ConfigError on schema violations and NumericError on numeric
/// failures; check failures are reported through the outcome instead.
RunOutcome run_experiment(const nlohmann::json& config, const RunOverrides& overrides = {});

/// Full CLI `run`: parse the file, execute, write report.json and
/// iterations.csv into the output directory. Returns the process exit code
/// (0 ok, 1 check failed, 2 config error, 3 numeric failure) and prints
/// diagnostics to stderr for nonzero codes.
int run_from_file(const std::string& config_path, const RunOverrides& overrides = {});

/// Text listing of a problem registry with audit status (one line each).
std::string list_problems_text(std::span<const ProblemSpec> problems);

/// Shortest round-trip decimal formatting used for all CSV numbers.
std::string fmt_double(double v);

} // namespace erc
