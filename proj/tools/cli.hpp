#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qsolver/map_gate.hpp"
#include "qsolver/model.hpp"
#include "qsolver/sim.hpp"

// vendored single-header nlohmann/json
#include "json.hpp"

namespace qsolver::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// exit codes: 0 ok, 2 validation, 3 non-convergence, 4 comparison failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitCompareFailed = 4;

enum class OutputFormat { json_fmt, csv_fmt };

struct GlobalOptions {
  std::string config_path;
  OutputFormat format = OutputFormat::json_fmt;
  std::string out_path;  // empty = stdout
  std::optional<std::uint64_t> seed_override;
  std::optional<double> eps_override;
  std::optional<int> max_n_override;
  bool quiet = false;
};

struct SolveOptions {
  int pmf_k = 64;
  int moments = 4;
};

struct BusyCycleOptions {
  int theta_terms = 10;
};

struct BatchOptions {
  int pmf_k = 64;
};

struct MapCheckConfig {
  Mat c, d;
  DistSpec service = DistSpec::exponential(1.0);
  DistSpec vacation = DistSpec::exponential(1.0);
  std::vector<double> q0;      // defaults to uniform phases
  std::vector<double> z_grid;  // defaults to {0, 0.1, .., 0.9}
};

struct RunConfig {
  std::optional<ModelParams> model;
  TruncationPolicy truncation;
  SolveOptions solve;
  BusyCycleOptions busycycle;
  BatchOptions batch;
  std::optional<SimConfig> sim;  // sim section merged with model
  std::optional<MapCheckConfig> map;
  double compare_sigmas = 3.0;
};

/// Parse + strict-validate a config document (unknown keys rejected).
/// QSOLVER_SEED and the CLI flags are applied afterwards via GlobalOptions.
RunConfig parse_config(const json& doc);
json load_config_file(const std::string& path);

DistSpec parse_dist(const json& j);
json dist_to_json(const DistSpec& d);

/// Validates an emitted report against the published report schema
/// (schema_version, kind, kind-specific required fields). Throws on failure.
void validate_report(const json& report);

/// Long-format CSV (name,k,value) with RFC-4180 quoting.
std::string report_to_csv(const json& report);

int cmd_solve(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
              std::ostream& err);
int cmd_simulate(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                 std::ostream& err);
int cmd_compare(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                std::ostream& err);
int cmd_busycycle(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                  std::ostream& err);
int cmd_batch(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
              std::ostream& err);
int cmd_mapcheck(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                 std::ostream& err);

/// Shared entry used by main() and the CLI tests.
int run_command(const std::string& command, const GlobalOptions& opt,
                std::ostream& out, std::ostream& err);

}  // namespace qsolver::cli
