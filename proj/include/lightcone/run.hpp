#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightcone/bounds.hpp"
#include "lightcone/dynamics.hpp"
#include "lightcone/front.hpp"
#include "lightcone/model.hpp"

namespace lightcone {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Command { simulate, bound, front, verify, sweep };
Command parse_command(const std::string& s);
std::string command_name(Command c);

// Flat, fully-defaulted run configuration. Grid-like keys keep the exact
// input string next to the parsed values so the canonical serialization
// round-trips what the user wrote.
struct RunConfig {
  Command command = Command::simulate;

  std::string lattice = "";  // "chain:N", "grid:AxB[xC]", or "infinite"
  Metric metric = Metric::euclidean;
  double alpha = 0.0;
  double j0 = 1.0;
  double chi = 1.0;
  Interaction interaction = Interaction::XX;
  CouplingPart part = CouplingPart::full;
  PauliKind a_kind = PauliKind::Z;
  PauliKind b_kind = PauliKind::Z;
  int source = 0;
  std::string probes_spec = "";  // empty: every site except the source
  std::vector<int> probes;
  std::string times_spec = "";
  std::vector<double> times;
  std::string rs_spec = "";
  std::vector<double> rs;
  BoundVariant variant = BoundVariant::paper_optimized;
  CutoffMode mode = CutoffMode::scaling;
  double g = 0.0;  // 0: fit on the reference geometry for this dimension
  double epsilon = kDefaultFrontEpsilon;
  double fit_rmin = 0.0;  // 0: first r of the grid
  double fit_rmax = 0.0;  // 0: last r of the grid
  std::string betas_spec = "";
  std::vector<double> betas;
  double radius = 5.0;  // verify: kernel radius R
  int ql_sites = 8;
  std::string ql_times_spec = "0.1,0.2,0.5";
  std::vector<double> ql_times;
  EvolveMethod method = EvolveMethod::dense_expm;
  std::string outdir = "runs";
  int workers = 0;  // 0: hardware concurrency
  long long seed = 2026;
  std::string sweep_key = "";
  std::string sweep_values_spec = "";
  std::vector<double> sweep_values;
  std::string sweep_command = "";
};

// Grid strings: "lin:start:stop:step" (inclusive), "log:lo:hi:count", or an
// explicit comma list "0.1,0.2,0.5".
std::vector<double> parse_grid(const std::string& spec);
// Integer lists: comma-separated entries, each a value or a "lo-hi" range.
std::vector<int> parse_int_list(const std::string& spec);

// Builds the effective config: documented defaults, then file keys, then flag
// overrides, then validation for the requested command. Unknown keys in
// either source and any out-of-domain value throw invalid_input_error naming
// the key. `config_path` may be empty when the flags are complete.
RunConfig parse_config(const std::string& command,
                       const std::string& config_path,
                       const std::map<std::string, std::string>& flags);

// Full effective key map (sorted by key, nlohmann object order).
nlohmann::json canonical_json(const RunConfig& config);
// FNV-1a 64 over the canonical map minus execution-only keys (workers,
// outdir): 16 lowercase hex characters. Two runs that compute the same thing
// share a hash no matter where or how parallel they run.
std::string config_hash(const nlohmann::json& canonical);

struct RunResult {
  int exit_code = 0;       // 0 ok, 1 runtime/assertion failure
  std::string run_dir;     // directory holding this run's files ("" for sweep)
  nlohmann::json record;   // record.json (single runs) or index.json (sweep)
};

// Executes the command and writes its files under config.outdir. Throws
// invalid_input_error / unsupported_regime_error for bad requests (exit 2 at
// the CLI) and other lightcone errors for runtime failures (exit 1); verify
// assertion failures and partial sweep failures return exit_code 1 instead
// of throwing, with the report written.
RunResult run_config(const RunConfig& config);

}  // namespace lightcone
