#include <cstdio>
#include <map>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "lightcone/errors.hpp"
#include "lightcone/run.hpp"

namespace {

// Flags mirror the config file keys one-to-one; everything arrives as a
// string and goes through the same parser as the file values.
constexpr std::pair<const char*, const char*> kKeys[] = {
    {"lattice", "chain:N, grid:AxB[xC], or infinite"},
    {"metric", "euclidean | graph"},
    {"alpha", "power-law coupling exponent"},
    {"j0", "coupling strength"},
    {"chi", "interaction cutoff (>= 1)"},
    {"interaction", "XX | ZZ | XY"},
    {"coupling_part", "full | short_range | long_range"},
    {"a_kind", "source Pauli: X | Y | Z"},
    {"b_kind", "probe Pauli: X | Y | Z"},
    {"source", "source site index"},
    {"probes", "probe sites, e.g. 1,3,5-7 (default: all but source)"},
    {"times", "time grid: lin:a:b:step, log:a:b:n, or comma list"},
    {"rs", "distance grid for bound/front, same forms as times"},
    {"variant", "short_range | hastings_koma | paper_fixed_chi | paper_optimized"},
    {"cutoff_mode", "scaling | numeric"},
    {"g", "reproducibility constant (0: fit on the reference geometry)"},
    {"epsilon", "front threshold, in (0, 2)"},
    {"fit_rmin", "front fit window lower edge (0: first r)"},
    {"fit_rmax", "front fit window upper edge (0: last r)"},
    {"betas", "ray exponents probed along r = t^beta (front)"},
    {"radius", "verify: kernel radius R"},
    {"ql_sites", "verify: quasi-locality chain length (2..14)"},
    {"ql_times", "verify: quasi-locality times"},
    {"method", "dense_expm | krylov"},
    {"outdir", "output directory"},
    {"workers", "parallel workers (0: core count)"},
    {"seed", "seed recorded with the run"},
    {"sweep_key", "scalar config key swept over sweep_values"},
    {"sweep_values", "sweep grid, same forms as times"},
    {"sweep_command", "command run at each sweep grid point"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"light-cone bounds for power-law interacting spin systems"};
  app.name("lightcone");
  std::string command;
  std::string config_path;
  app.add_option("command", command, "simulate | bound | front | verify | sweep")
      ->required();
  app.add_option("--config", config_path,
                 "JSON config file (flat key schema; flags override)");
  std::map<std::string, std::string> storage;
  for (const auto& [key, help] : kKeys)
    app.add_option("--" + std::string(key), storage[key], help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  std::map<std::string, std::string> flags;
  for (const auto& [key, help] : kKeys) {
    (void)help;
    if (app.count("--" + std::string(key)) > 0) flags[key] = storage[key];
  }

  try {
    const lightcone::RunConfig config =
        lightcone::parse_config(command, config_path, flags);
    const lightcone::RunResult result = lightcone::run_config(config);
    if (!result.run_dir.empty())
      std::printf("%s\n", result.run_dir.c_str());
    else
      std::printf("%s/index.json\n", config.outdir.c_str());
    return result.exit_code;
  } catch (const lightcone::invalid_input_error& e) {
    std::fprintf(stderr, "lightcone: %s\n", e.what());
    return 2;
  } catch (const lightcone::unsupported_regime_error& e) {
    std::fprintf(stderr, "lightcone: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lightcone: %s\n", e.what());
    return 1;
  }
}
