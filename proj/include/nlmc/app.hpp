#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlmc/feynman_kac.hpp"
#include "nlmc/lab.hpp"
#include "nlmc/mckean_vlasov.hpp"

namespace nlmc::app {

/// Malformed, missing or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Version of the CSV column layouts written by the commands.
inline constexpr int kCsvSchemaVersion = 1;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

/// An experiment config loaded from TOML, with the model objects it was built from.
struct LoadedExperiment {
  ExperimentConfig cfg;
  std::string kernel_type;
  std::optional<MvParams> mv;
  std::optional<FkModel> fk;
  /// The parsed file as JSON (echoed into sidecars).
  std::string echo_json;
};

/// Parses and schema-checks the [kernel], [initial], [run], [cost] and [bound] tables.
/// Throws ConfigError naming the file and the offending key.
LoadedExperiment load_experiment(const std::string& path, const Overrides& overrides = {});

/// Subcommands: rate, marginal, moments, contraction, filter, tensor, bounds.
std::vector<std::string> command_names();

/// Runs one subcommand, writing <command>.csv and <command>.json into out_dir and a
/// summary to `out`. Returns the exit code; errors are reported on `err`.
int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                const std::string& out_dir, std::ostream& out, std::ostream& err);

}  // namespace nlmc::app
