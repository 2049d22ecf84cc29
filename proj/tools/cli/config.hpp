#pragma once

// Experiment configuration shared by all subcommands. A config is parsed
// from JSON and/or flags, then resolved: per-system defaults are filled in
// and values are range-checked, so a printed config re-parses to the same
// run.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "scontract/serialize.hpp"
#include "scontract/simulate.hpp"

namespace scontract::cli {

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegionConfig {
  std::string kind = "box";  ///< "box" (centred at 0) or "sphere"
  double extent = 2.0;       ///< half width or radius
  int samples = 1024;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string system = "ou1d";
  std::map<std::string, double> params;
  std::optional<Matrix> metric;

  long ensemble = 0;
  double horizon = 0.0;
  double h = 0.0;
  std::uint64_t seed = 1;
  PairingMode pairing = PairingMode::kTwoNoisy;
  int interior_samples = -1;
  long record_stride = 0;
  std::optional<InitialCondition> initial;

  RegionConfig region;
  bool noise_free = false;
  int workers = 1;
  std::string out_dir;
};

/// Parses a config object; unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

/// Known parameter names and defaults of a built-in system.
const std::map<std::string, double>& default_params(const std::string& system);
bool is_builtin(const std::string& system);
std::string builtin_list();

/// Fills every unset field from the system defaults and validates ranges.
/// Idempotent.
ExperimentConfig resolve(ExperimentConfig config);

/// State dimension of the named system.
int system_dimension(const std::string& system);

}  // namespace scontract::cli
