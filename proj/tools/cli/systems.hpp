#pragma once

// Built-in systems of the command-line tool and the certificate constants
// they feed into the bounds module.

#include <optional>

#include "config.hpp"
#include "scontract/bounds.hpp"
#include "scontract/certify.hpp"

namespace scontract::cli {

struct BuiltSystem {
  SystemModel model;
  MetricSpec metric = MetricSpec::identity(1);
};

/// Constants extracted from certificates. kContinuous systems have no reset
/// and therefore no bound in the bounds module.
struct Constants {
  enum class Kind { kDiscrete, kContinuous, kHybrid };
  Kind kind = Kind::kDiscrete;
  double beta = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double c_d = 0.0;
  double c_c = 0.0;
  double tau = 0.0;
};

Json to_json(const Constants& k);
/// Reads the "constants" object written by the certify command.
Constants constants_from_json(const Json& j);

/// Expects a resolved config.
BuiltSystem build_system(const ExperimentConfig& config);

struct CertifyResult {
  Json certificate;
  Constants constants;
};

CertifyResult certify_builtin(const ExperimentConfig& config);

/// E d²_M(a₀, b₀) for the configured initial condition.
double initial_ms_distance(const InitialCondition& initial, const Matrix& M);

/// Mean-square bound for the constants; nullopt for continuous-only systems.
std::optional<BoundReport> bound_for(const Constants& k, double e0, bool noise_free,
                                     bool point_mass_initial);

}  // namespace scontract::cli
