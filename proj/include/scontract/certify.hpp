#pragma once

// Sample-based estimates of contraction rates and noise bounds.
//
// The hypotheses quantify over the whole state space; here the supremum is
// taken over a deterministic low-discrepancy sample of a region, so every
// estimate is reported with is_global_claim = false unless a rate is
// supplied analytically.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scontract/state_space.hpp"

namespace scontract {

class EmptyRegion : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SamplingRegion {
  enum class Kind { kBox, kSphere, kPoints };

  Kind kind = Kind::kBox;
  // kBox
  StateVector lower;
  StateVector upper;
  // kSphere
  StateVector center;
  double radius = 0.0;
  // kPoints
  std::vector<StateVector> points;

  int sample_count = 1;
  std::uint64_t seed = 0;

  static SamplingRegion box(StateVector lower, StateVector upper, int sample_count,
                            std::uint64_t seed = 0);
  static SamplingRegion sphere(StateVector center, double radius, int sample_count,
                               std::uint64_t seed = 0);
  static SamplingRegion explicit_points(std::vector<StateVector> points);

  [[nodiscard]] int dimension() const;
  /// Deterministic samples. The first sample of a box or sphere is its
  /// center; the rest follow a Sobol sequence with a seed-derived shift, so
  /// a larger sample_count yields a superset of a smaller one.
  [[nodiscard]] std::vector<StateVector> samples() const;
};

/// A supremum over samples together with the sample that attains it.
struct SampledMax {
  double value = 0.0;
  StateVector argmax;
  int sample_count = 0;
};

struct ContractionCertificate {
  enum class Kind { kDiscrete, kContinuous };

  Kind kind = Kind::kDiscrete;
  /// β̂ for discrete certificates, signed λ̂ for continuous ones
  /// (positive = contracting).
  double rate = 0.0;
  double noise_bound = 0.0;
  Matrix metric;
  SamplingRegion region;
  bool is_global_claim = false;
  StateVector rate_argmax;
  StateVector noise_argmax;
};

/// Both halves of a hybrid certificate, at reset index k.
struct HybridCertificate {
  ContractionCertificate discrete;
  ContractionCertificate continuous;
  double dwell_time = 0.0;
};

/// β̂ = max over samples of λ_max(FᵀF), F = Θ_{k+1} ∂f/∂x Θ_k⁻¹.
SampledMax estimate_discrete_rate(const DiscreteMapSystem& system, const Matrix& theta_k,
                                  const Matrix& theta_next, const SamplingRegion& region,
                                  long k = 0, int workers = 1);

/// λ̂ = −max over samples of λ_max(((dΘ/dt + Θ ∂f/∂a) Θ⁻¹)_s) at time t.
/// The returned argmax is the sample attaining the largest symmetric-part
/// eigenvalue (the least contracting point).
SampledMax estimate_continuous_rate(const ContinuousSDESystem& system, const MetricSpec& metric,
                                    const SamplingRegion& region, double t = 0.0,
                                    int workers = 1);

/// max over samples of tr(σᵀ M σ Q).
SampledMax noise_bound_discrete(const DiscreteMapSystem& system, const Matrix& metric_next,
                                const SamplingRegion& region, long k = 0, int workers = 1);

/// max over samples of tr(σ_cᵀ M σ_c).
SampledMax noise_bound_continuous(const ContinuousSDESystem& system, const Matrix& metric,
                                  const SamplingRegion& region, double t = 0.0,
                                  int workers = 1);

ContractionCertificate certify_discrete(const DiscreteMapSystem& system, const MetricSpec& metric,
                                        const SamplingRegion& region, long k = 0);
ContractionCertificate certify_continuous(const ContinuousSDESystem& system,
                                          const MetricSpec& metric, const SamplingRegion& region,
                                          double t = 0.0);

/// Discrete part at reset k in the metrics (M(kτ⁻), M(kτ⁺)); continuous part
/// as the worst case over `time_samples` interior instants of ]kτ,(k+1)τ[.
HybridCertificate certify_hybrid(const HybridSystem& system, const MetricSpec& metric,
                                 const SamplingRegion& region, long k = 0, int time_samples = 9);

/// Replaces the sampled rate by an analytically known one.
ContractionCertificate with_analytic_rate(ContractionCertificate cert, double rate);

[[nodiscard]] std::string to_string(ContractionCertificate::Kind kind);
[[nodiscard]] std::string to_string(SamplingRegion::Kind kind);

}  // namespace scontract
