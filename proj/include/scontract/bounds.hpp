#pragma once

// Closed-form mean-square bounds for discrete and hybrid stochastic
// contracting systems, and the regime classifier for hybrid systems.
//
// Sign convention: λ is the contraction rate of the continuous part, so
// λ > 0 contracts, λ = 0 is indifferent and λ < 0 expands.

#include <stdexcept>
#include <string>
#include <vector>

#include "scontract/state_space.hpp"

namespace scontract {

class BoundRangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BetaOutOfRange : public BoundRangeError {
 public:
  using BoundRangeError::BoundRangeError;
};

enum class BoundTag {
  kThm1Distance,
  kThm1MeanSquare,
  kThm2,
  kThm3,
  kThm4Bounded,
  kThm4LinearGrowth,
  kThm4Unbounded,
  kCorollaryNoiseFree,
};

[[nodiscard]] std::string to_string(BoundTag tag);
/// Inverse of to_string; throws std::invalid_argument for unknown names.
[[nodiscard]] BoundTag bound_tag_from_string(const std::string& name);

/// Echo of the constants a report was computed from. Unused fields stay 0.
struct BoundInputs {
  double beta = 0.0;
  double lambda = 0.0;
  double c = 0.0;
  double c_d = 0.0;
  double c_c = 0.0;
  double tau = 0.0;
  double e0 = 0.0;
  bool hybrid = false;
  /// Discrete only: initial distance is a point mass, enabling the
  /// [E₀ − asymptote]⁺ refinement of the transient term.
  bool point_mass_initial = false;
};

struct BoundReport {
  BoundTag tag = BoundTag::kThm1MeanSquare;
  /// Stated asymptotic constant (2C/(1−β), C₁, C₂, C₃, ...); +inf when no
  /// finite bound exists.
  double asymptotic_bound = 0.0;
  /// Geometric factor multiplying the initial term per step (discrete) or
  /// per dwell interval (hybrid). 1 for the divergent regimes.
  double transient_rate_per_step = 1.0;
  /// Per-dwell growth factor r₂ = βe^{2|λ|τ} of the post-reset recursion
  /// for expanding continuous parts; equals transient_rate_per_step otherwise.
  double growth_factor = 1.0;
  /// Largest value the stationary bound takes over a dwell interval. For
  /// hybrid regimes with λ ≤ 0 the stated constant covers post-reset
  /// instants only and the bound grows between resets.
  double sup_bound = 0.0;
  bool noise_free = false;
  BoundInputs inputs;
  std::vector<std::string> warnings;

  [[nodiscard]] bool is_bounded() const;
  /// Discrete bound after k steps.
  [[nodiscard]] double at_step(long k) const;
  /// Hybrid bound at time t. At a reset instant kτ, Side::kLeft is the
  /// pre-reset value and Side::kRight the post-reset one.
  [[nodiscard]] double at_time(double t, Side side) const;
};

/// E d(a_k, b_k) ≤ 2√C/(1−√β) + √β^k E₀.
BoundReport discrete_distance_bound(double beta, double c, double e0_distance,
                                    bool point_mass_initial = false);

/// E‖a_k − b_k‖² ≤ 2C/(1−β) + β^k E₀ (state-independent metrics).
BoundReport discrete_ms_bound(double beta, double c, double e0_ms,
                              bool point_mass_initial = false);

/// Contracting continuous part (λ > 0): C₁ + E₀ β^⌊t/τ⌋ e^{−2λt}.
BoundReport hybrid_bound_contracting(double beta, double lambda, double c_d, double c_c,
                                     double tau, double e0_ms);

/// Indifferent continuous part (λ = 0): C₂ + E₀ β^⌊t/τ⌋ after each reset.
BoundReport hybrid_bound_neutral(double beta, double c_d, double c_c, double tau, double e0_ms);

/// Expanding continuous part (λ < 0). Bounded only when β < e^{−2|λ|τ}.
BoundReport hybrid_bound_expanding(double beta, double lambda, double c_d, double c_c,
                                   double tau, double e0_ms);

/// Dispatches on the sign of λ.
BoundReport hybrid_bound(double beta, double lambda, double c_d, double c_c, double tau,
                         double e0_ms);

/// Re-evaluates a report for a noisy trajectory compared with a noise-free
/// one: noise constants are halved (mean-square and hybrid forms) and the
/// distance form keeps a single noise term.
BoundReport apply_noisefree_corollary(const BoundReport& report);

/// λ > 0 → thm2, λ = 0 → thm3, λ < 0 → one of the three thm4 regimes.
/// The equality β = e^{−2|λ|τ} is detected with relative tolerance 1e−12.
BoundTag classify_regime(double beta, double lambda, double tau);

}  // namespace scontract
