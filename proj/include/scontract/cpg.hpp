#pragma once

// Three Andronov–Hopf oscillators in a ring, coupled at every reset instant
// through a 2π/3 rotation with noisy measurements of the neighbour.
//
// The phase-locked set is M = {(R²x, Rx, x)}. Projecting onto M⊥ with V
// gives a reduced hybrid system whose distance to 0 measures phase locking:
// δ = Σ‖Rx_{i+1} − x_i‖² = 3‖Vx̂‖².

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scontract/bounds.hpp"
#include "scontract/certify.hpp"
#include "scontract/simulate.hpp"
#include "scontract/state_space.hpp"

namespace scontract::cpg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// The synchronisation condition 3γ²−3γ+1 < e^{−2τ} does not hold.
class ConditionViolated : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CPGParams {
  double gamma = 0.2;
  double tau = 0.1;
  double sigma_c = 0.1;
  double sigma_d = 0.05;
  /// Euler–Maruyama step; 0 selects τ/100.
  double h = 0.0;

  [[nodiscard]] double step() const { return h > 0.0 ? h : tau / 100.0; }
  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

struct CPGState {
  std::array<Vec2, 3> x{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};

  [[nodiscard]] Vec6 stacked() const;
  static CPGState from_stacked(const Eigen::Ref<const Eigen::VectorXd>& v);
  /// (R²p, Rp, p), a point of the phase-locked set.
  static CPGState on_manifold(const Vec2& p);
};

/// f(x, y) = (x − y − x³ − xy², x + y − y³ − yx²).
Vec2 hopf_drift(const Vec2& p);
Mat2 hopf_jacobian(const Vec2& p);
/// Largest eigenvalue of the symmetric part of hopf_jacobian: 1 − x² − y².
double hopf_sym_max(const Vec2& p);

/// Rotation by 2π/3.
Mat2 rotation_matrix();

/// x_i ← x_i + γ(R(x_{i+1} + (σ_d/√2) w_i) − x_i), all i at once, x₄ = x₁.
CPGState coupling_reset(const CPGState& state, double gamma, double sigma_d,
                        const std::array<Vec2, 3>& w);
/// As above with w_1, w_2, w_3 drawn in that order from `noise`.
CPGState coupling_reset(const CPGState& state, double gamma, double sigma_d, NoiseStream& noise);

/// Deterministic part of the reset as a 6×6 matrix L: (1−γ)I₂ on the
/// diagonal blocks, γR on the cyclic super-diagonal.
Mat6 coupling_matrix(double gamma);

struct ProjectionPair {
  Eigen::Matrix<double, 4, 6> V;
  Eigen::Matrix<double, 2, 6> U;
};

/// U spans M; V spans M⊥. The complement is obtained by Gram–Schmidt on a
/// fixed spanning sequence: e₁..e₆ for complement_seed = 0, a seeded random
/// Gaussian basis otherwise. Any choice gives the same ‖Vx̂‖.
ProjectionPair build_projections(std::uint64_t complement_seed = 0);

/// β = 3γ² − 3γ + 1.
double reduced_discrete_factor(double gamma);
/// Eigenvalues (ascending) of (VLVᵀ)ᵀ(VLVᵀ), which all equal β.
Eigen::Vector4d reduced_discrete_spectrum(double gamma, const ProjectionPair& proj);

/// 3γ² − 3γ + 1 < e^{−2τ}.
bool sync_condition(double gamma, double tau);

/// Σ‖Rx_{i+1} − x_i‖² with x₄ = x₁.
double phase_locking_delta(const CPGState& state);

struct DeltaBound {
  double beta = 0.0;
  /// Literal evaluation of the published closed form.
  double closed_form = 0.0;
  /// 3 × the noise-free hybrid asymptote computed from (β, |λ| = 1,
  /// C_d = 2γ²σ_d², C_c = 2σ_c²) through the bounds module.
  double pipeline = 0.0;
  /// 3 × the largest value of the same bound over a dwell interval.
  double pipeline_sup = 0.0;
  /// The value printed with the original figure, kept for comparison.
  double caption_value = 0.446;
  /// closed_form and caption_value differ by more than 5%.
  bool caption_discrepancy = false;
  BoundReport report;
};

/// Throws ConditionViolated when βe^{2τ} ≥ 1.
DeltaBound theoretical_delta_bound(const CPGParams& params);

/// Reduced reset on ŷ ∈ R⁴: ŷ ↦ VLVᵀŷ + (γσ_d/√2) w.
DiscreteMapSystem reduced_reset_system(const CPGParams& params, const ProjectionPair& proj);
/// Reduced diffusion (σ_c/√2) I₄ on ŷ with the 6-d drift left implicit.
/// Only used for the noise constant; the drift of ŷ depends on the U-part
/// of the state and is certified by reduced_continuous_rate.
ContinuousSDESystem reduced_noise_system(const CPGParams& params);
/// max over sampled x̂ ∈ R⁶ of λ_max((V Ĵ(x̂) Vᵀ)_s), Ĵ the block-diagonal
/// Hopf Jacobian. Returned as a sampled max; the contraction rate is −value.
SampledMax reduced_continuous_rate(const ProjectionPair& proj, const SamplingRegion& region,
                                   int workers = 1);

/// The full 6-d hybrid system, for the generic simulator and certifier.
HybridSystem make_cpg_system(const CPGParams& params);

struct CPGRunOptions {
  long runs = 200;
  double horizon = 50.0;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Initial states uniform on [lower, upper]⁶.
  double init_lower = -1.0;
  double init_upper = 1.0;
  /// Trace and aligned rows come from run 0 up to trace_until; delta rows
  /// from runs 0 .. delta_runs−1 over the whole horizon.
  double trace_until = 10.0;
  long delta_runs = 5;
  /// Trace, delta and steady-window samples every this many SDE steps.
  long sample_stride = 10;
  /// Steady-state window is the last fraction of the horizon.
  double steady_fraction = 0.2;
  /// Start every run on M instead of the box (for invariance checks).
  bool start_on_manifold = false;
};

struct DeltaPoint {
  double time = 0.0;
  SampleSide side = SampleSide::kPost;
  double mean = 0.0;
  double std_error = 0.0;
};

struct TraceRow {
  double time;
  int oscillator;
  double x;
  double y;
};

struct AlignedRow {
  double time;
  double a1;  ///< x₁·e₁
  double a2;  ///< (Rx₂)·e₁
  double a3;  ///< (R²x₃)·e₁
};

struct DeltaRow {
  double time;
  long run;
  double delta;
};

struct CPGExperiment {
  CPGParams params;
  CPGRunOptions options;
  double beta = 0.0;
  bool sync = false;
  /// Present when the synchronisation condition holds.
  std::optional<DeltaBound> bound;
  /// E[δ] at every reset (pre and post) across runs.
  std::vector<DeltaPoint> delta_series;
  /// Mean over runs of each run's time-averaged δ in the steady window
  /// (sampled every sample_stride steps), with its standard error.
  double steady_mean = 0.0;
  double steady_std_error = 0.0;
  /// 3 × the largest value over the steady window of the noise-free hybrid
  /// bound started from the empirical E[δ(0⁻)]/3. Equals pipeline_sup up to
  /// the decayed transient; NaN without a bound.
  double steady_window_bound = std::numeric_limits<double>::quiet_NaN();
  /// Largest ‖x_i‖ seen on any recorded sample of any run.
  double max_radius = 0.0;
  std::vector<TraceRow> trace;
  std::vector<AlignedRow> aligned;
  std::vector<DeltaRow> delta_rows;

  void write_trace_csv(std::ostream& os) const;
  void write_aligned_csv(std::ostream& os) const;
  void write_delta_csv(std::ostream& os) const;
};

/// Simulates `options.runs` independent runs of the hybrid CPG. Run r uses
/// derive_stream(seed, r, 0) for all noise, in the same draw order as
/// run_hybrid on make_cpg_system, and NoiseStream(seed, r, 0, 1) for its
/// initial state. Results do not depend on options.workers.
CPGExperiment run_cpg_experiment(const CPGParams& params, const CPGRunOptions& options);

}  // namespace scontract::cpg
