#pragma once

// Trajectory generation for discrete, continuous (Euler–Maruyama) and
// hybrid resetting systems, and Monte Carlo estimation of the mean-square
// metric distance between pairs of trajectories driven by independent noise.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scontract/bounds.hpp"
#include "scontract/state_space.hpp"

namespace scontract {

/// Raised when a trajectory leaves the finite numbers.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(const std::string& what, long index)
      : std::runtime_error(what), index_(index) {}
  [[nodiscard]] long index() const { return index_; }

 private:
  long index_;
};

/// A reproducible stream of Gaussian draws. A silent stream returns zeros
/// and is used for the noise-free member of a pair.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t pair_index, std::uint64_t member_index,
              std::uint64_t domain = 0);
  static NoiseStream silent();

  [[nodiscard]] bool is_silent() const { return silent_; }
  double standard_normal();
  Eigen::VectorXd standard_normal(Eigen::Index d);
  /// Uniform draw on [lo, hi).
  double uniform(double lo, double hi);

 private:
  NoiseStream() = default;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  bool silent_ = false;
};

/// Noise stream for member `member_index` of pair `pair_index`. Distinct
/// (pair, member) give statistically independent streams, and the stream
/// depends on nothing else (not on execution order or worker count).
NoiseStream derive_stream(std::uint64_t master_seed, std::uint64_t pair_index,
                          std::uint64_t member_index);

/// f(x, k) + σ(x, k) w with w ~ N(0, Q) drawn from `noise`.
StateVector step_discrete(const DiscreteMapSystem& system, const StateVector& x, long k,
                          NoiseStream& noise);

struct SdePath {
  std::vector<double> times;
  std::vector<StateVector> states;
};

/// Euler–Maruyama on [t0, t1] with step h; (t1 − t0)/h must be an integer.
SdePath integrate_sde(const ContinuousSDESystem& system, const StateVector& x0, double t0,
                      double t1, double h, NoiseStream& noise);

/// In-place Euler–Maruyama over `steps` steps starting at t0.
void advance_sde(const ContinuousSDESystem& system, StateVector& x, double t0, long steps,
                 double h, NoiseStream& noise);

enum class SampleSide { kPre, kPost, kInterior };
[[nodiscard]] std::string to_string(SampleSide side);
[[nodiscard]] Side metric_side(SampleSide side);

struct TrajectorySample {
  double time = 0.0;
  SampleSide side = SampleSide::kInterior;
  StateVector state;
};

/// Resets at t = 0, τ, 2τ, ..., T (T a multiple of τ); SDE integration with
/// step h in between. Every reset records its pre- and post-reset values;
/// `interior_samples` evenly spaced states per dwell interval are recorded
/// as well.
std::vector<TrajectorySample> run_hybrid(const HybridSystem& system, const StateVector& x0,
                                         double horizon, double h, NoiseStream& noise,
                                         int interior_samples = 0);

enum class PairingMode { kTwoNoisy, kNoisyVsNoiseFree };
[[nodiscard]] std::string to_string(PairingMode mode);
[[nodiscard]] PairingMode pairing_mode_from_string(const std::string& name);

struct InitialCondition {
  enum class Kind { kPointMass, kBoxUniform };
  Kind kind = Kind::kPointMass;
  StateVector a0;
  StateVector b0;
  StateVector lower;
  StateVector upper;

  static InitialCondition point(StateVector a0, StateVector b0);
  static InitialCondition box(StateVector lower, StateVector upper);
};

struct EnsembleConfig {
  long pair_count = 1;
  /// Step count for discrete systems, time horizon otherwise.
  double horizon = 1.0;
  /// Euler–Maruyama step (continuous and hybrid systems).
  double sde_step = 0.01;
  PairingMode pairing = PairingMode::kTwoNoisy;
  std::uint64_t master_seed = 0;
  InitialCondition initial;
  /// Continuous systems: record every `record_stride` SDE steps.
  long record_stride = 1;
  /// Hybrid systems: interior samples per dwell interval.
  int interior_samples = 0;
  /// Worker threads; results do not depend on it.
  int workers = 1;
};

struct GridPoint {
  double time = 0.0;
  SampleSide side = SampleSide::kPost;
  double mean = 0.0;
  double std_error = 0.0;
  long n_alive = 0;
};

struct PairFailure {
  long pair_index = 0;
  long grid_index = 0;
  double time = 0.0;
};

struct EnsembleStats {
  std::vector<GridPoint> grid;
  long pair_count = 0;
  std::vector<PairFailure> failures;

  /// CSV with columns time, side, mean_sq_dist, stderr, n_alive.
  void write_csv(std::ostream& os) const;
  [[nodiscard]] std::string to_csv() const;
};

/// Simulates `pair_count` independent pairs and returns mean and standard
/// error (sample std/√n) of the squared metric distance at every grid time.
EnsembleStats run_pair_ensemble(const SystemModel& system, const EnsembleConfig& config,
                                const MetricSpec& metric);

/// Throws std::invalid_argument describing the first problem with `config`
/// for `system`.
void validate_ensemble_config(const SystemModel& system, const EnsembleConfig& config);

struct BoundCheck {
  std::vector<double> bound;
  std::vector<bool> pass;
  bool all_pass = true;
  /// max over grid of (mean − bound)/stderr (−inf when every point is
  /// strictly below with zero stderr).
  double worst_excess_in_stderr = -std::numeric_limits<double>::infinity();
};

/// A grid point passes when mean − sigmas·stderr ≤ bound, i.e. the bound is
/// not exceeded by more than `sigmas` standard errors.
BoundCheck check_against_bound(const EnsembleStats& stats, const BoundReport& report,
                               double sigmas = 3.0);

}  // namespace scontract
