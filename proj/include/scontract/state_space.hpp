#pragma once

// Domain model: metrics, Gaussian noise, and the three system classes
// (discrete maps, continuous SDEs, hybrid resetting compositions).

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace scontract {

using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Which one-sided limit of a piecewise-smooth quantity is requested at a
/// reset instant. Away from reset instants both sides coincide.
enum class Side { kLeft, kRight };

/// Upper-triangular Θ with ΘᵀΘ = M. Throws NotPositiveDefinite when M is not
/// symmetric positive definite (a pivot falls below tolerance).
Matrix factor_metric(const Matrix& M);

/// Square root S of a symmetric PSD matrix (S Sᵀ = Q). Negative eigenvalues
/// down to -1e-12·‖Q‖ are clamped to zero, so rank-deficient covariances are
/// accepted.
Matrix psd_sqrt(const Matrix& Q);

[[nodiscard]] bool is_symmetric(const Matrix& A, double rel_tol = 1e-12);

/// A uniformly positive definite metric M(t) = Θ(t)ᵀΘ(t).
///
/// Constant metrics have one Θ. Scheduled metrics deform a constant base
/// factor within each dwell interval: Θ(t) = D(s)·Θ_base with s = t − kτ the
/// time since the last reset. The left limit at kτ evaluates the previous
/// interval at s = τ, the right limit evaluates at s = 0, so M(kτ⁻) and
/// M(kτ⁺) may differ.
class MetricSpec {
 public:
  using Deformation = std::function<Matrix(double)>;

  static MetricSpec identity(int n);
  static MetricSpec constant(const Matrix& M);
  /// `deformation(s)` and its derivative `deformation_rate(s)` are evaluated
  /// for s in [0, period]. α is estimated on a 101-point grid of s.
  static MetricSpec scheduled(const Matrix& base, Deformation deformation,
                              Deformation deformation_rate, double period);

  [[nodiscard]] bool is_constant() const { return !deformation_; }
  [[nodiscard]] int dimension() const { return static_cast<int>(base_factor_.rows()); }
  [[nodiscard]] double period() const { return period_; }

  [[nodiscard]] Matrix value(double t, Side side = Side::kRight) const;
  [[nodiscard]] Matrix factor(double t, Side side = Side::kRight) const;
  /// dΘ/dt within the interval containing t (zero for constant metrics).
  [[nodiscard]] Matrix factor_rate(double t, Side side = Side::kRight) const;
  /// Recorded uniform lower bound α on λ_min(M(t)).
  [[nodiscard]] double uniform_lower_bound() const { return alpha_; }

 private:
  MetricSpec() = default;
  [[nodiscard]] double local_time(double t, Side side) const;

  Matrix base_factor_;
  Deformation deformation_;
  Deformation deformation_rate_;
  double period_ = 0.0;
  double alpha_ = 0.0;
};

/// w ~ N(0, Q). `sqrt` caches a factor S with S Sᵀ = Q for sampling.
struct GaussianNoiseSpec {
  Matrix covariance;
  Matrix sqrt;

  static GaussianNoiseSpec from_covariance(const Matrix& Q);
  static GaussianNoiseSpec standard(int d) { return from_covariance(Matrix::Identity(d, d)); }
  [[nodiscard]] int dimension() const { return static_cast<int>(covariance.rows()); }
};

/// a_{k+1} = f(a_k, k) + σ(a_k, k) w_{k+1}.
struct DiscreteMapSystem {
  using Map = std::function<StateVector(const StateVector&, long)>;
  using Gain = std::function<Matrix(const StateVector&, long)>;
  using Jacobian = std::function<Matrix(const StateVector&, long)>;

  int dimension = 0;
  Map map;
  Gain noise_gain;
  GaussianNoiseSpec noise;
  /// Optional analytic ∂f/∂x; central differences are used otherwise.
  Jacobian jacobian;

  [[nodiscard]] Matrix jacobian_at(const StateVector& x, long k) const;
};

/// da = f_c(a, t) dt + σ_c(a, t) dW with W a standard d-dimensional Wiener process.
struct ContinuousSDESystem {
  using Drift = std::function<StateVector(const StateVector&, double)>;
  using Diffusion = std::function<Matrix(const StateVector&, double)>;
  using Jacobian = std::function<Matrix(const StateVector&, double)>;

  int dimension = 0;
  int noise_dimension = 0;
  Drift drift;
  Diffusion diffusion;
  Jacobian jacobian;

  [[nodiscard]] Matrix jacobian_at(const StateVector& x, double t) const;
};

/// Continuous evolution on ]kτ,(k+1)τ[, reset applied at every t = kτ, k ≥ 0.
struct HybridSystem {
  ContinuousSDESystem continuous;
  DiscreteMapSystem reset;
  double dwell_time = 0.0;
};

using SystemModel = std::variant<DiscreteMapSystem, ContinuousSDESystem, HybridSystem>;

struct Violation {
  std::string field;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Structural checks: dimensions, covariance, dwell time. Evaluates the
/// system callables once at the origin (t = 0, k = 0) to check shapes.
/// Never throws; callables that throw are reported as violations.
std::vector<Violation> validate_system(const SystemModel& system);

/// Central-difference Jacobian with step max(1e-6, 1e-6·‖x‖).
Matrix finite_difference_jacobian(const std::function<StateVector(const StateVector&)>& f,
                                  const StateVector& x);

}  // namespace scontract
