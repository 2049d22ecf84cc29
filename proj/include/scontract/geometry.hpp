#pragma once

// Metric distances, generalized Jacobians and curve lengths for
// state-independent (quadratic-form) metrics.

#include <functional>
#include <stdexcept>
#include <vector>

#include "scontract/state_space.hpp"

namespace scontract {

class SingularFactor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using VectorMap = std::function<StateVector(const StateVector&)>;
using JacobianMap = std::function<Matrix(const StateVector&)>;

/// Points of a curve γ: [0,1] → Rⁿ at strictly increasing parameters.
class SampledCurve {
 public:
  SampledCurve(std::vector<StateVector> points, std::vector<double> parameters);
  /// Uniform partition of [0,1] with `count` points of `curve`.
  static SampledCurve uniform(const std::function<StateVector(double)>& curve, int count);

  [[nodiscard]] const std::vector<StateVector>& points() const { return points_; }
  [[nodiscard]] const std::vector<double>& parameters() const { return parameters_; }
  /// Image curve f(γ) on the same parameters.
  [[nodiscard]] SampledCurve mapped(const VectorMap& f) const;

 private:
  std::vector<StateVector> points_;
  std::vector<double> parameters_;
};

/// √((x−y)ᵀ M (x−y)).
double metric_distance(const StateVector& x, const StateVector& y, const Matrix& M);

/// F = Θ₂ (∂f/∂x) Θ₁⁻¹. Throws SingularFactor when cond(Θ₁) > 1e12.
Matrix generalized_jacobian(const Matrix& jacobian, const Matrix& theta1, const Matrix& theta2);
Matrix generalized_jacobian(const JacobianMap& jacobian, const StateVector& x,
                            const Matrix& theta1, const Matrix& theta2);

/// λ_max(FᵀF) at x, the squared local contraction factor.
double contraction_factor_at(const JacobianMap& jacobian, const StateVector& x,
                             const Matrix& theta1, const Matrix& theta2);

/// Σᵢ ‖Θ(pᵢ₊₁ − pᵢ)‖₂ with Θ the factor of M.
double curve_length(const SampledCurve& curve, const Matrix& M);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Matrix& symmetric);
/// Largest eigenvalue of the symmetric part (A + Aᵀ)/2.
double max_symmetric_part_eigenvalue(const Matrix& A);

}  // namespace scontract
