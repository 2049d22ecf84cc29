#include "scontract/geometry.hpp"

#include <cmath>
#include <string>

namespace scontract {

namespace {

constexpr double kMaxCondition = 1e12;

void require_same_size(const StateVector& x, const StateVector& y, const Matrix& M) {
  if (x.size() != y.size() || M.rows() != x.size() || M.cols() != x.size()) {
    throw DimensionMismatch("metric_distance: sizes " + std::to_string(x.size()) + ", " +
                            std::to_string(y.size()) + " and metric " +
                            std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
}

}  // namespace

SampledCurve::SampledCurve(std::vector<StateVector> points, std::vector<double> parameters)
    : points_(std::move(points)), parameters_(std::move(parameters)) {
  if (points_.size() < 2 || points_.size() != parameters_.size()) {
    throw std::invalid_argument("a sampled curve needs at least two points, one per parameter");
  }
  for (std::size_t i = 1; i < parameters_.size(); ++i) {
    if (!(parameters_[i] > parameters_[i - 1])) {
      throw std::invalid_argument("curve parameters must be strictly increasing");
    }
    if (points_[i].size() != points_[0].size()) {
      throw DimensionMismatch("curve points have inconsistent dimensions");
    }
  }
}

SampledCurve SampledCurve::uniform(const std::function<StateVector(double)>& curve, int count) {
  std::vector<StateVector> points;
  std::vector<double> params;
  points.reserve(count);
  params.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    params.push_back(u);
    points.push_back(curve(u));
  }
  return SampledCurve(std::move(points), std::move(params));
}

SampledCurve SampledCurve::mapped(const VectorMap& f) const {
  std::vector<StateVector> image;
  image.reserve(points_.size());
  for (const auto& p : points_) image.push_back(f(p));
  return SampledCurve(std::move(image), parameters_);
}

double metric_distance(const StateVector& x, const StateVector& y, const Matrix& M) {
  require_same_size(x, y, M);
  const StateVector d = x - y;
  // Clamp rounding noise from near-semidefinite M.
  return std::sqrt(std::max(0.0, d.dot(M * d)));
}

Matrix generalized_jacobian(const Matrix& jacobian, const Matrix& theta1, const Matrix& theta2) {
  if (theta1.rows() != theta1.cols() || jacobian.cols() != theta1.rows() ||
      theta2.cols() != jacobian.rows()) {
    throw DimensionMismatch("generalized_jacobian: incompatible Jacobian and metric factors");
  }
  Eigen::JacobiSVD<Matrix> svd(theta1);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (!(smallest > 0.0) || sv(0) / smallest > kMaxCondition) {
    throw SingularFactor("metric factor is singular or ill-conditioned");
  }
  // F = Θ₂ J Θ₁⁻¹, computed as the transpose of Θ₁⁻ᵀ (Θ₂ J)ᵀ.
  const Matrix lhs = theta2 * jacobian;
  return theta1.transpose().fullPivLu().solve(lhs.transpose()).transpose();
}

Matrix generalized_jacobian(const JacobianMap& jacobian, const StateVector& x,
                            const Matrix& theta1, const Matrix& theta2) {
  return generalized_jacobian(jacobian(x), theta1, theta2);
}

double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double max_symmetric_part_eigenvalue(const Matrix& A) {
  return max_eigenvalue(0.5 * (A + A.transpose()));
}

double contraction_factor_at(const JacobianMap& jacobian, const StateVector& x,
                             const Matrix& theta1, const Matrix& theta2) {
  const Matrix F = generalized_jacobian(jacobian, x, theta1, theta2);
  return std::max(0.0, max_eigenvalue(F.transpose() * F));
}

double curve_length(const SampledCurve& curve, const Matrix& M) {
  const auto& pts = curve.points();
  if (M.rows() != pts[0].size() || M.cols() != pts[0].size()) {
    throw DimensionMismatch("curve_length: metric does not match curve dimension");
  }
  const Matrix theta = factor_metric(M);
  double length = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    length += (theta * (pts[i] - pts[i - 1])).norm();
  }
  return length;
}

}  // namespace scontract
