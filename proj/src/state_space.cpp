#include "scontract/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace scontract {

namespace {

constexpr double kPivotTolerance = 1e-12;

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

bool is_symmetric(const Matrix& A, double rel_tol) {
  if (A.rows() != A.cols()) return false;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix factor_metric(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw DimensionMismatch("metric must be a non-empty square matrix, got " + shape(M));
  }
  if (!M.allFinite() || !is_symmetric(M)) {
    throw NotPositiveDefinite("metric is not symmetric");
  }
  // Pivots are compared against the matrix scale, so the check does not
  // depend on units.
  const double scale = M.diagonal().cwiseAbs().maxCoeff();
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= kPivotTolerance * std::max(scale, 1e-300)) {
    throw NotPositiveDefinite("metric has a non-positive pivot");
  }
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("metric has a non-positive pivot");
  }
  return llt.matrixU();
}

Matrix psd_sqrt(const Matrix& Q) {
  if (Q.rows() != Q.cols()) {
    throw DimensionMismatch("covariance must be square, got " + shape(Q));
  }
  if (Q.size() == 0) return Q;
  if (!Q.allFinite() || !is_symmetric(Q)) {
    throw NotPositiveDefinite("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw NotPositiveDefinite("covariance has a negative eigenvalue");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

MetricSpec MetricSpec::identity(int n) { return constant(Matrix::Identity(n, n)); }

MetricSpec MetricSpec::constant(const Matrix& M) {
  MetricSpec spec;
  spec.base_factor_ = factor_metric(M);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  spec.alpha_ = eig.eigenvalues().minCoeff();
  return spec;
}

MetricSpec MetricSpec::scheduled(const Matrix& base, Deformation deformation,
                                 Deformation deformation_rate, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("metric schedule period must be positive");
  MetricSpec spec = constant(base);
  spec.deformation_ = std::move(deformation);
  spec.deformation_rate_ = std::move(deformation_rate);
  spec.period_ = period;
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double s = period * i / 100.0;
    const Matrix theta = spec.deformation_(s) * spec.base_factor_;
    if (theta.rows() != base.rows() || theta.cols() != base.cols()) {
      throw DimensionMismatch("metric deformation has shape " + shape(theta));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(theta.transpose() * theta, Eigen::EigenvaluesOnly);
    alpha = std::min(alpha, eig.eigenvalues().minCoeff());
  }
  if (!(alpha > 0.0)) {
    throw NotPositiveDefinite("scheduled metric loses positive definiteness");
  }
  spec.alpha_ = alpha;
  return spec;
}

double MetricSpec::local_time(double t, Side side) const {
  const double k = std::floor(t / period_ + 1e-12);
  double s = t - k * period_;
  if (std::abs(s) <= 1e-12 * std::max(1.0, std::abs(t))) {
    s = 0.0;
    if (side == Side::kLeft && t > 0.0) s = period_;
  }
  return std::clamp(s, 0.0, period_);
}

Matrix MetricSpec::factor(double t, Side side) const {
  if (is_constant()) return base_factor_;
  return deformation_(local_time(t, side)) * base_factor_;
}

Matrix MetricSpec::factor_rate(double t, Side side) const {
  if (is_constant() || !deformation_rate_) {
    return Matrix::Zero(base_factor_.rows(), base_factor_.cols());
  }
  return deformation_rate_(local_time(t, side)) * base_factor_;
}

Matrix MetricSpec::value(double t, Side side) const {
  const Matrix theta = factor(t, side);
  return theta.transpose() * theta;
}

GaussianNoiseSpec GaussianNoiseSpec::from_covariance(const Matrix& Q) {
  return GaussianNoiseSpec{Q, psd_sqrt(Q)};
}

Matrix finite_difference_jacobian(const std::function<StateVector(const StateVector&)>& f,
                                  const StateVector& x) {
  const double h = std::max(1e-6, 1e-6 * x.norm());
  StateVector probe = x;
  Matrix J;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const StateVector up = f(probe);
    probe(j) = x(j) - h;
    const StateVector down = f(probe);
    probe(j) = x(j);
    if (j == 0) J.resize(up.size(), x.size());
    J.col(j) = (up - down) / (2.0 * h);
  }
  return J;
}

Matrix DiscreteMapSystem::jacobian_at(const StateVector& x, long k) const {
  if (jacobian) return jacobian(x, k);
  return finite_difference_jacobian([&](const StateVector& y) { return map(y, k); }, x);
}

Matrix ContinuousSDESystem::jacobian_at(const StateVector& x, double t) const {
  if (jacobian) return jacobian(x, t);
  return finite_difference_jacobian([&](const StateVector& y) { return drift(y, t); }, x);
}

namespace {

void check_discrete(const DiscreteMapSystem& s, const std::string& prefix,
                    std::vector<Violation>& out) {
  if (s.dimension <= 0) {
    out.push_back({prefix + "dimension", "dimension must be positive"});
    return;
  }
  const StateVector origin = StateVector::Zero(s.dimension);
  if (!s.map) {
    out.push_back({prefix + "map", "map is not set"});
  } else {
    try {
      const StateVector y = s.map(origin, 0);
      if (y.size() != s.dimension) {
        out.push_back({prefix + "map", "map returns dimension " + std::to_string(y.size()) +
                                           ", expected " + std::to_string(s.dimension)});
      }
    } catch (const std::exception& e) {
      out.push_back({prefix + "map", std::string("map threw: ") + e.what()});
    }
  }
  const Matrix& Q = s.noise.covariance;
  if (Q.rows() != Q.cols()) {
    out.push_back({prefix + "noise", "covariance must be square, got " + shape(Q)});
  } else if (!is_symmetric(Q)) {
    out.push_back({prefix + "noise", "covariance must be symmetric"});
  } else if (Q.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
      out.push_back({prefix + "noise", "covariance must be positive semidefinite"});
    }
  }
  if (!s.noise_gain) {
    out.push_back({prefix + "noise_gain", "noise gain is not set"});
  } else {
    try {
      const Matrix g = s.noise_gain(origin, 0);
      if (g.rows() != s.dimension || g.cols() != Q.rows()) {
        out.push_back({prefix + "noise_gain",
                       "noise gain has shape " + shape(g) + ", expected " +
                           std::to_string(s.dimension) + "x" + std::to_string(Q.rows())});
      }
    } catch (const std::exception& e) {
      out.push_back({prefix + "noise_gain", std::string("noise gain threw: ") + e.what()});
    }
  }
}

void check_continuous(const ContinuousSDESystem& s, const std::string& prefix,
                      std::vector<Violation>& out) {
  if (s.dimension <= 0) {
    out.push_back({prefix + "dimension", "dimension must be positive"});
    return;
  }
  if (s.noise_dimension < 0) {
    out.push_back({prefix + "noise_dimension", "noise dimension must be non-negative"});
  }
  const StateVector origin = StateVector::Zero(s.dimension);
  if (!s.drift) {
    out.push_back({prefix + "drift", "drift is not set"});
  } else {
    try {
      const StateVector y = s.drift(origin, 0.0);
      if (y.size() != s.dimension) {
        out.push_back({prefix + "drift", "drift returns dimension " + std::to_string(y.size()) +
                                             ", expected " + std::to_string(s.dimension)});
      }
    } catch (const std::exception& e) {
      out.push_back({prefix + "drift", std::string("drift threw: ") + e.what()});
    }
  }
  if (!s.diffusion) {
    out.push_back({prefix + "diffusion", "diffusion is not set"});
  } else {
    try {
      const Matrix g = s.diffusion(origin, 0.0);
      if (g.rows() != s.dimension || g.cols() != s.noise_dimension) {
        out.push_back({prefix + "diffusion", "diffusion has shape " + shape(g) + ", expected " +
                                                 std::to_string(s.dimension) + "x" +
                                                 std::to_string(s.noise_dimension)});
      }
    } catch (const std::exception& e) {
      out.push_back({prefix + "diffusion", std::string("diffusion threw: ") + e.what()});
    }
  }
}

}  // namespace

std::vector<Violation> validate_system(const SystemModel& system) {
  std::vector<Violation> out;
  std::visit(
      [&out](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiscreteMapSystem>) {
          check_discrete(s, "", out);
        } else if constexpr (std::is_same_v<T, ContinuousSDESystem>) {
          check_continuous(s, "", out);
        } else {
          check_continuous(s.continuous, "continuous.", out);
          check_discrete(s.reset, "reset.", out);
          if (!(s.dwell_time > 0.0)) {
            out.push_back({"dwell_time", "dwell_time must be positive"});
          }
          if (s.continuous.dimension != s.reset.dimension) {
            out.push_back({"dimension", "continuous and reset dimensions differ (" +
                                            std::to_string(s.continuous.dimension) + " vs " +
                                            std::to_string(s.reset.dimension) + ")"});
          }
        }
      },
      system);
  return out;
}

}  // namespace scontract
