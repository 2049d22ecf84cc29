#include "scontract/certify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>

#include "scontract/geometry.hpp"

namespace scontract {

namespace {

// Sobol points in [0,1)^n, rotated by a seed-derived shift modulo 1.
class ShiftedSobol {
 public:
  ShiftedSobol(int dimension, std::uint64_t seed) : engine_(dimension), shift_(dimension) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& s : shift_) s = seed == 0 ? 0.0 : unit(rng);
  }

  Eigen::VectorXd next() {
    Eigen::VectorXd u(static_cast<Eigen::Index>(shift_.size()));
    for (std::size_t i = 0; i < shift_.size(); ++i) {
      double v = uniform_(engine_) + shift_[i];
      u(static_cast<Eigen::Index>(i)) = v - std::floor(v);
    }
    return u;
  }

 private:
  boost::random::sobol engine_;
  boost::random::uniform_01<double> uniform_;
  std::vector<double> shift_;
};

// Max over samples of `score`, split across workers by index range. Ties go
// to the lowest index so the result does not depend on the split.
SampledMax sampled_max(const std::vector<StateVector>& samples,
                       const std::function<double(const StateVector&)>& score, int workers) {
  if (samples.empty()) throw EmptyRegion("sampling region is empty");
  const int n = static_cast<int>(samples.size());
  workers = std::clamp(workers, 1, n);
  std::vector<double> best(workers, -std::numeric_limits<double>::infinity());
  std::vector<int> best_index(workers, -1);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](int w) {
    try {
      const int begin = static_cast<int>(static_cast<long>(n) * w / workers);
      const int end = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
      for (int i = begin; i < end; ++i) {
        const double v = score(samples[i]);
        if (best_index[w] < 0 || v > best[w] || std::isnan(v)) {
          best[w] = v;
          best_index[w] = i;
          if (std::isnan(v)) break;
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  SampledMax out;
  out.sample_count = n;
  int chosen = -1;
  for (int w = 0; w < workers; ++w) {
    if (best_index[w] < 0) continue;
    if (chosen < 0 || best[w] > out.value || std::isnan(best[w])) {
      out.value = best[w];
      chosen = best_index[w];
      if (std::isnan(best[w])) break;
    }
  }
  if (std::isnan(out.value)) {
    throw std::runtime_error("non-finite value while sampling at sample " +
                             std::to_string(chosen));
  }
  out.argmax = samples[chosen];
  return out;
}

}  // namespace

SamplingRegion SamplingRegion::box(StateVector lower, StateVector upper, int sample_count,
                                   std::uint64_t seed) {
  SamplingRegion r;
  r.kind = Kind::kBox;
  r.lower = std::move(lower);
  r.upper = std::move(upper);
  r.sample_count = sample_count;
  r.seed = seed;
  return r;
}

SamplingRegion SamplingRegion::sphere(StateVector center, double radius, int sample_count,
                                      std::uint64_t seed) {
  SamplingRegion r;
  r.kind = Kind::kSphere;
  r.center = std::move(center);
  r.radius = radius;
  r.sample_count = sample_count;
  r.seed = seed;
  return r;
}

SamplingRegion SamplingRegion::explicit_points(std::vector<StateVector> points) {
  SamplingRegion r;
  r.kind = Kind::kPoints;
  r.sample_count = static_cast<int>(points.size());
  r.points = std::move(points);
  return r;
}

int SamplingRegion::dimension() const {
  switch (kind) {
    case Kind::kBox: return static_cast<int>(lower.size());
    case Kind::kSphere: return static_cast<int>(center.size());
    case Kind::kPoints: return points.empty() ? 0 : static_cast<int>(points.front().size());
  }
  return 0;
}

std::vector<StateVector> SamplingRegion::samples() const {
  if (kind == Kind::kPoints) {
    if (points.empty()) throw EmptyRegion("explicit point list is empty");
    return points;
  }
  if (sample_count < 1) throw EmptyRegion("sample_count must be at least 1");
  const int n = dimension();
  if (n == 0) throw EmptyRegion("sampling region has dimension 0");
  std::vector<StateVector> out;
  out.reserve(sample_count);
  ShiftedSobol sobol(n, seed);
  if (kind == Kind::kBox) {
    if (upper.size() != n || ((upper - lower).array() < 0.0).any()) {
      throw EmptyRegion("box bounds are inconsistent");
    }
    out.push_back(0.5 * (lower + upper));
    while (static_cast<int>(out.size()) < sample_count) {
      const Eigen::VectorXd u = sobol.next();
      out.push_back(lower + (upper - lower).cwiseProduct(u));
    }
  } else {
    if (!(radius >= 0.0)) throw EmptyRegion("sphere radius must be non-negative");
    out.push_back(center);
    while (static_cast<int>(out.size()) < sample_count) {
      const Eigen::VectorXd v = 2.0 * sobol.next().array() - 1.0;
      if (v.squaredNorm() <= 1.0) out.push_back(center + radius * v);
    }
  }
  return out;
}

SampledMax estimate_discrete_rate(const DiscreteMapSystem& system, const Matrix& theta_k,
                                  const Matrix& theta_next, const SamplingRegion& region, long k,
                                  int workers) {
  const auto samples = region.samples();
  return sampled_max(
      samples,
      [&](const StateVector& x) {
        const Matrix F = generalized_jacobian(system.jacobian_at(x, k), theta_k, theta_next);
        return std::max(0.0, max_eigenvalue(F.transpose() * F));
      },
      workers);
}

SampledMax estimate_continuous_rate(const ContinuousSDESystem& system, const MetricSpec& metric,
                                    const SamplingRegion& region, double t, int workers) {
  const Matrix theta = metric.factor(t, Side::kRight);
  const Matrix theta_rate = metric.factor_rate(t, Side::kRight);
  const auto samples = region.samples();
  SampledMax worst = sampled_max(
      samples,
      [&](const StateVector& x) {
        const Matrix A = theta_rate + theta * system.jacobian_at(x, t);
        const Matrix generalized = generalized_jacobian(A, theta, Matrix::Identity(A.rows(), A.rows()));
        return max_symmetric_part_eigenvalue(generalized);
      },
      workers);
  worst.value = -worst.value;
  return worst;
}

SampledMax noise_bound_discrete(const DiscreteMapSystem& system, const Matrix& metric_next,
                                const SamplingRegion& region, long k, int workers) {
  const auto samples = region.samples();
  const Matrix& Q = system.noise.covariance;
  return sampled_max(
      samples,
      [&](const StateVector& a) {
        const Matrix sigma = system.noise_gain(a, k);
        if (sigma.rows() != metric_next.rows() || sigma.cols() != Q.rows()) {
          throw DimensionMismatch("noise_bound_discrete: σ, M and Q shapes disagree");
        }
        return (sigma.transpose() * metric_next * sigma * Q).trace();
      },
      workers);
}

SampledMax noise_bound_continuous(const ContinuousSDESystem& system, const Matrix& metric,
                                  const SamplingRegion& region, double t, int workers) {
  const auto samples = region.samples();
  return sampled_max(
      samples,
      [&](const StateVector& a) {
        const Matrix sigma = system.diffusion(a, t);
        if (sigma.rows() != metric.rows()) {
          throw DimensionMismatch("noise_bound_continuous: σ_c and M shapes disagree");
        }
        return (sigma.transpose() * metric * sigma).trace();
      },
      workers);
}

ContractionCertificate certify_discrete(const DiscreteMapSystem& system, const MetricSpec& metric,
                                        const SamplingRegion& region, long k) {
  const double t0 = metric.is_constant() ? 0.0 : k * metric.period();
  const double t1 = metric.is_constant() ? 0.0 : (k + 1) * metric.period();
  const Matrix theta_k = metric.factor(t0, Side::kRight);
  const Matrix theta_next = metric.factor(t1, Side::kRight);
  const SampledMax rate = estimate_discrete_rate(system, theta_k, theta_next, region, k);
  const SampledMax noise = noise_bound_discrete(system, metric.value(t1, Side::kRight), region, k);
  ContractionCertificate cert;
  cert.kind = ContractionCertificate::Kind::kDiscrete;
  cert.rate = rate.value;
  cert.noise_bound = std::max(0.0, noise.value);
  cert.metric = metric.value(t0, Side::kRight);
  cert.region = region;
  cert.rate_argmax = rate.argmax;
  cert.noise_argmax = noise.argmax;
  return cert;
}

ContractionCertificate certify_continuous(const ContinuousSDESystem& system,
                                          const MetricSpec& metric, const SamplingRegion& region,
                                          double t) {
  const SampledMax rate = estimate_continuous_rate(system, metric, region, t);
  const SampledMax noise = noise_bound_continuous(system, metric.value(t), region, t);
  ContractionCertificate cert;
  cert.kind = ContractionCertificate::Kind::kContinuous;
  cert.rate = rate.value;
  cert.noise_bound = std::max(0.0, noise.value);
  cert.metric = metric.value(t);
  cert.region = region;
  cert.rate_argmax = rate.argmax;
  cert.noise_argmax = noise.argmax;
  return cert;
}

HybridCertificate certify_hybrid(const HybridSystem& system, const MetricSpec& metric,
                                 const SamplingRegion& region, long k, int time_samples) {
  const double tau = system.dwell_time;
  const double reset_time = k * tau;
  HybridCertificate out;
  out.dwell_time = tau;

  const Matrix theta_before = metric.factor(reset_time, Side::kLeft);
  const Matrix theta_after = metric.factor(reset_time, Side::kRight);
  const SampledMax beta = estimate_discrete_rate(system.reset, theta_before, theta_after, region, k);
  const SampledMax cd =
      noise_bound_discrete(system.reset, metric.value(reset_time, Side::kRight), region, k);
  out.discrete.kind = ContractionCertificate::Kind::kDiscrete;
  out.discrete.rate = beta.value;
  out.discrete.noise_bound = std::max(0.0, cd.value);
  out.discrete.metric = metric.value(reset_time, Side::kRight);
  out.discrete.region = region;
  out.discrete.rate_argmax = beta.argmax;
  out.discrete.noise_argmax = cd.argmax;

  time_samples = std::max(1, time_samples);
  bool first = true;
  for (int i = 1; i <= time_samples; ++i) {
    const double t = reset_time + tau * i / (time_samples + 1);
    const SampledMax lambda = estimate_continuous_rate(system.continuous, metric, region, t);
    const SampledMax cc = noise_bound_continuous(system.continuous, metric.value(t), region, t);
    if (first || lambda.value < out.continuous.rate) {
      out.continuous.rate = lambda.value;
      out.continuous.rate_argmax = lambda.argmax;
    }
    if (first || cc.value > out.continuous.noise_bound) {
      out.continuous.noise_bound = std::max(0.0, cc.value);
      out.continuous.noise_argmax = cc.argmax;
    }
    first = false;
  }
  out.continuous.kind = ContractionCertificate::Kind::kContinuous;
  out.continuous.metric = metric.value(reset_time, Side::kRight);
  out.continuous.region = region;
  return out;
}

ContractionCertificate with_analytic_rate(ContractionCertificate cert, double rate) {
  cert.rate = rate;
  cert.is_global_claim = true;
  return cert;
}

std::string to_string(ContractionCertificate::Kind kind) {
  return kind == ContractionCertificate::Kind::kDiscrete ? "discrete" : "continuous";
}

std::string to_string(SamplingRegion::Kind kind) {
  switch (kind) {
    case SamplingRegion::Kind::kBox: return "box";
    case SamplingRegion::Kind::kSphere: return "sphere";
    case SamplingRegion::Kind::kPoints: return "points";
  }
  return "box";
}

}  // namespace scontract
