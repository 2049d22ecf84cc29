#include "scontract/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace scontract {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryTolerance = 1e-12;
constexpr double kBoundaryWarning = 1e-9;

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    std::ostringstream os;
    os << "contraction rate beta must lie in [0, 1), got " << beta;
    throw BetaOutOfRange(os.str());
  }
}

void check_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw BoundRangeError(std::string(name) + " must be finite and non-negative");
  }
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw BoundRangeError(std::string(name) + " must be finite and positive");
  }
}

struct HybridConstants {
  double beta, lambda, c_d, c_c, tau, e0;
};

HybridConstants effective(const BoundReport& r) {
  const double scale = r.noise_free ? 0.5 : 1.0;
  return {r.inputs.beta, r.inputs.lambda, scale * r.inputs.c_d, scale * r.inputs.c_c,
          r.inputs.tau, r.inputs.e0};
}

// Stated constant C₁ (contracting continuous part).
double constant_c1(double beta, double lambda, double c_d, double c_c, double tau) {
  const double r1 = beta * std::exp(-2.0 * lambda * tau);
  return (2.0 * lambda * c_d + (1.0 - beta) * (1.0 + beta - r1) * c_c) /
         (lambda * (1.0 - beta) * (1.0 - r1));
}

double constant_c2(double beta, double c_d, double c_c, double tau) {
  return (2.0 * c_d + 2.0 * beta * (1.0 - beta) * c_c * tau) / ((1.0 - beta) * (1.0 - beta));
}

double constant_c3(double beta, double expansion, double c_d, double c_c, double tau) {
  const double e = std::exp(2.0 * expansion * tau);
  const double r2 = beta * e;
  return (2.0 * expansion * c_d + (1.0 - beta) * (1.0 + beta - r2) * e * c_c) /
         (expansion * (1.0 - beta) * (1.0 - r2));
}

// D₂: additive term of the post-reset recursion u⁺_{k+1} ≤ D₂ + r₂ u⁺_k.
double expanding_offset(double beta, double expansion, double c_d, double c_c, double tau) {
  return 2.0 * c_d / (1.0 - beta) + beta * c_c / expansion * std::expm1(2.0 * expansion * tau);
}

// Reset index of the last reset applied at (t, side) and the time since it;
// k = −1 before the first reset.
std::pair<long, double> locate(double t, Side side, double tau) {
  const double q = t / tau;
  const double nearest = std::round(q);
  long k;
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, std::abs(q))) {
    k = static_cast<long>(nearest) - (side == Side::kLeft ? 1 : 0);
  } else {
    k = static_cast<long>(std::floor(q));
  }
  if (k < 0) return {-1, 0.0};
  return {k, std::max(0.0, t - k * tau)};
}

BoundReport hybrid_report(BoundTag tag, double beta, double lambda, double c_d, double c_c,
                          double tau, double e0) {
  BoundReport r;
  r.tag = tag;
  r.inputs.beta = beta;
  r.inputs.lambda = lambda;
  r.inputs.c_d = c_d;
  r.inputs.c_c = c_c;
  r.inputs.tau = tau;
  r.inputs.e0 = e0;
  r.inputs.hybrid = true;
  return r;
}

// Fills asymptote, rates and sup from the (possibly halved) constants.
void evaluate_hybrid(BoundReport& r) {
  const auto [beta, lambda, c_d, c_c, tau, e0] = effective(r);
  (void)e0;
  switch (r.tag) {
    case BoundTag::kThm2: {
      r.asymptotic_bound = constant_c1(beta, lambda, c_d, c_c, tau);
      r.transient_rate_per_step = beta * std::exp(-2.0 * lambda * tau);
      r.growth_factor = r.transient_rate_per_step;
      r.sup_bound = r.asymptotic_bound;
      break;
    }
    case BoundTag::kThm3: {
      r.asymptotic_bound = constant_c2(beta, c_d, c_c, tau);
      r.transient_rate_per_step = beta;
      r.growth_factor = beta;
      r.sup_bound = r.asymptotic_bound + 2.0 * c_c * tau;
      break;
    }
    case BoundTag::kThm4Bounded: {
      const double expansion = -lambda;
      const double e = std::exp(2.0 * expansion * tau);
      r.asymptotic_bound = constant_c3(beta, expansion, c_d, c_c, tau);
      r.transient_rate_per_step = beta * e;
      r.growth_factor = beta * e;
      r.sup_bound = e * r.asymptotic_bound + c_c / expansion * (e - 1.0);
      break;
    }
    case BoundTag::kThm4LinearGrowth:
    case BoundTag::kThm4Unbounded: {
      r.asymptotic_bound = kInf;
      r.transient_rate_per_step = 1.0;
      r.growth_factor = beta * std::exp(-2.0 * lambda * tau);
      r.sup_bound = kInf;
      break;
    }
    default:
      throw std::logic_error("evaluate_hybrid called with a discrete tag");
  }
}

}  // namespace

std::string to_string(BoundTag tag) {
  switch (tag) {
    case BoundTag::kThm1Distance: return "thm1-distance";
    case BoundTag::kThm1MeanSquare: return "thm1-ms";
    case BoundTag::kThm2: return "thm2";
    case BoundTag::kThm3: return "thm3";
    case BoundTag::kThm4Bounded: return "thm4-bounded";
    case BoundTag::kThm4LinearGrowth: return "thm4-linear-growth";
    case BoundTag::kThm4Unbounded: return "thm4-unbounded";
    case BoundTag::kCorollaryNoiseFree: return "corollary-noisefree";
  }
  return "unknown";
}

BoundTag bound_tag_from_string(const std::string& name) {
  for (BoundTag tag : {BoundTag::kThm1Distance, BoundTag::kThm1MeanSquare, BoundTag::kThm2,
                       BoundTag::kThm3, BoundTag::kThm4Bounded, BoundTag::kThm4LinearGrowth,
                       BoundTag::kThm4Unbounded, BoundTag::kCorollaryNoiseFree}) {
    if (to_string(tag) == name) return tag;
  }
  throw std::invalid_argument("unknown bound tag '" + name + "'");
}

bool BoundReport::is_bounded() const { return std::isfinite(asymptotic_bound); }

double BoundReport::at_step(long k) const {
  if (inputs.hybrid) throw std::logic_error("at_step called on a hybrid bound report");
  if (k < 0) k = 0;
  const double rate = std::pow(transient_rate_per_step, static_cast<double>(k));
  const double initial =
      inputs.point_mass_initial ? std::max(0.0, inputs.e0 - asymptotic_bound) : inputs.e0;
  return asymptotic_bound + rate * initial;
}

double BoundReport::at_time(double t, Side side) const {
  if (!inputs.hybrid) throw std::logic_error("at_time called on a discrete bound report");
  const auto [beta, lambda, c_d, c_c, tau, e0] = effective(*this);
  const auto [k, s] = locate(t, side, tau);
  if (k < 0) return e0;
  const double kd = static_cast<double>(k);
  switch (tag) {
    case BoundTag::kThm2:
      return asymptotic_bound + e0 * std::pow(beta, kd) * std::exp(-2.0 * lambda * t);
    case BoundTag::kThm3:
      return asymptotic_bound + e0 * std::pow(beta, kd) + 2.0 * c_c * s;
    case BoundTag::kThm4Bounded:
    case BoundTag::kThm4LinearGrowth:
    case BoundTag::kThm4Unbounded: {
      const double expansion = -lambda;
      const double r2 = beta * std::exp(2.0 * expansion * tau);
      double post;
      if (tag == BoundTag::kThm4Bounded) {
        post = asymptotic_bound + e0 * std::pow(r2, kd);
      } else {
        const double d2 = expanding_offset(beta, expansion, c_d, c_c, tau);
        const double first = beta * e0 + 2.0 * c_d;  // bound on u(0⁺)
        if (tag == BoundTag::kThm4LinearGrowth) {
          post = kd * d2 + first;
        } else {
          post = (first + d2 / (r2 - 1.0)) * std::pow(r2, kd) - d2 / (r2 - 1.0);
        }
      }
      const double growth = std::exp(2.0 * expansion * s);
      return growth * post + c_c / expansion * (growth - 1.0);
    }
    default:
      throw std::logic_error("at_time: unexpected tag");
  }
}

BoundReport discrete_distance_bound(double beta, double c, double e0_distance,
                                    bool point_mass_initial) {
  check_beta(beta);
  check_non_negative(c, "noise bound C");
  check_non_negative(e0_distance, "initial distance");
  BoundReport r;
  r.tag = BoundTag::kThm1Distance;
  r.inputs.beta = beta;
  r.inputs.c = c;
  r.inputs.e0 = e0_distance;
  r.inputs.point_mass_initial = point_mass_initial;
  const double root_beta = std::sqrt(beta);
  r.asymptotic_bound = 2.0 * std::sqrt(c) / (1.0 - root_beta);
  r.transient_rate_per_step = root_beta;
  r.growth_factor = root_beta;
  r.sup_bound = r.asymptotic_bound;
  return r;
}

BoundReport discrete_ms_bound(double beta, double c, double e0_ms, bool point_mass_initial) {
  check_beta(beta);
  check_non_negative(c, "noise bound C");
  check_non_negative(e0_ms, "initial mean-square distance");
  BoundReport r;
  r.tag = BoundTag::kThm1MeanSquare;
  r.inputs.beta = beta;
  r.inputs.c = c;
  r.inputs.e0 = e0_ms;
  r.inputs.point_mass_initial = point_mass_initial;
  r.asymptotic_bound = 2.0 * c / (1.0 - beta);
  r.transient_rate_per_step = beta;
  r.growth_factor = beta;
  r.sup_bound = r.asymptotic_bound;
  return r;
}

namespace {

void check_hybrid_common(double beta, double c_d, double c_c, double tau, double e0) {
  check_beta(beta);
  check_non_negative(c_d, "discrete noise bound C_d");
  check_non_negative(c_c, "continuous noise bound C_c");
  check_positive(tau, "dwell time tau");
  check_non_negative(e0, "initial mean-square distance");
}

}  // namespace

BoundReport hybrid_bound_contracting(double beta, double lambda, double c_d, double c_c,
                                     double tau, double e0_ms) {
  check_hybrid_common(beta, c_d, c_c, tau, e0_ms);
  check_positive(lambda, "contraction rate lambda");
  BoundReport r = hybrid_report(BoundTag::kThm2, beta, lambda, c_d, c_c, tau, e0_ms);
  evaluate_hybrid(r);
  return r;
}

BoundReport hybrid_bound_neutral(double beta, double c_d, double c_c, double tau, double e0_ms) {
  check_hybrid_common(beta, c_d, c_c, tau, e0_ms);
  BoundReport r = hybrid_report(BoundTag::kThm3, beta, 0.0, c_d, c_c, tau, e0_ms);
  evaluate_hybrid(r);
  return r;
}

BoundReport hybrid_bound_expanding(double beta, double lambda, double c_d, double c_c,
                                   double tau, double e0_ms) {
  check_hybrid_common(beta, c_d, c_c, tau, e0_ms);
  if (!(lambda < 0.0) || !std::isfinite(lambda)) {
    throw BoundRangeError("expanding regime requires lambda < 0");
  }
  BoundReport r = hybrid_report(classify_regime(beta, lambda, tau), beta, lambda, c_d, c_c, tau,
                                e0_ms);
  const double threshold = std::exp(2.0 * lambda * tau);
  if (std::abs(beta - threshold) <= kBoundaryWarning * threshold) {
    r.warnings.push_back("beta is within 1e-9 (relative) of exp(-2|lambda|tau); the regime "
                         "flips discontinuously at this boundary");
  }
  evaluate_hybrid(r);
  return r;
}

BoundReport hybrid_bound(double beta, double lambda, double c_d, double c_c, double tau,
                         double e0_ms) {
  if (lambda > 0.0) return hybrid_bound_contracting(beta, lambda, c_d, c_c, tau, e0_ms);
  if (lambda == 0.0) return hybrid_bound_neutral(beta, c_d, c_c, tau, e0_ms);
  return hybrid_bound_expanding(beta, lambda, c_d, c_c, tau, e0_ms);
}

BoundReport apply_noisefree_corollary(const BoundReport& report) {
  if (report.noise_free || report.tag == BoundTag::kCorollaryNoiseFree) return report;
  BoundReport r = report;
  r.noise_free = true;
  switch (report.tag) {
    case BoundTag::kThm1Distance:
      // One noisy trajectory contributes a single √C term per step.
      r.asymptotic_bound = std::sqrt(report.inputs.c) / (1.0 - std::sqrt(report.inputs.beta));
      r.sup_bound = r.asymptotic_bound;
      break;
    case BoundTag::kThm1MeanSquare:
      r.tag = BoundTag::kCorollaryNoiseFree;
      r.asymptotic_bound = report.inputs.c / (1.0 - report.inputs.beta);
      r.sup_bound = r.asymptotic_bound;
      break;
    default:
      evaluate_hybrid(r);
      break;
  }
  return r;
}

BoundTag classify_regime(double beta, double lambda, double tau) {
  if (lambda > 0.0) return BoundTag::kThm2;
  if (lambda == 0.0) return BoundTag::kThm3;
  const double threshold = std::exp(2.0 * lambda * tau);
  if (std::abs(beta - threshold) <= kBoundaryTolerance * threshold) {
    return BoundTag::kThm4LinearGrowth;
  }
  return beta < threshold ? BoundTag::kThm4Bounded : BoundTag::kThm4Unbounded;
}

}  // namespace scontract
