#include "systems.hpp"

#include <cmath>

#include "scontract/cpg.hpp"

namespace scontract::cli {

namespace {

SamplingRegion region_for(const RegionConfig& r, int n) {
  if (r.kind == "sphere") return SamplingRegion::sphere(StateVector::Zero(n), r.extent, r.samples, r.seed);
  return SamplingRegion::box(StateVector::Constant(n, -r.extent), StateVector::Constant(n, r.extent),
                             r.samples, r.seed);
}

cpg::CPGParams cpg_params(const ExperimentConfig& c) {
  cpg::CPGParams p;
  p.gamma = c.params.at("gamma");
  p.tau = c.params.at("tau");
  p.sigma_c = c.params.at("sigma_c");
  p.sigma_d = c.params.at("sigma_d");
  p.h = c.h;
  return p;
}

DiscreteMapSystem linear_map(Matrix A, double sigma) {
  const auto n = static_cast<int>(A.rows());
  DiscreteMapSystem sys;
  sys.dimension = n;
  sys.map = [A](const StateVector& x, long) -> StateVector { return A * x; };
  sys.noise_gain = [sigma, n](const StateVector&, long) -> Matrix {
    return sigma * Matrix::Identity(n, n);
  };
  sys.noise = GaussianNoiseSpec::standard(n);
  sys.jacobian = [A](const StateVector&, long) -> Matrix { return A; };
  return sys;
}

ContinuousSDESystem scalar_sde(double a, double s) {
  ContinuousSDESystem sys;
  sys.dimension = 1;
  sys.noise_dimension = 1;
  sys.drift = [a](const StateVector& x, double) -> StateVector { return a * x; };
  sys.diffusion = [s](const StateVector&, double) -> Matrix { return Matrix::Constant(1, 1, s); };
  sys.jacobian = [a](const StateVector&, double) -> Matrix { return Matrix::Constant(1, 1, a); };
  return sys;
}

}  // namespace

Json to_json(const Constants& k) {
  Json j;
  switch (k.kind) {
    case Constants::Kind::kDiscrete:
      j["kind"] = "discrete";
      j["beta"] = k.beta;
      j["c"] = k.c;
      break;
    case Constants::Kind::kContinuous:
      j["kind"] = "continuous";
      j["lambda"] = k.lambda;
      j["c_c"] = k.c_c;
      break;
    case Constants::Kind::kHybrid:
      j["kind"] = "hybrid";
      j["beta"] = k.beta;
      j["lambda"] = k.lambda;
      j["c_d"] = k.c_d;
      j["c_c"] = k.c_c;
      j["tau"] = k.tau;
      break;
  }
  return j;
}

Constants constants_from_json(const Json& j) {
  try {
    Constants k;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "discrete") {
      k.kind = Constants::Kind::kDiscrete;
      k.beta = j.at("beta").get<double>();
      k.c = j.at("c").get<double>();
    } else if (kind == "continuous") {
      k.kind = Constants::Kind::kContinuous;
      k.lambda = j.at("lambda").get<double>();
      k.c_c = j.at("c_c").get<double>();
    } else if (kind == "hybrid") {
      k.kind = Constants::Kind::kHybrid;
      k.beta = j.at("beta").get<double>();
      k.lambda = j.at("lambda").get<double>();
      k.c_d = j.at("c_d").get<double>();
      k.c_c = j.at("c_c").get<double>();
      k.tau = j.at("tau").get<double>();
    } else {
      throw ConfigError("constants.kind must be discrete, continuous or hybrid");
    }
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed constants: ") + e.what());
  }
}

BuiltSystem build_system(const ExperimentConfig& c) {
  const auto& p = c.params;
  const int n = system_dimension(c.system);
  BuiltSystem out;
  out.metric = c.metric ? MetricSpec::constant(*c.metric) : MetricSpec::identity(n);
  if (c.system == "ou1d") {
    out.model = linear_map(Matrix::Constant(1, 1, p.at("rho")), p.at("sigma"));
  } else if (c.system == "linear-map") {
    Matrix A(2, 2);
    A << p.at("a11"), p.at("a12"), p.at("a21"), p.at("a22");
    out.model = linear_map(A, p.at("sigma"));
  } else if (c.system == "brownian") {
    out.model = scalar_sde(0.0, p.at("sigma"));
  } else if (c.system == "hybrid-linear") {
    HybridSystem h;
    h.continuous = scalar_sde(p.at("a"), p.at("s"));
    h.reset = linear_map(Matrix::Constant(1, 1, p.at("rho")), p.at("s_d"));
    h.dwell_time = p.at("tau");
    out.model = h;
  } else if (c.system == "hopf-cpg") {
    out.model = cpg::make_cpg_system(cpg_params(c));
  } else {
    default_params(c.system);  // throws for unknown names
  }
  return out;
}

CertifyResult certify_builtin(const ExperimentConfig& c) {
  CertifyResult out;
  Json& j = out.certificate;
  j["system"] = c.system;
  Json params = Json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  j["params"] = params;
  Constants& k = out.constants;

  if (c.system == "hopf-cpg") {
    // Certified on the transverse coordinates ŷ = Vx̂ with the identity metric.
    const auto cp = cpg_params(c);
    const auto proj = cpg::build_projections();
    const auto reset = cpg::reduced_reset_system(cp, proj);
    const auto disc = certify_discrete(reset, MetricSpec::identity(4), region_for(c.region, 4));
    const auto rate = cpg::reduced_continuous_rate(proj, region_for(c.region, 6), c.workers);
    const auto noise = noise_bound_continuous(cpg::reduced_noise_system(cp), Matrix::Identity(4, 4),
                                              region_for(c.region, 4));
    ContractionCertificate cont;
    cont.kind = ContractionCertificate::Kind::kContinuous;
    cont.rate = -rate.value;
    cont.noise_bound = noise.value;
    cont.metric = Matrix::Identity(4, 4);
    cont.region = region_for(c.region, 6);
    cont.rate_argmax = rate.argmax;
    cont.noise_argmax = noise.argmax;
    HybridCertificate hc{disc, cont, cp.tau};
    j["coordinates"] = "transverse";
    j["certificate"] = scontract::to_json(hc);
    k.kind = Constants::Kind::kHybrid;
    k.beta = disc.rate;
    k.lambda = cont.rate;
    k.c_d = disc.noise_bound;
    k.c_c = cont.noise_bound;
    k.tau = cp.tau;
  } else {
    const BuiltSystem sys = build_system(c);
    const SamplingRegion region = region_for(c.region, system_dimension(c.system));
    if (const auto* d = std::get_if<DiscreteMapSystem>(&sys.model)) {
      const auto cert = certify_discrete(*d, sys.metric, region);
      j["certificate"] = scontract::to_json(cert);
      k.kind = Constants::Kind::kDiscrete;
      k.beta = cert.rate;
      k.c = cert.noise_bound;
    } else if (const auto* s = std::get_if<ContinuousSDESystem>(&sys.model)) {
      const auto cert = certify_continuous(*s, sys.metric, region);
      j["certificate"] = scontract::to_json(cert);
      k.kind = Constants::Kind::kContinuous;
      k.lambda = cert.rate;
      k.c_c = cert.noise_bound;
    } else {
      const auto& h = std::get<HybridSystem>(sys.model);
      const auto cert = certify_hybrid(h, sys.metric, region);
      j["certificate"] = scontract::to_json(cert);
      k.kind = Constants::Kind::kHybrid;
      k.beta = cert.discrete.rate;
      k.lambda = cert.continuous.rate;
      k.c_d = cert.discrete.noise_bound;
      k.c_c = cert.continuous.noise_bound;
      k.tau = h.dwell_time;
    }
  }
  j["constants"] = to_json(k);
  return out;
}

double initial_ms_distance(const InitialCondition& initial, const Matrix& M) {
  if (initial.kind == InitialCondition::Kind::kPointMass) {
    const StateVector d = initial.a0 - initial.b0;
    return d.dot(M * d);
  }
  // Independent uniforms: E(a−b)(a−b)ᵀ = 2 diag(width²/12).
  const Eigen::ArrayXd w = initial.upper - initial.lower;
  return (M.diagonal().array() * w.square() / 6.0).sum();
}

std::optional<BoundReport> bound_for(const Constants& k, double e0, bool noise_free,
                                     bool point_mass_initial) {
  BoundReport r;
  switch (k.kind) {
    case Constants::Kind::kContinuous:
      return std::nullopt;
    case Constants::Kind::kDiscrete:
      r = discrete_ms_bound(k.beta, k.c, e0, point_mass_initial);
      break;
    case Constants::Kind::kHybrid:
      // The certified λ̂ of an exactly neutral flow can carry rounding noise;
      // snap it so the classifier sees the intended regime.
      r = hybrid_bound(k.beta, std::abs(k.lambda) < 1e-12 ? 0.0 : k.lambda, k.c_d, k.c_c, k.tau,
                       e0);
      break;
  }
  return noise_free ? apply_noisefree_corollary(r) : r;
}

}  // namespace scontract::cli
