#include "scontract/cpg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "internal.hpp"
#include "scontract/geometry.hpp"

namespace scontract::cpg {

namespace {

constexpr long kRunsPerBlock = 8;

Mat6 block_diag_rotation(double scale) {
  Mat6 B = Mat6::Zero();
  const Mat2 R = scale * rotation_matrix();
  for (int i = 0; i < 3; ++i) B.block<2, 2>(2 * i, 2 * i) = R;
  return B;
}

Mat6 block_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Mat6 J = Mat6::Zero();
  for (int i = 0; i < 3; ++i) J.block<2, 2>(2 * i, 2 * i) = hopf_jacobian(x.segment<2>(2 * i));
  return J;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("coupling strength gamma must lie in (0, 1)");
  }
}

// Appends `v` to `basis` after two Gram–Schmidt passes unless it is
// (numerically) in the span already.
bool try_append(std::vector<Vec6>& basis, Vec6 v) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= b.dot(v) * b;
  }
  const double n = v.norm();
  if (n < 1e-8) return false;
  basis.push_back(v / n);
  return true;
}

}  // namespace

void CPGParams::validate() const {
  check_gamma(gamma);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (!(sigma_c >= 0.0) || !(sigma_d >= 0.0)) {
    throw std::invalid_argument("noise intensities must be non-negative");
  }
  if (h < 0.0 || !std::isfinite(h)) throw std::invalid_argument("step h must be positive");
  const double q = tau / step();
  if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q) || std::round(q) < 1.0) {
    throw std::invalid_argument("tau / h must be a positive integer");
  }
}

Vec6 CPGState::stacked() const {
  Vec6 v;
  for (int i = 0; i < 3; ++i) v.segment<2>(2 * i) = x[i];
  return v;
}

CPGState CPGState::from_stacked(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 6) throw DimensionMismatch("CPG state must have 6 components");
  CPGState s;
  for (int i = 0; i < 3; ++i) s.x[i] = v.segment<2>(2 * i);
  return s;
}

CPGState CPGState::on_manifold(const Vec2& p) {
  const Mat2 R = rotation_matrix();
  CPGState s;
  s.x = {R * R * p, R * p, p};
  return s;
}

Vec2 hopf_drift(const Vec2& p) {
  const double x = p.x();
  const double y = p.y();
  return {x - y - x * x * x - x * y * y, x + y - y * y * y - y * x * x};
}

Mat2 hopf_jacobian(const Vec2& p) {
  const double x = p.x();
  const double y = p.y();
  Mat2 J;
  J << 1.0 - 3.0 * x * x - y * y, -1.0 - 2.0 * x * y,  //
      1.0 - 2.0 * x * y, 1.0 - 3.0 * y * y - x * x;
  return J;
}

double hopf_sym_max(const Vec2& p) { return 1.0 - p.squaredNorm(); }

Mat2 rotation_matrix() {
  Mat2 R;
  const double s = std::sqrt(3.0) / 2.0;
  R << -0.5, -s, s, -0.5;
  return R;
}

CPGState coupling_reset(const CPGState& state, double gamma, double sigma_d,
                        const std::array<Vec2, 3>& w) {
  check_gamma(gamma);
  const Mat2 R = rotation_matrix();
  const double s = sigma_d / std::sqrt(2.0);
  CPGState next;
  for (int i = 0; i < 3; ++i) {
    const Vec2& xi = state.x[i];
    const Vec2& xn = state.x[(i + 1) % 3];
    next.x[i] = xi + gamma * (R * (xn + s * w[i]) - xi);
  }
  return next;
}

CPGState coupling_reset(const CPGState& state, double gamma, double sigma_d, NoiseStream& noise) {
  std::array<Vec2, 3> w;
  for (auto& wi : w) {
    const double a = noise.standard_normal();
    const double b = noise.standard_normal();
    wi = {a, b};
  }
  return coupling_reset(state, gamma, sigma_d, w);
}

Mat6 coupling_matrix(double gamma) {
  const Mat2 R = rotation_matrix();
  Mat6 L = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    L.block<2, 2>(2 * i, 2 * i) = (1.0 - gamma) * Mat2::Identity();
    L.block<2, 2>(2 * i, 2 * j) = gamma * R;
  }
  return L;
}

ProjectionPair build_projections(std::uint64_t complement_seed) {
  const Mat2 R = rotation_matrix();
  std::vector<Vec6> basis;
  for (int j = 0; j < 2; ++j) {
    const Vec2 e = Vec2::Unit(j);
    Vec6 u;
    u << R * R * e, R * e, e;
    try_append(basis, u / std::sqrt(3.0));
  }
  if (complement_seed == 0) {
    for (int j = 0; j < 6 && basis.size() < 6; ++j) try_append(basis, Vec6::Unit(j));
  } else {
    std::mt19937_64 rng(complement_seed);
    std::normal_distribution<double> normal;
    while (basis.size() < 6) {
      Vec6 v;
      for (int i = 0; i < 6; ++i) v(i) = normal(rng);
      try_append(basis, v);
    }
  }
  ProjectionPair p;
  for (int j = 0; j < 2; ++j) p.U.row(j) = basis[j].transpose();
  for (int j = 0; j < 4; ++j) p.V.row(j) = basis[2 + j].transpose();
  return p;
}

double reduced_discrete_factor(double gamma) {
  check_gamma(gamma);
  return 3.0 * gamma * gamma - 3.0 * gamma + 1.0;
}

Eigen::Vector4d reduced_discrete_spectrum(double gamma, const ProjectionPair& proj) {
  check_gamma(gamma);
  const Eigen::Matrix4d A = proj.V * coupling_matrix(gamma) * proj.V.transpose();
  const Eigen::Matrix4d S = A.transpose() * A;
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

bool sync_condition(double gamma, double tau) {
  return reduced_discrete_factor(gamma) < std::exp(-2.0 * tau);
}

double phase_locking_delta(const CPGState& state) {
  const Mat2 R = rotation_matrix();
  double delta = 0.0;
  for (int i = 0; i < 3; ++i) delta += (R * state.x[(i + 1) % 3] - state.x[i]).squaredNorm();
  return delta;
}

DeltaBound theoretical_delta_bound(const CPGParams& params) {
  params.validate();
  DeltaBound out;
  const double beta = reduced_discrete_factor(params.gamma);
  const double e = std::exp(2.0 * params.tau);
  out.beta = beta;
  if (!(beta * e < 1.0)) {
    throw ConditionViolated("synchronisation condition 3g^2-3g+1 < exp(-2 tau) fails");
  }
  const double g2 = params.gamma * params.gamma;
  const double sd2 = params.sigma_d * params.sigma_d;
  const double sc2 = params.sigma_c * params.sigma_c;
  out.closed_form = (6.0 * g2 * sd2 + 3.0 * (1.0 - beta) * (1.0 + beta - beta * e) * e * sc2) /
                    (2.0 * (1.0 - beta) * (1.0 - beta * e));

  const double c_d = 2.0 * g2 * sd2;
  const double c_c = 2.0 * sc2;
  out.report = apply_noisefree_corollary(
      hybrid_bound_expanding(beta, -1.0, c_d, c_c, params.tau, 0.0));
  out.pipeline = 3.0 * out.report.asymptotic_bound;
  out.pipeline_sup = 3.0 * out.report.sup_bound;
  out.caption_discrepancy =
      std::abs(out.closed_form - out.caption_value) > 0.05 * out.caption_value;
  return out;
}

DiscreteMapSystem reduced_reset_system(const CPGParams& params, const ProjectionPair& proj) {
  params.validate();
  const Eigen::Matrix4d A = proj.V * coupling_matrix(params.gamma) * proj.V.transpose();
  const double s = params.gamma * params.sigma_d / std::sqrt(2.0);
  DiscreteMapSystem sys;
  sys.dimension = 4;
  sys.map = [A](const StateVector& y, long) -> StateVector { return A * y; };
  sys.noise_gain = [s](const StateVector&, long) -> Matrix { return s * Matrix::Identity(4, 4); };
  sys.noise = GaussianNoiseSpec::standard(4);
  sys.jacobian = [A](const StateVector&, long) -> Matrix { return A; };
  return sys;
}

ContinuousSDESystem reduced_noise_system(const CPGParams& params) {
  params.validate();
  const double s = params.sigma_c / std::sqrt(2.0);
  ContinuousSDESystem sys;
  sys.dimension = 4;
  sys.noise_dimension = 4;
  sys.drift = [](const StateVector& y, double) -> StateVector {
    return StateVector::Zero(y.size());
  };
  sys.diffusion = [s](const StateVector&, double) -> Matrix { return s * Matrix::Identity(4, 4); };
  sys.jacobian = [](const StateVector&, double) -> Matrix { return Matrix::Zero(4, 4); };
  return sys;
}

SampledMax reduced_continuous_rate(const ProjectionPair& proj, const SamplingRegion& region,
                                   int workers) {
  if (region.dimension() != 6) throw DimensionMismatch("reduced rate needs a region in R^6");
  const auto samples = region.samples();
  if (samples.empty()) throw EmptyRegion("sampling region has no points");
  std::vector<double> values(samples.size());
  const long n = static_cast<long>(samples.size());
  const long chunk = 256;
  detail::parallel_blocks((n + chunk - 1) / chunk, workers, [&](long b) {
    for (long i = b * chunk; i < std::min(n, (b + 1) * chunk); ++i) {
      const Eigen::Matrix4d A = proj.V * block_jacobian(samples[i]) * proj.V.transpose();
      values[i] = max_symmetric_part_eigenvalue(A);
    }
  });
  SampledMax out;
  out.sample_count = static_cast<int>(n);
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  out.value = values[best];
  out.argmax = samples[best];
  return out;
}

HybridSystem make_cpg_system(const CPGParams& params) {
  params.validate();
  const double gamma = params.gamma;
  const double sc = params.sigma_c / std::sqrt(2.0);
  const Mat6 gain = block_diag_rotation(gamma * params.sigma_d / std::sqrt(2.0));
  const Mat6 L = coupling_matrix(gamma);

  HybridSystem sys;
  sys.dwell_time = params.tau;
  auto& c = sys.continuous;
  c.dimension = 6;
  c.noise_dimension = 6;
  c.drift = [](const StateVector& x, double) -> StateVector {
    StateVector f(6);
    for (int i = 0; i < 3; ++i) f.segment<2>(2 * i) = hopf_drift(x.segment<2>(2 * i));
    return f;
  };
  c.diffusion = [sc](const StateVector&, double) -> Matrix { return sc * Matrix::Identity(6, 6); };
  c.jacobian = [](const StateVector& x, double) -> Matrix { return block_jacobian(x); };

  auto& r = sys.reset;
  r.dimension = 6;
  r.map = [gamma](const StateVector& x, long) -> StateVector {
    const std::array<Vec2, 3> zero{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    return coupling_reset(CPGState::from_stacked(x), gamma, 0.0, zero).stacked();
  };
  r.noise_gain = [gain](const StateVector&, long) -> Matrix { return gain; };
  r.noise = GaussianNoiseSpec{Matrix::Identity(6, 6), Matrix::Identity(6, 6)};
  r.jacobian = [L](const StateVector&, long) -> Matrix { return L; };
  return sys;
}

namespace {

struct RunResult {
  std::vector<double> series;  // δ at (pre, post) of every reset
  double steady = 0.0;
  double max_radius = 0.0;
  std::vector<TraceRow> trace;
  std::vector<AlignedRow> aligned;
  std::vector<DeltaRow> delta_rows;
};

RunResult simulate_run(const CPGParams& params, const CPGRunOptions& opt, long run, long resets,
                       long sub, double steady_start) {
  const double h = params.step();
  const double root_h = std::sqrt(h);
  const double sc = params.sigma_c / std::sqrt(2.0);
  const Mat2 R = rotation_matrix();
  const Mat2 R2 = R * R;

  NoiseStream init(opt.seed, static_cast<std::uint64_t>(run), 0, 1);
  CPGState s;
  if (opt.start_on_manifold) {
    const double a = init.uniform(opt.init_lower, opt.init_upper);
    const double b = init.uniform(opt.init_lower, opt.init_upper);
    s = CPGState::on_manifold({a, b});
  } else {
    for (auto& xi : s.x) {
      const double a = init.uniform(opt.init_lower, opt.init_upper);
      const double b = init.uniform(opt.init_lower, opt.init_upper);
      xi = {a, b};
    }
  }
  NoiseStream noise = derive_stream(opt.seed, static_cast<std::uint64_t>(run), 0);

  RunResult out;
  out.series.reserve(2 * (resets + 1));
  detail::Moments steady;
  const bool keep_trace = run == 0;
  const bool keep_delta = run < opt.delta_runs;

  auto observe = [&](double t, double delta, bool sampled) {
    for (const auto& xi : s.x) out.max_radius = std::max(out.max_radius, xi.norm());
    if (!sampled) return;
    if (t >= steady_start - 1e-12) steady.add(delta);
    if (keep_delta) out.delta_rows.push_back({t, run, delta});
    if (keep_trace && t <= opt.trace_until + 1e-12) {
      for (int i = 0; i < 3; ++i) out.trace.push_back({t, i + 1, s.x[i].x(), s.x[i].y()});
      out.aligned.push_back({t, s.x[0].x(), (R * s.x[1]).x(), (R2 * s.x[2]).x()});
    }
  };

  for (long k = 0; k <= resets; ++k) {
    const double t = k * params.tau;
    out.series.push_back(phase_locking_delta(s));
    s = coupling_reset(s, params.gamma, params.sigma_d, noise);
    const double post = phase_locking_delta(s);
    out.series.push_back(post);
    if (k == resets) {
      observe(t, post, true);
      break;
    }
    for (long j = 0; j < sub; ++j) {
      if (j > 0) {
        const double tj = t + j * h;
        const bool sampled = j % opt.sample_stride == 0;
        observe(tj, sampled ? phase_locking_delta(s) : 0.0, sampled);
      } else {
        observe(t, post, true);
      }
      std::array<double, 6> z;
      for (auto& zi : z) zi = noise.standard_normal();
      for (int i = 0; i < 3; ++i) {
        const Vec2 inc = hopf_drift(s.x[i]) * h + sc * (root_h * Vec2(z[2 * i], z[2 * i + 1]));
        s.x[i] += inc;
      }
      for (const auto& xi : s.x) {
        if (!xi.allFinite()) {
          throw NonFiniteState("CPG run " + std::to_string(run) + " became non-finite", k);
        }
      }
    }
  }
  out.steady = steady.mean;
  return out;
}

}  // namespace

CPGExperiment run_cpg_experiment(const CPGParams& params, const CPGRunOptions& options) {
  params.validate();
  if (options.runs < 1) throw std::invalid_argument("run count must be at least 1");
  if (!(options.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (options.workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (options.sample_stride < 1) throw std::invalid_argument("sample_stride must be >= 1");
  if (!(options.steady_fraction > 0.0 && options.steady_fraction <= 1.0)) {
    throw std::invalid_argument("steady_fraction must lie in (0, 1]");
  }
  if (!(options.init_lower <= options.init_upper)) {
    throw std::invalid_argument("initial box must have lower <= upper");
  }
  const double q = options.horizon / params.tau;
  if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
    throw std::invalid_argument("horizon must be a multiple of tau");
  }
  const long resets = std::lround(q);
  const long sub = std::lround(params.tau / params.step());
  const double steady_start = options.horizon * (1.0 - options.steady_fraction);

  CPGExperiment ex;
  ex.params = params;
  ex.options = options;
  ex.beta = reduced_discrete_factor(params.gamma);
  ex.sync = sync_condition(params.gamma, params.tau);
  if (ex.sync) ex.bound = theoretical_delta_bound(params);

  const long blocks = (options.runs + kRunsPerBlock - 1) / kRunsPerBlock;
  const std::size_t G = static_cast<std::size_t>(2 * (resets + 1));
  std::vector<std::vector<detail::Moments>> block_series(blocks,
                                                         std::vector<detail::Moments>(G));
  std::vector<double> steady(options.runs);
  std::vector<double> radius(options.runs);
  std::vector<std::vector<DeltaRow>> delta_rows(options.runs);
  detail::parallel_blocks(blocks, options.workers, [&](long b) {
    for (long r = b * kRunsPerBlock; r < std::min(options.runs, (b + 1) * kRunsPerBlock); ++r) {
      RunResult res = simulate_run(params, options, r, resets, sub, steady_start);
      for (std::size_t g = 0; g < G; ++g) block_series[b][g].add(res.series[g]);
      steady[r] = res.steady;
      radius[r] = res.max_radius;
      delta_rows[r] = std::move(res.delta_rows);
      if (r == 0) {
        ex.trace = std::move(res.trace);
        ex.aligned = std::move(res.aligned);
      }
    }
  });

  std::vector<detail::Moments> series(G);
  for (long b = 0; b < blocks; ++b) {
    for (std::size_t g = 0; g < G; ++g) series[g].merge(block_series[b][g]);
  }
  ex.delta_series.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    DeltaPoint p;
    p.time = static_cast<double>(g / 2) * params.tau;
    p.side = g % 2 == 0 ? SampleSide::kPre : SampleSide::kPost;
    p.mean = series[g].mean;
    p.std_error = series[g].std_error();
    ex.delta_series.push_back(p);
  }
  detail::Moments st;
  for (double v : steady) st.add(v);
  ex.steady_mean = st.mean;
  ex.steady_std_error = st.std_error();
  ex.max_radius = *std::max_element(radius.begin(), radius.end());
  if (ex.bound) {
    const double e0 = ex.delta_series.front().mean / 3.0;
    const auto report = apply_noisefree_corollary(hybrid_bound_expanding(
        ex.beta, -1.0, ex.bound->report.inputs.c_d, ex.bound->report.inputs.c_c, params.tau, e0));
    // Within a dwell interval the bound grows, so its maximum over the
    // window is attained at the window start or just before a reset.
    double worst = report.at_time(steady_start, Side::kRight);
    for (long k = static_cast<long>(std::ceil(steady_start / params.tau - 1e-9)); k <= resets;
         ++k) {
      worst = std::max(worst, report.at_time(k * params.tau, Side::kLeft));
    }
    ex.steady_window_bound = 3.0 * worst;
  }
  for (auto& rows : delta_rows) {
    ex.delta_rows.insert(ex.delta_rows.end(), rows.begin(), rows.end());
  }
  return ex;
}

void CPGExperiment::write_trace_csv(std::ostream& os) const {
  using detail::format_double;
  os << "t,oscillator,x,y\n";
  for (const auto& r : trace) {
    os << format_double(r.time) << ',' << r.oscillator << ',' << format_double(r.x) << ','
       << format_double(r.y) << '\n';
  }
}

void CPGExperiment::write_aligned_csv(std::ostream& os) const {
  using detail::format_double;
  os << "t,x1_e1,Rx2_e1,R2x3_e1\n";
  for (const auto& r : aligned) {
    os << format_double(r.time) << ',' << format_double(r.a1) << ',' << format_double(r.a2)
       << ',' << format_double(r.a3) << '\n';
  }
}

void CPGExperiment::write_delta_csv(std::ostream& os) const {
  using detail::format_double;
  os << "t,run,delta\n";
  for (const auto& r : delta_rows) {
    os << format_double(r.time) << ',' << r.run << ',' << format_double(r.delta) << '\n';
  }
}

}  // namespace scontract::cpg
