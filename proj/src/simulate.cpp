#include "scontract/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "internal.hpp"

namespace scontract {

namespace {

constexpr long kPairsPerBlock = 32;

long integer_ratio(double numerator, double denominator, const char* what) {
  const double q = numerator / denominator;
  const double r = std::round(q);
  if (!(denominator > 0.0) || !std::isfinite(q) || r < 0.0 ||
      std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) {
    throw std::invalid_argument(std::string(what) + " must be a non-negative integer multiple");
  }
  return static_cast<long>(r);
}

void require_finite(const StateVector& x, long index) {
  if (!x.allFinite()) {
    throw NonFiniteState("state became non-finite at index " + std::to_string(index), index);
  }
}

using detail::format_double;
using detail::Moments;

struct GridSlot {
  double time;
  SampleSide side;
};

std::vector<GridSlot> build_grid(const SystemModel& system, const EnsembleConfig& config) {
  std::vector<GridSlot> grid;
  if (std::holds_alternative<DiscreteMapSystem>(system)) {
    const long steps = integer_ratio(config.horizon, 1.0, "discrete horizon");
    for (long k = 0; k <= steps; ++k) grid.push_back({static_cast<double>(k), SampleSide::kPost});
  } else if (std::holds_alternative<ContinuousSDESystem>(system)) {
    const long steps = integer_ratio(config.horizon, config.sde_step, "horizon / sde_step");
    for (long j = 0; j <= steps; j += config.record_stride) {
      grid.push_back({j * config.sde_step, SampleSide::kInterior});
    }
    if (steps % config.record_stride != 0) {
      grid.push_back({steps * config.sde_step, SampleSide::kInterior});
    }
  } else {
    const auto& hybrid = std::get<HybridSystem>(system);
    const long resets = integer_ratio(config.horizon, hybrid.dwell_time, "horizon / dwell_time");
    const long sub = integer_ratio(hybrid.dwell_time, config.sde_step, "dwell_time / sde_step");
    for (long k = 0; k <= resets; ++k) {
      const double t = k * hybrid.dwell_time;
      grid.push_back({t, SampleSide::kPre});
      grid.push_back({t, SampleSide::kPost});
      if (k == resets) break;
      for (int i = 1; i <= config.interior_samples; ++i) {
        const long step = sub * i / (config.interior_samples + 1);
        if (step <= 0 || step >= sub) continue;
        grid.push_back({t + step * config.sde_step, SampleSide::kInterior});
      }
    }
  }
  return grid;
}

// States of one trajectory on the grid. Stops early (shorter result) when the
// state becomes non-finite.
std::vector<StateVector> trajectory_on_grid(const SystemModel& system,
                                            const EnsembleConfig& config,
                                            const StateVector& x0, NoiseStream& noise,
                                            std::size_t grid_size) {
  std::vector<StateVector> out;
  out.reserve(grid_size);
  try {
    if (const auto* d = std::get_if<DiscreteMapSystem>(&system)) {
      StateVector x = x0;
      require_finite(x, 0);
      out.push_back(x);
      for (std::size_t k = 1; k < grid_size; ++k) {
        x = step_discrete(*d, x, static_cast<long>(k - 1), noise);
        out.push_back(x);
      }
    } else if (const auto* c = std::get_if<ContinuousSDESystem>(&system)) {
      StateVector x = x0;
      require_finite(x, 0);
      out.push_back(x);
      const long steps = integer_ratio(config.horizon, config.sde_step, "horizon / sde_step");
      long done = 0;
      while (out.size() < grid_size) {
        const long next = std::min(done + config.record_stride, steps);
        advance_sde(*c, x, done * config.sde_step, next - done, config.sde_step, noise);
        done = next;
        out.push_back(x);
      }
    } else {
      const auto& h = std::get<HybridSystem>(system);
      for (auto& sample :
           run_hybrid(h, x0, config.horizon, config.sde_step, noise, config.interior_samples)) {
        out.push_back(std::move(sample.state));
      }
    }
  } catch (const NonFiniteState&) {
    // `out` holds the finite prefix.
  }
  while (!out.empty() && !out.back().allFinite()) out.pop_back();
  return out;
}

StateVector initial_state(const InitialCondition& init, bool first, NoiseStream& stream) {
  if (init.kind == InitialCondition::Kind::kPointMass) return first ? init.a0 : init.b0;
  StateVector x(init.lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = stream.uniform(init.lower(i), init.upper(i));
  return x;
}

int system_dimension(const SystemModel& system) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HybridSystem>) {
          return s.continuous.dimension;
        } else {
          return s.dimension;
        }
      },
      system);
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t pair_index,
                         std::uint64_t member_index, std::uint64_t domain) {
  auto split = [](std::uint64_t v) {
    return std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(v),
                                        static_cast<std::uint32_t>(v >> 32)};
  };
  const auto a = split(master_seed);
  const auto b = split(pair_index);
  const auto c = split(member_index);
  const auto d = split(domain);
  std::seed_seq seq{a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]};
  engine_.seed(seq);
}

NoiseStream NoiseStream::silent() {
  NoiseStream s;
  s.silent_ = true;
  return s;
}

double NoiseStream::standard_normal() {
  if (silent_) return 0.0;
  return normal_(engine_);
}

Eigen::VectorXd NoiseStream::standard_normal(Eigen::Index d) {
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal();
  return z;
}

double NoiseStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

NoiseStream derive_stream(std::uint64_t master_seed, std::uint64_t pair_index,
                          std::uint64_t member_index) {
  return NoiseStream(master_seed, pair_index, member_index, 0);
}

StateVector step_discrete(const DiscreteMapSystem& system, const StateVector& x, long k,
                          NoiseStream& noise) {
  StateVector next = system.map(x, k);
  if (!noise.is_silent() && system.noise.dimension() > 0) {
    const Eigen::VectorXd w = system.noise.sqrt * noise.standard_normal(system.noise.dimension());
    next += system.noise_gain(x, k) * w;
  }
  require_finite(next, k + 1);
  return next;
}

void advance_sde(const ContinuousSDESystem& system, StateVector& x, double t0, long steps,
                 double h, NoiseStream& noise) {
  const double root_h = std::sqrt(h);
  for (long j = 0; j < steps; ++j) {
    const double t = t0 + j * h;
    StateVector increment = system.drift(x, t) * h;
    if (!noise.is_silent() && system.noise_dimension > 0) {
      increment += system.diffusion(x, t) * (root_h * noise.standard_normal(system.noise_dimension));
    }
    x += increment;
    require_finite(x, j + 1);
  }
}

SdePath integrate_sde(const ContinuousSDESystem& system, const StateVector& x0, double t0,
                      double t1, double h, NoiseStream& noise) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate_sde: step must be positive");
  const long steps = integer_ratio(t1 - t0, h, "(t1 - t0) / h");
  SdePath path;
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  StateVector x = x0;
  path.times.push_back(t0);
  path.states.push_back(x);
  for (long j = 0; j < steps; ++j) {
    advance_sde(system, x, t0 + j * h, 1, h, noise);
    path.times.push_back(t0 + (j + 1) * h);
    path.states.push_back(x);
  }
  return path;
}

std::string to_string(SampleSide side) {
  switch (side) {
    case SampleSide::kPre: return "pre";
    case SampleSide::kPost: return "post";
    case SampleSide::kInterior: return "interior";
  }
  return "interior";
}

Side metric_side(SampleSide side) { return side == SampleSide::kPre ? Side::kLeft : Side::kRight; }

std::vector<TrajectorySample> run_hybrid(const HybridSystem& system, const StateVector& x0,
                                         double horizon, double h, NoiseStream& noise,
                                         int interior_samples) {
  if (!(system.dwell_time > 0.0)) throw std::invalid_argument("dwell_time must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("run_hybrid: step must be positive");
  const long resets = integer_ratio(horizon, system.dwell_time, "horizon / dwell_time");
  const long sub = integer_ratio(system.dwell_time, h, "dwell_time / h");
  std::vector<long> interior_steps;
  for (int i = 1; i <= interior_samples; ++i) {
    const long step = sub * i / (interior_samples + 1);
    if (step > 0 && step < sub) interior_steps.push_back(step);
  }

  std::vector<TrajectorySample> out;
  StateVector x = x0;
  require_finite(x, 0);
  for (long k = 0; k <= resets; ++k) {
    const double t = k * system.dwell_time;
    out.push_back({t, SampleSide::kPre, x});
    x = step_discrete(system.reset, x, k, noise);
    out.push_back({t, SampleSide::kPost, x});
    if (k == resets) break;
    long done = 0;
    for (long step : interior_steps) {
      advance_sde(system.continuous, x, t + done * h, step - done, h, noise);
      done = step;
      out.push_back({t + step * h, SampleSide::kInterior, x});
    }
    advance_sde(system.continuous, x, t + done * h, sub - done, h, noise);
  }
  return out;
}

std::string to_string(PairingMode mode) {
  return mode == PairingMode::kTwoNoisy ? "two-noisy" : "noisy-vs-noisefree";
}

PairingMode pairing_mode_from_string(const std::string& name) {
  if (name == "two-noisy") return PairingMode::kTwoNoisy;
  if (name == "noisy-vs-noisefree") return PairingMode::kNoisyVsNoiseFree;
  throw std::invalid_argument("unknown pairing mode '" + name + "'");
}

InitialCondition InitialCondition::point(StateVector a0, StateVector b0) {
  InitialCondition ic;
  ic.kind = Kind::kPointMass;
  ic.a0 = std::move(a0);
  ic.b0 = std::move(b0);
  return ic;
}

InitialCondition InitialCondition::box(StateVector lower, StateVector upper) {
  InitialCondition ic;
  ic.kind = Kind::kBoxUniform;
  ic.lower = std::move(lower);
  ic.upper = std::move(upper);
  return ic;
}

void validate_ensemble_config(const SystemModel& system, const EnsembleConfig& config) {
  if (config.pair_count < 1) throw std::invalid_argument("pair_count must be at least 1");
  if (!(config.horizon >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
  if (config.workers < 1) throw std::invalid_argument("workers must be at least 1");
  const int n = system_dimension(system);
  const auto& init = config.initial;
  if (init.kind == InitialCondition::Kind::kPointMass) {
    if (init.a0.size() != n || init.b0.size() != n) {
      throw std::invalid_argument("initial states must have the system dimension");
    }
  } else if (init.lower.size() != n || init.upper.size() != n ||
             ((init.upper - init.lower).array() < 0.0).any()) {
    throw std::invalid_argument("initial box must have the system dimension and lower <= upper");
  }
  if (std::holds_alternative<DiscreteMapSystem>(system)) {
    integer_ratio(config.horizon, 1.0, "discrete horizon");
    return;
  }
  if (!(config.sde_step > 0.0)) throw std::invalid_argument("sde_step must be positive");
  if (const auto* h = std::get_if<HybridSystem>(&system)) {
    if (!(h->dwell_time > 0.0)) throw std::invalid_argument("dwell_time must be positive");
    integer_ratio(h->dwell_time, config.sde_step, "dwell_time / sde_step");
    integer_ratio(config.horizon, h->dwell_time, "horizon / dwell_time");
    if (config.interior_samples < 0) throw std::invalid_argument("interior_samples must be >= 0");
  } else {
    integer_ratio(config.horizon, config.sde_step, "horizon / sde_step");
    if (config.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
  }
}

EnsembleStats run_pair_ensemble(const SystemModel& system, const EnsembleConfig& config,
                                const MetricSpec& metric) {
  validate_ensemble_config(system, config);
  const std::vector<GridSlot> grid = build_grid(system, config);
  const std::size_t G = grid.size();

  std::vector<Matrix> metrics;
  metrics.reserve(G);
  for (const auto& slot : grid) metrics.push_back(metric.value(slot.time, metric_side(slot.side)));

  const long blocks = (config.pair_count + kPairsPerBlock - 1) / kPairsPerBlock;
  std::vector<std::vector<Moments>> block_moments(blocks, std::vector<Moments>(G));
  std::vector<std::vector<PairFailure>> block_failures(blocks);
  detail::parallel_blocks(blocks, config.workers, [&](long b) {
    const long first = b * kPairsPerBlock;
    const long last = std::min(config.pair_count, first + kPairsPerBlock);
    for (long p = first; p < last; ++p) {
      NoiseStream init_a(config.master_seed, p, 0, 1);
      NoiseStream init_b(config.master_seed, p, 1, 1);
      const StateVector a0 = initial_state(config.initial, true, init_a);
      const StateVector b0 = initial_state(config.initial, false, init_b);
      NoiseStream noise_a = derive_stream(config.master_seed, p, 0);
      NoiseStream noise_b = config.pairing == PairingMode::kTwoNoisy
                                ? derive_stream(config.master_seed, p, 1)
                                : NoiseStream::silent();
      const auto path_a = trajectory_on_grid(system, config, a0, noise_a, G);
      const auto path_b = trajectory_on_grid(system, config, b0, noise_b, G);
      const std::size_t alive = std::min(path_a.size(), path_b.size());
      std::size_t g = 0;
      for (; g < alive; ++g) {
        const StateVector d = path_a[g] - path_b[g];
        const double sq = d.dot(metrics[g] * d);
        if (!std::isfinite(sq)) break;
        block_moments[b][g].add(sq);
      }
      if (g < G) block_failures[b].push_back({p, static_cast<long>(g), grid[g].time});
    }
  });

  EnsembleStats stats;
  stats.pair_count = config.pair_count;
  std::vector<Moments> total(G);
  for (long b = 0; b < blocks; ++b) {
    for (std::size_t g = 0; g < G; ++g) total[g].merge(block_moments[b][g]);
    stats.failures.insert(stats.failures.end(), block_failures[b].begin(),
                          block_failures[b].end());
  }
  stats.grid.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    GridPoint pt;
    pt.time = grid[g].time;
    pt.side = grid[g].side;
    pt.n_alive = total[g].n;
    pt.mean = total[g].n > 0 ? total[g].mean : std::numeric_limits<double>::quiet_NaN();
    pt.std_error = total[g].std_error();
    stats.grid.push_back(pt);
  }
  return stats;
}

void EnsembleStats::write_csv(std::ostream& os) const {
  os << "time,side,mean_sq_dist,stderr,n_alive\n";
  for (const auto& pt : grid) {
    os << format_double(pt.time) << ',' << to_string(pt.side) << ',' << format_double(pt.mean)
       << ',' << format_double(pt.std_error) << ',' << pt.n_alive << '\n';
  }
}

std::string EnsembleStats::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

BoundCheck check_against_bound(const EnsembleStats& stats, const BoundReport& report,
                               double sigmas) {
  BoundCheck check;
  check.bound.reserve(stats.grid.size());
  check.pass.reserve(stats.grid.size());
  for (const auto& pt : stats.grid) {
    const double bound = report.inputs.hybrid
                             ? report.at_time(pt.time, metric_side(pt.side))
                             : report.at_step(std::lround(pt.time));
    check.bound.push_back(bound);
    const bool ok = pt.n_alive == 0 || pt.mean - sigmas * pt.std_error <= bound;
    check.pass.push_back(ok);
    check.all_pass = check.all_pass && ok;
    if (pt.n_alive > 0) {
      const double excess = pt.mean - bound;
      double score;
      if (pt.std_error > 0.0) {
        score = excess / pt.std_error;
      } else {
        score = excess > 0.0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
      }
      check.worst_excess_in_stderr = std::max(check.worst_excess_in_stderr, score);
    }
  }
  return check;
}

}  // namespace scontract
