#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "scontract/cpg.hpp"
#include "scontract/geometry.hpp"
#include "systems.hpp"

namespace scontract::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config_path;
  std::string system;
  std::vector<std::string> params;
  std::optional<std::uint64_t> seed;
  std::optional<long> ensemble;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::string> out;
  std::optional<std::string> pairing;
  std::optional<int> workers;
  bool noise_free = false;
  bool print_config = false;

  // bounds
  std::string certificate_path;
  std::optional<double> beta, c, lambda, c_d, c_c, tau, e0;
  bool distance = false;
  bool table = false;

  // cpg
  std::optional<double> gamma, sigma_c, sigma_d;
  bool both = false;
  double gamma_weak = 0.01;
  double gamma_strong = 0.2;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON experiment config");
  cmd->add_option("--system", f.system, "built-in system: " + builtin_list());
  cmd->add_option("--param", f.params, "system parameter override NAME=VALUE (repeatable)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--ensemble", f.ensemble, "number of pairs / runs");
  cmd->add_option("--dt", f.dt, "Euler-Maruyama step");
  cmd->add_option("--horizon", f.horizon, "time horizon (step count for discrete systems)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--pairing", f.pairing, "two-noisy | noisy-vs-noisefree");
  cmd->add_option("--workers", f.workers, "worker threads (results do not depend on it)");
  cmd->add_flag("--noise-free", f.noise_free,
                "compare with a noise-free trajectory (bounds: halve the noise constants)");
  cmd->add_flag("--print-config", f.print_config, "print the resolved config and exit");
}

ExperimentConfig load_config(const Flags& f, const std::string& forced_system) {
  ExperimentConfig c;
  bool system_in_file = false;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ConfigError("cannot open config file '" + f.config_path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    c = config_from_json(j);
    system_in_file = j.contains("system");
  }
  if (!f.system.empty()) c.system = f.system;
  if (!forced_system.empty()) {
    if ((system_in_file || !f.system.empty()) && c.system != forced_system) {
      throw ConfigError("this command only runs " + forced_system);
    }
    c.system = forced_system;
  }
  default_params(c.system);  // rejects unknown names before anything else
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects NAME=VALUE, got '" + kv + "'");
    try {
      std::size_t used = 0;
      const std::string text = kv.substr(eq + 1);
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      c.params[kv.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw ConfigError("--param value is not a number: '" + kv + "'");
    }
  }
  if (f.gamma) c.params["gamma"] = *f.gamma;
  if (f.sigma_c) c.params["sigma_c"] = *f.sigma_c;
  if (f.sigma_d) c.params["sigma_d"] = *f.sigma_d;
  if (f.tau && c.system != "ou1d" && c.system != "linear-map" && c.system != "brownian") {
    c.params["tau"] = *f.tau;
  }
  if (f.seed) c.seed = *f.seed;
  if (f.ensemble) {
    if (*f.ensemble < 1) throw ConfigError("ensemble size N must be at least 1");
    c.ensemble = *f.ensemble;
  }
  if (f.dt) c.h = *f.dt;
  if (f.horizon) c.horizon = *f.horizon;
  if (f.out) c.out_dir = *f.out;
  if (f.workers) c.workers = *f.workers;
  if (f.pairing) {
    try {
      c.pairing = pairing_mode_from_string(*f.pairing);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (f.noise_free) c.noise_free = true;
  if (c.pairing == PairingMode::kNoisyVsNoiseFree) c.noise_free = true;
  return resolve(c);
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_certify(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = load_config(f, "");
  if (f.print_config) {
    out << dump(config_to_json(c));
    return kExitOk;
  }
  const CertifyResult r = certify_builtin(c);
  const std::string text = dump(r.certificate);
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / "certificate.json", text);
  out << text;
  return kExitOk;
}

Constants raw_constants(const Flags& f) {
  Constants k;
  const bool hybrid = f.lambda || f.c_d || f.c_c || f.tau;
  if (!f.beta) throw ConfigError("--beta is required with raw constants");
  k.beta = *f.beta;
  if (hybrid) {
    if (!(f.lambda && f.c_d && f.c_c && f.tau)) {
      throw ConfigError("hybrid constants need --beta, --lambda, --cd, --cc and --tau");
    }
    k.kind = Constants::Kind::kHybrid;
    k.lambda = *f.lambda;
    k.c_d = *f.c_d;
    k.c_c = *f.c_c;
    k.tau = *f.tau;
  } else {
    if (!f.c) throw ConfigError("discrete constants need --beta and --c");
    k.kind = Constants::Kind::kDiscrete;
    k.c = *f.c;
  }
  return k;
}

void print_table(const BoundReport& r, std::ostream& out) {
  out << "tag              " << to_string(r.tag) << "\n"
      << "noise_free       " << (r.noise_free ? "yes" : "no") << "\n"
      << "asymptote        " << r.asymptotic_bound << "\n"
      << "transient_factor " << r.transient_rate_per_step << "\n"
      << "sup_bound        " << r.sup_bound << "\n";
  for (const auto& w : r.warnings) out << "warning          " << w << "\n";
}

int cmd_bounds(const Flags& f, std::ostream& out) {
  Constants k;
  double e0 = f.e0.value_or(0.0);
  bool point_mass = false;
  const bool raw = f.beta || f.c || f.lambda || f.c_d || f.c_c;
  if (!f.certificate_path.empty()) {
    std::ifstream in(f.certificate_path);
    if (!in) throw ConfigError("cannot open certificate '" + f.certificate_path + "'");
    try {
      k = constants_from_json(Json::parse(in).at("constants"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed certificate: ") + e.what());
    }
  } else if (raw) {
    k = raw_constants(f);
  } else {
    const ExperimentConfig c = load_config(f, "");
    if (f.print_config) {
      out << dump(config_to_json(c));
      return kExitOk;
    }
    k = certify_builtin(c).constants;
    const BuiltSystem sys = build_system(c);
    if (!f.e0) e0 = initial_ms_distance(*c.initial, sys.metric.value(0.0));
    point_mass = c.initial->kind == InitialCondition::Kind::kPointMass;
  }
  if (f.distance) {
    if (k.kind != Constants::Kind::kDiscrete) {
      throw ConfigError("--distance applies to discrete constants only");
    }
    BoundReport r = discrete_distance_bound(k.beta, k.c, e0, point_mass);
    if (f.noise_free) r = apply_noisefree_corollary(r);
    f.table ? print_table(r, out) : void(out << dump(scontract::to_json(r)));
    return kExitOk;
  }
  const auto r = bound_for(k, e0, f.noise_free, point_mass);
  if (!r) throw ConfigError("continuous-only systems have no reset and no mean-square bound");
  if (f.table) {
    print_table(*r, out);
  } else {
    out << dump(scontract::to_json(*r));
  }
  return kExitOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = load_config(f, "");
  if (f.print_config) {
    out << dump(config_to_json(c));
    return kExitOk;
  }
  const BuiltSystem sys = build_system(c);
  EnsembleConfig ec;
  ec.pair_count = c.ensemble;
  ec.horizon = c.horizon;
  ec.sde_step = c.h;
  ec.pairing = c.noise_free ? PairingMode::kNoisyVsNoiseFree : c.pairing;
  ec.master_seed = c.seed;
  ec.initial = *c.initial;
  ec.record_stride = c.record_stride;
  ec.interior_samples = c.interior_samples;
  ec.workers = c.workers;
  try {
    validate_ensemble_config(sys.model, ec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  // The transverse certificate of the CPG does not bound full-state pairs.
  std::optional<BoundReport> bound;
  if (c.system != "hopf-cpg") {
    const Constants k = certify_builtin(c).constants;
    bound = bound_for(k, initial_ms_distance(*c.initial, sys.metric.value(0.0)), c.noise_free,
                      c.initial->kind == InitialCondition::Kind::kPointMass);
  }
  const EnsembleStats stats = run_pair_ensemble(sys.model, ec, sys.metric);

  Json summary;
  summary["system"] = c.system;
  summary["pairs"] = c.ensemble;
  summary["seed"] = c.seed;
  summary["pairing_mode"] = to_string(ec.pairing);
  summary["failed_pairs"] = stats.failures.size();
  const auto& last = stats.grid.back();
  summary["final_time"] = last.time;
  summary["final_mean_sq_dist"] = last.mean;
  summary["final_stderr"] = last.std_error;

  std::ostringstream csv;
  bool violated = false;
  if (bound && bound->is_bounded()) {
    const BoundCheck check = check_against_bound(stats, *bound);
    violated = !check.all_pass;
    csv << "time,side,mean_sq_dist,stderr,n_alive,bound,verdict\n";
    std::istringstream base(stats.to_csv());
    std::string line;
    std::getline(base, line);
    for (std::size_t g = 0; std::getline(base, line); ++g) {
      csv << line << ',' << format_number(check.bound[g]) << ','
          << (check.pass[g] ? "PASS" : "FAIL") << '\n';
    }
    summary["bound"] = scontract::to_json(*bound);
    summary["verdict"] = violated ? "FAIL" : "PASS";
    summary["failing_points"] = std::count(check.pass.begin(), check.pass.end(), false);
    summary["worst_excess_in_stderr"] = std::isfinite(check.worst_excess_in_stderr)
                                            ? Json(check.worst_excess_in_stderr)
                                            : Json(nullptr);
  } else {
    stats.write_csv(csv);
    summary["bound"] = bound ? scontract::to_json(*bound) : Json(nullptr);
    summary["verdict"] = nullptr;
    // Growth over the run: ratio of the final mean to the first positive one.
    double first = 0.0;
    for (const auto& pt : stats.grid) {
      if (pt.n_alive > 0 && pt.mean > 0.0) {
        first = pt.mean;
        break;
      }
    }
    summary["growth_ratio"] =
        first > 0.0 && std::isfinite(last.mean) ? Json(last.mean / first) : Json(nullptr);
  }

  if (!c.out_dir.empty()) {
    write_file(fs::path(c.out_dir) / "ensemble.csv", csv.str());
    write_file(fs::path(c.out_dir) / "summary.json", dump(summary));
    out << dump(summary);
  } else {
    out << csv.str();
  }
  return violated ? kExitBoundViolation : kExitOk;
}

Json run_one_cpg(const ExperimentConfig& c, double gamma, const std::string& prefix,
                 cpg::CPGExperiment* result = nullptr) {
  cpg::CPGParams p;
  p.gamma = gamma;
  p.tau = c.params.at("tau");
  p.sigma_c = c.params.at("sigma_c");
  p.sigma_d = c.params.at("sigma_d");
  p.h = c.h;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cpg::CPGRunOptions o;
  o.runs = c.ensemble;
  o.horizon = c.horizon;
  o.seed = c.seed;
  o.workers = c.workers;
  const cpg::CPGExperiment ex = cpg::run_cpg_experiment(p, o);
  if (!c.out_dir.empty()) {
    const fs::path dir(c.out_dir);
    std::ostringstream trace, aligned, delta;
    ex.write_trace_csv(trace);
    ex.write_aligned_csv(aligned);
    ex.write_delta_csv(delta);
    write_file(dir / (prefix + "trace.csv"), trace.str());
    write_file(dir / (prefix + "aligned.csv"), aligned.str());
    write_file(dir / (prefix + "delta.csv"), delta.str());
  }
  if (result) *result = ex;
  return summary_json(ex);
}

int cmd_cpg(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = load_config(f, "hopf-cpg");
  if (f.print_config) {
    out << dump(config_to_json(c));
    return kExitOk;
  }
  Json summary;
  bool violated = false;
  auto check = [&](const Json& s) {
    if (s.contains("steady_within_pipeline_bound") && !s["steady_within_pipeline_bound"]) {
      violated = true;
    }
  };
  if (f.both) {
    const Json weak = run_one_cpg(c, f.gamma_weak, "weak_");
    const Json strong = run_one_cpg(c, f.gamma_strong, "strong_");
    check(weak);
    check(strong);
    summary["weak"] = weak;
    summary["strong"] = strong;
    const double sw = weak["steady_mean_delta"].is_number() ? weak["steady_mean_delta"].get<double>() : 0.0;
    const double ss = strong["steady_mean_delta"].is_number() ? strong["steady_mean_delta"].get<double>() : 0.0;
    summary["weak_over_strong"] = ss > 0.0 ? Json(sw / ss) : Json(nullptr);
  } else {
    summary = run_one_cpg(c, c.params.at("gamma"), "");
    check(summary);
  }
  const std::string text = dump(summary);
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / "summary.json", text);
  out << text;
  return violated ? kExitBoundViolation : kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Certify stochastic contraction, evaluate mean-square bounds and simulate "
               "discrete, continuous and hybrid systems."};
  app.name("scontract");
  app.require_subcommand(1);
  auto* certify = app.add_subcommand("certify", "sample-based contraction certificate");
  auto* bounds = app.add_subcommand("bounds", "mean-square bound from constants or a system");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo pair ensemble with bound verdict");
  auto* cpg_cmd = app.add_subcommand("cpg", "three-oscillator CPG experiment");
  for (auto* cmd : {certify, bounds, simulate, cpg_cmd}) add_common(cmd, f);

  bounds->add_option("--certificate", f.certificate_path, "certificate JSON from `certify`");
  bounds->add_option("--beta", f.beta, "discrete contraction factor");
  bounds->add_option("--c", f.c, "discrete noise constant");
  bounds->add_option("--lambda", f.lambda, "continuous rate (positive contracts)");
  bounds->add_option("--cd", f.c_d, "reset noise constant");
  bounds->add_option("--cc", f.c_c, "continuous noise constant");
  bounds->add_option("--tau", f.tau, "dwell time");
  bounds->add_option("--e0", f.e0, "initial mean-square distance (distance with --distance)");
  bounds->add_flag("--distance", f.distance, "first-moment distance form (discrete)");
  bounds->add_flag("--table", f.table, "plain-text table instead of JSON");

  cpg_cmd->add_option("--gamma", f.gamma, "coupling strength");
  cpg_cmd->add_option("--tau", f.tau, "dwell time");
  cpg_cmd->add_option("--sigma-c", f.sigma_c, "continuous noise intensity");
  cpg_cmd->add_option("--sigma-d", f.sigma_d, "measurement noise intensity");
  cpg_cmd->add_flag("--both", f.both, "run weak and strong coupling");
  cpg_cmd->add_option("--gamma-weak", f.gamma_weak, "weak coupling for --both");
  cpg_cmd->add_option("--gamma-strong", f.gamma_strong, "strong coupling for --both");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  }

  try {
    if (f.noise_free && cpg_cmd->parsed()) {
      // For the CPG experiment --noise-free switches both noise sources off.
      f.sigma_c = 0.0;
      f.sigma_d = 0.0;
    }
    if (certify->parsed()) return cmd_certify(f, out);
    if (bounds->parsed()) return cmd_bounds(f, out);
    if (simulate->parsed()) return cmd_simulate(f, out);
    return cmd_cpg(f, out);
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const BoundRangeError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const NotPositiveDefinite& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const SingularFactor& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const NonFiniteState& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  }
}

}  // namespace scontract::cli
