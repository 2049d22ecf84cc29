#include "config.hpp"

#include <cmath>
#include <set>

namespace scontract::cli {

namespace {

const std::map<std::string, std::map<std::string, double>>& registry() {
  static const std::map<std::string, std::map<std::string, double>> r = {
      {"ou1d", {{"rho", 0.5}, {"sigma", 1.0}}},
      {"brownian", {{"sigma", 1.0}}},
      {"linear-map",
       {{"a11", 0.5}, {"a12", 0.2}, {"a21", 0.0}, {"a22", 0.3}, {"sigma", 1.0}}},
      {"hybrid-linear", {{"a", -1.0}, {"s", 1.0}, {"rho", 0.5}, {"s_d", 1.0}, {"tau", 0.5}}},
      {"hopf-cpg", {{"gamma", 0.2}, {"tau", 0.1}, {"sigma_c", 0.1}, {"sigma_d", 0.05}}},
  };
  return r;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

template <class T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' is missing or has the wrong type");
  }
}

StateVector vector_from(const Json& j, const std::string& key) {
  const auto values = get_as<std::vector<double>>(j, key);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    require(allowed.count(key) > 0, "unknown field '" + key + "' in " + where);
  }
}

}  // namespace

const std::map<std::string, double>& default_params(const std::string& system) {
  const auto it = registry().find(system);
  if (it == registry().end()) {
    throw ConfigError("unknown system '" + system + "' (known: " + builtin_list() + ")");
  }
  return it->second;
}

bool is_builtin(const std::string& system) { return registry().count(system) > 0; }

std::string builtin_list() {
  std::string out;
  for (const auto& [name, _] : registry()) out += (out.empty() ? "" : ", ") + name;
  return out;
}

int system_dimension(const std::string& system) {
  if (system == "linear-map") return 2;
  if (system == "hopf-cpg") return 6;
  default_params(system);
  return 1;
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j,
             {"system", "params", "metric", "ensemble", "region", "noise_free", "workers",
              "output"},
             "config");
  ExperimentConfig c;
  if (j.contains("system")) c.system = get_as<std::string>(j, "system");
  if (j.contains("params")) {
    require(j["params"].is_object(), "params must be an object");
    for (const auto& [key, value] : j["params"].items()) {
      require(value.is_number(), "parameter '" + key + "' must be a number");
      c.params[key] = value.get<double>();
    }
  }
  if (j.contains("metric") && !j["metric"].is_null()) {
    const auto rows = get_as<std::vector<std::vector<double>>>(j, "metric");
    require(!rows.empty(), "metric must be a non-empty square matrix");
    Matrix M(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      require(rows[r].size() == rows.size(), "metric must be square");
      for (std::size_t k = 0; k < rows.size(); ++k) M(r, k) = rows[r][k];
    }
    c.metric = M;
  }
  if (j.contains("ensemble")) {
    const Json& e = j["ensemble"];
    check_keys(e,
               {"N", "horizon", "h", "seed", "pairing_mode", "interior_samples", "record_stride",
                "initial"},
               "ensemble");
    if (e.contains("N")) c.ensemble = get_as<long>(e, "N");
    if (e.contains("horizon")) c.horizon = get_as<double>(e, "horizon");
    if (e.contains("h")) c.h = get_as<double>(e, "h");
    if (e.contains("seed")) c.seed = get_as<std::uint64_t>(e, "seed");
    if (e.contains("pairing_mode")) {
      try {
        c.pairing = pairing_mode_from_string(get_as<std::string>(e, "pairing_mode"));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
      }
    }
    if (e.contains("interior_samples")) c.interior_samples = get_as<int>(e, "interior_samples");
    if (e.contains("record_stride")) c.record_stride = get_as<long>(e, "record_stride");
    if (e.contains("initial") && !e["initial"].is_null()) {
      const Json& i = e["initial"];
      const auto kind = get_as<std::string>(i, "kind");
      if (kind == "point") {
        check_keys(i, {"kind", "a0", "b0"}, "initial");
        c.initial = InitialCondition::point(vector_from(i, "a0"), vector_from(i, "b0"));
      } else if (kind == "box") {
        check_keys(i, {"kind", "lower", "upper"}, "initial");
        c.initial = InitialCondition::box(vector_from(i, "lower"), vector_from(i, "upper"));
      } else {
        throw ConfigError("initial.kind must be 'point' or 'box'");
      }
    }
  }
  if (j.contains("region")) {
    const Json& r = j["region"];
    check_keys(r, {"kind", "extent", "samples", "seed"}, "region");
    if (r.contains("kind")) c.region.kind = get_as<std::string>(r, "kind");
    if (r.contains("extent")) c.region.extent = get_as<double>(r, "extent");
    if (r.contains("samples")) c.region.samples = get_as<int>(r, "samples");
    if (r.contains("seed")) c.region.seed = get_as<std::uint64_t>(r, "seed");
  }
  if (j.contains("noise_free")) c.noise_free = get_as<bool>(j, "noise_free");
  if (j.contains("workers")) c.workers = get_as<int>(j, "workers");
  if (j.contains("output")) c.out_dir = get_as<std::string>(j, "output");
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["system"] = c.system;
  Json params = Json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  j["params"] = params;
  j["metric"] = c.metric ? to_json(*c.metric) : Json(nullptr);
  Json e;
  e["N"] = c.ensemble;
  e["horizon"] = c.horizon;
  e["h"] = c.h;
  e["seed"] = c.seed;
  e["pairing_mode"] = to_string(c.pairing);
  e["interior_samples"] = c.interior_samples;
  e["record_stride"] = c.record_stride;
  if (c.initial) {
    Json i;
    if (c.initial->kind == InitialCondition::Kind::kPointMass) {
      i["kind"] = "point";
      i["a0"] = to_json(c.initial->a0);
      i["b0"] = to_json(c.initial->b0);
    } else {
      i["kind"] = "box";
      i["lower"] = to_json(c.initial->lower);
      i["upper"] = to_json(c.initial->upper);
    }
    e["initial"] = i;
  } else {
    e["initial"] = nullptr;
  }
  j["ensemble"] = e;
  Json r;
  r["kind"] = c.region.kind;
  r["extent"] = c.region.extent;
  r["samples"] = c.region.samples;
  r["seed"] = c.region.seed;
  j["region"] = r;
  j["noise_free"] = c.noise_free;
  // workers is left out on purpose: it never changes results.
  j["output"] = c.out_dir;
  return j;
}

ExperimentConfig resolve(ExperimentConfig c) {
  const auto& defaults = default_params(c.system);
  for (const auto& [key, value] : c.params) {
    require(defaults.count(key) > 0, "unknown parameter '" + key + "' for system " + c.system);
    require(std::isfinite(value), "parameter '" + key + "' must be finite");
  }
  for (const auto& [key, value] : defaults) c.params.emplace(key, value);
  const auto& p = c.params;
  const int n = system_dimension(c.system);

  if (c.system == "ou1d" || c.system == "linear-map" || c.system == "brownian") {
    require(p.at("sigma") >= 0.0, "sigma must be non-negative");
  }
  if (c.system == "hybrid-linear") {
    require(p.at("tau") > 0.0, "tau must be positive");
    require(p.at("s") >= 0.0 && p.at("s_d") >= 0.0, "noise intensities must be non-negative");
  }
  if (c.system == "hopf-cpg") {
    require(p.at("gamma") > 0.0 && p.at("gamma") < 1.0, "gamma must lie in (0, 1)");
    require(p.at("tau") > 0.0, "tau must be positive");
    require(p.at("sigma_c") >= 0.0 && p.at("sigma_d") >= 0.0,
            "noise intensities must be non-negative");
  }

  const bool discrete = c.system == "ou1d" || c.system == "linear-map";
  if (c.ensemble == 0) c.ensemble = c.system == "hopf-cpg" ? 200 : 10000;
  require(c.ensemble >= 1, "ensemble size N must be at least 1");
  if (c.horizon == 0.0) {
    if (c.system == "ou1d") c.horizon = 200;
    else if (c.system == "linear-map") c.horizon = 100;
    else if (c.system == "brownian") c.horizon = 2;
    else if (c.system == "hybrid-linear") c.horizon = 10 * p.at("tau");
    else c.horizon = 50;
  }
  require(c.horizon > 0.0 && std::isfinite(c.horizon), "horizon must be positive");
  if (discrete) {
    require(std::abs(c.horizon - std::round(c.horizon)) < 1e-9,
            "discrete horizon must be an integer step count");
  }
  if (c.h == 0.0) c.h = p.count("tau") ? p.at("tau") / 100.0 : 0.01;
  require(c.h > 0.0 && std::isfinite(c.h), "step h must be positive");
  if (c.interior_samples < 0) c.interior_samples = c.system == "hybrid-linear" ? 4 : 0;
  if (c.record_stride == 0) c.record_stride = c.system == "brownian" ? 10 : 1;
  require(c.record_stride >= 1, "record_stride must be at least 1");
  if (!c.initial) {
    if (c.system == "hopf-cpg") {
      c.initial = InitialCondition::box(StateVector::Constant(n, -1.0),
                                        StateVector::Constant(n, 1.0));
    } else {
      c.initial = InitialCondition::point(StateVector::Zero(n), StateVector::Zero(n));
    }
  }
  if (c.initial->kind == InitialCondition::Kind::kPointMass) {
    require(c.initial->a0.size() == n && c.initial->b0.size() == n,
            "initial states must have dimension " + std::to_string(n));
  } else {
    require(c.initial->lower.size() == n && c.initial->upper.size() == n,
            "initial box must have dimension " + std::to_string(n));
    require(((c.initial->upper - c.initial->lower).array() >= 0.0).all(),
            "initial box needs lower <= upper");
  }
  if (c.metric) {
    require(c.metric->rows() == n, "metric must be " + std::to_string(n) + "x" +
                                       std::to_string(n) + " for " + c.system);
  }
  require(c.region.kind == "box" || c.region.kind == "sphere",
          "region.kind must be 'box' or 'sphere'");
  require(c.region.extent > 0.0, "region.extent must be positive");
  require(c.region.samples >= 1, "region.samples must be at least 1");
  require(c.workers >= 1, "workers must be at least 1");
  return c;
}

}  // namespace scontract::cli
