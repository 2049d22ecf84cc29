#include "scontract/serialize.hpp"

#include <algorithm>
#include <cmath>

namespace scontract {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r))));
  return out;
}

Json to_json(const SamplingRegion& region) {
  Json out;
  out["kind"] = to_string(region.kind);
  switch (region.kind) {
    case SamplingRegion::Kind::kBox:
      out["lower"] = to_json(region.lower);
      out["upper"] = to_json(region.upper);
      break;
    case SamplingRegion::Kind::kSphere:
      out["center"] = to_json(region.center);
      out["radius"] = number(region.radius);
      break;
    case SamplingRegion::Kind::kPoints:
      out["point_count"] = region.points.size();
      break;
  }
  out["sample_count"] = region.sample_count;
  out["seed"] = region.seed;
  return out;
}

Json to_json(const SampledMax& max) {
  Json out;
  out["value"] = number(max.value);
  out["argmax"] = to_json(max.argmax);
  out["sample_count"] = max.sample_count;
  return out;
}

Json to_json(const ContractionCertificate& cert) {
  Json out;
  out["kind"] = to_string(cert.kind);
  out["rate"] = number(cert.rate);
  out["noise_bound"] = number(cert.noise_bound);
  out["is_global_claim"] = cert.is_global_claim;
  out["metric"] = to_json(cert.metric);
  out["region"] = to_json(cert.region);
  out["rate_argmax"] = to_json(cert.rate_argmax);
  out["noise_argmax"] = to_json(cert.noise_argmax);
  return out;
}

Json to_json(const HybridCertificate& cert) {
  Json out;
  out["dwell_time"] = number(cert.dwell_time);
  out["discrete"] = to_json(cert.discrete);
  out["continuous"] = to_json(cert.continuous);
  return out;
}

Json to_json(const BoundReport& report) {
  Json out;
  out["tag"] = to_string(report.tag);
  out["noise_free"] = report.noise_free;
  out["bounded"] = report.is_bounded();
  out["asymptotic_bound"] = number(report.asymptotic_bound);
  out["transient_rate"] = number(report.transient_rate_per_step);
  out["growth_factor"] = number(report.growth_factor);
  out["sup_bound"] = number(report.sup_bound);
  Json in;
  in["beta"] = number(report.inputs.beta);
  if (report.inputs.hybrid) {
    in["lambda"] = number(report.inputs.lambda);
    in["c_d"] = number(report.inputs.c_d);
    in["c_c"] = number(report.inputs.c_c);
    in["tau"] = number(report.inputs.tau);
  } else {
    in["c"] = number(report.inputs.c);
  }
  in["e0"] = number(report.inputs.e0);
  out["inputs"] = in;
  out["warnings"] = report.warnings;
  return out;
}

Json to_json(const cpg::DeltaBound& bound) {
  Json out;
  out["beta"] = number(bound.beta);
  out["closed_form"] = number(bound.closed_form);
  out["pipeline"] = number(bound.pipeline);
  out["pipeline_sup"] = number(bound.pipeline_sup);
  out["caption_value"] = number(bound.caption_value);
  out["caption_discrepancy"] = bound.caption_discrepancy;
  out["report"] = to_json(bound.report);
  return out;
}

Json to_json(const cpg::CPGParams& params) {
  Json out;
  out["gamma"] = number(params.gamma);
  out["tau"] = number(params.tau);
  out["sigma_c"] = number(params.sigma_c);
  out["sigma_d"] = number(params.sigma_d);
  out["h"] = number(params.step());
  return out;
}

Json summary_json(const cpg::CPGExperiment& ex) {
  Json out;
  out["params"] = to_json(ex.params);
  out["runs"] = ex.options.runs;
  out["horizon"] = number(ex.options.horizon);
  out["seed"] = ex.options.seed;
  out["beta"] = number(ex.beta);
  out["sync_condition"] = ex.sync;
  out["bound"] = ex.bound ? to_json(*ex.bound) : Json(nullptr);
  out["steady_window_start"] = number(ex.options.horizon * (1.0 - ex.options.steady_fraction));
  out["steady_mean_delta"] = number(ex.steady_mean);
  out["steady_stderr"] = number(ex.steady_std_error);
  if (ex.bound) {
    out["steady_window_bound"] = number(ex.steady_window_bound);
    // δ of unit-size states cannot resolve below (rounding error)², while
    // the noise-free bound keeps decaying geometrically.
    const double floor = 1e-20 * std::max(1.0, ex.max_radius * ex.max_radius);
    out["steady_within_pipeline_bound"] =
        ex.steady_mean + 3.0 * ex.steady_std_error <= ex.steady_window_bound + floor;
  }
  out["max_radius"] = number(ex.max_radius);
  return out;
}

}  // namespace scontract
