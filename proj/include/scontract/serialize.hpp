#pragma once

// JSON views of certificates, bound reports and CPG experiment summaries.
// Non-finite numbers are written as null.

#include "json.hpp"
#include "scontract/bounds.hpp"
#include "scontract/certify.hpp"
#include "scontract/cpg.hpp"

namespace scontract {

using Json = nlohmann::ordered_json;

Json to_json(const Eigen::VectorXd& v);
/// Row-major nested arrays.
Json to_json(const Matrix& m);
Json to_json(const SamplingRegion& region);
Json to_json(const SampledMax& max);
Json to_json(const ContractionCertificate& cert);
Json to_json(const HybridCertificate& cert);
Json to_json(const BoundReport& report);
Json to_json(const cpg::DeltaBound& bound);
Json to_json(const cpg::CPGParams& params);
/// β, sync condition, bound values and the steady-state estimate.
Json summary_json(const cpg::CPGExperiment& ex);

}  // namespace scontract
