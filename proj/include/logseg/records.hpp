#pragma once

#include <string>

#include <json.hpp>

#include "logseg/baseline.hpp"
#include "logseg/loss.hpp"
#include "logseg/metrics.hpp"
#include "logseg/preprocess.hpp"
#include "logseg/segmenter.hpp"
#include "logseg/synthgen.hpp"

// JSON mappings for the records that travel through files. Readers accept
// partial objects: absent keys keep their defaults, unknown keys are errors.
namespace logseg {

using nlohmann::json;

json to_json(const NormalizationRecord& r);
NormalizationRecord normalization_from_json(const json& j);

json to_json(const LossWeights& w);
/// Overlays the keys present in j onto base.
LossWeights loss_weights_from_json(const json& j, LossWeights base = {});

json to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig base = {});

json to_json(const BaselineConfig& c);
BaselineConfig baseline_config_from_json(const json& j, BaselineConfig base = {});

json to_json(const SyntheticLogSpec& s);
SyntheticLogSpec synthetic_spec_from_json(const json& j);

json to_json(const Metrics& m);
json to_json(const EvalReport& r);
json to_json(const std::vector<AblationRow>& rows);

/// Parses text, mapping syntax errors and type mismatches to ParseError.
json parse_json(const std::string& text, const std::string& what);

}  // namespace logseg
