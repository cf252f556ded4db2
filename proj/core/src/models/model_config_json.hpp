#pragma once

#include <json.hpp>

#include "poolforge/models/model_config.hpp"

namespace poolforge::models {

void to_json_object(nlohmann::json& j, const ModelConfig& config);
ModelConfig from_json_object(const nlohmann::json& j);

}  // namespace poolforge::models
