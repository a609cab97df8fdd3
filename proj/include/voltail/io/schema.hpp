// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Validation against the subset of JSON Schema used by the config schema:
/// type, properties, required, additionalProperties (false), enum, items,
/// minItems, minimum, maximum, exclusiveMinimum and local "#/$defs/..." refs.

#include <string>
#include <vector>

#include <json.hpp>

namespace voltail::io {

struct SchemaIssue {
    std::string pointer;  // JSON pointer into the instance, "" for the root
    std::string message;
};

[[nodiscard]] std::vector<SchemaIssue> validate_schema(const nlohmann::json& instance,
                                                       const nlohmann::json& schema);

/// The published config schema, schemas/config.schema.json, compiled in.
[[nodiscard]] const nlohmann::json& config_schema();

}  // namespace voltail::io
