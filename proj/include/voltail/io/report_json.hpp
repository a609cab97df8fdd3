// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include <json.hpp>

#include "voltail/density.hpp"
#include "voltail/dims.hpp"
#include "voltail/estimators.hpp"
#include "voltail/model.hpp"
#include "voltail/tails.hpp"

namespace voltail::io {

[[nodiscard]] nlohmann::json to_json(const dims::DimReport& r);
[[nodiscard]] nlohmann::json to_json(const model::AsymptoticReport& r);
[[nodiscard]] nlohmann::json to_json(const model::StylizedFactReport& r);
[[nodiscard]] nlohmann::json to_json(const model::RegimeReport& r);
[[nodiscard]] nlohmann::json to_json(const estimators::FitResult& r);
[[nodiscard]] nlohmann::json to_json(const density::TailFit& r);
[[nodiscard]] nlohmann::json to_json(const tails::ScalingFit& r);

/// Columns sigma,q,source.
void write_density_csv(std::ostream& os, const density::DensityGrid& d);

}  // namespace voltail::io
