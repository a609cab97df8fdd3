// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace voltail::units {

/// The library works in years. Minute inputs are converted by one of two clocks.
enum class TimeConvention {
    trading,   // 252 days x 6.5 h x 60 min = 98280 min / yr
    calendar,  // 365.25 days x 24 h x 60 min = 525960 min / yr
};

inline constexpr double trading_minutes_per_year = 252.0 * 6.5 * 60.0;
inline constexpr double calendar_minutes_per_year = 365.25 * 24.0 * 60.0;

[[nodiscard]] constexpr double minutes_per_year(TimeConvention c) noexcept {
    return c == TimeConvention::trading ? trading_minutes_per_year : calendar_minutes_per_year;
}

[[nodiscard]] constexpr double minutes_to_years(double minutes, TimeConvention c) noexcept {
    return minutes / minutes_per_year(c);
}

[[nodiscard]] constexpr std::string_view to_string(TimeConvention c) noexcept {
    return c == TimeConvention::trading ? "trading" : "calendar";
}

}  // namespace voltail::units
