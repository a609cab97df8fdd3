// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace voltail::io {

/// UTC microseconds since 1970-01-01 from YYYY-MM-DD[T ]HH:MM[:SS[.fff]] with
/// an optional Z or +-HH[:]MM offset (none means UTC). Throws ErrorKind::io.
[[nodiscard]] std::int64_t parse_iso8601_us(std::string_view s);

struct PriceSeries {
    std::vector<std::int64_t> t_us;  // strictly increasing
    std::vector<double> price;       // positive
};

/// Header `timestamp,price`. Every bad row (unparseable, non-positive price,
/// time not increasing) is collected and reported by line number in one
/// ErrorKind::io exception.
[[nodiscard]] PriceSeries parse_price_csv(std::istream& in);

struct ResampleOptions {
    double gap_minutes = 30.0;
    bool overlapping = false;  // windows start every minute instead of every dt
    bool mean_subtract = true;
};

struct ReturnSample {
    double dt_minutes = 0.0;
    std::vector<double> returns;
    std::uint64_t windows = 0;   // candidate windows on the grid
    std::uint64_t excluded = 0;  // windows overlapping a gap
    std::uint64_t gaps = 0;      // gaps in the series
    double mean = 0.0;           // subtracted when mean_subtract
};

/// Grid t0 + j dt from the first observation; the price at a grid point is the
/// last observation at or before it. A window (t_j, t_j + dt] is excluded when
/// it overlaps a gap (a, b) between consecutive observations with b - a > gap.
[[nodiscard]] ReturnSample resample_returns(const PriceSeries& s, double dt_minutes,
                                            const ResampleOptions& opt = {});

}  // namespace voltail::io
