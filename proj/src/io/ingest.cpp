// SPDX-License-Identifier: Apache-2.0
#include "voltail/io/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <string>

#include "voltail/error.hpp"

namespace voltail::io {

namespace {

constexpr std::int64_t kUsPerMinute = 60'000'000;

struct Cursor {
    std::string_view s;
    std::size_t i = 0;

    bool done() const { return i >= s.size(); }
    char peek() const { return done() ? '\0' : s[i]; }
    bool eat(char c) {
        if (peek() != c) return false;
        ++i;
        return true;
    }
    int digits(std::size_t n) {
        require(i + n <= s.size(), ErrorKind::io, "timestamp too short");
        int v = 0;
        for (std::size_t k = 0; k < n; ++k, ++i) {
            require(s[i] >= '0' && s[i] <= '9', ErrorKind::io, "expected a digit");
            v = 10 * v + (s[i] - '0');
        }
        return v;
    }
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::int64_t parse_iso8601_us(std::string_view text) {
    using namespace std::chrono;
    Cursor c{trim(text)};
    const int y = c.digits(4);
    require(c.eat('-'), ErrorKind::io, "expected '-' after the year");
    const int mo = c.digits(2);
    require(c.eat('-'), ErrorKind::io, "expected '-' after the month");
    const int d = c.digits(2);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    require(ymd.ok(), ErrorKind::io, "invalid calendar date");
    require(c.eat('T') || c.eat(' '), ErrorKind::io, "expected 'T' between date and time");
    const int hh = c.digits(2);
    require(c.eat(':'), ErrorKind::io, "expected ':' after the hour");
    const int mm = c.digits(2);
    int ss = 0;
    std::int64_t frac_us = 0;
    if (c.eat(':')) {
        ss = c.digits(2);
        if (c.eat('.') || c.eat(',')) {
            std::int64_t scale = 100000;
            const std::size_t start = c.i;
            while (!c.done() && c.peek() >= '0' && c.peek() <= '9') {
                frac_us += scale * (c.peek() - '0');
                scale /= 10;
                ++c.i;
            }
            require(c.i > start, ErrorKind::io, "empty fractional seconds");
        }
    }
    require(hh < 24 && mm < 60 && ss < 61, ErrorKind::io, "time of day out of range");
    std::int64_t offset_min = 0;
    if (c.eat('Z') || c.done()) {
        // UTC
    } else {
        const char sign = c.peek();
        require(sign == '+' || sign == '-', ErrorKind::io, "expected Z or a UTC offset");
        ++c.i;
        const int oh = c.digits(2);
        c.eat(':');
        const int om = c.digits(2);
        offset_min = (sign == '+' ? 1 : -1) * (60 * oh + om);
    }
    require(c.done(), ErrorKind::io, "trailing characters in timestamp");
    const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    const std::int64_t secs = days * 86400 + hh * 3600 + mm * 60 + ss - offset_min * 60;
    return secs * 1'000'000 + frac_us;
}

PriceSeries parse_price_csv(std::istream& in) {
    PriceSeries s;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> bad;
    const auto complain = [&](std::size_t n, const std::string& why) {
        bad.push_back("line " + std::to_string(n) + ": " + why);
    };
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = trim(line);
        if (row.empty()) continue;
        if (!header) {
            require(row == "timestamp,price", ErrorKind::io,
                    "line " + std::to_string(lineno) + ": expected header 'timestamp,price'");
            header = true;
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            complain(lineno, "expected two fields");
            continue;
        }
        std::int64_t t = 0;
        try {
            t = parse_iso8601_us(row.substr(0, comma));
        } catch (const Error& e) {
            complain(lineno, std::string("bad timestamp (") + e.what() + ")");
            continue;
        }
        const auto ptxt = trim(row.substr(comma + 1));
        double p = 0.0;
        const auto [ptr, ec] = std::from_chars(ptxt.data(), ptxt.data() + ptxt.size(), p);
        if (ec != std::errc() || ptr != ptxt.data() + ptxt.size() || !std::isfinite(p)) {
            complain(lineno, "bad price '" + std::string(ptxt) + "'");
            continue;
        }
        if (!(p > 0.0)) {
            complain(lineno, "price must be positive");
            continue;
        }
        if (!s.t_us.empty() && t <= s.t_us.back()) {
            complain(lineno, "timestamp not after the previous row");
            continue;
        }
        s.t_us.push_back(t);
        s.price.push_back(p);
    }
    require(header, ErrorKind::io, "empty price file");
    if (!bad.empty()) {
        std::string msg = "price series: " + std::to_string(bad.size()) + " bad row(s)";
        for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg += "\n  " + bad[i];
        if (bad.size() > 20) msg += "\n  ...";
        fail(ErrorKind::io, msg);
    }
    require(s.t_us.size() >= 2, ErrorKind::insufficient_data, "price series: fewer than two rows");
    return s;
}

ReturnSample resample_returns(const PriceSeries& s, double dt_minutes, const ResampleOptions& opt) {
    require(dt_minutes > 0.0 && opt.gap_minutes > 0.0, ErrorKind::domain, "resample: dt and gap must be positive");
    require(s.t_us.size() == s.price.size() && s.t_us.size() >= 2, ErrorKind::dimension,
            "resample: inconsistent price series");
    const auto dt_us = static_cast<std::int64_t>(std::llround(dt_minutes * kUsPerMinute));
    const auto gap_us = static_cast<std::int64_t>(std::llround(opt.gap_minutes * kUsPerMinute));
    require(dt_us > 0, ErrorKind::domain, "resample: dt below a microsecond");
    const std::int64_t step = opt.overlapping ? std::min(dt_us, kUsPerMinute) : dt_us;

    std::vector<std::pair<std::int64_t, std::int64_t>> gaps;
    for (std::size_t i = 1; i < s.t_us.size(); ++i) {
        if (s.t_us[i] - s.t_us[i - 1] > gap_us) gaps.emplace_back(s.t_us[i - 1], s.t_us[i]);
    }

    ReturnSample r;
    r.dt_minutes = dt_minutes;
    r.gaps = gaps.size();
    const std::int64_t t0 = s.t_us.front(), t_end = s.t_us.back();
    // Index of the last observation at or before t; t >= t0 always.
    const auto last_at = [&](std::int64_t t, std::size_t hint) {
        while (hint + 1 < s.t_us.size() && s.t_us[hint + 1] <= t) ++hint;
        return hint;
    };
    std::size_t ia = 0, ib = 0, ig = 0;
    for (std::int64_t a = t0; a + dt_us <= t_end; a += step) {
        const std::int64_t b = a + dt_us;
        ++r.windows;
        ia = last_at(a, ia);
        ib = last_at(b, std::max(ib, ia));
        while (ig < gaps.size() && gaps[ig].second <= a) ++ig;
        if (ig < gaps.size() && gaps[ig].first < b) {
            ++r.excluded;
            continue;
        }
        r.returns.push_back(std::log(s.price[ib] / s.price[ia]));
    }
    if (opt.mean_subtract && !r.returns.empty()) {
        r.mean = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / static_cast<double>(r.returns.size());
        for (auto& x : r.returns) x -= r.mean;
    }
    return r;
}

}  // namespace voltail::io
