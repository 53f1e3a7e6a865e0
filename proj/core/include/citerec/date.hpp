#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace citerec {

/// Calendar date (proleptic Gregorian). Comparison is field-wise
/// (year, month, day), which coincides with chronological order for valid
/// dates. Parsing accepts strict "YYYY-MM-DD" only.
struct Date {
    std::int16_t year = 1970;
    std::uint8_t month = 1;
    std::uint8_t day = 1;

    static std::optional<Date> parse(std::string_view text);

    /// Like parse() but throws MalformedLineError-free ConfigError on bad input.
    static Date parse_or_throw(std::string_view text);

    bool valid() const;

    std::string to_string() const;  // "YYYY-MM-DD", zero padded

    /// Days since 1970-01-01 (may be negative).
    std::int64_t to_days() const;
    static Date from_days(std::int64_t days);

    Date next_day() const { return from_days(to_days() + 1); }

    auto operator<=>(const Date&) const = default;
};

}  // namespace citerec
