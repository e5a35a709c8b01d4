#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>

namespace voltcast {

/// Calendar date stored as days since 1970-01-01 (market-local, no timezone math).
struct Date {
    int32_t days = 0;

    auto operator<=>(const Date&) const = default;

    Date next() const { return Date{days + 1}; }
    Date prev() const { return Date{days - 1}; }

    int year() const { return int(ymd().year()); }
    int month() const { return unsigned(ymd().month()); }
    int day() const { return unsigned(ymd().day()); }
    /// 0 = Sunday .. 6 = Saturday.
    int day_of_week() const {
        std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{days}}};
        return int(wd.c_encoding());
    }

    std::chrono::year_month_day ymd() const {
        return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days}}};
    }

    static Date from_ymd(int y, int m, int d);
};

/// Local timestamp = date + minute-of-day.
struct Timestamp {
    Date date;
    int minute_of_day = 0;
};

/// Parses "YYYY-MM-DD". Throws DataError on malformed input.
Date parse_date(const std::string& s);

/// Parses "YYYY-MM-DD HH:MM[:SS]" or the 'T'-separated form.
Timestamp parse_timestamp(const std::string& s);

std::string format_date(Date d);
std::string format_timestamp(const Timestamp& t);

}  // namespace voltcast
