#include "voltcast/calendar.hpp"

#include <cstdio>

#include "voltcast/errors.hpp"

namespace voltcast {

Date Date::from_ymd(int y, int m, int d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "invalid calendar date %04d-%02d-%02d", y, m, d);
        throw DataError(buf);
    }
    return Date{int32_t(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

Date parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
        throw DataError("malformed date '" + s + "' (expected YYYY-MM-DD)");
    return Date::from_ymd(y, m, d);
}

Timestamp parse_timestamp(const std::string& s) {
    int y = 0, m = 0, d = 0, hh = 0, mm = 0, ss = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &m, &d, &sep, &hh, &mm, &ss);
    if (n < 6 || (sep != ' ' && sep != 'T'))
        throw DataError("malformed timestamp '" + s + "' (expected YYYY-MM-DD HH:MM[:SS])");
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 59)
        throw DataError("out-of-range time in timestamp '" + s + "'");
    return Timestamp{Date::from_ymd(y, m, d), hh * 60 + mm};
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year(), d.month(), d.day());
    return buf;
}

std::string format_timestamp(const Timestamp& t) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s %02d:%02d", format_date(t.date).c_str(),
                  t.minute_of_day / 60, t.minute_of_day % 60);
    return buf;
}

}  // namespace voltcast
