#include "wms/util/time.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>

namespace wms {

namespace {

bool parse_int(std::string_view s, int& out)
{
    if (s.empty())
        return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

std::tm to_tm(TimePoint t, long long& micros)
{
    auto us = t.time_since_epoch().count();
    auto secs = us / 1'000'000;
    micros = us % 1'000'000;
    if (micros < 0) {
        micros += 1'000'000;
        --secs;
    }
    std::time_t tt = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    return tm;
}

} // namespace

TimePoint now()
{
    return std::chrono::time_point_cast<std::chrono::microseconds>(Clock::now());
}

std::string format_rfc3339(TimePoint t)
{
    long long micros = 0;
    std::tm tm = to_tm(t, micros);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, micros);
    return buf;
}

std::string format_compact(TimePoint t)
{
    long long micros = 0;
    std::tm tm = to_tm(t, micros);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::optional<TimePoint> parse_rfc3339(std::string_view s)
{
    // YYYY-MM-DDTHH:MM:SS[.ffffff]Z
    if (s.size() < 20 || s.back() != 'Z')
        return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    std::tm tm{};
    int year = 0, mon = 0, day = 0, hour = 0, min = 0, sec = 0;
    if (!parse_int(s.substr(0, 4), year) || !parse_int(s.substr(5, 2), mon) ||
        !parse_int(s.substr(8, 2), day) || !parse_int(s.substr(11, 2), hour) ||
        !parse_int(s.substr(14, 2), min) || !parse_int(s.substr(17, 2), sec))
        return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60)
        return std::nullopt;
    long long micros = 0;
    std::string_view rest = s.substr(19, s.size() - 20);
    if (!rest.empty()) {
        if (rest[0] != '.' || rest.size() < 2 || rest.size() > 7)
            return std::nullopt;
        std::string frac(rest.substr(1));
        for (char c : frac)
            if (c < '0' || c > '9')
                return std::nullopt;
        frac.resize(6, '0');
        micros = std::stoll(frac);
    }
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    std::time_t secs = timegm(&tm);
    return TimePoint{std::chrono::microseconds{static_cast<long long>(secs) * 1'000'000 + micros}};
}

} // namespace wms
