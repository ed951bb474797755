#include "sharecard/clock.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace sharecard {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

std::string format_rfc3339(TimePoint t)
{
    using namespace std::chrono;
    auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
    auto secs = static_cast<std::time_t>(ms >= 0 ? ms / 1000 : (ms - 999) / 1000);
    auto frac = ms - static_cast<long long>(secs) * 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(frac));
    return buf;
}

TimePoint parse_rfc3339(const std::string& text)
{
    int y, mo, d, h, mi, s;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6)
        throw std::invalid_argument("not an RFC 3339 timestamp: " + text);
    std::size_t pos = static_cast<std::size_t>(consumed);
    long long millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 3) {
                millis = millis * 10 + (text[pos] - '0');
                ++digits;
            }
            ++pos;
        }
        while (digits++ < 3)
            millis *= 10;
    }
    long long offset_s = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        int oh = 0, om = 0;
        if (std::sscanf(text.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2)
            throw std::invalid_argument("bad RFC 3339 offset: " + text);
        offset_s = (oh * 3600LL + om * 60LL) * (text[pos] == '+' ? 1 : -1);
        pos += 6;
    } else {
        throw std::invalid_argument("RFC 3339 timestamp needs a zone: " + text);
    }
    if (pos != text.size())
        throw std::invalid_argument("trailing characters in timestamp: " + text);
    long long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    long long total_s = days * 86400 + h * 3600LL + mi * 60LL + s - offset_s;
    return TimePoint(std::chrono::duration_cast<TimePoint::duration>(std::chrono::milliseconds(total_s * 1000 + millis)));
}

}  // namespace sharecard
