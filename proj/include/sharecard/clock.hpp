#pragma once

#include <atomic>
#include <chrono>
#include <string>

namespace sharecard {

using TimePoint = std::chrono::system_clock::time_point;
using Millis = std::chrono::milliseconds;

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
public:
    TimePoint now() const override { return std::chrono::system_clock::now(); }
};

/// Virtual clock for deterministic TTL and expiry tests.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimePoint start = TimePoint{}) : now_(start.time_since_epoch().count()) {}

    TimePoint now() const override { return TimePoint(TimePoint::duration(now_.load())); }
    void set(TimePoint t) { now_ = t.time_since_epoch().count(); }
    void advance(TimePoint::duration d) { now_ += d.count(); }

private:
    std::atomic<TimePoint::rep> now_;
};

/// UTC RFC 3339 with millisecond precision, e.g. 2024-05-01T12:00:00.000Z.
std::string format_rfc3339(TimePoint t);
/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM)". Throws std::invalid_argument.
TimePoint parse_rfc3339(const std::string& text);

}  // namespace sharecard
