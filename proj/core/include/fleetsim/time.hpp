#pragma once
#include <cstdint>

namespace fleetsim {

// Simulation time: integer milliseconds since the start of the trace epoch.
// Epoch day 0 is a Monday, 00:00 local time.
using SimTime = std::int64_t;
using DurationMs = std::int64_t;

inline constexpr DurationMs kMsPerSecond = 1000;
inline constexpr DurationMs kMsPerMinute = 60 * kMsPerSecond;
inline constexpr DurationMs kMsPerHour = 60 * kMsPerMinute;
inline constexpr DurationMs kMsPerDay = 24 * kMsPerHour;

inline constexpr DurationMs minutes(std::int64_t m) { return m * kMsPerMinute; }
inline constexpr DurationMs seconds(std::int64_t s) { return s * kMsPerSecond; }
inline constexpr DurationMs hours(std::int64_t h) { return h * kMsPerHour; }

inline constexpr double to_hours(DurationMs ms) {
    return static_cast<double>(ms) / static_cast<double>(kMsPerHour);
}

// Day-of-week for a sim timestamp; 0 = Monday ... 6 = Sunday.
inline int day_of_week(SimTime t) {
    std::int64_t day = t / kMsPerDay;
    return static_cast<int>(day % 7);
}

inline bool is_weekend(SimTime t) { return day_of_week(t) >= 5; }

// Fraction of the day elapsed, in [0, 24).
inline double hour_of_day(SimTime t) {
    return static_cast<double>(t % kMsPerDay) / static_cast<double>(kMsPerHour);
}

}  // namespace fleetsim
