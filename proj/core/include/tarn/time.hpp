#pragma once

#include <chrono>
#include <cstdint>

namespace tarn {

using Duration = std::chrono::milliseconds;

// Virtual clock of the discrete-event simulator. It never touches wall time.
struct SimClock {
    using duration = Duration;
    using rep = duration::rep;
    using period = duration::period;
    using time_point = std::chrono::time_point<SimClock, duration>;
    static constexpr bool is_steady = true;
};

using SimTime = SimClock::time_point;

constexpr SimTime at_ms(std::int64_t ms) noexcept { return SimTime{Duration{ms}}; }
constexpr std::int64_t to_ms(SimTime t) noexcept { return t.time_since_epoch().count(); }

} // namespace tarn
