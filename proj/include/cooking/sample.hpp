#pragma once

#include <cstdint>
#include <string>

namespace cooking {

/// One timestamped probe reading.
struct TemperatureSample {
    std::string device_id;
    std::int64_t seq = 0;
    std::int64_t t_ms = 0;
    double temp_f = 0;

    friend bool operator==(const TemperatureSample&, const TemperatureSample&) = default;
};

/// Accepted range for any target or alarm temperature, °F.
inline constexpr double kMinSettableF = 32.0;
inline constexpr double kMaxSettableF = 572.0;

inline bool settable(double temp_f) { return temp_f >= kMinSettableF && temp_f <= kMaxSettableF; }

}  // namespace cooking
