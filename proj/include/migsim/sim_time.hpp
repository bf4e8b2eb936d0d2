#pragma once

#include <cstdint>

namespace migsim {

/// Simulated time in integer nanoseconds. All timing arithmetic stays in
/// integers so that identical seeds reproduce byte-identical traces.
using SimTime = std::int64_t;

constexpr SimTime kMicrosecond = 1'000;
constexpr SimTime kMillisecond = 1'000'000;
constexpr SimTime kSecond = 1'000'000'000;

inline double to_seconds(SimTime t) { return static_cast<double>(t) / 1e9; }

}  // namespace migsim
