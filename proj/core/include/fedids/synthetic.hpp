#pragma once

// Synthetic VeReMi-like beacon logs. Vehicles move in straight lines at
// constant speed inside a square area; each vehicle belongs to one class and
// falsifies its reported position according to that class:
//   1  constant position     2  constant offset     4  uniform random position
//   8  random offset         16 eventual stop (frozen position, zero speed)

#include "fedids/veremi.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace fedids {

struct SyntheticSpec {
    /// Records per raw label.
    std::map<int, std::size_t> counts{{0, 600}, {1, 600}, {2, 600}, {4, 600}, {8, 600}, {16, 600}};
    double area = 100.0;  // metres, positions start in [0, area)^2
    double speed_min = 1.0;
    double speed_max = 5.0;
    double beacon_interval = 1.0;  // seconds
    std::size_t beacons_per_vehicle = 20;
    double start_time = 25200.0;
    Vec3 fixed_position{5555.55, 5555.55, 0.0};
    Vec3 offset{-60000.0, -60000.0, 0.0};
    double random_min = 100000.0;
    double random_max = 999999.0;
    /// Type 8 adds an offset uniform in [-scale, scale] per planar axis.
    double random_offset_scale = 20000.0;
    /// Fraction of a type-16 trajectory reported truthfully before stopping.
    double stop_fraction = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Records sorted by send time; message ids count up in that order and
/// sender ids are a shuffled numbering of the vehicles.
std::vector<MessageRecord> generate_synthetic(const SyntheticSpec& spec);

}  // namespace fedids
