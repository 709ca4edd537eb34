#include "fedids/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace fedids;

namespace {

std::map<std::int64_t, std::vector<MessageRecord>> by_sender(const std::vector<MessageRecord>& records) {
    std::map<std::int64_t, std::vector<MessageRecord>> out;
    for (const auto& r : records) out[r.sender_id].push_back(r);
    return out;
}

double speed_norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

}  // namespace

TEST_CASE("counts, ordering and determinism") {
    SyntheticSpec spec;
    spec.counts = {{0, 45}, {1, 20}, {2, 7}, {4, 0}, {8, 33}, {16, 21}};
    spec.seed = 4;
    const auto records = generate_synthetic(spec);
    std::map<int, std::size_t> counts;
    for (const auto& r : records) ++counts[r.attacker_type];
    CHECK(counts[0] == 45);
    CHECK(counts[1] == 20);
    CHECK(counts[2] == 7);
    CHECK(counts[4] == 0);
    CHECK(counts[8] == 33);
    CHECK(counts[16] == 21);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].message_id == static_cast<std::int64_t>(i));
        if (i) CHECK(records[i - 1].send_time <= records[i].send_time);
        CHECK(records[i].send_time >= spec.start_time);
    }
    CHECK(generate_synthetic(spec) == records);
    spec.seed = 5;
    CHECK_FALSE(generate_synthetic(spec) == records);
    // A vehicle never mixes labels.
    for (const auto& [id, rs] : by_sender(records)) {
        for (const auto& r : rs) CHECK(r.attacker_type == rs.front().attacker_type);
    }
}

TEST_CASE("attack behaviors") {
    SyntheticSpec spec;
    spec.counts = {{0, 200}, {1, 200}, {2, 200}, {4, 200}, {8, 200}, {16, 200}};
    spec.stop_fraction = 0.5;
    spec.seed = 9;
    const auto records = generate_synthetic(spec);
    const auto groups = by_sender(records);
    std::size_t checked[17] = {};
    for (const auto& [id, rs] : groups) {
        const int type = rs.front().attacker_type;
        ++checked[type];
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const auto& r = rs[i];
            switch (type) {
                case 0:
                    if (i) {
                        const double dx = r.position.x - rs[i - 1].position.x, dy = r.position.y - rs[i - 1].position.y,
                                     dz = r.position.z - rs[i - 1].position.z;
                        const double step = std::sqrt(dx * dx + dy * dy + dz * dz);
                        CHECK(std::fabs(step - speed_norm(r.speed) * spec.beacon_interval) < 1e-9);
                    }
                    CHECK(speed_norm(r.speed) >= spec.speed_min - 1e-12);
                    CHECK(speed_norm(r.speed) <= spec.speed_max + 1e-12);
                    break;
                case 1:
                    CHECK(r.position == spec.fixed_position);
                    break;
                case 2:
                    // true track + constant offset: consecutive steps still match the speed
                    CHECK(r.position.x < 0);
                    if (i) {
                        const double dx = r.position.x - rs[i - 1].position.x, dy = r.position.y - rs[i - 1].position.y;
                        CHECK(std::fabs(std::hypot(dx, dy) - speed_norm(r.speed) * spec.beacon_interval) < 1e-6);
                    }
                    break;
                case 4:
                    CHECK(r.position.x >= spec.random_min);
                    CHECK(r.position.x <= spec.random_max);
                    CHECK(r.position.y >= spec.random_min);
                    CHECK(r.position.y <= spec.random_max);
                    break;
                case 8:
                    CHECK(std::fabs(r.position.x) <= spec.area + spec.speed_max * 20 + spec.random_offset_scale);
                    break;
                case 16: {
                    const auto k_stop = static_cast<std::size_t>(std::floor(spec.stop_fraction * static_cast<double>(rs.size())));
                    if (i >= k_stop) {
                        // Frozen at the stop-time position, reached along the true track.
                        CHECK(r.speed == Vec3{});
                        CHECK(r.position == rs[k_stop].position);
                        if (k_stop > 0 && i == k_stop) {
                            const auto& prev = rs[i - 1];
                            const double step = std::hypot(r.position.x - prev.position.x, r.position.y - prev.position.y);
                            CHECK(std::fabs(step - speed_norm(prev.speed) * spec.beacon_interval) < 1e-9);
                        }
                    } else {
                        CHECK(speed_norm(r.speed) > 0);
                    }
                    break;
                }
                default:
                    FAIL("unexpected label");
            }
        }
    }
    for (int t : {0, 1, 2, 4, 8, 16}) CHECK(checked[t] >= 10);
}

TEST_CASE("stop fraction zero freezes type 16 from the start") {
    SyntheticSpec spec;
    spec.counts = {{16, 40}};
    const auto records = generate_synthetic(spec);
    for (const auto& [id, rs] : by_sender(records)) {
        for (const auto& r : rs) {
            CHECK(r.speed == Vec3{});
            CHECK(r.position == rs.front().position);
        }
    }
}

TEST_CASE("spec validation") {
    SyntheticSpec spec;
    spec.speed_min = 6;
    CHECK_THROWS(spec.validate());
    spec = {};
    spec.random_min = 2e6;
    CHECK_THROWS(spec.validate());
    spec = {};
    spec.stop_fraction = 1.5;
    CHECK_THROWS(spec.validate());
    spec = {};
    spec.counts[3] = 1;
    CHECK_THROWS(spec.validate());
    spec = {};
    CHECK_NOTHROW(spec.validate());
}
