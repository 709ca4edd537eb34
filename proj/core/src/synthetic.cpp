#include "fedids/synthetic.hpp"

#include "fedids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedids {

void SyntheticSpec::validate() const {
    for (const auto& [label, n] : counts) {
        if (!is_attacker_label(label)) throw std::invalid_argument("synth: unknown attacker label " + std::to_string(label));
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!(area > 0.0) || !finite(area)) throw std::invalid_argument("synth: area must be positive");
    if (!(speed_min >= 0.0) || !(speed_min <= speed_max) || !finite(speed_max)) {
        throw std::invalid_argument("synth: need 0 <= speed_min <= speed_max");
    }
    if (!(beacon_interval > 0.0) || !finite(beacon_interval)) throw std::invalid_argument("synth: beacon_interval must be positive");
    if (beacons_per_vehicle == 0) throw std::invalid_argument("synth: beacons_per_vehicle must be at least 1");
    if (!(start_time >= 0.0) || !finite(start_time)) throw std::invalid_argument("synth: start_time must be non-negative");
    if (!(random_min <= random_max) || !finite(random_min) || !finite(random_max)) {
        throw std::invalid_argument("synth: need random_min <= random_max");
    }
    if (!(random_offset_scale >= 0.0) || !finite(random_offset_scale)) {
        throw std::invalid_argument("synth: random_offset_scale must be non-negative");
    }
    if (!(stop_fraction >= 0.0 && stop_fraction <= 1.0)) throw std::invalid_argument("synth: stop_fraction must be in [0, 1]");
    for (const double v : {fixed_position.x, fixed_position.y, fixed_position.z, offset.x, offset.y, offset.z}) {
        if (!finite(v)) throw std::invalid_argument("synth: attack vectors must be finite");
    }
}

namespace {

struct Draft {
    MessageRecord record;
    std::size_t vehicle = 0;
};

}  // namespace

std::vector<MessageRecord> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<Draft> drafts;
    std::size_t vehicles = 0;
    for (const auto& [label, count] : spec.counts) {
        std::size_t left = count;
        while (left > 0) {
            const std::size_t k = std::min(spec.beacons_per_vehicle, left);
            left -= k;
            const std::size_t vehicle = vehicles++;
            const double px = rng.uniform(0.0, spec.area);
            const double py = rng.uniform(0.0, spec.area);
            const double speed = rng.uniform(spec.speed_min, spec.speed_max);
            const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double vx = speed * std::cos(heading);
            const double vy = speed * std::sin(heading);
            const double t0 = spec.start_time + rng.uniform(0.0, spec.beacon_interval);
            const auto k_stop = static_cast<std::size_t>(std::floor(spec.stop_fraction * static_cast<double>(k)));

            for (std::size_t b = 0; b < k; ++b) {
                const double dt = static_cast<double>(b) * spec.beacon_interval;
                const Vec3 truth{px + vx * dt, py + vy * dt, 0.0};
                MessageRecord r;
                r.send_time = t0 + dt;
                r.attacker_type = label;
                r.position = truth;
                r.speed = {vx, vy, 0.0};
                switch (label) {
                    case 1:
                        r.position = spec.fixed_position;
                        break;
                    case 2:
                        r.position = {truth.x + spec.offset.x, truth.y + spec.offset.y, truth.z + spec.offset.z};
                        break;
                    case 4: {
                        const double x = rng.uniform(spec.random_min, spec.random_max);
                        const double y = rng.uniform(spec.random_min, spec.random_max);
                        r.position = {x, y, 0.0};
                        break;
                    }
                    case 8: {
                        const double ox = rng.uniform(-spec.random_offset_scale, spec.random_offset_scale);
                        const double oy = rng.uniform(-spec.random_offset_scale, spec.random_offset_scale);
                        r.position = {truth.x + ox, truth.y + oy, 0.0};
                        break;
                    }
                    case 16:
                        if (b >= k_stop) {
                            const double ds = static_cast<double>(k_stop) * spec.beacon_interval;
                            r.position = {px + vx * ds, py + vy * ds, 0.0};
                            r.speed = {0.0, 0.0, 0.0};
                        }
                        break;
                    default:
                        break;
                }
                drafts.push_back({r, vehicle});
            }
        }
    }

    std::vector<std::int64_t> sender(vehicles);
    std::iota(sender.begin(), sender.end(), std::int64_t{1});
    rng.shuffle(std::span<std::int64_t>(sender));
    std::stable_sort(drafts.begin(), drafts.end(),
                     [](const Draft& a, const Draft& b) { return a.record.send_time < b.record.send_time; });

    std::vector<MessageRecord> out;
    out.reserve(drafts.size());
    for (std::size_t m = 0; m < drafts.size(); ++m) {
        auto r = drafts[m].record;
        r.sender_id = sender[drafts[m].vehicle];
        r.message_id = static_cast<std::int64_t>(m);
        out.push_back(r);
    }
    return out;
}

}  // namespace fedids
