#pragma once

#include "tsch/rng.hpp"

#include <cstdint>
#include <deque>
#include <variant>
#include <vector>

namespace tsch {

// Event-driven traffic models, in packets per slotframe.
struct ConstantRate {
    std::uint32_t packets = 0;
};
struct PoissonEvents {
    double mean = 0.0;
};
struct SporadicUniform {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
};
struct PiecewiseSegment;
struct Piecewise {
    /// Ordered by fromSlotframe; the last segment starting at or before a
    /// frame applies to it.
    std::vector<PiecewiseSegment> segments;
};

using EventModel = std::variant<ConstantRate, PoissonEvents, SporadicUniform, Piecewise>;

struct TrafficProfile {
    std::uint32_t periodicPerSlotframe = 0;
    EventModel eventModel = ConstantRate{};
};

struct PiecewiseSegment {
    std::uint64_t fromSlotframe = 0;
    TrafficProfile profile;
};

/// Packets produced by one node in one slotframe, split into the periodic
/// and event-driven components.
struct GeneratedTraffic {
    std::uint32_t periodic = 0;
    std::uint32_t events = 0;

    std::uint32_t total() const { return periodic + events; }
};

/// Throws std::invalid_argument on negative or non-finite rates, lo > hi, or
/// unordered piecewise segments.
void validate(const TrafficProfile& profile);

GeneratedTraffic generatePackets(const TrafficProfile& profile, std::uint64_t slotframeIndex, Rng& rng);

/// Two packets per slotframe for frames 0..49, then uniform 2..7.
TrafficProfile steadyThenSporadicProfile();
/// One packet every 200 ms over a 1010 ms slotframe.
TrafficProfile periodicTransmissionProfile();

/// Sliding window of per-slotframe packet counts, at most beta entries.
class TrafficHistory {
public:
    explicit TrafficHistory(std::size_t beta = 10);

    std::size_t beta() const { return beta_; }
    std::size_t size() const { return window_.size(); }
    bool empty() const { return window_.empty(); }
    const std::deque<std::uint64_t>& window() const { return window_; }

    /// Appends a count, evicting the oldest when full. Rejects negatives.
    void record(std::int64_t count);

private:
    std::size_t beta_;
    std::deque<std::uint64_t> window_;
};

TrafficHistory recordSlotframe(TrafficHistory history, std::int64_t count);

} // namespace tsch
