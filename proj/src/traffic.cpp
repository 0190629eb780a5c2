#include "tsch/traffic.hpp"

#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace tsch {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const TrafficProfile* activeSegment(const Piecewise& pw, std::uint64_t frame) {
    const TrafficProfile* active = nullptr;
    for (const auto& seg : pw.segments) {
        if (seg.fromSlotframe > frame)
            break;
        active = &seg.profile;
    }
    return active;
}

} // namespace

void validate(const TrafficProfile& profile) {
    std::visit(Overloaded{
                   [](const ConstantRate&) {},
                   [](const PoissonEvents& p) {
                       if (!std::isfinite(p.mean) || p.mean < 0.0)
                           throw std::invalid_argument(
                               fmt::format("poisson mean must be non-negative, got {}", p.mean));
                   },
                   [](const SporadicUniform& s) {
                       if (s.lo > s.hi)
                           throw std::invalid_argument(
                               fmt::format("sporadic range has lo {} > hi {}", s.lo, s.hi));
                   },
                   [](const Piecewise& pw) {
                       for (std::size_t i = 0; i < pw.segments.size(); ++i) {
                           if (i > 0 && pw.segments[i].fromSlotframe <= pw.segments[i - 1].fromSlotframe)
                               throw std::invalid_argument("piecewise segments must be strictly ordered");
                           validate(pw.segments[i].profile);
                       }
                   },
               },
               profile.eventModel);
}

GeneratedTraffic generatePackets(const TrafficProfile& profile, std::uint64_t slotframeIndex, Rng& rng) {
    GeneratedTraffic out;
    out.periodic = profile.periodicPerSlotframe;
    std::visit(Overloaded{
                   [&](const ConstantRate& c) { out.events = c.packets; },
                   [&](const PoissonEvents& p) {
                       if (p.mean > 0.0) {
                           boost::random::poisson_distribution<std::uint32_t, double> dist(p.mean);
                           out.events = dist(rng);
                       }
                   },
                   [&](const SporadicUniform& s) {
                       boost::random::uniform_int_distribution<std::uint32_t> dist(s.lo, s.hi);
                       out.events = dist(rng);
                   },
                   [&](const Piecewise& pw) {
                       if (const TrafficProfile* seg = activeSegment(pw, slotframeIndex)) {
                           const GeneratedTraffic inner = generatePackets(*seg, slotframeIndex, rng);
                           out.periodic += inner.periodic;
                           out.events = inner.events;
                       }
                   },
               },
               profile.eventModel);
    return out;
}

TrafficProfile steadyThenSporadicProfile() {
    Piecewise pw;
    pw.segments.push_back({0, TrafficProfile{0, ConstantRate{2}}});
    pw.segments.push_back({50, TrafficProfile{0, SporadicUniform{2, 7}}});
    return TrafficProfile{0, std::move(pw)};
}

TrafficProfile periodicTransmissionProfile() {
    return TrafficProfile{0, ConstantRate{5}};
}

TrafficHistory::TrafficHistory(std::size_t beta) : beta_(beta) {
    if (beta == 0)
        throw std::invalid_argument("history window must hold at least one slotframe");
}

void TrafficHistory::record(std::int64_t count) {
    if (count < 0)
        throw std::invalid_argument(fmt::format("negative packet count {}", count));
    window_.push_back(static_cast<std::uint64_t>(count));
    if (window_.size() > beta_)
        window_.pop_front();
}

TrafficHistory recordSlotframe(TrafficHistory history, std::int64_t count) {
    history.record(count);
    return history;
}

} // namespace tsch
