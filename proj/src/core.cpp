#include "tsch/core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tsch {

HoppingConfig HoppingConfig::ieee2450() {
    HoppingConfig cfg;
    cfg.channelMap.resize(16);
    std::iota(cfg.channelMap.begin(), cfg.channelMap.end(), 11u);
    return cfg;
}

Asn computeAsn(std::int64_t cycle, std::int64_t slotframeSize, std::int64_t slotOffset) {
    if (slotframeSize <= 0)
        throw std::invalid_argument("slotframe size must be positive");
    if (cycle < 0 || slotOffset < 0)
        throw std::invalid_argument("slot coordinates must be non-negative");
    if (slotOffset >= slotframeSize)
        throw std::invalid_argument(
            fmt::format("slot offset {} outside slotframe of size {}", slotOffset, slotframeSize));
    return Asn{static_cast<std::uint64_t>(cycle) * static_cast<std::uint64_t>(slotframeSize)
               + static_cast<std::uint64_t>(slotOffset)};
}

std::uint32_t hopFrequency(std::uint32_t chOffset, Asn asn, const HoppingConfig& cfg) {
    const std::uint32_t n = cfg.nChannels();
    if (n == 0)
        throw std::invalid_argument("empty channel map");
    if (chOffset >= n)
        throw std::invalid_argument(
            fmt::format("channel offset {} outside [0, {})", chOffset, n));
    // Reduce separately so chOffset + asn cannot overflow near the top of the range.
    const std::uint64_t idx = (chOffset + asn.value % n) % n;
    return cfg.channelMap[idx];
}

SlotCoordinates slotCoordinates(Asn asn, const SlotframeParams& params) {
    if (params.slotframeSize == 0)
        throw std::invalid_argument("slotframe size must be positive");
    return {asn.value / params.slotframeSize,
            static_cast<std::uint32_t>(asn.value % params.slotframeSize)};
}

void validate(const HoppingConfig& cfg) {
    if (cfg.channelMap.empty())
        throw std::invalid_argument("channel map must not be empty");
    auto sorted = cfg.channelMap;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("channel map entries must be distinct");
}

void validate(const SlotframeParams& params) {
    if (params.slotframeSize < 2)
        throw std::invalid_argument("slotframe needs the shared slot plus at least one more");
    if (params.slotDurationMs == 0)
        throw std::invalid_argument("slot duration must be positive");
}

} // namespace tsch
