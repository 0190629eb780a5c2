#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace tsch {

/// Node identifier. Ids are dense in [0, nodeCount); node 0 is the DAG root.
struct NodeId {
    std::uint32_t value = 0;

    constexpr auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kRootNode{0};

/// Absolute Slot Number: timeslots elapsed since network start.
struct Asn {
    std::uint64_t value = 0;

    constexpr auto operator<=>(const Asn&) const = default;
};

enum class LinkOption : std::uint8_t { Tx, Rx, Shared };

/// One scheduled unit of bandwidth. Tx/Rx cells carry the peer they talk
/// to; the shared cell has none.
struct Cell {
    std::uint32_t slotOffset = 0;
    std::uint32_t channelOffset = 0;
    LinkOption linkOption = LinkOption::Tx;
    std::optional<NodeId> peer;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct HoppingConfig {
    std::vector<std::uint32_t> channelMap;

    std::uint32_t nChannels() const { return static_cast<std::uint32_t>(channelMap.size()); }

    /// IEEE 802.15.4 2.4 GHz channels 11..26.
    static HoppingConfig ieee2450();
};

struct SlotframeParams {
    std::uint32_t slotframeSize = 101;
    std::uint32_t slotDurationMs = 10;
};

struct SlotCoordinates {
    std::uint64_t cycle = 0;
    std::uint32_t slotOffset = 0;

    friend bool operator==(const SlotCoordinates&, const SlotCoordinates&) = default;
};

/// ASN = cycle * slotframeSize + slotOffset. Throws std::invalid_argument
/// for a zero-size slotframe or an offset outside it.
Asn computeAsn(std::int64_t cycle, std::int64_t slotframeSize, std::int64_t slotOffset);

/// Physical channel for a cell at the given ASN:
/// channelMap[(chOffset + asn) mod nChannels].
std::uint32_t hopFrequency(std::uint32_t chOffset, Asn asn, const HoppingConfig& cfg);

SlotCoordinates slotCoordinates(Asn asn, const SlotframeParams& params);

/// Rejects empty or duplicate channel maps.
void validate(const HoppingConfig& cfg);
void validate(const SlotframeParams& params);

} // namespace tsch
