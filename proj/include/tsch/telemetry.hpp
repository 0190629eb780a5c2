#pragma once

#include "tsch/core.hpp"
#include "tsch/sixp.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tsch {

enum class DropReason : std::uint8_t { RetryLimit, QueueOverflow };

struct PacketRecord {
    NodeId src;
    Asn birth;
    std::optional<Asn> delivery;
    std::optional<DropReason> drop;

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

struct SixPRecord {
    Asn asn; ///< when the transaction resolved
    NodeId initiator;
    NodeId responder;
    sixp::Command kind = sixp::Command::Add;
    std::uint32_t numCells = 0;
    sixp::Status status = sixp::Status::Success;
    std::uint32_t overheadBytes = 0;

    friend bool operator==(const SixPRecord&, const SixPRecord&) = default;
};

/// Network-wide packet accounting at one slotframe boundary.
struct FrameCounters {
    std::uint64_t frame = 0;
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t droppedRetry = 0;
    std::uint64_t droppedOverflow = 0;
    std::uint64_t queued = 0;
    std::uint32_t maxQueueDepth = 0;
    /// Most transmissions any packet needed on a single hop so far.
    std::uint32_t maxTransmissionsPerHop = 0;

    friend bool operator==(const FrameCounters&, const FrameCounters&) = default;
};

struct MetricsLog {
    std::uint32_t slotDurationMs = 10;
    std::uint32_t slotframeSize = 101;
    std::size_t nodeCount = 0;

    std::vector<SixPRecord> sixpRecords;
    std::vector<PacketRecord> packetRecords;
    /// queueSamples[f][i] is the queue depth of node i + 1 at the end of frame f.
    std::vector<std::vector<std::uint32_t>> queueSamples;
    /// 6P bytes put on the air during each slotframe, retransmissions included.
    std::vector<std::uint64_t> overheadBytesPerFrame;
    std::vector<FrameCounters> frameCounters;
    std::uint64_t dataCollisions = 0;
    std::uint64_t sharedCollisions = 0;

    friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

/// Negotiation errors over all transactions; absent when there were none.
std::optional<double> sixpErrorRatio(const MetricsLog& log);

struct OverheadSummary {
    std::uint64_t totalBytes = 0;
    std::vector<std::uint64_t> perFrame;
};
OverheadSummary overheadBytes(const MetricsLog& log);

struct LatencyStats {
    double meanMs = 0;
    double medianMs = 0;
    double p95Ms = 0;
    double maxMs = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
};
/// Delivered packets only; absent if nothing reached the root.
std::optional<LatencyStats> latencyStats(const MetricsLog& log);

struct FrameLatency {
    std::uint64_t frame = 0;
    double meanMs = 0;
    double maxMs = 0;
    std::uint64_t count = 0;
};
/// Per slotframe of delivery; frames without deliveries are omitted.
std::vector<FrameLatency> latencyPerFrame(const MetricsLog& log);

struct QueueStats {
    std::vector<double> avgPerFrame;
    std::vector<std::uint32_t> maxPerFrame;
    /// Indexed by node id; the root never queues.
    std::vector<std::uint32_t> maxPerNode;
};
QueueStats queueStats(const MetricsLog& log);

void writeSixpCsv(std::ostream& out, const MetricsLog& log);
void writeLatencyCsv(std::ostream& out, const MetricsLog& log);
void writeQueueCsv(std::ostream& out, const MetricsLog& log);
void writeOverheadCsv(std::ostream& out, const MetricsLog& log);

} // namespace tsch
