#include "tsch/telemetry.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace tsch {

std::optional<double> sixpErrorRatio(const MetricsLog& log) {
    if (log.sixpRecords.empty())
        return std::nullopt;
    const auto errors = std::count_if(log.sixpRecords.begin(), log.sixpRecords.end(), [](const SixPRecord& r) {
        return r.status == sixp::Status::NegotiationError;
    });
    return static_cast<double>(errors) / static_cast<double>(log.sixpRecords.size());
}

OverheadSummary overheadBytes(const MetricsLog& log) {
    OverheadSummary out;
    for (const auto& r : log.sixpRecords)
        out.totalBytes += r.overheadBytes;
    out.perFrame = log.overheadBytesPerFrame;
    return out;
}

namespace {

double latencyMs(const PacketRecord& r, std::uint32_t slotMs) {
    return static_cast<double>(r.delivery->value - r.birth.value) * slotMs;
}

} // namespace

std::optional<LatencyStats> latencyStats(const MetricsLog& log) {
    std::vector<double> samples;
    LatencyStats out;
    for (const auto& r : log.packetRecords) {
        if (r.delivery)
            samples.push_back(latencyMs(r, log.slotDurationMs));
        else if (r.drop)
            ++out.dropped;
    }
    if (samples.empty())
        return std::nullopt;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    out.delivered = n;
    out.meanMs = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    out.medianMs = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    // nearest rank
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    out.p95Ms = samples[std::max<std::size_t>(rank, 1) - 1];
    out.maxMs = samples.back();
    return out;
}

std::vector<FrameLatency> latencyPerFrame(const MetricsLog& log) {
    std::map<std::uint64_t, FrameLatency> frames;
    for (const auto& r : log.packetRecords) {
        if (!r.delivery)
            continue;
        const std::uint64_t f = r.delivery->value / log.slotframeSize;
        auto& fl = frames[f];
        const double ms = latencyMs(r, log.slotDurationMs);
        fl.frame = f;
        fl.meanMs += ms;
        fl.maxMs = std::max(fl.maxMs, ms);
        ++fl.count;
    }
    std::vector<FrameLatency> out;
    out.reserve(frames.size());
    for (auto& [f, fl] : frames) {
        fl.meanMs /= static_cast<double>(fl.count);
        out.push_back(fl);
    }
    return out;
}

QueueStats queueStats(const MetricsLog& log) {
    QueueStats out;
    out.maxPerNode.assign(log.nodeCount, 0);
    for (const auto& sample : log.queueSamples) {
        std::uint64_t sum = 0;
        std::uint32_t mx = 0;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            sum += sample[i];
            mx = std::max(mx, sample[i]);
            out.maxPerNode[i + 1] = std::max(out.maxPerNode[i + 1], sample[i]);
        }
        out.avgPerFrame.push_back(sample.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(sample.size()));
        out.maxPerFrame.push_back(mx);
    }
    return out;
}

void writeSixpCsv(std::ostream& out, const MetricsLog& log) {
    out << "asn,initiator,responder,kind,numCells,status,overheadBytes\n";
    for (const auto& r : log.sixpRecords)
        fmt::print(out, "{},{},{},{},{},{},{}\n", r.asn.value, r.initiator.value, r.responder.value,
                   sixp::toString(r.kind), r.numCells, sixp::toString(r.status), r.overheadBytes);
}

void writeLatencyCsv(std::ostream& out, const MetricsLog& log) {
    out << "frameIndex,meanMs,maxMs\n";
    for (const auto& f : latencyPerFrame(log))
        fmt::print(out, "{},{:.6f},{:.6f}\n", f.frame, f.meanMs, f.maxMs);
}

void writeQueueCsv(std::ostream& out, const MetricsLog& log) {
    out << "frameIndex,avgDepth,maxDepth\n";
    const QueueStats q = queueStats(log);
    for (std::size_t f = 0; f < q.avgPerFrame.size(); ++f)
        fmt::print(out, "{},{:.6f},{}\n", f, q.avgPerFrame[f], q.maxPerFrame[f]);
}

void writeOverheadCsv(std::ostream& out, const MetricsLog& log) {
    out << "frameIndex,overheadBytes\n";
    for (std::size_t f = 0; f < log.overheadBytesPerFrame.size(); ++f)
        fmt::print(out, "{},{}\n", f, log.overheadBytesPerFrame[f]);
}

} // namespace tsch
