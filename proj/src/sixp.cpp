#include "tsch/sixp.hpp"

#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include <algorithm>

namespace tsch::sixp {

namespace {

bool listed(std::span<const std::uint32_t> slots, std::uint32_t s) {
    return std::find(slots.begin(), slots.end(), s) != slots.end();
}

// Partial Fisher-Yates: the first k entries become a uniform k-subset.
template <class T>
void sampleFront(std::vector<T>& pool, std::size_t k, Rng& rng) {
    for (std::size_t i = 0; i < k; ++i) {
        boost::random::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
}

} // namespace

std::string_view toString(Command c) {
    return c == Command::Add ? "ADD" : "DELETE";
}

std::string_view toString(Status s) {
    switch (s) {
    case Status::Success: return "SUCCESS";
    case Status::NegotiationError: return "NEGOTIATION_ERROR";
    case Status::PacketLoss: return "PACKET_LOSS";
    }
    return "?";
}

Request buildAddRequest(const Schedule& initiatorSchedule, NodeId initiator, NodeId responder,
                        std::uint32_t numCells, std::uint32_t candidateListLen, Rng& rng,
                        std::uint32_t seqNum, const CostModel& cost,
                        std::span<const std::uint32_t> unavailable) {
    if (numCells == 0)
        throw std::invalid_argument("a 6P request asks for at least one cell");
    if (candidateListLen < numCells)
        throw std::invalid_argument(
            fmt::format("cell list of {} cannot cover {} cells", candidateListLen, numCells));

    std::vector<std::uint32_t> pool;
    for (std::uint32_t s : initiatorSchedule.freeSlotOffsets())
        if (!listed(unavailable, s))
            pool.push_back(s);
    if (pool.size() < candidateListLen)
        throw SixPError(fmt::format("node {} has {} free slots, {} candidates needed",
                                    initiator.value, pool.size(), candidateListLen));

    sampleFront(pool, candidateListLen, rng);
    boost::random::uniform_int_distribution<std::uint32_t> channel(0, initiatorSchedule.nChannels() - 1);

    Request req;
    req.kind = Command::Add;
    req.initiator = initiator;
    req.responder = responder;
    req.numCells = numCells;
    req.seqNum = seqNum;
    for (std::size_t i = 0; i < candidateListLen; ++i)
        req.cellList.push_back(Cell{pool[i], channel(rng), LinkOption::Tx, responder});
    req.sizeBytes = cost.requestSize(req.cellList.size());
    return req;
}

Request buildDeleteRequest(const Schedule& initiatorSchedule, NodeId initiator, NodeId responder,
                           std::uint32_t numCells, Rng& rng, std::uint32_t seqNum,
                           const CostModel& cost) {
    if (numCells == 0)
        throw std::invalid_argument("a 6P request asks for at least one cell");
    std::vector<Cell> pool = initiatorSchedule.cellsWith(responder, LinkOption::Tx);
    if (pool.size() < numCells)
        throw SixPError(fmt::format("node {} holds {} cells toward {}, cannot delete {}",
                                    initiator.value, pool.size(), responder.value, numCells));
    sampleFront(pool, numCells, rng);
    pool.resize(numCells);

    Request req;
    req.kind = Command::Delete;
    req.initiator = initiator;
    req.responder = responder;
    req.numCells = numCells;
    req.seqNum = seqNum;
    req.cellList = std::move(pool);
    req.sizeBytes = cost.requestSize(req.cellList.size());
    return req;
}

Outcome respondToRequest(const Request& req, const Schedule& responderSchedule, const CostModel& cost,
                         std::span<const std::uint32_t> unavailable) {
    Outcome out;
    out.overheadBytes = req.sizeBytes + cost.responseSize(req.numCells);

    if (req.kind == Command::Add) {
        for (const Cell& c : req.cellList) {
            if (out.chosen.size() == req.numCells)
                break;
            if (c.slotOffset < responderSchedule.slotframeSize() && responderSchedule.isFree(c.slotOffset)
                && !listed(unavailable, c.slotOffset))
                out.chosen.push_back(c);
        }
        if (out.chosen.size() == req.numCells) {
            out.status = Status::Success;
        } else {
            out.status = Status::NegotiationError;
            out.chosen.clear();
        }
        return out;
    }

    const bool allPresent = std::all_of(req.cellList.begin(), req.cellList.end(), [&](const Cell& c) {
        return responderSchedule.contains(Cell{c.slotOffset, c.channelOffset, LinkOption::Rx, req.initiator});
    });
    if (allPresent && req.cellList.size() >= req.numCells) {
        out.status = Status::Success;
        out.chosen.assign(req.cellList.begin(), req.cellList.begin() + req.numCells);
    } else {
        out.status = Status::NegotiationError;
    }
    return out;
}

void applyOutcome(Schedule& initiatorSchedule, Schedule& responderSchedule, const Request& req,
                  const Outcome& out) {
    if (out.status != Status::Success)
        return;

    Schedule a = initiatorSchedule;
    Schedule b = responderSchedule;
    for (const Cell& c : out.chosen) {
        const Cell tx{c.slotOffset, c.channelOffset, LinkOption::Tx, req.responder};
        const Cell rx{c.slotOffset, c.channelOffset, LinkOption::Rx, req.initiator};
        if (req.kind == Command::Add) {
            a.add(tx);
            b.add(rx);
        } else {
            if (!a.contains(tx) || !b.contains(rx))
                throw ScheduleConflict(fmt::format("delete of unmirrored cell at slot {}", c.slotOffset));
            a.remove(c.slotOffset);
            b.remove(c.slotOffset);
        }
    }
    initiatorSchedule = std::move(a);
    responderSchedule = std::move(b);
}

} // namespace tsch::sixp
