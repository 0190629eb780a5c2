#pragma once

#include "tsch/core.hpp"
#include "tsch/rng.hpp"
#include "tsch/schedule.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace tsch::sixp {

class SixPError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command : std::uint8_t { Add, Delete };
enum class Status : std::uint8_t { Success, NegotiationError, PacketLoss };

std::string_view toString(Command c);
std::string_view toString(Status s);

/// Synthetic message sizes: request = base + perCell * len(cellList),
/// response = base + perCell * numCells.
struct CostModel {
    std::uint32_t requestBaseBytes = 20;
    std::uint32_t responseBaseBytes = 20;
    std::uint32_t bytesPerCell = 4;

    std::uint32_t requestSize(std::size_t cellListLen) const {
        return requestBaseBytes + bytesPerCell * static_cast<std::uint32_t>(cellListLen);
    }
    std::uint32_t responseSize(std::size_t numCells) const {
        return responseBaseBytes + bytesPerCell * static_cast<std::uint32_t>(numCells);
    }
};

/// Cells in cellList are expressed from the initiator's side (Tx toward the
/// responder).
struct Request {
    Command kind = Command::Add;
    NodeId initiator;
    NodeId responder;
    std::uint32_t numCells = 1;
    std::vector<Cell> cellList;
    std::uint32_t seqNum = 0;
    std::uint32_t sizeBytes = 0;
};

struct Outcome {
    Status status = Status::NegotiationError;
    std::vector<Cell> chosen;
    std::uint32_t overheadBytes = 0;
};

/// Draws candidateListLen distinct free slot offsets (not in `unavailable`)
/// uniformly without replacement, each with a uniform channel offset.
/// Throws SixPError when fewer free slots exist than candidates requested.
Request buildAddRequest(const Schedule& initiatorSchedule, NodeId initiator, NodeId responder,
                        std::uint32_t numCells, std::uint32_t candidateListLen, Rng& rng,
                        std::uint32_t seqNum = 0, const CostModel& cost = {},
                        std::span<const std::uint32_t> unavailable = {});

/// Lists numCells of the initiator's Tx cells toward the responder, chosen
/// uniformly. Throws SixPError if fewer such cells exist.
Request buildDeleteRequest(const Schedule& initiatorSchedule, NodeId initiator, NodeId responder,
                           std::uint32_t numCells, Rng& rng, std::uint32_t seqNum = 0,
                           const CostModel& cost = {});

/// Add succeeds with the first numCells candidates whose slot is free at the
/// responder; Delete succeeds if every listed cell exists at the responder as
/// an Rx cell toward the initiator. Anything else is a NegotiationError.
Outcome respondToRequest(const Request& req, const Schedule& responderSchedule,
                         const CostModel& cost = {}, std::span<const std::uint32_t> unavailable = {});

/// Commits a successful transaction to both schedules. Non-success outcomes
/// leave both untouched. Throws ScheduleConflict (and changes nothing) if the
/// commit would put two cells on one slot offset.
void applyOutcome(Schedule& initiatorSchedule, Schedule& responderSchedule, const Request& req,
                  const Outcome& out);

} // namespace tsch::sixp
