#pragma once

#include "tsch/rng.hpp"
#include "tsch/schedule.hpp"
#include "tsch/sixp.hpp"
#include "tsch/traffic.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace tsch {

struct SchedulingDecision {
    enum class Action : std::uint8_t { Keep, AddCells, DeleteCells };

    Action action = Action::Keep;
    std::uint32_t cells = 0;

    static SchedulingDecision keep() { return {}; }
    static SchedulingDecision add(std::uint32_t k);
    static SchedulingDecision remove(std::uint32_t k);

    friend bool operator==(const SchedulingDecision&, const SchedulingDecision&) = default;
};

/// Usage of a node's Tx cells toward its parent, over a window of elapsed
/// cells. Counting stops once the window is full until reset().
struct CellUsageStats {
    std::uint32_t windowLen = 16;
    std::uint32_t used = 0;
    std::uint32_t elapsed = 0;

    bool full() const { return elapsed >= windowLen; }
    void recordCell(bool carriedPacket);
    void reset() { used = elapsed = 0; }
};

struct MsfParams {
    std::uint32_t windowLen = 16;
    double highThreshold = 0.75;
    double lowThreshold = 0.25;
    std::uint32_t minCells = 1;
};

struct PredictionState {
    double lambda = 0.0;
    std::uint64_t predicted = 0;
    std::uint64_t allocatedCells = 0;
    std::uint64_t queueLen = 0;
};

/// Mean packets per slotframe over the history window (or over what exists
/// during warm-up). Throws std::invalid_argument on an empty history.
double computeLambda(const TrafficHistory& history);

/// P{N = n} for a Poisson variable of mean lambdaT, evaluated in log space.
double poissonPmf(std::uint64_t n, double lambdaT);

/// Mode of the Poisson pmf, found by walking n upward while the mass does
/// not decrease. Integer lambda ties resolve to lambda itself.
std::uint64_t predictPacketCount(double lambda);

SchedulingDecision emsfDecide(const PredictionState& state);
SchedulingDecision msfDecide(const CellUsageStats& stats, std::uint64_t allocatedCells,
                             const MsfParams& params = {});

struct EmsfParams {
    std::uint32_t beta = 10;
    /// Count packets received from children in the history, not only the
    /// node's own generated packets.
    bool countForwarded = true;
};

struct SchedulingParams {
    MsfParams msf;
    EmsfParams emsf;
    std::uint32_t candidateListLen = 5;
    sixp::CostModel cost;
};

/// What a scheduling function sees of one node at a slotframe boundary.
struct NodeContext {
    NodeId self;
    NodeId parent;
    std::uint64_t frameIndex = 0;
    const Schedule& schedule;
    std::span<const std::uint32_t> lockedSlots;
    const TrafficHistory& history;
    CellUsageStats& usage;
    std::uint64_t queueLen = 0;
    bool transactionPending = false;
    std::uint32_t seqNum = 0;
    Rng& rng;
};

class SchedulingFunction {
public:
    virtual ~SchedulingFunction() = default;

    virtual std::string_view name() const = 0;
    /// Decision for this slotframe; may consume or reset node usage stats.
    virtual SchedulingDecision decide(NodeContext& ctx) const = 0;

    /// Runs decide() and turns the result into at most one 6P request toward
    /// the parent, sized to what the schedule can accommodate.
    std::optional<sixp::Request> onSlotframe(NodeContext& ctx) const;

    const SchedulingParams& params() const { return params_; }

protected:
    explicit SchedulingFunction(SchedulingParams params) : params_(params) {}

    SchedulingParams params_;
};

/// Threshold-driven baseline: one cell at a time, driven by cell usage.
class Msf : public SchedulingFunction {
public:
    explicit Msf(SchedulingParams params = {}) : SchedulingFunction(params) {}
    std::string_view name() const override { return "msf"; }
    SchedulingDecision decide(NodeContext& ctx) const override;
};

/// Poisson-prediction scheduling; runs MSF for the first beta slotframes
/// while the traffic history fills.
class Emsf : public SchedulingFunction {
public:
    explicit Emsf(SchedulingParams params = {}) : SchedulingFunction(params), warmup_(params) {}
    std::string_view name() const override { return "emsf"; }
    SchedulingDecision decide(NodeContext& ctx) const override;

    PredictionState predict(const NodeContext& ctx) const;

private:
    Msf warmup_;
};

/// "msf" or "emsf"; throws std::invalid_argument otherwise.
std::unique_ptr<SchedulingFunction> makeSchedulingFunction(std::string_view name,
                                                           const SchedulingParams& params = {});

} // namespace tsch
