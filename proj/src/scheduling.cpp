#include "tsch/scheduling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsch {

SchedulingDecision SchedulingDecision::add(std::uint32_t k) {
    if (k == 0)
        throw std::invalid_argument("add decision needs at least one cell");
    return {Action::AddCells, k};
}

SchedulingDecision SchedulingDecision::remove(std::uint32_t k) {
    if (k == 0)
        throw std::invalid_argument("delete decision needs at least one cell");
    return {Action::DeleteCells, k};
}

void CellUsageStats::recordCell(bool carriedPacket) {
    if (full())
        return;
    ++elapsed;
    if (carriedPacket)
        ++used;
}

double computeLambda(const TrafficHistory& history) {
    if (history.empty())
        throw std::invalid_argument("cannot estimate a rate from an empty history");
    const auto& w = history.window();
    const auto sum = std::accumulate(w.begin(), w.end(), std::uint64_t{0});
    return static_cast<double>(sum) / static_cast<double>(w.size());
}

double poissonPmf(std::uint64_t n, double lambdaT) {
    if (!(lambdaT >= 0.0) || !std::isfinite(lambdaT))
        throw std::invalid_argument(fmt::format("poisson mean must be finite and non-negative, got {}", lambdaT));
    if (lambdaT == 0.0)
        return n == 0 ? 1.0 : 0.0;
    const double k = static_cast<double>(n);
    return std::exp(k * std::log(lambdaT) - lambdaT - std::lgamma(k + 1.0));
}

std::uint64_t predictPacketCount(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(fmt::format("rate must be finite and non-negative, got {}", lambda));
    // pmf(n + 1) / pmf(n) == lambda / (n + 1), so the mass is non-decreasing
    // exactly while n + 1 <= lambda. Comparing that way is exact, so an
    // integer lambda ties upward instead of depending on rounding in two
    // separately evaluated masses.
    std::uint64_t n = 0;
    while (static_cast<double>(n + 1) <= lambda)
        ++n;
    return n;
}

SchedulingDecision emsfDecide(const PredictionState& state) {
    if (state.predicted < state.allocatedCells)
        return SchedulingDecision::remove(static_cast<std::uint32_t>(state.allocatedCells - state.predicted));
    if (state.predicted > state.allocatedCells)
        return SchedulingDecision::add(static_cast<std::uint32_t>(state.predicted - state.allocatedCells));
    return SchedulingDecision::keep();
}

SchedulingDecision msfDecide(const CellUsageStats& stats, std::uint64_t allocatedCells, const MsfParams& params) {
    if (!stats.full() || stats.elapsed == 0)
        return SchedulingDecision::keep();
    const double usage = static_cast<double>(stats.used) / static_cast<double>(stats.elapsed);
    if (usage > params.highThreshold)
        return SchedulingDecision::add(1);
    if (usage < params.lowThreshold && allocatedCells > params.minCells)
        return SchedulingDecision::remove(1);
    return SchedulingDecision::keep();
}

std::optional<sixp::Request> SchedulingFunction::onSlotframe(NodeContext& ctx) const {
    const SchedulingDecision d = decide(ctx);
    if (d.action == SchedulingDecision::Action::Keep)
        return std::nullopt;

    if (d.action == SchedulingDecision::Action::DeleteCells) {
        const auto allocated = static_cast<std::uint32_t>(ctx.schedule.countWith(ctx.parent, LinkOption::Tx));
        const std::uint32_t k = std::min(d.cells, allocated);
        if (k == 0)
            return std::nullopt;
        return sixp::buildDeleteRequest(ctx.schedule, ctx.self, ctx.parent, k, ctx.rng, ctx.seqNum,
                                        params_.cost);
    }

    std::uint32_t available = 0;
    for (std::uint32_t s : ctx.schedule.freeSlotOffsets())
        if (std::find(ctx.lockedSlots.begin(), ctx.lockedSlots.end(), s) == ctx.lockedSlots.end())
            ++available;
    const std::uint32_t k = std::min(d.cells, available);
    if (k == 0)
        return std::nullopt;
    // candidateListLen candidates for a single cell, with the same number of
    // spares on top of k for a multi-cell request.
    const std::uint32_t listLen = std::min(available, k + std::max(params_.candidateListLen, 1u) - 1);
    return sixp::buildAddRequest(ctx.schedule, ctx.self, ctx.parent, k, listLen, ctx.rng, ctx.seqNum,
                                 params_.cost, ctx.lockedSlots);
}

SchedulingDecision Msf::decide(NodeContext& ctx) const {
    if (ctx.transactionPending)
        return SchedulingDecision::keep();
    const auto allocated = ctx.schedule.countWith(ctx.parent, LinkOption::Tx);
    if (allocated < params_.msf.minCells)
        return SchedulingDecision::add(static_cast<std::uint32_t>(params_.msf.minCells - allocated));
    if (!ctx.usage.full())
        return SchedulingDecision::keep();
    const SchedulingDecision d = msfDecide(ctx.usage, allocated, params_.msf);
    ctx.usage.reset();
    return d;
}

PredictionState Emsf::predict(const NodeContext& ctx) const {
    PredictionState state;
    state.lambda = ctx.history.empty() ? 0.0 : computeLambda(ctx.history);
    state.predicted = predictPacketCount(state.lambda);
    state.allocatedCells = ctx.schedule.countWith(ctx.parent, LinkOption::Tx);
    state.queueLen = ctx.queueLen;
    return state;
}

SchedulingDecision Emsf::decide(NodeContext& ctx) const {
    if (ctx.frameIndex < params_.emsf.beta)
        return warmup_.decide(ctx);
    if (ctx.transactionPending)
        return SchedulingDecision::keep();
    // Never provision below the MSF cell floor, so a quiet node keeps a path
    // to its parent.
    PredictionState target = predict(ctx);
    target.predicted = std::max<std::uint64_t>(target.predicted, params_.msf.minCells);
    return emsfDecide(target);
}

std::unique_ptr<SchedulingFunction> makeSchedulingFunction(std::string_view name, const SchedulingParams& params) {
    if (name == "msf")
        return std::make_unique<Msf>(params);
    if (name == "emsf")
        return std::make_unique<Emsf>(params);
    throw std::invalid_argument(fmt::format("unknown scheduling function \"{}\" (expected msf or emsf)", name));
}

} // namespace tsch
