#include "tsch/schedule.hpp"

#include <fmt/format.h>

namespace tsch {

Schedule::Schedule(std::uint32_t slotframeSize, std::uint32_t nChannels)
    : slots_(slotframeSize), nChannels_(nChannels) {
    if (slotframeSize == 0 || nChannels == 0)
        throw std::invalid_argument("schedule needs a positive slotframe size and channel count");
}

Schedule Schedule::minimal(std::uint32_t slotframeSize, std::uint32_t nChannels) {
    Schedule s(slotframeSize, nChannels);
    s.add(Cell{0, 0, LinkOption::Shared, std::nullopt});
    return s;
}

void Schedule::add(const Cell& cell) {
    if (cell.slotOffset >= slots_.size())
        throw ScheduleConflict(fmt::format("slot offset {} outside slotframe", cell.slotOffset));
    if (cell.channelOffset >= nChannels_)
        throw ScheduleConflict(fmt::format("channel offset {} outside [0, {})", cell.channelOffset, nChannels_));
    if ((cell.linkOption == LinkOption::Shared) == cell.peer.has_value())
        throw ScheduleConflict("shared cells have no peer; Tx/Rx cells need one");
    auto& slot = slots_[cell.slotOffset];
    if (slot)
        throw ScheduleConflict(fmt::format("slot offset {} already scheduled", cell.slotOffset));
    slot = cell;
    ++used_;
}

Cell Schedule::remove(std::uint32_t slotOffset) {
    auto& slot = slots_.at(slotOffset);
    if (!slot)
        throw ScheduleConflict(fmt::format("no cell at slot offset {}", slotOffset));
    Cell c = *slot;
    slot.reset();
    --used_;
    return c;
}

bool Schedule::contains(const Cell& cell) const {
    return cell.slotOffset < slots_.size() && slots_[cell.slotOffset] == cell;
}

std::vector<std::uint32_t> Schedule::freeSlotOffsets() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < slots_.size(); ++i)
        if (!slots_[i])
            out.push_back(i);
    return out;
}

std::vector<Cell> Schedule::cells() const {
    std::vector<Cell> out;
    for (const auto& s : slots_)
        if (s)
            out.push_back(*s);
    return out;
}

std::vector<Cell> Schedule::cellsWith(NodeId peer, LinkOption option) const {
    std::vector<Cell> out;
    for (const auto& s : slots_)
        if (s && s->linkOption == option && s->peer == peer)
            out.push_back(*s);
    return out;
}

std::size_t Schedule::countWith(NodeId peer, LinkOption option) const {
    std::size_t n = 0;
    for (const auto& s : slots_)
        if (s && s->linkOption == option && s->peer == peer)
            ++n;
    return n;
}

} // namespace tsch
