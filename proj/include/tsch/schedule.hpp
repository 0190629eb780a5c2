#pragma once

#include "tsch/core.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace tsch {

class ScheduleConflict : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// One node's slotframe: at most one cell per slot offset.
class Schedule {
public:
    Schedule(std::uint32_t slotframeSize, std::uint32_t nChannels);

    /// A schedule holding only the shared minimal cell at (0, 0).
    static Schedule minimal(std::uint32_t slotframeSize, std::uint32_t nChannels);

    std::uint32_t slotframeSize() const { return static_cast<std::uint32_t>(slots_.size()); }
    std::uint32_t nChannels() const { return nChannels_; }

    /// Throws ScheduleConflict if the slot is taken or the cell is malformed.
    void add(const Cell& cell);
    /// Throws ScheduleConflict if no cell occupies the slot.
    Cell remove(std::uint32_t slotOffset);

    const std::optional<Cell>& at(std::uint32_t slotOffset) const { return slots_.at(slotOffset); }
    bool isFree(std::uint32_t slotOffset) const { return !slots_.at(slotOffset).has_value(); }
    bool contains(const Cell& cell) const;

    std::vector<std::uint32_t> freeSlotOffsets() const;
    std::vector<Cell> cells() const;
    std::vector<Cell> cellsWith(NodeId peer, LinkOption option) const;
    std::size_t countWith(NodeId peer, LinkOption option) const;
    std::size_t size() const { return used_; }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::vector<std::optional<Cell>> slots_;
    std::uint32_t nChannels_;
    std::size_t used_ = 0;
};

} // namespace tsch
