#include "tsch/sixp.hpp"

#include <gtest/gtest.h>

#include <boost/random/uniform_int_distribution.hpp>

#include <set>
#include <vector>

using namespace tsch;
using namespace tsch::sixp;

namespace {

constexpr NodeId kChild{1};
constexpr NodeId kParent{0};

Schedule fresh() { return Schedule::minimal(101, 16); }

bool mirrored(const Schedule& a, NodeId aId, const Schedule& b, NodeId bId) {
    for (const Cell& c : a.cells()) {
        if (c.linkOption != LinkOption::Tx || c.peer != bId)
            continue;
        if (!b.contains(Cell{c.slotOffset, c.channelOffset, LinkOption::Rx, aId}))
            return false;
    }
    for (const Cell& c : b.cells()) {
        if (c.linkOption != LinkOption::Rx || c.peer != aId)
            continue;
        if (!a.contains(Cell{c.slotOffset, c.channelOffset, LinkOption::Tx, bId}))
            return false;
    }
    return true;
}

} // namespace

TEST(CostModel, DefaultSizes) {
    const CostModel cost;
    EXPECT_EQ(cost.requestSize(5), 40u);
    EXPECT_EQ(cost.responseSize(2), 28u);
}

TEST(BuildAddRequest, DistinctFreeCandidates) {
    Rng rng(11);
    const auto req = buildAddRequest(fresh(), kChild, kParent, 1, 5, rng);
    ASSERT_EQ(req.cellList.size(), 5u);
    std::set<std::uint32_t> slots;
    for (const Cell& c : req.cellList) {
        EXPECT_NE(c.slotOffset, 0u);
        EXPECT_LT(c.channelOffset, 16u);
        slots.insert(c.slotOffset);
    }
    EXPECT_EQ(slots.size(), 5u);
    EXPECT_EQ(req.sizeBytes, 40u);
    EXPECT_EQ(req.kind, Command::Add);
}

TEST(BuildAddRequest, TooFewFreeSlots) {
    auto s = fresh();
    for (std::uint32_t off = 1; off <= 98; ++off)
        s.add(Cell{off, 0, LinkOption::Tx, kParent});
    ASSERT_EQ(s.size(), 99u);
    Rng rng(1);
    EXPECT_THROW(buildAddRequest(s, kChild, kParent, 1, 5, rng), SixPError);
}

TEST(BuildAddRequest, SkipsUnavailableSlots) {
    std::vector<std::uint32_t> locked;
    for (std::uint32_t off = 1; off <= 95; ++off)
        locked.push_back(off);
    Rng rng(2);
    const auto req = buildAddRequest(fresh(), kChild, kParent, 1, 5, rng, 0, {}, locked);
    for (const Cell& c : req.cellList)
        EXPECT_GT(c.slotOffset, 95u);
}

TEST(BuildAddRequest, DeterministicForSeed) {
    Rng a(77), b(77);
    EXPECT_EQ(buildAddRequest(fresh(), kChild, kParent, 2, 6, a).cellList,
              buildAddRequest(fresh(), kChild, kParent, 2, 6, b).cellList);
}

TEST(BuildAddRequest, RejectsZeroCellsOrShortList) {
    Rng rng(1);
    EXPECT_THROW(buildAddRequest(fresh(), kChild, kParent, 0, 5, rng), std::invalid_argument);
    EXPECT_THROW(buildAddRequest(fresh(), kChild, kParent, 4, 3, rng), std::invalid_argument);
}

TEST(Respond, AddSucceedsWhenCandidatesFree) {
    Rng rng(3);
    const auto req = buildAddRequest(fresh(), kChild, kParent, 2, 5, rng);
    const auto out = respondToRequest(req, fresh());
    EXPECT_EQ(out.status, Status::Success);
    ASSERT_EQ(out.chosen.size(), 2u);
    EXPECT_EQ(out.chosen[0], req.cellList[0]);
    EXPECT_EQ(out.chosen[1], req.cellList[1]);
    EXPECT_EQ(out.overheadBytes, 68u);
}

TEST(Respond, AddFailsWhenTooFewCandidatesFreeAtResponder) {
    Request req;
    req.initiator = kChild;
    req.responder = kParent;
    req.numCells = 3;
    for (std::uint32_t off : {10u, 20u, 30u})
        req.cellList.push_back(Cell{off, 1, LinkOption::Tx, kParent});
    auto responder = fresh();
    responder.add(Cell{20, 5, LinkOption::Rx, NodeId{2}});
    const auto out = respondToRequest(req, responder);
    EXPECT_EQ(out.status, Status::NegotiationError);
    EXPECT_TRUE(out.chosen.empty());
}

TEST(Respond, AddTreatsLockedSlotsAsBusy) {
    Request req;
    req.initiator = kChild;
    req.responder = kParent;
    req.numCells = 1;
    req.cellList.push_back(Cell{10, 1, LinkOption::Tx, kParent});
    const std::vector<std::uint32_t> locked{10};
    EXPECT_EQ(respondToRequest(req, fresh(), {}, locked).status, Status::NegotiationError);
}

TEST(Respond, DeleteOfAbsentCellFails) {
    auto child = fresh();
    child.add(Cell{7, 2, LinkOption::Tx, kParent});
    Rng rng(1);
    const auto req = buildDeleteRequest(child, kChild, kParent, 1, rng);
    EXPECT_EQ(respondToRequest(req, fresh()).status, Status::NegotiationError);
}

TEST(ApplyOutcome, AddThenDeleteKeepsMirror) {
    auto a = fresh(), b = fresh();
    Rng rng(5);
    const auto add = buildAddRequest(a, kChild, kParent, 2, 5, rng);
    const auto addOut = respondToRequest(add, b);
    applyOutcome(a, b, add, addOut);
    EXPECT_EQ(a.countWith(kParent, LinkOption::Tx), 2u);
    EXPECT_EQ(b.countWith(kChild, LinkOption::Rx), 2u);
    EXPECT_TRUE(mirrored(a, kChild, b, kParent));

    const auto del = buildDeleteRequest(a, kChild, kParent, 1, rng);
    const auto delOut = respondToRequest(del, b);
    ASSERT_EQ(delOut.status, Status::Success);
    applyOutcome(a, b, del, delOut);
    EXPECT_EQ(a.countWith(kParent, LinkOption::Tx), 1u);
    EXPECT_EQ(b.countWith(kChild, LinkOption::Rx), 1u);
    EXPECT_TRUE(mirrored(a, kChild, b, kParent));
}

TEST(ApplyOutcome, NegotiationErrorIsNoOp) {
    auto a = fresh(), b = fresh();
    Rng rng(5);
    const auto req = buildAddRequest(a, kChild, kParent, 1, 5, rng);
    const Outcome out{Status::NegotiationError, {}, 44};
    const auto a0 = a, b0 = b;
    applyOutcome(a, b, req, out);
    EXPECT_EQ(a, a0);
    EXPECT_EQ(b, b0);
}

TEST(ApplyOutcome, ConflictLeavesBothSchedulesUntouched) {
    auto a = fresh(), b = fresh();
    Request req;
    req.initiator = kChild;
    req.responder = kParent;
    req.numCells = 2;
    req.cellList = {Cell{10, 1, LinkOption::Tx, kParent}, Cell{11, 1, LinkOption::Tx, kParent}};
    const Outcome out{Status::Success, req.cellList, 48};
    b.add(Cell{11, 4, LinkOption::Rx, NodeId{3}});
    const auto a0 = a, b0 = b;
    EXPECT_THROW(applyOutcome(a, b, req, out), ScheduleConflict);
    EXPECT_EQ(a, a0);
    EXPECT_EQ(b, b0);
}

// Random add/delete traffic between one parent and several children, with
// the parent also busy toward its own parent.
TEST(SixPProperty, MirrorUniquenessAndAccountingUnderRandomTransactions) {
    Rng rng(2024);
    const NodeId grand{9};
    std::vector<Schedule> child(4, fresh());
    Schedule parent = fresh();
    std::uint64_t success = 0, negotiation = 0, total = 0;
    for (int step = 0; step < 3000; ++step) {
        boost::random::uniform_int_distribution<std::uint32_t> pick(1, 3), op(0, 2), cells(1, 4);
        const NodeId c{pick(rng)};
        Schedule& cs = child[c.value];
        Request req;
        const auto held = cs.countWith(kParent, LinkOption::Tx);
        const std::uint32_t kind = op(rng);
        if (kind == 2 && held > 0) {
            req = buildDeleteRequest(cs, c, kParent, 1, rng);
        } else if (kind == 1) {
            const auto free = parent.freeSlotOffsets();
            if (!free.empty() && parent.countWith(grand, LinkOption::Tx) < 60) {
                boost::random::uniform_int_distribution<std::size_t> f(0, free.size() - 1);
                parent.add(Cell{free[f(rng)], 0, LinkOption::Tx, grand});
            }
            continue;
        } else {
            const std::uint32_t k = cells(rng);
            if (cs.freeSlotOffsets().size() < k + 4)
                continue;
            req = buildAddRequest(cs, c, kParent, k, k + 4, rng);
        }
        const auto out = respondToRequest(req, parent);
        ++total;
        if (out.status == Status::Success) {
            ++success;
            EXPECT_EQ(out.chosen.size(), req.numCells);
            applyOutcome(cs, parent, req, out);
        } else {
            ++negotiation;
        }
        EXPECT_GT(out.overheadBytes, 0u);
        EXPECT_EQ(out.overheadBytes, req.sizeBytes + CostModel{}.responseSize(req.numCells));
    }
    EXPECT_EQ(success + negotiation, total);
    EXPECT_GT(negotiation, 0u);
    for (std::uint32_t i = 1; i <= 3; ++i)
        EXPECT_TRUE(mirrored(child[i], NodeId{i}, parent, kParent));
}
