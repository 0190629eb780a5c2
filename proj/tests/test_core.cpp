#include "tsch/core.hpp"

#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

using namespace tsch;

TEST(Asn, CycleTimesSizePlusOffset) {
    EXPECT_EQ(computeAsn(0, 101, 0).value, 0u);
    EXPECT_EQ(computeAsn(2, 101, 5).value, 207u);
    EXPECT_EQ(computeAsn(7, 101, 100).value, 807u);
}

TEST(Asn, RejectsOffsetOutsideSlotframe) {
    EXPECT_THROW(computeAsn(0, 101, 101), std::invalid_argument);
    EXPECT_THROW(computeAsn(-1, 101, 0), std::invalid_argument);
    EXPECT_THROW(computeAsn(0, 101, -1), std::invalid_argument);
    EXPECT_THROW(computeAsn(0, 0, 0), std::invalid_argument);
}

TEST(HopFrequency, IndexesChannelMapModuloLength) {
    const auto cfg = HoppingConfig::ieee2450();
    EXPECT_EQ(hopFrequency(0, Asn{0}, cfg), 11u);
    EXPECT_EQ(hopFrequency(3, Asn{16}, cfg), 14u);
    EXPECT_EQ(hopFrequency(5, Asn{27}, cfg), 11u);
}

TEST(HopFrequency, RejectsEmptyMap) {
    EXPECT_THROW(hopFrequency(0, Asn{0}, HoppingConfig{}), std::invalid_argument);
}

TEST(HopFrequency, CellVisitsEveryChannelOverCoprimeSlotframes) {
    const auto cfg = HoppingConfig::ieee2450();
    const SlotframeParams p;
    for (std::uint32_t ch = 0; ch < cfg.nChannels(); ++ch) {
        std::set<std::uint32_t> seen;
        for (std::uint64_t cycle = 0; cycle < cfg.nChannels(); ++cycle)
            seen.insert(hopFrequency(ch, computeAsn(static_cast<std::int64_t>(cycle), p.slotframeSize, 7), cfg));
        EXPECT_EQ(seen.size(), cfg.nChannels());
        for (auto f : seen) {
            EXPECT_GE(f, 11u);
            EXPECT_LE(f, 26u);
        }
    }
}

TEST(SlotCoordinates, Examples) {
    const SlotframeParams p;
    EXPECT_EQ(slotCoordinates(Asn{0}, p), (SlotCoordinates{0, 0}));
    EXPECT_EQ(slotCoordinates(Asn{207}, p), (SlotCoordinates{2, 5}));
    EXPECT_EQ(slotCoordinates(Asn{100}, p), (SlotCoordinates{0, 100}));
}

TEST(SlotCoordinates, RoundTripsThroughAsn) {
    const SlotframeParams p;
    for (std::uint64_t a = 0; a < 5000; a += 13) {
        const auto c = slotCoordinates(Asn{a}, p);
        EXPECT_LT(c.slotOffset, p.slotframeSize);
        EXPECT_EQ(computeAsn(static_cast<std::int64_t>(c.cycle), p.slotframeSize, c.slotOffset).value, a);
    }
}

TEST(Validate, HoppingAndSlotframe) {
    EXPECT_NO_THROW(validate(HoppingConfig::ieee2450()));
    EXPECT_THROW(validate(HoppingConfig{}), std::invalid_argument);
    EXPECT_THROW(validate(HoppingConfig{{11, 12, 11}}), std::invalid_argument);
    EXPECT_NO_THROW(validate(SlotframeParams{}));
    EXPECT_THROW(validate(SlotframeParams{1, 10}), std::invalid_argument);
    EXPECT_THROW(validate(SlotframeParams{101, 0}), std::invalid_argument);
}
