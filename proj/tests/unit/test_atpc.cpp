#include <random>

#include <gtest/gtest.h>

#include "rssipred/atpc.hpp"
#include "rssipred/errors.hpp"

using namespace rssipred;
using namespace rssipred::atpc;

namespace {

AtpcConfig config(double threshold = -90.0, predictor::Method method = predictor::Method::simplified) {
    AtpcConfig c;
    c.threshold_dbm = threshold;
    c.radio = linksim::find_profile("CC2538");
    c.predictor_method = method;
    return c;
}

}  // namespace

TEST(OnAck, LinkBudgetArithmetic) {
    AtpcController ctl(config(), 7.0);
    EXPECT_DOUBLE_EQ(ctl.on_ack(-80.0), 0.0);
    EXPECT_DOUBLE_EQ(*ctl.state().path_gain_estimate_db, -87.0);
    EXPECT_EQ(ctl.state().mode, Mode::tracking);
    EXPECT_FALSE(ctl.state().insufficient_headroom);
}

TEST(OnAck, FixedPointAtThresholdPlusMargin) {
    AtpcController ctl(config(), 0.0);
    EXPECT_DOUBLE_EQ(ctl.on_ack(-87.0), 0.0);
    EXPECT_DOUBLE_EQ(ctl.on_ack(-87.0), 0.0);
}

TEST(OnAck, ClampsAndFlagsInsufficientHeadroom) {
    AtpcController ctl(config(), 7.0);
    // Gain -105 dB needs -87 + 105 = 18 dBm.
    EXPECT_DOUBLE_EQ(ctl.on_ack(-98.0), 7.0);
    EXPECT_TRUE(ctl.state().insufficient_headroom);
    // Gain -70 dB needs -17 dBm, inside the range.
    EXPECT_DOUBLE_EQ(ctl.on_ack(-63.0), -17.0);
    EXPECT_FALSE(ctl.state().insufficient_headroom);
    // Gain -50 dB wants -37 dBm; the floor is -24.
    EXPECT_DOUBLE_EQ(ctl.on_ack(-67.0), -24.0);
}

TEST(OnAck, RejectsNonFiniteRssi) {
    AtpcController ctl(config());
    EXPECT_THROW(ctl.on_ack(std::nan("")), ValidationError);
}

TEST(OnMissedAck, SimplifiedPredictionAtConstantPower) {
    // Required power stays above max_tx, so both packets go out at 7 dBm.
    AtpcController ctl(config(-75.0), 7.0);
    ctl.on_ack(-79.6);
    ctl.on_ack(-80.0);  // slope -4 dB/s
    EXPECT_DOUBLE_EQ(ctl.on_missed_ack(), 7.0);
    EXPECT_NEAR(*ctl.state().predicted_rssi_dbm, -80.4, 1e-9);
    EXPECT_EQ(ctl.state().consecutive_missed, 1u);
    EXPECT_EQ(ctl.state().mode, Mode::tracking);
}

TEST(OnMissedAck, RaisesPowerByPredictedDrop) {
    AtpcController ctl(config(), 7.0);
    ctl.on_ack(-79.6);                         // gain -86.6, next -0.4
    const double decided = ctl.on_ack(-87.4);  // gain -87.0, slope -4 dB/s
    EXPECT_NEAR(decided, 0.0, 1e-12);
    EXPECT_NEAR(ctl.on_missed_ack(), decided + 0.4, 1e-9);
    EXPECT_NEAR(*ctl.state().path_gain_estimate_db, -87.4, 1e-9);
}

TEST(OnMissedAck, SecondLossPredictsTwoSteps) {
    AtpcController ctl(config(), 0.0);
    ctl.on_ack(-86.6);  // gain -86.6, next -0.4
    ctl.on_ack(-87.4);  // gain -87.0, slope -4 dB/s
    ctl.on_missed_ack();
    EXPECT_NEAR(*ctl.state().path_gain_estimate_db, -87.4, 1e-9);
    ctl.on_missed_ack();
    EXPECT_NEAR(*ctl.state().path_gain_estimate_db, -87.8, 1e-9);
    EXPECT_EQ(ctl.state().consecutive_missed, 2u);
}

TEST(OnMissedAck, FallbackAfterMaxMisses) {
    auto c = config();
    c.max_missed_acks = 3;
    AtpcController ctl(c, 0.0);
    ctl.on_ack(-87.0);
    ctl.on_ack(-87.0);
    ctl.on_missed_ack();
    ctl.on_missed_ack();
    EXPECT_EQ(ctl.state().mode, Mode::tracking);
    EXPECT_DOUBLE_EQ(ctl.on_missed_ack(), 7.0);
    EXPECT_EQ(ctl.state().mode, Mode::fallback);
    EXPECT_DOUBLE_EQ(ctl.on_missed_ack(), 7.0);
    EXPECT_DOUBLE_EQ(ctl.next_tx_dbm(), 7.0);
}

TEST(OnMissedAck, ImmediateFallbackWithoutHistory) {
    AtpcController fresh(config(), 0.0);
    EXPECT_DOUBLE_EQ(fresh.on_missed_ack(), 7.0);
    EXPECT_EQ(fresh.state().mode, Mode::fallback);

    AtpcController one(config(), 0.0);
    one.on_ack(-87.0);  // no slope yet
    EXPECT_DOUBLE_EQ(one.on_missed_ack(), 7.0);
    EXPECT_EQ(one.state().mode, Mode::fallback);
}

TEST(OnMissedAck, StatisticalPredictorFallsBackUntilFitted) {
    AtpcController ctl(config(-90.0, predictor::Method::orthonormal), 0.0);
    ctl.on_ack(-87.0);
    ctl.on_ack(-87.5);
    EXPECT_DOUBLE_EQ(ctl.on_missed_ack(), 7.0);
    EXPECT_EQ(ctl.state().mode, Mode::fallback);
}

TEST(Recovery, SingleAckReturnsToTracking) {
    auto c = config();
    c.max_missed_acks = 2;
    AtpcController ctl(c, 0.0);
    ctl.on_ack(-87.0);
    ctl.on_ack(-87.0);
    for (int i = 0; i < 4; ++i) ctl.on_missed_ack();
    ASSERT_EQ(ctl.state().mode, Mode::fallback);
    EXPECT_DOUBLE_EQ(ctl.on_ack(-80.0), 0.0);  // sent at 7: gain -87
    EXPECT_EQ(ctl.state().mode, Mode::tracking);
    EXPECT_EQ(ctl.state().consecutive_missed, 0u);
}

TEST(AtpcProperty, PowerAlwaysWithinRadioLimits) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rssi(-130.0, 20.0);
    std::bernoulli_distribution miss(0.4);
    for (auto method : {predictor::Method::simplified, predictor::Method::orthonormal}) {
        AtpcController ctl(config(-95.0, method));
        for (int i = 0; i < 5000; ++i) {
            const double tx = miss(rng) ? ctl.on_missed_ack() : ctl.on_ack(rssi(rng));
            ASSERT_GE(tx, -24.0);
            ASSERT_LE(tx, 7.0);
            if (ctl.state().mode == Mode::tracking) ASSERT_LE(ctl.state().consecutive_missed, 5u);
        }
    }
}

TEST(AtpcProperty, MonotoneResponse) {
    for (double tx0 : {-24.0, -5.0, 0.0, 7.0}) {
        double prev = -1e9;
        for (double ack = -40.0; ack >= -97.0; ack -= 0.5) {
            AtpcController ctl(config(), tx0);
            const double tx = ctl.on_ack(ack);
            EXPECT_GE(tx, prev);
            prev = tx;
        }
    }
}

TEST(AtpcConfigTest, Validation) {
    auto c = config();
    c.threshold_dbm = -100.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.margin_db = -1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.max_missed_acks = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.predictor_method = predictor::Method::normal_eq;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ClosedLoop, AdaptiveSavesPowerAndStaysAboveThreshold) {
    auto c = config(-90.0, predictor::Method::orthonormal);
    const auto channel = linksim::preset_channel(linksim::ChannelKind::swell, 3);
    const auto loss = linksim::parse_loss("bernoulli:0.3", 4);
    const auto adaptive = run_closed_loop(c, channel, loss, 3000, Policy::adaptive);
    const auto always = run_closed_loop(c, channel, loss, 3000, Policy::always_max);
    EXPECT_EQ(adaptive.summary.packets, 3000u);
    EXPECT_GE(adaptive.summary.fraction_above_threshold, 0.9);
    EXPECT_LE(adaptive.summary.mean_tx_dbm, always.summary.mean_tx_dbm - 3.0);
    EXPECT_DOUBLE_EQ(always.summary.mean_tx_dbm, 7.0);
    for (const auto& p : adaptive.packets) {
        EXPECT_GE(p.tx_dbm, -24.0);
        EXPECT_LE(p.tx_dbm, 7.0);
        if (p.delivered) EXPECT_FALSE(p.predicted_dbm.has_value());
    }
}

TEST(ClosedLoop, Deterministic) {
    auto c = config(-90.0, predictor::Method::orthonormal);
    const auto channel = linksim::preset_channel(linksim::ChannelKind::swell, 8);
    const auto loss = linksim::parse_loss("ge:0.05,0.3", 8);
    const auto a = run_closed_loop(c, channel, loss, 1000, Policy::adaptive);
    const auto b = run_closed_loop(c, channel, loss, 1000, Policy::adaptive);
    ASSERT_EQ(a.packets.size(), b.packets.size());
    for (std::size_t i = 0; i < a.packets.size(); ++i) {
        EXPECT_EQ(a.packets[i].tx_dbm, b.packets[i].tx_dbm);
        EXPECT_EQ(a.packets[i].rssi_dbm, b.packets[i].rssi_dbm);
    }
}
