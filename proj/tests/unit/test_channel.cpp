#include <metaloc/channel.hpp>
#include <metaloc/errors.hpp>
#include <metaloc/scenario_io.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace metaloc;

namespace {

std::vector<double> mean_per_point(const Scenario& sc) {
    std::vector<double> sum(sc.grid.points(), 0.0);
    std::vector<double> count(sc.grid.points(), 0.0);
    for (const auto& s : sc.samples) {
        for (double a : s.amp) sum[s.rp] += a;
        count[s.rp] += 90.0;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
    return sum;
}

} // namespace

TEST(Channel, DeterministicPerSeed) {
    const ChannelConfig cfg;
    const auto a = generate_scenario(5, cfg), b = generate_scenario(5, cfg);
    EXPECT_EQ(scenario_to_json(a).dump(), scenario_to_json(b).dump());
    EXPECT_EQ(a.id, "scenario_5");
}

TEST(Channel, ShapeLabelsAndRange) {
    const ChannelConfig cfg;
    const auto sc = generate_scenario(9, cfg);
    EXPECT_NO_THROW(validate(sc));
    EXPECT_EQ(sc.samples.size(), 12u * 40u);
    for (auto c : samples_per_point(sc)) EXPECT_EQ(c, 40u);
    for (const auto& s : sc.samples) {
        for (double a : s.amp) {
            EXPECT_TRUE(std::isfinite(a));
            EXPECT_GE(a, 0.0);
        }
        EXPECT_NO_THROW(normalize(s.amp));
    }
}

TEST(Channel, DistinctSeedsGiveDistinctFingerprints) {
    const ChannelConfig cfg;
    std::vector<std::vector<double>> means;
    for (std::uint64_t seed = 0; seed < 10; ++seed) means.push_back(mean_per_point(generate_scenario(seed, cfg)));
    for (std::size_t i = 0; i < means.size(); ++i)
        for (std::size_t j = i + 1; j < means.size(); ++j) EXPECT_NE(means[i], means[j]);
}

TEST(Channel, AmplitudeFallsWithDistanceOnAverage) {
    ChannelConfig cfg;
    cfg.samples_per_rp = 4;
    cfg.transmitter_cm = Position{-100.0, 60.0};
    // Nearest point (0, 60) is rp 1; farthest (120, 180) is rp 11.
    double near = 0.0, far = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto m = mean_per_point(generate_scenario(seed, cfg));
        near += m[1];
        far += m[11];
    }
    EXPECT_GE(near, far);
}

TEST(Channel, RejectsDegenerateGeometry) {
    ChannelConfig cfg;
    cfg.grid.spacing_cm = 0.0;
    EXPECT_THROW(generate_scenario(1, cfg), ConfigError);
    ChannelConfig one;
    one.grid.rows = 1;
    one.grid.cols = 1;
    EXPECT_THROW(generate_scenario(1, one), ConfigError);
    ChannelConfig few;
    few.samples_per_rp = 1;
    EXPECT_THROW(generate_scenario(1, few), ConfigError);
    ChannelConfig close;
    close.transmitter_cm = Position{0.0, 10.0};
    EXPECT_THROW(generate_scenario(1, close), ConfigError);
}
