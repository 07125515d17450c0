#include <metaloc/channel.hpp>
#include <metaloc/errors.hpp>
#include <metaloc/rng.hpp>
#include <metaloc/scenario.hpp>
#include <metaloc/scenario_io.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

using namespace metaloc;

namespace {

Scenario toy_scenario(std::size_t per_point, std::uint64_t seed = 1, Grid grid = {}) {
    Scenario sc;
    sc.id = "toy";
    sc.grid = grid;
    const auto points = reference_points(grid);
    auto rng = make_rng(seed, "toy");
    std::uniform_real_distribution<double> dist(0.01, 2.0);
    for (std::size_t rp = 0; rp < points.size(); ++rp)
        for (std::size_t b = 0; b < per_point; ++b) {
            Sample s;
            s.rp = rp;
            s.pos = points[rp];
            for (double& a : s.amp) a = dist(rng);
            sc.samples.push_back(s);
        }
    return sc;
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

} // namespace

TEST(Grid, DefaultReferencePoints) {
    const auto pts = reference_points(Grid{});
    ASSERT_EQ(pts.size(), 12u);
    std::set<std::pair<double, double>> got;
    for (const auto& p : pts) got.insert({p[0], p[1]});
    std::set<std::pair<double, double>> want;
    for (double x : {0.0, 60.0, 120.0})
        for (double y : {0.0, 60.0, 120.0, 180.0}) want.insert({x, y});
    EXPECT_EQ(got, want);
}

TEST(Normalize, Examples) {
    std::array<double, 90> c;
    c.fill(3.7);
    for (double v : normalize(c)) EXPECT_EQ(v, 1.0);

    auto rng = make_rng(3, "norm");
    std::uniform_real_distribution<double> dist(0.0, 5.0);
    std::array<double, 90> x, x10;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = dist(rng);
        x10[i] = 10.0 * x[i];
    }
    const auto a = normalize(x), b = normalize(x10);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
}

TEST(Normalize, MaxIsOneAndIdempotent) {
    auto rng = make_rng(4, "norm");
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 90> x;
        for (double& v : x) v = dist(rng);
        const auto n = normalize(x);
        EXPECT_EQ(*std::max_element(n.begin(), n.end()), 1.0);
        EXPECT_GE(*std::min_element(n.begin(), n.end()), 0.0);
        EXPECT_EQ(normalize(n), n);
    }
}

TEST(Normalize, Errors) {
    std::array<double, 90> zero{};
    EXPECT_THROW(normalize(zero), DataError);
    std::array<double, 90> neg{};
    neg[0] = 1.0;
    neg[1] = -0.5;
    EXPECT_THROW(normalize(neg), DataError);
    std::vector<double> short_sample(89, 1.0);
    EXPECT_THROW(normalize(short_sample), DataError);
}

TEST(SplitTask, CountsForDefaultScenario) {
    const auto sc = toy_scenario(40);
    const auto split = split_task(sc, 5, 9);
    EXPECT_EQ(split.support.size(), 60u);
    EXPECT_EQ(split.query.size(), 420u);
}

TEST(SplitTask, DeterministicPerSeed) {
    const auto sc = toy_scenario(40);
    const auto a = split_task(sc, 5, 9), b = split_task(sc, 5, 9), c = split_task(sc, 5, 10);
    EXPECT_EQ(a.support, b.support);
    EXPECT_EQ(a.query, b.query);
    EXPECT_NE(a.support, c.support);
}

TEST(SplitTask, ExhaustiveUnionOnTinyScenario) {
    const auto sc = toy_scenario(3);
    for (std::size_t k : {0u, 1u, 2u}) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto split = split_task(sc, k, seed);
            std::vector<std::size_t> all(split.support);
            all.insert(all.end(), split.query.begin(), split.query.end());
            std::sort(all.begin(), all.end());
            std::vector<std::size_t> want(sc.samples.size());
            std::iota(want.begin(), want.end(), 0);
            EXPECT_EQ(all, want);
        }
    }
}

TEST(SplitTask, DisjointAndExactCardinalityOverRandomConfigurations) {
    auto rng = make_rng(77, "split-configs");
    for (int trial = 0; trial < 1000; ++trial) {
        Grid g;
        g.rows = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        g.cols = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        const std::size_t per = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, per - 1)(rng);
        const auto sc = toy_scenario(per, trial, g);
        const auto split = split_task(sc, k, rng());
        ASSERT_EQ(split.support.size(), k * g.points());
        ASSERT_EQ(split.support.size() + split.query.size(), sc.samples.size());
        std::set<std::size_t> s(split.support.begin(), split.support.end());
        ASSERT_EQ(s.size(), split.support.size());
        for (std::size_t q : split.query) ASSERT_EQ(s.count(q), 0u);
        std::vector<std::size_t> per_point(g.points(), 0);
        for (std::size_t i : split.support) ++per_point[sc.samples[i].rp];
        for (std::size_t c : per_point) ASSERT_EQ(c, k);
    }
}

TEST(SplitTask, InsufficientSamplesThrow) {
    const auto sc = toy_scenario(5);
    EXPECT_THROW(split_task(sc, 5, 1), DataError);
}

TEST(TakePerPoint, SubsetWithPerPointCap) {
    const auto sc = toy_scenario(10);
    const auto split = split_task(sc, 4, 2);
    const auto taken = take_per_point(sc, split.query, 3, 8);
    EXPECT_EQ(taken.size(), 36u);
    std::set<std::size_t> pool(split.query.begin(), split.query.end());
    for (std::size_t i : taken) EXPECT_EQ(pool.count(i), 1u);
    EXPECT_EQ(taken, take_per_point(sc, split.query, 3, 8));
}

TEST(Batch, ShapesAndNormalizedInputs) {
    const auto sc = toy_scenario(4);
    const std::vector<std::size_t> idx{0, 5, 17};
    const auto b = make_batch(sc, idx);
    ASSERT_EQ(b.inputs.shape(), (ad::Shape{3, 3, 30}));
    ASSERT_EQ(b.targets.shape(), (ad::Shape{3, 2}));
    const auto in = b.inputs.values();
    for (std::size_t n = 0; n < 3; ++n) {
        EXPECT_EQ(*std::max_element(in.begin() + n * 90, in.begin() + (n + 1) * 90), 1.0);
        EXPECT_EQ(b.targets.values()[2 * n], sc.samples[idx[n]].pos[0]);
        EXPECT_EQ(b.targets.values()[2 * n + 1], sc.samples[idx[n]].pos[1]);
    }
    EXPECT_TRUE(make_batch(sc, std::vector<std::size_t>{}).empty());
}

TEST(Partition, DisjointAndCovering) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = partition_tasks(33, 5, seed);
        EXPECT_EQ(p.train.size(), 28u);
        EXPECT_EQ(p.test.size(), 5u);
        std::vector<std::size_t> all(p.train);
        all.insert(all.end(), p.test.begin(), p.test.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < 33; ++i) EXPECT_EQ(all[i], i);
    }
    EXPECT_THROW(partition_tasks(5, 5, 1), ConfigError);
}

TEST(ScenarioIo, RoundTripIsExact) {
    ChannelConfig cfg;
    cfg.samples_per_rp = 6;
    const auto sc = generate_scenario(5, cfg);
    const auto path = temp_path("metaloc_scenario_rt.json");
    save_scenario(sc, path);
    const auto back = load_scenario(path);
    EXPECT_EQ(back, sc);
    std::filesystem::remove(path);
}

TEST(ScenarioIo, AwkwardDoublesSurvive) {
    auto sc = toy_scenario(2);
    sc.samples[0].amp[0] = 0.1;
    sc.samples[0].amp[1] = 1.0 / 3.0;
    sc.samples[0].amp[2] = 5e-324;
    sc.samples[0].amp[3] = 1.7976931348623157e308;
    sc.samples[0].amp[4] = std::nextafter(1.0, 2.0);
    const auto back = scenario_from_json(nlohmann::json::parse(scenario_to_json(sc).dump()));
    EXPECT_EQ(back, sc);
}

TEST(ScenarioIo, MissingFieldIsNamed) {
    auto doc = scenario_to_json(toy_scenario(2));
    doc["samples"][3].erase("amp");
    try {
        scenario_from_json(doc);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("samples[3].amp"), std::string::npos) << e.what();
    }
}

TEST(ScenarioIo, TruncatedFileReportsPosition) {
    const auto text = scenario_to_json(toy_scenario(2)).dump(2);
    const auto cut = text.substr(0, text.size() / 2);
    try {
        parse_scenario(cut, "cut.json");
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("cut.json"), std::string::npos);
        EXPECT_NE(msg.find("line"), std::string::npos);
    }
}

TEST(ScenarioIo, WrongAmplitudeCountAndBadLabels) {
    auto doc = scenario_to_json(toy_scenario(2));
    doc["samples"][0]["amp"].erase(0);
    EXPECT_THROW(scenario_from_json(doc), DataError);

    auto doc2 = scenario_to_json(toy_scenario(2));
    doc2["samples"][1]["pos_cm"] = {1.0, 2.0};
    EXPECT_THROW(scenario_from_json(doc2), DataError);
}

TEST(ScenarioIo, DirectoryLoadingOrdersByIndex) {
    const auto dir = temp_path("metaloc_dir_test");
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ChannelConfig cfg;
    cfg.samples_per_rp = 3;
    for (std::uint64_t i : {10u, 2u, 1u}) save_scenario(generate_scenario(i, cfg), dir / ("scenario_" + std::to_string(i) + ".json"));
    const auto all = load_scenario_dir(dir);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].id, "scenario_1");
    EXPECT_EQ(all[1].id, "scenario_2");
    EXPECT_EQ(all[2].id, "scenario_10");
    std::filesystem::remove_all(dir);
    EXPECT_THROW(load_scenario_dir(dir), DataError);
}
