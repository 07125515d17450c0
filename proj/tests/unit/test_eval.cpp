#include <metaloc/channel.hpp>
#include <metaloc/errors.hpp>
#include <metaloc/experiments.hpp>
#include <metaloc/metrics.hpp>
#include <metaloc/report.hpp>
#include <metaloc/rng.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace metaloc;
using namespace metaloc::eval;
using meta::Algorithm;

namespace {

std::vector<Scenario> tiny_suite(std::size_t n) {
    ChannelConfig cc;
    cc.samples_per_rp = 6;
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scenario(900 + i, cc));
    return out;
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.meta.meta_iterations = 2;
    cfg.meta.meta_batch = 1;
    cfg.meta.inner_steps = 1;
    cfg.meta.query_per_rp = 2;
    cfg.meta.base_epochs = 2;
    cfg.meta.baseline_epochs = 2;
    cfg.meta.convergence_window = 0;
    cfg.meta.seed = 5;
    cfg.test_tasks = 1;
    cfg.repeats = 1;
    cfg.matrix_train_per_rp = 4;
    return cfg;
}

std::string read_first_line(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST(Distance, Examples) {
    EXPECT_DOUBLE_EQ(distance_error({0, 0}, {3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(distance_error({12.5, -3}, {12.5, -3}), 0.0);
    auto rng = make_rng(1, "distance");
    std::uniform_real_distribution<double> d(-500, 500);
    for (int i = 0; i < 200; ++i) {
        const Position a{d(rng), d(rng)}, b{d(rng), d(rng)};
        EXPECT_EQ(distance_error(a, b), distance_error(b, a));
    }
}

TEST(Cdf, Examples) {
    const std::vector<double> errs{10, 20, 60};
    EXPECT_DOUBLE_EQ(cdf(errs, std::vector<double>{50})[0], 2.0 / 3.0);
    EXPECT_EQ(cdf(errs, std::vector<double>{5})[0], 0.0);
    EXPECT_EQ(cdf(errs, std::vector<double>{61})[0], 1.0);
    // Strictly below.
    EXPECT_DOUBLE_EQ(cdf(errs, std::vector<double>{20})[0], 1.0 / 3.0);
    EXPECT_THROW(cdf(std::vector<double>{}, std::vector<double>{1}), DataError);
}

TEST(Cdf, MonotoneAndEndsAtOne) {
    auto rng = make_rng(2, "cdf");
    std::uniform_real_distribution<double> d(0.0, 800.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> errs(1 + trial % 50);
        for (double& e : errs) e = d(rng);
        const auto th = cdf_thresholds(errs);
        ASSERT_FALSE(th.empty());
        EXPECT_EQ(th.front(), 0.0);
        EXPECT_GE(th.back(), 300.0);
        const auto f = cdf(errs, th);
        for (std::size_t i = 1; i < f.size(); ++i) ASSERT_LE(f[i - 1], f[i]);
        EXPECT_EQ(f.back(), 1.0);
    }
}

TEST(Summary, QuartilesAndMean) {
    const std::vector<double> v{4, 1, 3, 2, 5};
    const auto s = summarize(v);
    EXPECT_EQ(s.count, 5u);
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.q1, 2.0);
    EXPECT_DOUBLE_EQ(s.q3, 4.0);
    EXPECT_DOUBLE_EQ(s.min, 1.0);
    EXPECT_DOUBLE_EQ(s.max, 5.0);
    EXPECT_DOUBLE_EQ(summarize(std::vector<double>{1, 2, 3, 4}).median, 2.5);
}

TEST(Benchmark, StructureAndCardinality) {
    const auto suite = tiny_suite(3);
    auto cfg = tiny_config();
    const std::vector<Algorithm> algos{Algorithm::conventional, Algorithm::transfer, Algorithm::fomaml};
    const std::vector<std::size_t> shots{1, 2};
    const auto one = benchmark(suite, algos, shots, cfg);
    EXPECT_EQ(one.partitions.size(), 1u);
    for (auto a : algos)
        for (auto k : shots) {
            const auto errs = one.errors_for(a, k);
            EXPECT_EQ(errs.size(), 12u * (6u - k)) << meta::to_string(a) << " k=" << k;
            for (double e : errs) EXPECT_GE(e, 0.0);
        }

    cfg.repeats = 3;
    const auto three = benchmark(suite, std::span(algos).first(1), std::span(shots).first(1), cfg);
    EXPECT_EQ(three.errors_for(Algorithm::conventional, 1).size(), 3 * one.errors_for(Algorithm::conventional, 1).size());
}

TEST(Benchmark, TbMamlWithoutIntensityMatchesMaml) {
    const auto suite = tiny_suite(3);
    auto cfg = tiny_config();
    cfg.meta.gamma = 0.0;
    const std::vector<Algorithm> algos{Algorithm::maml, Algorithm::tb_maml};
    const std::vector<std::size_t> shots{2};
    const auto rep = benchmark(suite, algos, shots, cfg);
    EXPECT_EQ(rep.errors_for(Algorithm::maml, 2), rep.errors_for(Algorithm::tb_maml, 2));
    EXPECT_EQ(rep.importance.size(), 1u);
}

TEST(Benchmark, RejectsBadConfigurations) {
    const auto suite = tiny_suite(3);
    const auto cfg = tiny_config();
    const std::vector<Algorithm> algos{Algorithm::maml};
    EXPECT_THROW(benchmark(suite, algos, std::vector<std::size_t>{0}, cfg), ConfigError);
    EXPECT_THROW(benchmark(suite, std::vector<Algorithm>{}, std::vector<std::size_t>{1}, cfg), ConfigError);
}

TEST(Sweep, SubsetsAreSharedAndFullCountIsIdentity) {
    EXPECT_EQ(sweep_subset(6, 6, 0, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
    const auto a = sweep_subset(28, 5, 2, 9), b = sweep_subset(28, 5, 2, 9);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 5u);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_THROW(sweep_subset(4, 5, 0, 1), ConfigError);
}

TEST(Sweep, FullCountReproducesBenchmark) {
    const auto suite = tiny_suite(4);
    auto cfg = tiny_config();
    cfg.meta.shots = 2;
    const std::vector<Algorithm> algos{Algorithm::maml, Algorithm::tb_maml};
    const std::vector<std::size_t> shots{2};
    const auto rep = benchmark(suite, algos, shots, cfg);
    const std::vector<std::size_t> counts{3, 2};
    const auto sweep = task_count_sweep(suite, algos, counts, cfg);
    ASSERT_EQ(sweep.size(), 4u);
    EXPECT_EQ(sweep[0].algorithm, Algorithm::maml);
    EXPECT_EQ(sweep[0].task_count, 3u);
    EXPECT_EQ(sweep[0].mean_error_cm, mean(rep.errors_for(Algorithm::maml, 2)));
    EXPECT_EQ(sweep[2].mean_error_cm, mean(rep.errors_for(Algorithm::tb_maml, 2)));
    EXPECT_EQ(sweep[1].error_count_per_repeat, (std::vector<std::size_t>{12u * 4u}));
    EXPECT_THROW(task_count_sweep(suite, std::vector<Algorithm>{Algorithm::conventional}, counts, cfg), ConfigError);
}

TEST(CrossScenario, ShapeAndDuplicateControl) {
    auto suite = tiny_suite(2);
    auto cfg = tiny_config();
    const auto m = cross_scenario_matrix(suite, cfg, 0);
    ASSERT_EQ(m.mean_error.size(), 2u);
    ASSERT_EQ(m.mean_error[0].size(), 2u);
    EXPECT_EQ(m.ids, (std::vector<std::string>{suite[0].id, suite[1].id}));
    EXPECT_EQ(m.diagonal_mean(), (m.mean_error[0][0] + m.mean_error[1][1]) / 2);
    EXPECT_EQ(m.off_diagonal_mean(), (m.mean_error[0][1] + m.mean_error[1][0]) / 2);

    // Two copies of one scenario under different ids: only the held-out draw differs.
    auto twin = suite[0];
    twin.id = "twin";
    const std::vector<Scenario> dup{suite[0], twin};
    const auto d = cross_scenario_matrix(dup, cfg, 0);
    EXPECT_NEAR(d.mean_error[0][1], d.mean_error[0][0], 0.15 * d.mean_error[0][0]);
    EXPECT_NEAR(d.mean_error[1][0], d.mean_error[1][1], 0.15 * d.mean_error[1][1]);
    EXPECT_THROW(cross_scenario_matrix(std::span(suite).first(1), cfg, 0), DataError);
}

TEST(Report, CsvHeadersAndRows) {
    const auto suite = tiny_suite(3);
    const auto cfg = tiny_config();
    const std::vector<Algorithm> algos{Algorithm::conventional};
    const std::vector<std::size_t> shots{1};
    const auto rep = benchmark(suite, algos, shots, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "metaloc_report_test";
    std::filesystem::create_directories(dir);
    write_errors_csv(dir / "errors.csv", rep);
    write_cdf_csv(dir / "cdf.csv", rep);
    EXPECT_EQ(read_first_line(dir / "errors.csv"), "algorithm,shots,repeat,scenario,error_cm");
    EXPECT_EQ(read_first_line(dir / "cdf.csv"), "algorithm,shots,threshold_cm,fraction");

    std::ifstream in(dir / "errors.csv");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 1 + rep.errors.size());

    const auto summary = summary_json(rep);
    EXPECT_EQ(summary.at("cells").size(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(Report, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 123456.789, 5e-324, 0.0}) {
        const auto s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
}
