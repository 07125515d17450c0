#pragma once

#include <metaloc/importance.hpp>
#include <metaloc/meta.hpp>
#include <metaloc/metrics.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace metaloc::eval {

struct ExperimentConfig {
    meta::MetaConfig meta;
    std::size_t test_tasks = 5;
    std::size_t repeats = 5;
    /// Cross-scenario matrix: samples per reference point used for training; the rest are held out.
    std::size_t matrix_train_per_rp = 30;
};

/// Progress callback: receives a short human-readable line.
using ProgressFn = std::function<void(const std::string&)>;

struct CrossScenarioMatrix {
    std::vector<std::string> ids;
    std::size_t finetune_shots = 0;
    std::vector<std::vector<double>> mean_error; // [trained on i][tested on j], cm

    double diagonal_mean() const;
    double off_diagonal_mean() const;
};

/// Cell (i, j): a model trained on scenario i's training part (meta.base_epochs), optionally
/// fine-tuned on `finetune_shots` samples per point of scenario j's training part
/// (meta.baseline_epochs), scored on scenario j's held-out part.
CrossScenarioMatrix cross_scenario_matrix(std::span<const Scenario> scenarios, const ExperimentConfig& config,
                                          std::size_t finetune_shots, const ProgressFn& progress = {});

struct ErrorRecord {
    meta::Algorithm algorithm;
    std::size_t shots = 0;
    std::size_t repeat = 0;
    std::string scenario;
    double error_cm = 0.0;
};

struct EvalReport {
    std::vector<meta::Algorithm> algorithms;
    std::vector<std::size_t> shot_counts;
    std::vector<ErrorRecord> errors;
    /// Partition of each repeat (indices into the scenario list).
    std::vector<Partition> partitions;
    std::vector<meta::ImportanceVector> importance; // one per (repeat, shot count) when tb-maml ran

    std::vector<double> errors_for(meta::Algorithm algorithm, std::size_t shots) const;
};

/// For every repeat: re-partition into meta-training / meta-testing scenarios, then for each
/// shot count and algorithm train (or meta-train) and score every query sample of every
/// meta-testing scenario. All algorithms share partitions, k-shot splits, initialization and
/// task-sampling seeds.
EvalReport benchmark(std::span<const Scenario> scenarios, std::span<const meta::Algorithm> algorithms,
                     std::span<const std::size_t> shot_counts, const ExperimentConfig& config,
                     const ProgressFn& progress = {});

struct SweepPoint {
    meta::Algorithm algorithm;
    std::size_t task_count = 0;
    double mean_error_cm = 0.0;
    std::vector<std::size_t> error_count_per_repeat;
};

/// Meta-trains on seeded subsets of each repeat's meta-training pool (shared by all algorithms)
/// and scores the fixed meta-testing scenarios at meta.shots. A count equal to the pool size
/// uses the whole pool, reproducing the benchmark's meta-learner cells.
std::vector<SweepPoint> task_count_sweep(std::span<const Scenario> scenarios, std::span<const meta::Algorithm> algorithms,
                                         std::span<const std::size_t> counts, const ExperimentConfig& config,
                                         const ProgressFn& progress = {});

/// The meta-training subset used by task_count_sweep for a repeat and count (indices into the pool).
std::vector<std::size_t> sweep_subset(std::size_t pool_size, std::size_t count, std::size_t repeat, std::uint64_t seed);

} // namespace metaloc::eval
