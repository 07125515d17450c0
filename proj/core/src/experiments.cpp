#include <metaloc/errors.hpp>
#include <metaloc/experiments.hpp>
#include <metaloc/model.hpp>
#include <metaloc/parallel.hpp>
#include <metaloc/rng.hpp>

#include <algorithm>
#include <map>
#include <numeric>

namespace metaloc::eval {

using meta::Algorithm;

double CrossScenarioMatrix::diagonal_mean() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < mean_error.size(); ++i) sum += mean_error[i][i];
    return sum / static_cast<double>(mean_error.size());
}

double CrossScenarioMatrix::off_diagonal_mean() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mean_error.size(); ++i)
        for (std::size_t j = 0; j < mean_error.size(); ++j)
            if (i != j) {
                sum += mean_error[i][j];
                ++count;
            }
    return count ? sum / static_cast<double>(count) : 0.0;
}

CrossScenarioMatrix cross_scenario_matrix(std::span<const Scenario> scenarios, const ExperimentConfig& config,
                                          std::size_t finetune_shots, const ProgressFn& progress) {
    const std::size_t n = scenarios.size();
    if (n < 2) throw DataError("cross-scenario matrix: need at least 2 scenarios");
    const auto& mc = config.meta;
    mc.validate();

    std::vector<TaskSplit> holdout(n);
    std::vector<ParamSet> trained(n);
    std::vector<Batch> held_out(n);
    parallel_for(n, [&](std::size_t i) {
        const auto& sc = scenarios[i];
        holdout[i] = split_task(sc, config.matrix_train_per_rp, derive_seed(mc.seed, "matrix-holdout/" + sc.id));
        trained[i] = meta::train_full_batch(model::init(derive_seed(mc.seed, "matrix-init/" + sc.id)),
                                            make_batch(sc, holdout[i].support), mc.alpha, mc.base_epochs);
        held_out[i] = make_batch(sc, holdout[i].query);
    });
    if (progress) progress("matrix: trained " + std::to_string(n) + " per-scenario models");

    std::vector<Batch> finetune(n);
    if (finetune_shots > 0) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto picks = take_per_point(scenarios[j], holdout[j].support, finetune_shots,
                                              derive_seed(mc.seed, "matrix-finetune/" + scenarios[j].id));
            finetune[j] = make_batch(scenarios[j], picks);
        }
    }

    CrossScenarioMatrix m;
    m.finetune_shots = finetune_shots;
    for (const auto& sc : scenarios) m.ids.push_back(sc.id);
    m.mean_error.assign(n, std::vector<double>(n, 0.0));
    parallel_for(n * n, [&](std::size_t cell) {
        const std::size_t i = cell / n, j = cell % n;
        const ParamSet theta = finetune_shots > 0
                                   ? meta::train_full_batch(trained[i], finetune[j], mc.alpha, mc.baseline_epochs)
                                   : trained[i];
        m.mean_error[i][j] = mean(meta::distance_errors(theta, held_out[j]));
    });
    if (progress) progress("matrix: evaluated " + std::to_string(n * n) + " cells (fine-tune shots " +
                           std::to_string(finetune_shots) + ")");
    return m;
}

std::vector<double> EvalReport::errors_for(Algorithm algorithm, std::size_t shots) const {
    std::vector<double> out;
    for (const auto& r : errors) {
        if (r.algorithm == algorithm && r.shots == shots) out.push_back(r.error_cm);
    }
    return out;
}

namespace {

std::vector<Scenario> select(std::span<const Scenario> scenarios, std::span<const std::size_t> indices) {
    std::vector<Scenario> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(scenarios[i]);
    return out;
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return derive_seed(seed, "repeat", repeat); }

// Seeds for everything trained in one (repeat, shots) cell; identical for every algorithm.
meta::MetaConfig cell_config(const meta::MetaConfig& base, std::size_t repeat, std::size_t shots) {
    meta::MetaConfig c = base;
    c.shots = shots;
    c.seed = derive_seed(base.seed, "cell", repeat * 1000003ULL + shots);
    return c;
}

std::vector<TaskSplit> test_splits(const std::vector<Scenario>& test, std::size_t shots, std::uint64_t seed,
                                   std::size_t repeat) {
    std::vector<TaskSplit> out;
    for (const auto& sc : test) out.push_back(split_task(sc, shots, derive_seed(seed, "test-split/" + sc.id, repeat)));
    return out;
}

// Meta-trains and scores one meta-learner; `importance` is only read for tb-maml.
std::vector<std::pair<std::string, std::vector<double>>>
run_meta_cell(Algorithm algorithm, const std::vector<Scenario>& train, const std::vector<Scenario>& test,
              const std::vector<TaskSplit>& splits, const meta::MetaConfig& cfg, const meta::ImportanceVector* importance) {
    const auto result = meta::meta_train(algorithm, train, cfg, algorithm == Algorithm::tb_maml ? importance : nullptr);
    std::vector<std::pair<std::string, std::vector<double>>> out;
    for (std::size_t t = 0; t < test.size(); ++t) {
        out.emplace_back(test[t].id, meta::adapt_and_eval(result.theta, test[t], splits[t], cfg));
    }
    return out;
}

} // namespace

EvalReport benchmark(std::span<const Scenario> scenarios, std::span<const Algorithm> algorithms,
                     std::span<const std::size_t> shot_counts, const ExperimentConfig& config,
                     const ProgressFn& progress) {
    config.meta.validate();
    if (algorithms.empty() || shot_counts.empty()) throw ConfigError("benchmark: need algorithms and shot counts");
    if (config.repeats == 0) throw ConfigError("benchmark: repeats must be at least 1");
    for (std::size_t k : shot_counts) {
        if (k == 0) throw ConfigError("benchmark: shot counts must be positive");
    }

    EvalReport report;
    report.algorithms.assign(algorithms.begin(), algorithms.end());
    report.shot_counts.assign(shot_counts.begin(), shot_counts.end());
    const std::uint64_t seed = config.meta.seed;

    for (std::size_t r = 0; r < config.repeats; ++r) {
        const Partition part = partition_tasks(scenarios.size(), config.test_tasks, repeat_seed(seed, r));
        report.partitions.push_back(part);
        const auto train = select(scenarios, part.train);
        const auto test = select(scenarios, part.test);

        // Transfer source: one training scenario chosen per repeat.
        Rng source_rng = make_rng(seed, "transfer-source", r);
        const std::size_t source_idx = std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(source_rng);

        for (std::size_t k : shot_counts) {
            const meta::MetaConfig cfg = cell_config(config.meta, r, k);
            const auto splits = test_splits(test, k, seed, r);
            std::optional<meta::ImportanceVector> importance;
            std::optional<ParamSet> source_model;

            for (Algorithm algo : algorithms) {
                if (progress) progress("repeat " + std::to_string(r) + " shots " + std::to_string(k) + ": " +
                                       std::string(meta::to_string(algo)));
                auto record = [&](const std::string& id, const std::vector<double>& errs) {
                    for (double e : errs) report.errors.push_back({algo, k, r, id, e});
                };
                switch (algo) {
                case Algorithm::conventional:
                    for (std::size_t t = 0; t < test.size(); ++t) {
                        const auto theta = meta::train_conventional(make_batch(test[t], splits[t].support), cfg,
                                                                    derive_seed(cfg.seed, "conventional-init"));
                        record(test[t].id, meta::distance_errors(theta, make_batch(test[t], splits[t].query)));
                    }
                    break;
                case Algorithm::transfer:
                    if (!source_model) {
                        source_model = meta::train_full_batch(model::init(derive_seed(cfg.seed, "transfer-init")),
                                                              make_batch(train[source_idx]), cfg.alpha, cfg.base_epochs);
                    }
                    for (std::size_t t = 0; t < test.size(); ++t) {
                        const auto theta = meta::train_full_batch(*source_model, make_batch(test[t], splits[t].support),
                                                                  cfg.alpha, cfg.baseline_epochs);
                        record(test[t].id, meta::distance_errors(theta, make_batch(test[t], splits[t].query)));
                    }
                    break;
                case Algorithm::tb_maml:
                    if (!importance) {
                        importance = meta::compute_importance(train, cfg);
                        report.importance.push_back(*importance);
                    }
                    [[fallthrough]];
                case Algorithm::maml:
                case Algorithm::fomaml:
                    for (const auto& [id, errs] :
                         run_meta_cell(algo, train, test, splits, cfg, importance ? &*importance : nullptr)) {
                        record(id, errs);
                    }
                    break;
                }
            }
        }
    }
    return report;
}

std::vector<std::size_t> sweep_subset(std::size_t pool_size, std::size_t count, std::size_t repeat, std::uint64_t seed) {
    if (count == 0 || count > pool_size) {
        throw ConfigError("task-count sweep: count " + std::to_string(count) + " outside 1.." + std::to_string(pool_size));
    }
    std::vector<std::size_t> order(pool_size);
    std::iota(order.begin(), order.end(), 0);
    if (count == pool_size) return order;
    Rng rng = make_rng(seed, "sweep-subset", repeat * 1000003ULL + count);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<SweepPoint> task_count_sweep(std::span<const Scenario> scenarios, std::span<const Algorithm> algorithms,
                                         std::span<const std::size_t> counts, const ExperimentConfig& config,
                                         const ProgressFn& progress) {
    config.meta.validate();
    for (Algorithm a : algorithms) {
        if (!meta::is_meta_learner(a)) throw ConfigError("task-count sweep: only meta-learners are swept");
    }
    const std::uint64_t seed = config.meta.seed;
    const std::size_t k = config.meta.shots;

    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> pooled; // (algo index, count index)
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> per_repeat;

    for (std::size_t r = 0; r < config.repeats; ++r) {
        const Partition part = partition_tasks(scenarios.size(), config.test_tasks, repeat_seed(seed, r));
        const auto pool = select(scenarios, part.train);
        const auto test = select(scenarios, part.test);
        const meta::MetaConfig cfg = cell_config(config.meta, r, k);
        const auto splits = test_splits(test, k, seed, r);

        for (std::size_t ci = 0; ci < counts.size(); ++ci) {
            const auto subset_idx = sweep_subset(pool.size(), counts[ci], r, seed);
            const auto train = select(pool, subset_idx);
            std::optional<meta::ImportanceVector> importance;
            for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
                if (progress) progress("sweep repeat " + std::to_string(r) + " tasks " + std::to_string(counts[ci]) +
                                       ": " + std::string(meta::to_string(algorithms[ai])));
                if (algorithms[ai] == Algorithm::tb_maml && !importance) importance = meta::compute_importance(train, cfg);
                std::size_t n_err = 0;
                for (const auto& [id, errs] :
                     run_meta_cell(algorithms[ai], train, test, splits, cfg, importance ? &*importance : nullptr)) {
                    auto& dst = pooled[{ai, ci}];
                    dst.insert(dst.end(), errs.begin(), errs.end());
                    n_err += errs.size();
                }
                per_repeat[{ai, ci}].push_back(n_err);
            }
        }
    }

    std::vector<SweepPoint> out;
    for (std::size_t ai = 0; ai < algorithms.size(); ++ai)
        for (std::size_t ci = 0; ci < counts.size(); ++ci) {
            out.push_back({algorithms[ai], counts[ci], mean(pooled[{ai, ci}]), per_repeat[{ai, ci}]});
        }
    return out;
}

} // namespace metaloc::eval
