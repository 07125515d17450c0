#pragma once

#include <metaloc/param_set.hpp>
#include <metaloc/scenario.hpp>

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metaloc::meta {

enum class Algorithm { conventional, transfer, maml, fomaml, tb_maml };

std::string_view to_string(Algorithm algorithm) noexcept;
/// Accepts "conventional", "transfer", "maml", "fomaml", "tb-maml". Throws ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);
bool is_meta_learner(Algorithm algorithm) noexcept;

struct MetaConfig {
    double alpha = 1e-5;  // inner step size
    double beta = 3e-6;   // meta-step size
    double gamma = 1.5e-6; // importance intensity
    std::size_t inner_steps = 5;
    std::size_t shots = 5;
    std::size_t meta_iterations = 1000;
    std::size_t meta_batch = 4;
    double step_floor = 1e-6; // lower bound on beta + gamma * u
    std::uint64_t seed = 0;

    /// Query samples per reference point drawn for each meta-training episode; 0 keeps the whole remainder.
    std::size_t query_per_rp = 10;
    /// Stop once the mean query loss of the latest window improves on the previous window
    /// by less than convergence_tol (relative). A window of 0 disables the test.
    std::size_t convergence_window = 50;
    double convergence_tol = 1e-4;

    /// Full-batch gradient steps on a scenario's whole training split (importance base models,
    /// transfer source, cross-scenario models).
    std::size_t base_epochs = 100;
    /// Full-batch steps of the non-meta baselines on a k-shot support set
    /// (conventional training from scratch, transfer fine-tuning).
    std::size_t baseline_epochs = 100;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

nlohmann::json to_json(const MetaConfig& config);
/// Missing keys keep their defaults.
MetaConfig config_from_json(const nlohmann::json& doc);

/// Scalar loss as a function of the parameters.
using Objective = std::function<ad::Tensor(const ParamSet&)>;

struct TaskObjective {
    Objective support;
    Objective query;
    std::string task_id;
};

/// `steps` full-batch gradient-descent steps on `support_loss` starting at `theta`.
/// With `create_graph` the result stays differentiable with respect to `theta`
/// (which must then hold parameters that require gradients); otherwise the result
/// is a set of fresh leaf parameters. steps == 0 returns `theta` unchanged.
/// Throws NumericError when a loss or update becomes non-finite.
ParamSet inner_adapt(const ParamSet& theta, const Objective& support_loss, double alpha, std::size_t steps,
                     bool create_graph);

/// Gradient of one task's post-adaptation query loss with respect to the initialization.
struct TaskGradient {
    std::vector<ad::Tensor> grad;
    double query_loss = 0.0;
};

/// Second-order: differentiates through inner_adapt.
TaskGradient maml_task_gradient(const ParamSet& theta, const TaskObjective& task, const MetaConfig& config);
/// First-order: query gradient at the adapted parameters, applied as if taken at theta.
TaskGradient fomaml_task_gradient(const ParamSet& theta, const TaskObjective& task, const MetaConfig& config);

/// theta - sum_i step_sizes[i] * grads[i], accumulated in task order.
ParamSet apply_update(const ParamSet& theta, std::span<const TaskGradient> grads, std::span<const double> step_sizes);

struct EffectiveStep {
    double step;
    bool clamped;
};

/// max(floor, beta + gamma * u).
EffectiveStep effective_step(double beta, double gamma, double u, double floor) noexcept;

struct StepReport {
    std::vector<double> query_losses;
    std::vector<double> step_sizes;
    bool clamped = false;
};

ParamSet maml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, const MetaConfig& config,
                   StepReport* report = nullptr);
ParamSet fomaml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, const MetaConfig& config,
                     StepReport* report = nullptr);
/// Second-order update of one task with step max(floor, beta + gamma * u).
ParamSet tb_maml_step(const ParamSet& theta, const TaskObjective& task, double u, const MetaConfig& config,
                      StepReport* report = nullptr);
/// Several tasks evaluated at the same theta, each weighted by its own effective step.
ParamSet tb_maml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, std::span<const double> u,
                      const MetaConfig& config, StepReport* report = nullptr);

struct ImportanceVector;

struct TraceRow {
    std::size_t iteration = 0;
    std::string task_id;
    double query_loss = 0.0;
};

struct TrainResult {
    ParamSet theta;
    std::vector<TraceRow> trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool step_clamped = false;
};

/// Support/query batches of one meta-training episode drawn from a scenario.
struct Episode {
    Batch support;
    Batch query;
};

/// k-shot support plus up to `query_per_rp` query samples per reference point (0 = all).
Episode sample_episode(const Scenario& scenario, std::size_t shots, std::size_t query_per_rp, std::uint64_t seed);

TaskObjective model_objective(Episode episode, std::string task_id);

/// Meta-trains maml, fomaml or tb-maml over `tasks`. The initialization comes from the "init"
/// stream of config.seed unless `init` is given; task sampling uses the "sampling" stream.
/// tb-maml requires `importance`, aligned with `tasks`.
TrainResult meta_train(Algorithm algorithm, std::span<const Scenario> tasks, const MetaConfig& config,
                       const ImportanceVector* importance = nullptr, const ParamSet* init = nullptr);

/// Plain full-batch gradient descent without graph recording.
ParamSet train_full_batch(const ParamSet& theta, const Batch& batch, double lr, std::size_t epochs);

/// Fresh initialization trained only on the target support set.
ParamSet train_conventional(const Batch& support, const MetaConfig& config, std::uint64_t seed);
/// Fresh initialization trained on a whole source split, then fine-tuned on the target support for
/// `finetune_epochs` steps (defaults to config.baseline_epochs).
ParamSet train_transfer(const Batch& source, const Batch& target_support, const MetaConfig& config,
                        std::uint64_t seed, std::optional<std::size_t> finetune_epochs = std::nullopt);

/// Euclidean distance (cm) between each prediction and its label.
std::vector<double> distance_errors(const ParamSet& theta, const Batch& batch);

/// Inner-adapts on the split's support, then returns the distance error of every query sample.
std::vector<double> adapt_and_eval(const ParamSet& theta, const Scenario& scenario, const TaskSplit& split,
                                   const MetaConfig& config);

} // namespace metaloc::meta
