#include <metaloc/errors.hpp>
#include <metaloc/grad.hpp>
#include <metaloc/importance.hpp>
#include <metaloc/meta.hpp>
#include <metaloc/model.hpp>
#include <metaloc/ops.hpp>
#include <metaloc/parallel.hpp>
#include <metaloc/rng.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metaloc::meta {

std::string_view to_string(Algorithm algorithm) noexcept {
    switch (algorithm) {
    case Algorithm::conventional: return "conventional";
    case Algorithm::transfer: return "transfer";
    case Algorithm::maml: return "maml";
    case Algorithm::fomaml: return "fomaml";
    case Algorithm::tb_maml: return "tb-maml";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (auto a : {Algorithm::conventional, Algorithm::transfer, Algorithm::maml, Algorithm::fomaml, Algorithm::tb_maml}) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown algorithm '" + std::string(name) +
                      "' (expected conventional, transfer, maml, fomaml or tb-maml)");
}

bool is_meta_learner(Algorithm algorithm) noexcept {
    return algorithm == Algorithm::maml || algorithm == Algorithm::fomaml || algorithm == Algorithm::tb_maml;
}

void MetaConfig::validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(alpha)) throw ConfigError("alpha must be finite and non-negative");
    if (!finite_nonneg(beta)) throw ConfigError("beta must be finite and non-negative");
    if (!finite_nonneg(gamma)) throw ConfigError("gamma must be finite and non-negative");
    if (gamma > beta) throw ConfigError("gamma must not exceed beta (keeps beta + gamma * u positive)");
    if (meta_batch == 0) throw ConfigError("meta_batch must be at least 1");
    if (!(step_floor > 0.0)) throw ConfigError("step_floor must be positive");
    if (!std::isfinite(convergence_tol)) throw ConfigError("convergence_tol must be finite");
}

nlohmann::json to_json(const MetaConfig& c) {
    return {{"alpha", c.alpha},
            {"beta", c.beta},
            {"gamma", c.gamma},
            {"inner_steps", c.inner_steps},
            {"shots", c.shots},
            {"meta_iterations", c.meta_iterations},
            {"meta_batch", c.meta_batch},
            {"step_floor", c.step_floor},
            {"seed", c.seed},
            {"query_per_rp", c.query_per_rp},
            {"convergence_window", c.convergence_window},
            {"convergence_tol", c.convergence_tol},
            {"base_epochs", c.base_epochs},
            {"baseline_epochs", c.baseline_epochs}};
}

MetaConfig config_from_json(const nlohmann::json& doc) {
    MetaConfig c;
    try {
        c.alpha = doc.value("alpha", c.alpha);
        c.beta = doc.value("beta", c.beta);
        c.gamma = doc.value("gamma", c.gamma);
        c.inner_steps = doc.value("inner_steps", c.inner_steps);
        c.shots = doc.value("shots", c.shots);
        c.meta_iterations = doc.value("meta_iterations", c.meta_iterations);
        c.meta_batch = doc.value("meta_batch", c.meta_batch);
        c.step_floor = doc.value("step_floor", c.step_floor);
        c.seed = doc.value("seed", c.seed);
        c.query_per_rp = doc.value("query_per_rp", c.query_per_rp);
        c.convergence_window = doc.value("convergence_window", c.convergence_window);
        c.convergence_tol = doc.value("convergence_tol", c.convergence_tol);
        c.base_epochs = doc.value("base_epochs", c.base_epochs);
        c.baseline_epochs = doc.value("baseline_epochs", c.baseline_epochs);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ParamSet inner_adapt(const ParamSet& theta, const Objective& support_loss, double alpha, std::size_t steps,
                     bool create_graph) {
    if (steps == 0) return theta;
    ParamSet current = create_graph ? theta : theta.as_parameters();
    for (std::size_t step = 0; step < steps; ++step) {
        const ad::Tensor loss = support_loss(current);
        ad::check_finite(loss, "inner_adapt: support loss");
        const std::vector<ad::Tensor> tensors = current.tensors();
        const ad::GradResult g = ad::grad(loss, tensors, create_graph);
        std::vector<ad::Tensor> next;
        next.reserve(tensors.size());
        if (create_graph) {
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                next.push_back(ad::sub(tensors[i], ad::scale(g.grads[i], alpha)));
            }
        } else {
            ad::NoGradGuard no_grad;
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                next.push_back(ad::sub(tensors[i], ad::scale(g.grads[i], alpha)).detach_parameter());
            }
        }
        current = current.with_tensors(std::move(next));
        check_finite(current, "inner_adapt: parameters after step " + std::to_string(step + 1));
    }
    return current;
}

TaskGradient maml_task_gradient(const ParamSet& theta, const TaskObjective& task, const MetaConfig& config) {
    const ParamSet base = theta.as_parameters();
    const ParamSet adapted = inner_adapt(base, task.support, config.alpha, config.inner_steps, true);
    const ad::Tensor query = task.query(adapted);
    ad::check_finite(query, "maml: query loss of task " + task.task_id);
    auto g = ad::grad(query, base.tensors(), false);
    return {std::move(g.grads), query.item()};
}

TaskGradient fomaml_task_gradient(const ParamSet& theta, const TaskObjective& task, const MetaConfig& config) {
    const ParamSet adapted = inner_adapt(theta.as_parameters(), task.support, config.alpha, config.inner_steps, false);
    const ad::Tensor query = task.query(adapted);
    ad::check_finite(query, "fomaml: query loss of task " + task.task_id);
    auto g = ad::grad(query, adapted.tensors(), false);
    return {std::move(g.grads), query.item()};
}

ParamSet apply_update(const ParamSet& theta, std::span<const TaskGradient> grads, std::span<const double> step_sizes) {
    if (grads.size() != step_sizes.size()) throw ConfigError("apply_update: one step size per task gradient");
    std::vector<ad::Tensor> next;
    next.reserve(theta.size());
    for (std::size_t t = 0; t < theta.size(); ++t) {
        const auto current = theta[t].values();
        std::vector<double> out(current.begin(), current.end());
        for (std::size_t e = 0; e < out.size(); ++e) {
            double acc = 0.0;
            for (std::size_t i = 0; i < grads.size(); ++i) acc += step_sizes[i] * grads[i].grad[t].values()[e];
            out[e] -= acc;
        }
        next.push_back(ad::Tensor::constant(theta[t].shape(), std::move(out)));
    }
    ParamSet updated = theta.with_tensors(std::move(next));
    check_finite(updated, "outer update");
    return updated;
}

EffectiveStep effective_step(double beta, double gamma, double u, double floor) noexcept {
    const double step = beta + gamma * u;
    if (step < floor) return {floor, true};
    return {step, false};
}

namespace {

using GradientFn = TaskGradient (*)(const ParamSet&, const TaskObjective&, const MetaConfig&);

std::vector<TaskGradient> task_gradients(const ParamSet& theta, std::span<const TaskObjective> tasks,
                                         const MetaConfig& config, GradientFn fn) {
    std::vector<TaskGradient> out(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) { out[i] = fn(theta, tasks[i], config); });
    return out;
}

ParamSet weighted_step(const ParamSet& theta, std::span<const TaskObjective> tasks, std::vector<double> steps,
                       const MetaConfig& config, GradientFn fn, bool clamped, StepReport* report) {
    const auto grads = task_gradients(theta, tasks, config, fn);
    if (report) {
        report->query_losses.clear();
        for (const auto& g : grads) report->query_losses.push_back(g.query_loss);
        report->step_sizes = steps;
        report->clamped = clamped;
    }
    return apply_update(theta, grads, steps);
}

} // namespace

ParamSet maml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, const MetaConfig& config,
                   StepReport* report) {
    return weighted_step(theta, tasks, std::vector<double>(tasks.size(), config.beta), config, &maml_task_gradient,
                         false, report);
}

ParamSet fomaml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, const MetaConfig& config,
                     StepReport* report) {
    return weighted_step(theta, tasks, std::vector<double>(tasks.size(), config.beta), config, &fomaml_task_gradient,
                         false, report);
}

ParamSet tb_maml_step(const ParamSet& theta, std::span<const TaskObjective> tasks, std::span<const double> u,
                      const MetaConfig& config, StepReport* report) {
    if (u.size() != tasks.size()) throw ConfigError("tb_maml_step: one importance value per task");
    std::vector<double> steps;
    bool clamped = false;
    for (double ui : u) {
        if (!(ui >= -1.0 && ui <= 1.0)) throw ConfigError("tb_maml_step: importance outside [-1, 1]");
        const auto eff = effective_step(config.beta, config.gamma, ui, config.step_floor);
        steps.push_back(eff.step);
        clamped = clamped || eff.clamped;
    }
    return weighted_step(theta, tasks, std::move(steps), config, &maml_task_gradient, clamped, report);
}

ParamSet tb_maml_step(const ParamSet& theta, const TaskObjective& task, double u, const MetaConfig& config,
                      StepReport* report) {
    return tb_maml_step(theta, std::span<const TaskObjective>(&task, 1), std::span<const double>(&u, 1), config,
                        report);
}

Episode sample_episode(const Scenario& scenario, std::size_t shots, std::size_t query_per_rp, std::uint64_t seed) {
    const TaskSplit split = split_task(scenario, shots, seed);
    const auto query = take_per_point(scenario, split.query, query_per_rp, seed);
    return {make_batch(scenario, split.support), make_batch(scenario, query)};
}

TaskObjective model_objective(Episode episode, std::string task_id) {
    auto support = std::make_shared<const Batch>(std::move(episode.support));
    auto query = std::make_shared<const Batch>(std::move(episode.query));
    return {[support](const ParamSet& p) { return model::loss(p, *support); },
            [query](const ParamSet& p) { return model::loss(p, *query); }, std::move(task_id)};
}

TrainResult meta_train(Algorithm algorithm, std::span<const Scenario> tasks, const MetaConfig& config,
                       const ImportanceVector* importance, const ParamSet* init) {
    config.validate();
    if (!is_meta_learner(algorithm)) {
        throw ConfigError("meta_train: " + std::string(to_string(algorithm)) + " is not a meta-learner");
    }
    if (tasks.empty()) throw DataError("meta_train: no meta-training tasks");
    if (config.shots == 0) throw ConfigError("meta_train: shots must be at least 1");
    if (algorithm == Algorithm::tb_maml) {
        bool aligned = importance && importance->u.size() == tasks.size();
        if (aligned && !importance->task_ids.empty()) {
            aligned = importance->task_ids.size() == tasks.size();
            for (std::size_t i = 0; aligned && i < tasks.size(); ++i) {
                aligned = importance->task_ids[i] == tasks[i].id;
            }
        }
        if (!aligned) {
            throw ConfigError("meta_train: tb-maml needs an importance vector aligned with the training tasks");
        }
    }

    TrainResult result;
    result.theta = init ? init->detached() : model::init(config.seed);
    model::check_layout(result.theta);

    Rng sampler = make_rng(config.seed, "sampling");
    std::uniform_int_distribution<std::size_t> pick(0, tasks.size() - 1);
    std::vector<double> iteration_loss;
    const std::size_t window = config.convergence_window;

    for (std::size_t it = 0; it < config.meta_iterations; ++it) {
        std::vector<TaskObjective> batch;
        std::vector<double> u;
        batch.reserve(config.meta_batch);
        for (std::size_t b = 0; b < config.meta_batch; ++b) {
            const std::size_t idx = pick(sampler);
            const std::uint64_t episode_seed = sampler();
            batch.push_back(
                model_objective(sample_episode(tasks[idx], config.shots, config.query_per_rp, episode_seed), tasks[idx].id));
            if (importance) u.push_back(importance->u[idx]);
        }

        StepReport report;
        switch (algorithm) {
        case Algorithm::maml: result.theta = maml_step(result.theta, batch, config, &report); break;
        case Algorithm::fomaml: result.theta = fomaml_step(result.theta, batch, config, &report); break;
        case Algorithm::tb_maml: result.theta = tb_maml_step(result.theta, batch, u, config, &report); break;
        default: break;
        }
        result.step_clamped = result.step_clamped || report.clamped;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            result.trace.push_back({it, batch[b].task_id, report.query_losses[b]});
        }
        iteration_loss.push_back(std::accumulate(report.query_losses.begin(), report.query_losses.end(), 0.0) /
                                 static_cast<double>(report.query_losses.size()));
        result.iterations = it + 1;

        const std::size_t done = iteration_loss.size();
        if (window > 0 && done >= 2 * window && done % window == 0) {
            const auto mean_of = [&](std::size_t from) {
                return std::accumulate(iteration_loss.begin() + static_cast<std::ptrdiff_t>(from),
                                       iteration_loss.begin() + static_cast<std::ptrdiff_t>(from + window), 0.0) /
                       static_cast<double>(window);
            };
            const double previous = mean_of(done - 2 * window);
            const double latest = mean_of(done - window);
            if (previous - latest < config.convergence_tol * std::abs(previous)) {
                result.converged = true;
                break;
            }
        }
    }
    return result;
}

ParamSet train_full_batch(const ParamSet& theta, const Batch& batch, double lr, std::size_t epochs) {
    if (epochs == 0) return theta.detached();
    if (batch.empty()) throw DataError("train_full_batch: empty batch");
    const Objective objective = [&batch](const ParamSet& p) { return model::loss(p, batch); };
    return inner_adapt(theta, objective, lr, epochs, false).detached();
}

ParamSet train_conventional(const Batch& support, const MetaConfig& config, std::uint64_t seed) {
    ParamSet theta = model::init(seed);
    if (support.empty()) return theta;
    return train_full_batch(theta, support, config.alpha, config.baseline_epochs);
}

ParamSet train_transfer(const Batch& source, const Batch& target_support, const MetaConfig& config,
                        std::uint64_t seed, std::optional<std::size_t> finetune_epochs) {
    const ParamSet base = train_full_batch(model::init(seed), source, config.alpha, config.base_epochs);
    const std::size_t ft = finetune_epochs.value_or(config.baseline_epochs);
    if (ft == 0 || target_support.empty()) return base;
    return train_full_batch(base, target_support, config.alpha, ft);
}

std::vector<double> distance_errors(const ParamSet& theta, const Batch& batch) {
    if (batch.empty()) return {};
    ad::NoGradGuard no_grad;
    const ad::Tensor pred = model::forward(theta, batch.inputs);
    const auto p = pred.values();
    const auto y = batch.targets.values();
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(p[2 * i] - y[2 * i], p[2 * i + 1] - y[2 * i + 1]);
    return out;
}

std::vector<double> adapt_and_eval(const ParamSet& theta, const Scenario& scenario, const TaskSplit& split,
                                   const MetaConfig& config) {
    if (split.query.empty()) throw DataError("adapt_and_eval: empty query set for " + scenario.id);
    ParamSet adapted = theta;
    if (!split.support.empty() && config.inner_steps > 0) {
        const Batch support = make_batch(scenario, split.support);
        const Objective objective = [&support](const ParamSet& p) { return model::loss(p, support); };
        adapted = inner_adapt(theta, objective, config.alpha, config.inner_steps, false).detached();
    }
    return distance_errors(adapted, make_batch(scenario, split.query));
}

} // namespace metaloc::meta
