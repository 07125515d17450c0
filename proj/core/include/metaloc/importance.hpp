#pragma once

#include <metaloc/meta.hpp>

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <vector>

namespace metaloc::meta {

/// Per-task importance for the biased outer step, with the losses it was derived from.
struct ImportanceVector {
    std::vector<std::string> task_ids;
    std::vector<double> u;            // in [-1, 1], aligned with task_ids
    std::vector<double> average_loss; // L_i
    /// pairwise_loss[i][j]: query loss on task j after fine-tuning task i's model; NaN on the diagonal.
    std::vector<std::vector<double>> pairwise_loss;
};

/// Min-max scales the losses to [-1, 1] and negates, so the lowest loss gets +1 and the
/// highest -1. All-equal losses give all zeros. Throws ConfigError for fewer than 2 entries
/// or non-finite values.
std::vector<double> importance_from_losses(std::span<const double> average_losses);

/// For each task i: train a fresh model on all of task i (config.base_epochs); for every j != i
/// fine-tune a copy on task j's k-shot support (config.inner_steps) and take its query loss.
/// Cells run in parallel; results do not depend on the worker count.
ImportanceVector compute_importance(std::span<const Scenario> tasks, const MetaConfig& config);

nlohmann::json to_json(const ImportanceVector& importance);
ImportanceVector importance_from_json(const nlohmann::json& doc);

} // namespace metaloc::meta
