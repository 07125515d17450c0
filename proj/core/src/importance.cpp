#include <metaloc/errors.hpp>
#include <metaloc/importance.hpp>
#include <metaloc/model.hpp>
#include <metaloc/parallel.hpp>
#include <metaloc/rng.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace metaloc::meta {

std::vector<double> importance_from_losses(std::span<const double> average_losses) {
    if (average_losses.size() < 2) throw DataError("importance: need at least 2 training tasks");
    for (double v : average_losses) {
        if (!std::isfinite(v)) throw NumericError("importance: non-finite average loss");
    }
    const auto [lo, hi] = std::minmax_element(average_losses.begin(), average_losses.end());
    const double min = *lo, range = *hi - *lo;
    std::vector<double> u(average_losses.size(), 0.0);
    if (range == 0.0) return u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double scaled = 2.0 * ((average_losses[i] - min) / range) - 1.0;
        u[i] = -scaled;
    }
    return u;
}

ImportanceVector compute_importance(std::span<const Scenario> tasks, const MetaConfig& config) {
    const std::size_t n = tasks.size();
    if (n < 2) throw DataError("importance: need at least 2 training tasks, got " + std::to_string(n));
    if (config.shots == 0) throw ConfigError("importance: shots must be at least 1");

    // Seeds follow task ids, so reordering the tasks reorders the result without changing it.
    std::vector<ParamSet> base(n);
    std::vector<Batch> support(n), query(n);
    parallel_for(n, [&](std::size_t i) {
        const std::string& id = tasks[i].id;
        base[i] = train_full_batch(model::init(derive_seed(config.seed, "importance-init/" + id)), make_batch(tasks[i]),
                                   config.alpha, config.base_epochs);
        const TaskSplit split = split_task(tasks[i], config.shots, derive_seed(config.seed, "importance-split/" + id));
        support[i] = make_batch(tasks[i], split.support);
        query[i] = make_batch(tasks[i], split.query);
    });

    ImportanceVector out;
    out.pairwise_loss.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
    parallel_for(n * n, [&](std::size_t cell) {
        const std::size_t i = cell / n, j = cell % n;
        if (i == j) return;
        const Batch& sup = support[j];
        const Objective objective = [&sup](const ParamSet& p) { return model::loss(p, sup); };
        const ParamSet tuned = inner_adapt(base[i], objective, config.alpha, config.inner_steps, false);
        ad::NoGradGuard no_grad;
        const ad::Tensor loss = model::loss(tuned, query[j]);
        ad::check_finite(loss, "importance: transfer loss");
        out.pairwise_loss[i][j] = loss.item();
    });

    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum += out.pairwise_loss[i][j];
        }
        out.average_loss.push_back(sum / static_cast<double>(n - 1));
        out.task_ids.push_back(tasks[i].id);
    }
    out.u = importance_from_losses(out.average_loss);
    return out;
}

nlohmann::json to_json(const ImportanceVector& iv) {
    nlohmann::json pairwise = nlohmann::json::array();
    for (const auto& row : iv.pairwise_loss) {
        nlohmann::json r = nlohmann::json::array();
        for (double v : row) r.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
        pairwise.push_back(std::move(r));
    }
    return {{"task_ids", iv.task_ids}, {"u", iv.u}, {"average_loss", iv.average_loss}, {"pairwise_loss", pairwise}};
}

ImportanceVector importance_from_json(const nlohmann::json& doc) {
    ImportanceVector iv;
    try {
        iv.task_ids = doc.at("task_ids").get<std::vector<std::string>>();
        iv.u = doc.at("u").get<std::vector<double>>();
        iv.average_loss = doc.value("average_loss", std::vector<double>{});
        if (doc.contains("pairwise_loss")) {
            for (const auto& row : doc.at("pairwise_loss")) {
                std::vector<double> r;
                for (const auto& v : row) r.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
                iv.pairwise_loss.push_back(std::move(r));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("importance file: ") + e.what());
    }
    if (iv.task_ids.size() != iv.u.size()) throw DataError("importance file: task_ids and u differ in length");
    for (double v : iv.u) {
        if (!(v >= -1.0 && v <= 1.0)) throw DataError("importance file: u outside [-1, 1]");
    }
    return iv;
}

} // namespace metaloc::meta
