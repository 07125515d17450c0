#include <metaloc/errors.hpp>
#include <metaloc/rng.hpp>
#include <metaloc/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metaloc {

std::vector<Position> reference_points(const Grid& grid) {
    std::vector<Position> out;
    out.reserve(grid.points());
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c)
            out.push_back({static_cast<double>(r) * grid.spacing_cm, static_cast<double>(c) * grid.spacing_cm});
    return out;
}

void validate(const Scenario& scenario) {
    if (scenario.grid.points() == 0 || !(scenario.grid.spacing_cm > 0.0)) {
        throw DataError("scenario " + scenario.id + ": degenerate grid");
    }
    const auto points = reference_points(scenario.grid);
    for (std::size_t i = 0; i < scenario.samples.size(); ++i) {
        const auto& s = scenario.samples[i];
        if (s.rp >= points.size()) {
            throw DataError("scenario " + scenario.id + ": samples[" + std::to_string(i) + "].rp = " +
                            std::to_string(s.rp) + " outside grid of " + std::to_string(points.size()) + " points");
        }
        if (s.pos != points[s.rp]) {
            throw DataError("scenario " + scenario.id + ": samples[" + std::to_string(i) +
                            "].pos_cm does not match reference point " + std::to_string(s.rp));
        }
    }
}

std::vector<std::size_t> samples_per_point(const Scenario& scenario) {
    std::vector<std::size_t> counts(scenario.grid.points(), 0);
    for (const auto& s : scenario.samples) {
        if (s.rp < counts.size()) ++counts[s.rp];
    }
    return counts;
}

Amplitudes normalize(std::span<const double> amplitudes) {
    if (amplitudes.size() != model::kSampleSize) {
        throw DataError("normalize: expected " + std::to_string(model::kSampleSize) + " amplitudes, got " +
                        std::to_string(amplitudes.size()));
    }
    double peak = 0.0;
    for (double v : amplitudes) {
        if (!std::isfinite(v) || v < 0.0) throw DataError("normalize: amplitudes must be finite and non-negative");
        peak = std::max(peak, v);
    }
    if (!(peak > 0.0)) throw DataError("normalize: all-zero sample carries no information");
    Amplitudes out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = amplitudes[i] / peak;
    return out;
}

TaskSplit split_task(const Scenario& scenario, std::size_t shots, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_point(scenario.grid.points());
    for (std::size_t i = 0; i < scenario.samples.size(); ++i) {
        const std::size_t rp = scenario.samples[i].rp;
        if (rp >= by_point.size()) throw DataError("split_task: sample " + std::to_string(i) + " has invalid rp");
        by_point[rp].push_back(i);
    }
    for (std::size_t rp = 0; rp < by_point.size(); ++rp) {
        if (by_point[rp].size() <= shots) {
            throw DataError("split_task: reference point " + std::to_string(rp) + " of scenario " + scenario.id +
                            " has " + std::to_string(by_point[rp].size()) + " samples, need more than " +
                            std::to_string(shots));
        }
    }

    TaskSplit split;
    split.shots = shots;
    split.seed = seed;
    Rng rng = make_rng(seed, "split");
    std::vector<bool> in_support(scenario.samples.size(), false);
    for (auto& indices : by_point) {
        std::shuffle(indices.begin(), indices.end(), rng);
        std::sort(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(shots));
        for (std::size_t j = 0; j < shots; ++j) {
            split.support.push_back(indices[j]);
            in_support[indices[j]] = true;
        }
    }
    for (std::size_t i = 0; i < scenario.samples.size(); ++i) {
        if (!in_support[i]) split.query.push_back(i);
    }
    return split;
}

std::vector<std::size_t> take_per_point(const Scenario& scenario, std::span<const std::size_t> indices,
                                        std::size_t per_point, std::uint64_t seed) {
    std::vector<std::size_t> out(indices.begin(), indices.end());
    if (per_point == 0) {
        std::sort(out.begin(), out.end());
        return out;
    }
    std::vector<std::vector<std::size_t>> by_point(scenario.grid.points());
    for (std::size_t idx : indices) {
        if (idx >= scenario.samples.size() || scenario.samples[idx].rp >= by_point.size()) {
            throw DataError("take_per_point: invalid sample index " + std::to_string(idx));
        }
        by_point[scenario.samples[idx].rp].push_back(idx);
    }
    Rng rng = make_rng(seed, "take-per-point");
    out.clear();
    for (auto& group : by_point) {
        std::shuffle(group.begin(), group.end(), rng);
        group.resize(std::min(group.size(), per_point));
        out.insert(out.end(), group.begin(), group.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Batch make_batch(const Scenario& scenario, std::span<const std::size_t> indices) {
    if (indices.empty()) return {};
    std::vector<double> inputs;
    std::vector<double> targets;
    inputs.reserve(indices.size() * model::kSampleSize);
    targets.reserve(indices.size() * 2);
    for (std::size_t idx : indices) {
        if (idx >= scenario.samples.size()) throw DataError("make_batch: sample index out of range");
        const auto& s = scenario.samples[idx];
        const auto norm = normalize(s.amp);
        inputs.insert(inputs.end(), norm.begin(), norm.end());
        targets.push_back(s.pos[0]);
        targets.push_back(s.pos[1]);
    }
    const std::size_t n = indices.size();
    return {ad::Tensor::constant({n, model::kAntennas, model::kSubcarriers}, std::move(inputs)),
            ad::Tensor::constant({n, 2}, std::move(targets))};
}

Batch make_batch(const Scenario& scenario) {
    std::vector<std::size_t> all(scenario.samples.size());
    std::iota(all.begin(), all.end(), 0);
    return make_batch(scenario, all);
}

Partition partition_tasks(std::size_t count, std::size_t test_count, std::uint64_t seed) {
    if (test_count >= count) {
        throw ConfigError("partition_tasks: need fewer meta-testing tasks (" + std::to_string(test_count) +
                          ") than scenarios (" + std::to_string(count) + ")");
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, "partition");
    std::shuffle(order.begin(), order.end(), rng);
    Partition p;
    p.seed = seed;
    p.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_count));
    p.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_count), order.end());
    std::sort(p.test.begin(), p.test.end());
    std::sort(p.train.begin(), p.train.end());
    return p;
}

} // namespace metaloc
