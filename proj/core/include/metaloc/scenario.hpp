#pragma once

#include <metaloc/batch.hpp>
#include <metaloc/model.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metaloc {

using Position = model::Position;
using Amplitudes = std::array<double, model::kSampleSize>; // antenna-major 3 x 30

/// Reference-point lattice. Point index r * cols + c sits at (r * spacing, c * spacing) cm.
struct Grid {
    std::size_t rows = 3;
    std::size_t cols = 4;
    double spacing_cm = 60.0;

    std::size_t points() const noexcept { return rows * cols; }
    bool operator==(const Grid&) const = default;
};

std::vector<Position> reference_points(const Grid& grid);

struct Sample {
    std::size_t rp = 0;
    Position pos{};
    Amplitudes amp{}; // raw, non-negative

    bool operator==(const Sample&) const = default;
};

/// One indoor location: a task in meta-learning terms.
struct Scenario {
    std::string id;
    Grid grid;
    std::vector<Sample> samples;

    bool operator==(const Scenario&) const = default;
};

/// Throws DataError when a label is off-grid or a reference index is out of range.
void validate(const Scenario& scenario);

/// Number of samples recorded at each reference point.
std::vector<std::size_t> samples_per_point(const Scenario& scenario);

/// Divides every entry by the sample maximum. Throws DataError for an all-zero
/// (or non-positive) sample and for negative or non-finite entries.
Amplitudes normalize(std::span<const double> amplitudes);

/// Support (exactly `shots` per reference point) and the disjoint remaining query set,
/// as indices into Scenario::samples.
struct TaskSplit {
    std::size_t shots = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> support;
    std::vector<std::size_t> query;
};

/// Draws `shots` samples per reference point uniformly without replacement.
/// Throws DataError if some reference point holds no more than `shots` samples.
TaskSplit split_task(const Scenario& scenario, std::size_t shots, std::uint64_t seed);

/// Up to `per_point` of the given sample indices at each reference point, chosen uniformly
/// by `seed`; 0 keeps them all. The result is sorted.
std::vector<std::size_t> take_per_point(const Scenario& scenario, std::span<const std::size_t> indices,
                                        std::size_t per_point, std::uint64_t seed);

/// Normalized inputs and position targets for the given samples. Empty indices give an empty batch.
Batch make_batch(const Scenario& scenario, std::span<const std::size_t> indices);
Batch make_batch(const Scenario& scenario);

/// Disjoint meta-training / meta-testing partition of scenario indices.
struct Partition {
    std::uint64_t seed = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Shuffles 0..count-1 and takes the first `test_count` as meta-testing tasks; both lists come back sorted.
Partition partition_tasks(std::size_t count, std::size_t test_count, std::uint64_t seed);

} // namespace metaloc
