#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metaloc {

using Rng = std::mt19937_64;

/// Deterministic sub-seed for a named stream (e.g. "data", "split", "init", "sampling").
/// Distinct (stream, index) pairs yield statistically independent generators.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) noexcept;

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

} // namespace metaloc
