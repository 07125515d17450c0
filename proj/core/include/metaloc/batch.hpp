#pragma once

#include <metaloc/tensor.hpp>

#include <cstddef>

namespace metaloc {

/// Normalized CSI inputs (N x 3 x 30) paired with positions in cm (N x 2).
struct Batch {
    ad::Tensor inputs;
    ad::Tensor targets;

    std::size_t size() const { return inputs.defined() ? inputs.shape()[0] : 0; }
    bool empty() const { return size() == 0; }
};

} // namespace metaloc
