#pragma once

#include <metaloc/tensor.hpp>

#include <span>
#include <vector>

namespace metaloc::ad {

struct GradResult {
    /// One gradient per requested tensor, shaped like it.
    std::vector<Tensor> grads;
    /// False where the tensor has no path to the output; its gradient is then zero.
    std::vector<bool> connected;

    bool all_connected() const noexcept;
};

/// Reverse-mode gradient of a scalar `output` with respect to each tensor in `wrt`.
///
/// With `create_graph` set the backward pass is itself recorded, so the returned
/// gradients can be differentiated again (used for second-order meta-gradients).
/// Throws ShapeError when `output` is not a scalar.
GradResult grad(const Tensor& output, std::span<const Tensor> wrt, bool create_graph = false);

} // namespace metaloc::ad
