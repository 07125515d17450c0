#pragma once

#include <metaloc/tensor.hpp>

#include <cstdint>
#include <functional>
#include <string_view>

namespace metaloc::ad::detail {

/// Returns one gradient per node input; an undefined Tensor means no contribution.
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

struct Node {
    std::uint64_t sequence = 0; // creation order; inputs always carry smaller values
    std::string_view op;
    std::vector<Tensor> inputs;
    BackwardFn backward;
};

struct TensorImpl {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::shared_ptr<Node> grad_fn;
};

/// Builds an op result, attaching a node when recording is on and any input tracks gradients.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs, BackwardFn backward);

} // namespace metaloc::ad::detail
