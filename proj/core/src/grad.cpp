#include "graph.hpp"

#include <metaloc/errors.hpp>
#include <metaloc/grad.hpp>
#include <metaloc/ops.hpp>

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace metaloc::ad {

bool GradResult::all_connected() const noexcept {
    return std::all_of(connected.begin(), connected.end(), [](bool c) { return c; });
}

GradResult grad(const Tensor& output, std::span<const Tensor> wrt, bool create_graph) {
    if (!output.defined() || output.size() != 1) {
        throw ShapeError("grad: output must be a scalar, got shape " +
                         (output.defined() ? shape_string(output.shape()) : std::string("<undefined>")));
    }

    using Impl = detail::TensorImpl;
    std::unordered_map<const Impl*, Tensor> grads;

    if (output.requires_grad()) {
        // Collect every recorded tensor reachable from the output.
        std::vector<const Impl*> order;
        std::unordered_set<const Impl*> seen;
        std::vector<const Impl*> stack{output.impl().get()};
        while (!stack.empty()) {
            const Impl* cur = stack.back();
            stack.pop_back();
            if (!cur->grad_fn || !seen.insert(cur).second) continue;
            order.push_back(cur);
            for (const auto& in : cur->grad_fn->inputs) {
                if (in.requires_grad()) stack.push_back(in.impl().get());
            }
        }
        // Consumers are always created after their inputs, so descending creation
        // order is a valid reverse topological order.
        std::sort(order.begin(), order.end(),
                  [](const Impl* a, const Impl* b) { return a->grad_fn->sequence > b->grad_fn->sequence; });

        std::unordered_set<const Impl*> targets;
        for (const auto& w : wrt) {
            if (w.defined()) targets.insert(w.impl().get());
        }

        GradModeGuard mode(create_graph);
        grads.emplace(output.impl().get(), Tensor::full(output.shape(), 1.0));
        for (const Impl* cur : order) {
            auto it = grads.find(cur);
            if (it == grads.end()) continue;
            const Tensor g = it->second;
            if (!targets.contains(cur)) grads.erase(it);

            const auto& node = *cur->grad_fn;
            std::vector<Tensor> input_grads = node.backward(g);
            for (std::size_t i = 0; i < node.inputs.size() && i < input_grads.size(); ++i) {
                const Tensor& in = node.inputs[i];
                if (!in.requires_grad() || !input_grads[i].defined()) continue;
                auto [slot, inserted] = grads.try_emplace(in.impl().get(), input_grads[i]);
                if (!inserted) slot->second = add(slot->second, input_grads[i]);
            }
        }
    }

    GradResult result;
    result.grads.reserve(wrt.size());
    result.connected.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto it = w.defined() ? grads.find(w.impl().get()) : grads.end();
        if (it != grads.end()) {
            result.grads.push_back(it->second);
            result.connected.push_back(true);
        } else {
            result.grads.push_back(w.defined() ? Tensor::zeros(w.shape()) : Tensor{});
            result.connected.push_back(false);
        }
    }
    return result;
}

} // namespace metaloc::ad
