#include "graph.hpp"

#include <metaloc/errors.hpp>

#include <atomic>
#include <cmath>
#include <sstream>

namespace metaloc::ad {

namespace {
thread_local bool t_grad_enabled = true;
std::atomic<std::uint64_t> g_sequence{1};

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, std::vector<double> values, bool requires_grad) {
    if (values.size() != element_count(shape)) {
        throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " + shape_string(shape));
    }
    for (std::size_t extent : shape) {
        if (extent == 0) {
            throw ShapeError("tensor: zero extent in shape " + shape_string(shape));
        }
    }
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    impl->requires_grad = requires_grad;
    return impl;
}
} // namespace

std::size_t element_count(const Shape& shape) noexcept {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    return Tensor(make_impl(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    return Tensor(make_impl(std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    std::vector<double> v(element_count(shape), value);
    return constant(std::move(shape), std::move(v));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->values.size(); }
std::span<const double> Tensor::values() const { return impl_->values; }

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item: tensor of shape " + shape_string(shape()) + " is not a scalar");
    }
    return impl_->values[0];
}

bool Tensor::requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
bool Tensor::is_leaf() const noexcept { return !impl_ || !impl_->grad_fn; }

std::string_view Tensor::op_name() const noexcept {
    return (impl_ && impl_->grad_fn) ? impl_->grad_fn->op : std::string_view{"leaf"};
}

Tensor Tensor::detach() const { return constant(impl_->shape, impl_->values); }
Tensor Tensor::detach_parameter() const { return parameter(impl_->shape, impl_->values); }

bool grad_enabled() noexcept { return t_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) noexcept : previous_(t_grad_enabled) { t_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { t_grad_enabled = previous_; }

void check_finite(const Tensor& t, std::string_view where) {
    const auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << where << ": non-finite value " << v[i] << " at flat index " << i << " of tensor "
               << shape_string(t.shape());
            throw NumericError(os.str());
        }
    }
}

namespace detail {

Tensor make_result(std::string_view op, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   BackwardFn backward) {
    bool track = false;
    if (t_grad_enabled) {
        for (const auto& in : inputs) track = track || in.requires_grad();
    }
    auto impl = make_impl(std::move(shape), std::move(values), track);
    if (track) {
        auto node = std::make_shared<Node>();
        node->sequence = g_sequence.fetch_add(1, std::memory_order_relaxed);
        node->op = op;
        node->inputs = std::move(inputs);
        node->backward = std::move(backward);
        impl->grad_fn = std::move(node);
    }
    return Tensor(std::move(impl));
}

} // namespace detail
} // namespace metaloc::ad
