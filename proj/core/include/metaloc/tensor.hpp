#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace metaloc::ad {

/// Ordered list of extents. The empty shape denotes a scalar.
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorImpl;
}

/// Immutable dense row-major array of doubles with optional autodiff history.
///
/// Copies are shallow handles; values are never mutated after construction,
/// so a tensor may be shared freely between graphs. A tensor produced by an
/// operation on inputs that require gradients carries a graph node that
/// records how to propagate gradients back to those inputs.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    /// Leaf that participates in differentiation.
    static Tensor parameter(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);

    bool defined() const noexcept { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim() const { return shape().size(); }
    std::size_t size() const;
    std::span<const double> values() const;
    double item() const;

    bool requires_grad() const noexcept;
    bool is_leaf() const noexcept;
    /// Name of the operation that produced this tensor, or "leaf".
    std::string_view op_name() const noexcept;

    /// Constant copy without history.
    Tensor detach() const;
    /// Fresh leaf parameter holding the same values.
    Tensor detach_parameter() const;

    const std::shared_ptr<detail::TensorImpl>& impl() const noexcept { return impl_; }
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// Whether operations on this thread record graph nodes.
bool grad_enabled() noexcept;

/// Sets the thread-local recording mode for the guard's lifetime.
class GradModeGuard {
public:
    explicit GradModeGuard(bool enabled) noexcept;
    ~GradModeGuard();
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool previous_;
};

class NoGradGuard : public GradModeGuard {
public:
    NoGradGuard() noexcept : GradModeGuard(false) {}
};

/// Throws NumericError if any value is NaN or infinite.
void check_finite(const Tensor& t, std::string_view where);

} // namespace metaloc::ad
