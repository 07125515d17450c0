#include "graph.hpp"

#include <metaloc/errors.hpp>
#include <metaloc/ops.hpp>

#include <algorithm>
#include <cstddef>

namespace metaloc::ad {

using detail::make_result;

namespace {

[[noreturn]] void shape_fail(std::string_view op, const std::string& what) {
    throw ShapeError(std::string(op) + ": " + what);
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined()) shape_fail(op, "undefined operand");
    if (a.shape() != b.shape()) {
        shape_fail(op, "operand shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
    }
}

void require_rank(std::string_view op, const Tensor& t, std::size_t rank, const char* name) {
    if (!t.defined()) shape_fail(op, std::string(name) + " is undefined");
    if (t.dim() != rank) {
        shape_fail(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                           shape_string(t.shape()));
    }
}

// Views an (N x C) or (N x C x L) shape as (outer, channels, inner).
struct ChannelLayout {
    std::size_t outer, channels, inner;
};

ChannelLayout channel_layout(std::string_view op, const Shape& s) {
    if (s.size() == 2) return {s[0], s[1], 1};
    if (s.size() == 3) return {s[0], s[1], s[2]};
    shape_fail(op, "expected rank 2 or 3, got " + shape_string(s));
}

// Output positions t for which tap k reads input index t + k - padding inside [0, L).
struct TapRange {
    std::size_t begin, end;
    std::ptrdiff_t shift;
};

TapRange tap_range(std::size_t k, std::size_t padding, std::size_t L, std::size_t Lo) {
    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padding);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(Lo), static_cast<std::ptrdiff_t>(L) - shift);
    if (hi <= lo) return {0, 0, shift};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), shift};
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_result("add", a.shape(), std::move(out), {a, b},
                       [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    const bool need_b = b.requires_grad();
    return make_result("sub", a.shape(), std::move(out), {a, b}, [need_b](const Tensor& g) {
        return std::vector<Tensor>{g, need_b ? scale(g, -1.0) : Tensor{}};
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_result("mul", a.shape(), std::move(out), {a, b}, [a, b](const Tensor& g) {
        return std::vector<Tensor>{a.requires_grad() ? mul(g, b) : Tensor{},
                                   b.requires_grad() ? mul(g, a) : Tensor{}};
    });
}

Tensor scale(const Tensor& a, double factor) {
    if (!a.defined()) shape_fail("scale", "undefined operand");
    const auto av = a.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
    return make_result("scale", a.shape(), std::move(out), {a},
                       [factor](const Tensor& g) { return std::vector<Tensor>{scale(g, factor)}; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank("matmul", a, 2, "left operand");
    require_rank("matmul", b, 2, "right operand");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        shape_fail("matmul", "inner extents differ: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
    }
    const double* A = a.values().data();
    const double* B = b.values().data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
        }
    }
    return make_result("matmul", {m, n}, std::move(out), {a, b}, [a, b](const Tensor& g) {
        return std::vector<Tensor>{a.requires_grad() ? matmul(g, transpose(b)) : Tensor{},
                                   b.requires_grad() ? matmul(transpose(a), g) : Tensor{}};
    });
}

Tensor transpose(const Tensor& a) {
    require_rank("transpose", a, 2, "operand");
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    const auto av = a.values();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
    return make_result("transpose", {c, r}, std::move(out), {a},
                       [](const Tensor& g) { return std::vector<Tensor>{transpose(g)}; });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    if (!x.defined()) shape_fail("add_bias", "undefined operand");
    const auto lay = channel_layout("add_bias", x.shape());
    require_rank("add_bias", bias, 1, "bias");
    if (bias.shape()[0] != lay.channels) {
        shape_fail("add_bias", "bias length " + std::to_string(bias.shape()[0]) + " does not match " +
                                   std::to_string(lay.channels) + " channels of " + shape_string(x.shape()));
    }
    const auto xv = x.values();
    const auto bv = bias.values();
    std::vector<double> out(xv.size());
    for (std::size_t o = 0; o < lay.outer; ++o)
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t base = (o * lay.channels + c) * lay.inner;
            for (std::size_t i = 0; i < lay.inner; ++i) out[base + i] = xv[base + i] + bv[c];
        }
    const bool need_b = bias.requires_grad();
    return make_result("add_bias", x.shape(), std::move(out), {x, bias}, [need_b](const Tensor& g) {
        return std::vector<Tensor>{g, need_b ? channel_sum(g) : Tensor{}};
    });
}

Tensor channel_sum(const Tensor& x) {
    if (!x.defined()) shape_fail("channel_sum", "undefined operand");
    const auto lay = channel_layout("channel_sum", x.shape());
    const auto xv = x.values();
    std::vector<double> out(lay.channels, 0.0);
    for (std::size_t o = 0; o < lay.outer; ++o)
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t base = (o * lay.channels + c) * lay.inner;
            for (std::size_t i = 0; i < lay.inner; ++i) out[c] += xv[base + i];
        }
    Shape in_shape = x.shape();
    return make_result("channel_sum", {lay.channels}, std::move(out), {x}, [in_shape](const Tensor& g) {
        return std::vector<Tensor>{channel_broadcast(g, in_shape)};
    });
}

Tensor channel_broadcast(const Tensor& bias, const Shape& shape) {
    require_rank("channel_broadcast", bias, 1, "bias");
    const auto lay = channel_layout("channel_broadcast", shape);
    if (bias.shape()[0] != lay.channels) {
        shape_fail("channel_broadcast", "bias length " + std::to_string(bias.shape()[0]) + " vs target " +
                                            shape_string(shape));
    }
    const auto bv = bias.values();
    std::vector<double> out(element_count(shape));
    for (std::size_t o = 0; o < lay.outer; ++o)
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t base = (o * lay.channels + c) * lay.inner;
            for (std::size_t i = 0; i < lay.inner; ++i) out[base + i] = bv[c];
        }
    return make_result("channel_broadcast", shape, std::move(out), {bias},
                       [](const Tensor& g) { return std::vector<Tensor>{channel_sum(g)}; });
}

// The three conv kernels below are the partial derivatives of the trilinear form
//   T(x, w, g) = sum g[n,o,t] * w[o,c,k] * x[n,c,t+k-p]
// with respect to g, x and w, so each one's backward is expressed with the other two.

Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t padding) {
    require_rank("conv1d", x, 3, "input");
    require_rank("conv1d", w, 3, "weight");
    const std::size_t N = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
    const std::size_t O = w.shape()[0], K = w.shape()[2];
    if (w.shape()[1] != C) {
        shape_fail("conv1d", "input has " + std::to_string(C) + " channels but weight " + shape_string(w.shape()) +
                                 " expects " + std::to_string(w.shape()[1]));
    }
    if (L + 2 * padding < K) {
        shape_fail("conv1d", "kernel " + std::to_string(K) + " longer than padded input length " +
                                 std::to_string(L + 2 * padding));
    }
    const std::size_t Lo = L + 2 * padding - K + 1;
    const double* X = x.values().data();
    const double* W = w.values().data();
    std::vector<double> out(N * O * Lo, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            double* y = out.data() + (n * O + o) * Lo;
            for (std::size_t c = 0; c < C; ++c) {
                const double* xr = X + (n * C + c) * L;
                for (std::size_t k = 0; k < K; ++k) {
                    const double wk = W[(o * C + c) * K + k];
                    const auto [t0, t1, shift] = tap_range(k, padding, L, Lo);
                    for (std::size_t t = t0; t < t1; ++t) y[t] += wk * xr[t + shift];
                }
            }
        }
    return make_result("conv1d", {N, O, Lo}, std::move(out), {x, w}, [x, w, padding, L, K](const Tensor& g) {
        return std::vector<Tensor>{x.requires_grad() ? conv1d_input_grad(g, w, L, padding) : Tensor{},
                                   w.requires_grad() ? conv1d_weight_grad(x, g, K, padding) : Tensor{}};
    });
}

Tensor conv1d_input_grad(const Tensor& grad, const Tensor& w, std::size_t length, std::size_t padding) {
    require_rank("conv1d_input_grad", grad, 3, "grad");
    require_rank("conv1d_input_grad", w, 3, "weight");
    const std::size_t N = grad.shape()[0], O = grad.shape()[1], Lo = grad.shape()[2];
    const std::size_t C = w.shape()[1], K = w.shape()[2], L = length;
    if (w.shape()[0] != O || L + 2 * padding < K || L + 2 * padding - K + 1 != Lo) {
        shape_fail("conv1d_input_grad", "grad " + shape_string(grad.shape()) + " incompatible with weight " +
                                            shape_string(w.shape()) + " and length " + std::to_string(L));
    }
    const double* G = grad.values().data();
    const double* W = w.values().data();
    std::vector<double> out(N * C * L, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            const double* gr = G + (n * O + o) * Lo;
            for (std::size_t c = 0; c < C; ++c) {
                double* dx = out.data() + (n * C + c) * L;
                for (std::size_t k = 0; k < K; ++k) {
                    const double wk = W[(o * C + c) * K + k];
                    const auto [t0, t1, shift] = tap_range(k, padding, L, Lo);
                    for (std::size_t t = t0; t < t1; ++t) dx[t + shift] += wk * gr[t];
                }
            }
        }
    return make_result("conv1d_input_grad", {N, C, L}, std::move(out), {grad, w},
                       [grad, w, padding, K](const Tensor& h) {
                           return std::vector<Tensor>{
                               grad.requires_grad() ? conv1d(h, w, padding) : Tensor{},
                               w.requires_grad() ? conv1d_weight_grad(h, grad, K, padding) : Tensor{}};
                       });
}

Tensor conv1d_weight_grad(const Tensor& x, const Tensor& grad, std::size_t kernel, std::size_t padding) {
    require_rank("conv1d_weight_grad", x, 3, "input");
    require_rank("conv1d_weight_grad", grad, 3, "grad");
    const std::size_t N = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
    const std::size_t O = grad.shape()[1], Lo = grad.shape()[2], K = kernel;
    if (grad.shape()[0] != N || L + 2 * padding < K || L + 2 * padding - K + 1 != Lo) {
        shape_fail("conv1d_weight_grad", "input " + shape_string(x.shape()) + " incompatible with grad " +
                                             shape_string(grad.shape()));
    }
    const double* X = x.values().data();
    const double* G = grad.values().data();
    std::vector<double> out(O * C * K, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            const double* gr = G + (n * O + o) * Lo;
            for (std::size_t c = 0; c < C; ++c) {
                const double* xr = X + (n * C + c) * L;
                for (std::size_t k = 0; k < K; ++k) {
                    const auto [t0, t1, shift] = tap_range(k, padding, L, Lo);
                    double acc = 0.0;
                    for (std::size_t t = t0; t < t1; ++t) acc += gr[t] * xr[t + shift];
                    out[(o * C + c) * K + k] += acc;
                }
            }
        }
    return make_result("conv1d_weight_grad", {O, C, K}, std::move(out), {x, grad},
                       [x, grad, padding, L](const Tensor& h) {
                           return std::vector<Tensor>{
                               x.requires_grad() ? conv1d_input_grad(grad, h, L, padding) : Tensor{},
                               grad.requires_grad() ? conv1d(x, h, padding) : Tensor{}};
                       });
}

Tensor maxpool1d(const Tensor& x, std::size_t kernel) {
    require_rank("maxpool1d", x, 3, "input");
    if (kernel == 0) shape_fail("maxpool1d", "kernel must be positive");
    const std::size_t N = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
    const std::size_t Lo = L / kernel;
    if (Lo == 0) {
        shape_fail("maxpool1d", "length " + std::to_string(L) + " shorter than kernel " + std::to_string(kernel));
    }
    const auto xv = x.values();
    auto index = std::make_shared<std::vector<std::size_t>>(N * C * Lo);
    for (std::size_t row = 0; row < N * C; ++row)
        for (std::size_t j = 0; j < Lo; ++j) {
            const std::size_t start = row * L + j * kernel;
            std::size_t best = start;
            for (std::size_t q = 1; q < kernel; ++q) {
                if (xv[start + q] > xv[best]) best = start + q;
            }
            (*index)[row * Lo + j] = best;
        }
    return gather(x, index, {N, C, Lo});
}

Tensor gather(const Tensor& x, const IndexMap& index, const Shape& out_shape) {
    if (!x.defined() || !index) shape_fail("gather", "undefined operand");
    if (index->size() != element_count(out_shape)) {
        shape_fail("gather", "index length " + std::to_string(index->size()) + " vs output " + shape_string(out_shape));
    }
    const auto xv = x.values();
    std::vector<double> out(index->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t src = (*index)[i];
        if (src >= xv.size()) shape_fail("gather", "index " + std::to_string(src) + " out of range");
        out[i] = xv[src];
    }
    Shape in_shape = x.shape();
    return make_result("gather", out_shape, std::move(out), {x}, [index, in_shape](const Tensor& g) {
        return std::vector<Tensor>{scatter_add(g, index, in_shape)};
    });
}

Tensor scatter_add(const Tensor& g, const IndexMap& index, const Shape& out_shape) {
    if (!g.defined() || !index) shape_fail("scatter_add", "undefined operand");
    if (index->size() != g.size()) {
        shape_fail("scatter_add", "index length " + std::to_string(index->size()) + " vs source " +
                                      shape_string(g.shape()));
    }
    const auto gv = g.values();
    std::vector<double> out(element_count(out_shape), 0.0);
    for (std::size_t i = 0; i < gv.size(); ++i) {
        const std::size_t dst = (*index)[i];
        if (dst >= out.size()) shape_fail("scatter_add", "index " + std::to_string(dst) + " out of range");
        out[dst] += gv[i];
    }
    Shape src_shape = g.shape();
    return make_result("scatter_add", out_shape, std::move(out), {g}, [index, src_shape](const Tensor& h) {
        return std::vector<Tensor>{gather(h, index, src_shape)};
    });
}

Tensor relu(const Tensor& x) {
    if (!x.defined()) shape_fail("relu", "undefined operand");
    const auto xv = x.values();
    auto mask = std::make_shared<std::vector<double>>(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) (*mask)[i] = xv[i] > 0.0 ? 1.0 : 0.0;
    return mask_mul(x, mask);
}

Tensor mask_mul(const Tensor& x, const std::shared_ptr<const std::vector<double>>& mask) {
    if (!x.defined() || !mask) shape_fail("mask_mul", "undefined operand");
    if (mask->size() != x.size()) {
        shape_fail("mask_mul", "mask length " + std::to_string(mask->size()) + " vs " + shape_string(x.shape()));
    }
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*mask)[i] != 0.0 ? xv[i] : 0.0;
    return make_result("relu", x.shape(), std::move(out), {x},
                       [mask](const Tensor& g) { return std::vector<Tensor>{mask_mul(g, mask)}; });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (!x.defined()) shape_fail("reshape", "undefined operand");
    if (element_count(shape) != x.size()) {
        shape_fail("reshape", "cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    const auto xv = x.values();
    Shape in_shape = x.shape();
    return make_result("reshape", std::move(shape), std::vector<double>(xv.begin(), xv.end()), {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{reshape(g, in_shape)}; });
}

Tensor flatten(const Tensor& x) {
    if (!x.defined() || x.dim() < 1) shape_fail("flatten", "needs a leading batch axis");
    return reshape(x, {x.shape()[0], x.size() / x.shape()[0]});
}

Tensor sum_all(const Tensor& x) {
    if (!x.defined()) shape_fail("sum_all", "undefined operand");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Shape in_shape = x.shape();
    return make_result("sum_all", {}, {acc}, {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{expand_scalar(g, in_shape)}; });
}

Tensor mean_all(const Tensor& x) {
    if (!x.defined()) shape_fail("mean_all", "undefined operand");
    return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor expand_scalar(const Tensor& s, const Shape& shape) {
    if (!s.defined() || s.size() != 1) shape_fail("expand_scalar", "source must be a scalar");
    return make_result("expand_scalar", shape, std::vector<double>(element_count(shape), s.values()[0]), {s},
                       [](const Tensor& g) { return std::vector<Tensor>{sum_all(g)}; });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape("mse_loss", pred, target);
    const Tensor diff = sub(pred, target);
    return mean_all(mul(diff, diff));
}

} // namespace metaloc::ad
