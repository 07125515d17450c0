#include "gradcheck.hpp"

#include <metaloc/errors.hpp>
#include <metaloc/grad.hpp>
#include <metaloc/ops.hpp>
#include <metaloc/tensor.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace metaloc;
using namespace metaloc::ad;
using testutil::max_grad_error;
using testutil::max_second_order_error;
using testutil::random_param;
using testutil::random_values;

namespace {

// Reduces any tensor to a scalar with fixed, non-uniform weights so every entry of the
// upstream gradient differs.
Tensor weighted_sum(const Tensor& t, std::uint64_t seed = 99) {
    return sum_all(mul(t, Tensor::constant(t.shape(), random_values(t.size(), seed))));
}

constexpr double kTol = 1e-6;

} // namespace

TEST(Tensor, FactoriesAndShape) {
    const auto z = Tensor::zeros({2, 3});
    EXPECT_EQ(z.size(), 6u);
    EXPECT_EQ(z.dim(), 2u);
    EXPECT_FALSE(z.requires_grad());
    EXPECT_TRUE(z.is_leaf());

    const auto s = Tensor::scalar(4.5);
    EXPECT_EQ(s.dim(), 0u);
    EXPECT_DOUBLE_EQ(s.item(), 4.5);

    const auto p = Tensor::parameter({2}, {1.0, 2.0});
    EXPECT_TRUE(p.requires_grad());
    EXPECT_FALSE(p.detach().requires_grad());
}

TEST(Tensor, RejectsBadShapes) {
    EXPECT_THROW(Tensor::constant({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
    EXPECT_THROW(Tensor::zeros({3, 0}), ShapeError);
    EXPECT_THROW(Tensor::zeros({2}).item(), ShapeError);
}

TEST(Tensor, CheckFiniteNamesLocation) {
    const auto t = Tensor::constant({2}, {1.0, std::numeric_limits<double>::infinity()});
    try {
        check_finite(t, "somewhere");
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("somewhere"), std::string::npos);
    }
}

TEST(Ops, MatmulValues) {
    const auto a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto b = Tensor::constant({3, 2}, {7, 8, 9, 10, 11, 12});
    const auto c = matmul(a, b);
    ASSERT_EQ(c.shape(), (Shape{2, 2}));
    EXPECT_DOUBLE_EQ(c.values()[0], 58);
    EXPECT_DOUBLE_EQ(c.values()[1], 64);
    EXPECT_DOUBLE_EQ(c.values()[2], 139);
    EXPECT_DOUBLE_EQ(c.values()[3], 154);
}

TEST(Ops, ShapeMismatchesThrowWithOpName) {
    const auto a = Tensor::zeros({2, 3});
    const auto b = Tensor::zeros({2, 3});
    try {
        matmul(a, b);
        FAIL();
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    }
    EXPECT_THROW(add(a, Tensor::zeros({3, 2})), ShapeError);
    EXPECT_THROW(conv1d(Tensor::zeros({1, 2, 5}), Tensor::zeros({4, 3, 3}), 1), ShapeError);
    EXPECT_THROW(maxpool1d(Tensor::zeros({1, 1, 1}), 2), ShapeError);
    EXPECT_THROW(mse_loss(Tensor::zeros({2, 2}), Tensor::zeros({2, 1})), ShapeError);
}

TEST(Ops, Conv1dMatchesDirectLoop) {
    const Shape xs{2, 3, 7}, ws{4, 3, 3};
    const auto x = Tensor::constant(xs, random_values(element_count(xs), 1));
    const auto w = Tensor::constant(ws, random_values(element_count(ws), 2));
    const auto y = conv1d(x, w, 1);
    ASSERT_EQ(y.shape(), (Shape{2, 4, 7}));
    const auto xv = x.values(), wv = w.values(), yv = y.values();
    for (int n = 0; n < 2; ++n)
        for (int o = 0; o < 4; ++o)
            for (int t = 0; t < 7; ++t) {
                double acc = 0.0;
                for (int c = 0; c < 3; ++c)
                    for (int k = 0; k < 3; ++k) {
                        const int src = t + k - 1;
                        if (src >= 0 && src < 7) acc += wv[(o * 3 + c) * 3 + k] * xv[(n * 3 + c) * 7 + src];
                    }
                EXPECT_NEAR(yv[(n * 4 + o) * 7 + t], acc, 1e-14);
            }
}

TEST(Ops, MaxpoolFloorsAndPicksMaxima) {
    const auto x = Tensor::constant({1, 1, 7}, {1, 5, 3, 2, 9, 9, 4});
    const auto y = maxpool1d(x, 2);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 3}));
    EXPECT_DOUBLE_EQ(y.values()[0], 5);
    EXPECT_DOUBLE_EQ(y.values()[1], 3);
    EXPECT_DOUBLE_EQ(y.values()[2], 9);
}

TEST(Ops, MseLossExample) {
    const auto pred = Tensor::constant({1, 2}, {0.0, 0.0});
    const auto target = Tensor::constant({1, 2}, {3.0, 4.0});
    EXPECT_DOUBLE_EQ(mse_loss(pred, target).item(), 12.5);
}

TEST(Gradients, ElementwiseOps) {
    const auto a = random_param({3, 4}, 1);
    const auto b = random_param({3, 4}, 2);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(add(v[0], v[1])); }, {a, b}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(sub(v[0], v[1])); }, {a, b}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(mul(v[0], v[1])); }, {a, b}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(scale(v[0], -2.5)); }, {a}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(relu(v[0])); }, {a}), kTol);
}

TEST(Gradients, LinearAlgebraOps) {
    const auto a = random_param({3, 4}, 3);
    const auto b = random_param({4, 5}, 4);
    const auto bias = random_param({5}, 5);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(matmul(v[0], v[1])); }, {a, b}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(transpose(v[0])); }, {a}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(add_bias(matmul(v[0], v[1]), v[2])); },
                             {a, b, bias}),
              kTol);
}

TEST(Gradients, ConvolutionFamily) {
    const auto x = random_param({2, 3, 8}, 6);
    const auto w = random_param({4, 3, 3}, 7);
    const auto g = random_param({2, 4, 8}, 8);
    const auto cb = random_param({4}, 9);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(conv1d(v[0], v[1], 1)); }, {x, w}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(conv1d(v[0], v[1], 0)); }, {x, w}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(conv1d_input_grad(v[0], v[1], 8, 1)); }, {g, w}),
              kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(conv1d_weight_grad(v[0], v[1], 3, 1)); }, {x, g}),
              kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(add_bias(conv1d(v[0], v[1], 1), v[2])); },
                             {x, w, cb}),
              kTol);
}

TEST(Gradients, PoolingAndReshaping) {
    const auto x = random_param({2, 3, 7}, 10);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(maxpool1d(v[0], 2)); }, {x}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(flatten(v[0])); }, {x}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(reshape(v[0], {6, 7})); }, {x}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(channel_sum(v[0])); }, {x}), kTol);
    const auto c = random_param({3}, 11);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(channel_broadcast(v[0], {2, 3, 4})); }, {c}), kTol);
}

TEST(Gradients, Reductions) {
    const auto x = random_param({4, 2}, 12);
    const auto t = random_param({4, 2}, 13);
    const auto s = random_param({}, 14);
    EXPECT_LT(max_grad_error([](const auto& v) { return mse_loss(v[0], v[1]); }, {x, t}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return mean_all(mul(v[0], v[0])); }, {x}), kTol);
    EXPECT_LT(max_grad_error([](const auto& v) { return weighted_sum(expand_scalar(v[0], {3, 2})); }, {s}), kTol);
}

TEST(SecondOrder, HessianVectorProductsMatchDifferences) {
    const auto a = random_param({3, 4}, 20);
    const auto b = random_param({4, 2}, 21);
    const auto x = random_param({2, 2, 6}, 22);
    const auto w = random_param({3, 2, 3}, 23);
    const auto t = random_param({3, 2}, 24);
    EXPECT_LT(max_second_order_error([&](const auto& v) { return mse_loss(matmul(v[0], v[1]), t); }, {a, b}, 1), 1e-5);
    EXPECT_LT(max_second_order_error([](const auto& v) { return sum_all(mul(mul(v[0], v[0]), v[0])); }, {a}, 2), 1e-5);
    EXPECT_LT(max_second_order_error(
                  [](const auto& v) {
                      const auto y = maxpool1d(relu(conv1d(v[0], v[1], 1)), 2);
                      return mean_all(mul(y, y));
                  },
                  {x, w}, 3),
              1e-5);
}

TEST(SecondOrder, ScalarClosedForm) {
    // f(x) = x^3: f' = 3x^2, f'' = 6x.
    const auto x = Tensor::parameter({}, {1.7});
    const auto f = mul(mul(x, x), x);
    const std::vector<Tensor> wrt{x};
    const auto g = grad(f, wrt, true);
    EXPECT_NEAR(g.grads[0].item(), 3 * 1.7 * 1.7, 1e-12);
    ASSERT_TRUE(g.grads[0].requires_grad());
    const auto h = grad(g.grads[0], wrt);
    EXPECT_NEAR(h.grads[0].item(), 6 * 1.7, 1e-12);
}

TEST(Grad, WithoutCreateGraphResultIsDetached) {
    const auto x = Tensor::parameter({}, {2.0});
    const std::vector<Tensor> wrt{x};
    const auto g = grad(mul(x, x), wrt);
    EXPECT_FALSE(g.grads[0].requires_grad());
    EXPECT_DOUBLE_EQ(g.grads[0].item(), 4.0);
}

TEST(Grad, AccumulatesOverSharedSubexpressions) {
    const auto x = Tensor::parameter({}, {3.0});
    const auto y = mul(x, x);
    const auto f = add(y, mul(y, x)); // x^2 + x^3
    const std::vector<Tensor> wrt{x};
    EXPECT_DOUBLE_EQ(grad(f, wrt).grads[0].item(), 2 * 3.0 + 3 * 9.0);
}

TEST(Grad, UnreachedInputsGetZerosAndFlag) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    const auto unused = Tensor::parameter({3}, {1.0, 2.0, 3.0});
    const std::vector<Tensor> wrt{x, unused};
    const auto g = grad(sum_all(x), wrt);
    EXPECT_TRUE(g.connected[0]);
    EXPECT_FALSE(g.connected[1]);
    EXPECT_FALSE(g.all_connected());
    ASSERT_EQ(g.grads[1].shape(), (Shape{3}));
    for (double v : g.grads[1].values()) EXPECT_EQ(v, 0.0);
}

TEST(Grad, RejectsNonScalarOutput) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    const std::vector<Tensor> wrt{x};
    EXPECT_THROW(grad(x, wrt), ShapeError);
}

TEST(Grad, NoGradGuardStopsRecording) {
    const auto x = Tensor::parameter({}, {2.0});
    Tensor y;
    {
        NoGradGuard guard;
        EXPECT_FALSE(grad_enabled());
        y = mul(x, x);
    }
    EXPECT_TRUE(grad_enabled());
    EXPECT_FALSE(y.requires_grad());
}
