#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "marsdust/autodiff.hpp"
#include "marsdust/error.hpp"
#include "marsdust/rng.hpp"

namespace marsdust::nn {
namespace {

Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    CounterRng rng(seed);
    Tensor t(s);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

using GraphFn = std::function<Var(const std::vector<Var>&)>;

// Compares reverse-mode gradients of every input against central differences.
void check_gradients(const GraphFn& f, const std::vector<Tensor>& inputs, double tol = 1e-6, double h = 1e-6) {
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.emplace_back(t, true);
    const Var out = f(vars);
    backward(out);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
            auto eval = [&](double delta) {
                std::vector<Var> probe;
                for (std::size_t j = 0; j < inputs.size(); ++j) {
                    Tensor t = inputs[j];
                    if (j == k) t[i] += delta;
                    probe.emplace_back(std::move(t), false);
                }
                return f(probe).value()[0];
            };
            const double numeric = (eval(h) - eval(-h)) / (2 * h);
            const double analytic = vars[k].grad()[i];
            EXPECT_NEAR(analytic, numeric, tol * std::max(1.0, std::abs(numeric))) << "input " << k << " element " << i;
        }
    }
}

// Smooth scalar probe so that every output element matters differently.
Var probe_loss(const Var& y, std::uint64_t seed = 99) { return ops::dot(y, random_tensor(y.shape(), seed)); }

TEST(Autodiff, MeanGradientIsUniform) {
    Var x(random_tensor({2, 3, 4, 5}, 1), true);
    backward(ops::mean(x));
    for (double g : x.grad().data()) EXPECT_DOUBLE_EQ(g, 1.0 / 120.0);
}

TEST(Autodiff, L1GradientIsSignOverCount) {
    const Tensor target = random_tensor({1, 2, 3, 3}, 2);
    Tensor pred_values = random_tensor({1, 2, 3, 3}, 3);
    Var pred(pred_values, true);
    const Var loss = ops::l1_loss(pred, target);
    double want = 0.0;
    for (std::size_t i = 0; i < target.numel(); ++i) want += std::abs(pred_values[i] - target[i]);
    EXPECT_NEAR(loss.value()[0], want / 18.0, 1e-15);
    backward(loss);
    for (std::size_t i = 0; i < target.numel(); ++i) {
        const double s = pred_values[i] > target[i] ? 1.0 : -1.0;
        EXPECT_DOUBLE_EQ(pred.grad()[i], s / 18.0);
    }
}

TEST(Autodiff, ConvForwardMatchesDirectSum) {
    const Tensor x = random_tensor({1, 2, 5, 5}, 4);
    const Tensor w = random_tensor({3, 2, 3, 3}, 5);
    const Tensor b = random_tensor({1, 3, 1, 1}, 6);
    const Var y = ops::conv2d(Var(x), Var(w), Var(b), {1, 1, 1});
    ASSERT_EQ(y.shape(), (Shape{1, 3, 5, 5}));
    for (int o = 0; o < 3; ++o) {
        for (int yy = 0; yy < 5; ++yy) {
            for (int xx = 0; xx < 5; ++xx) {
                double s = b[o];
                for (int c = 0; c < 2; ++c)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = yy + ky - 1, ix = xx + kx - 1;
                            if (iy < 0 || iy >= 5 || ix < 0 || ix >= 5) continue;
                            s += w.at(o, c, ky, kx) * x.at(0, c, iy, ix);
                        }
                EXPECT_NEAR(y.value().at(0, o, yy, xx), s, 1e-12);
            }
        }
    }
}

TEST(Autodiff, ConvGradients) {
    check_gradients(
        [](const std::vector<Var>& v) { return probe_loss(ops::conv2d(v[0], v[1], v[2], {1, 1, 1})); },
        {random_tensor({2, 3, 5, 4}, 7), random_tensor({2, 3, 3, 3}, 8), random_tensor({1, 2, 1, 1}, 9)});
}

TEST(Autodiff, StridedConvGradients) {
    check_gradients(
        [](const std::vector<Var>& v) { return probe_loss(ops::conv2d(v[0], v[1], v[2], {2, 1, 1})); },
        {random_tensor({1, 2, 6, 7}, 10), random_tensor({3, 2, 3, 3}, 11), random_tensor({1, 3, 1, 1}, 12)});
}

TEST(Autodiff, DepthwiseConvGradients) {
    check_gradients(
        [](const std::vector<Var>& v) { return probe_loss(ops::conv2d(v[0], v[1], Var{}, {1, 1, 4})); },
        {random_tensor({1, 4, 5, 5}, 13), random_tensor({4, 1, 3, 3}, 14)});
}

TEST(Autodiff, PointwiseOpsGradients) {
    // Inputs kept away from the ReLU kink.
    Tensor x = random_tensor({1, 2, 3, 3}, 15);
    for (auto& v : x.data()) v += v >= 0 ? 0.05 : -0.05;
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::relu(v[0])); }, {x});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::sigmoid(v[0])); }, {x});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::add(v[0], v[1])); },
                    {x, random_tensor({1, 2, 3, 3}, 16)});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::clamp(v[0], -0.5, 0.5)); },
                    {random_tensor({1, 1, 4, 4}, 17, -0.45, 0.45)});
}

TEST(Autodiff, GatingGradients) {
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::scale_channels(v[0], v[1])); },
                    {random_tensor({2, 3, 3, 2}, 18), random_tensor({2, 3, 1, 1}, 19)});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::scale_pixels(v[0], v[1])); },
                    {random_tensor({2, 3, 3, 2}, 20), random_tensor({2, 1, 3, 2}, 21)});
}

TEST(Autodiff, ShapeOpsGradients) {
    check_gradients(
        [](const std::vector<Var>& v) {
            const std::vector<Var> parts{v[0], v[1]};
            return probe_loss(ops::concat_channels(parts));
        },
        {random_tensor({2, 1, 3, 3}, 22), random_tensor({2, 2, 3, 3}, 23)});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::upsample_nearest2x(v[0])); },
                    {random_tensor({1, 2, 2, 3}, 24)});
    check_gradients([](const std::vector<Var>& v) { return probe_loss(ops::global_avg_pool(v[0])); },
                    {random_tensor({2, 2, 3, 3}, 25)});
}

TEST(Autodiff, ClampPassesGradientOnlyInside) {
    Var x(Tensor({1, 1, 1, 3}, std::vector<double>{-2.0, 0.3, 2.0}), true);
    backward(ops::dot(ops::clamp(x, 0.0, 1.0), Tensor({1, 1, 1, 3}, 1.0)));
    EXPECT_EQ(x.grad()[0], 0.0);
    EXPECT_EQ(x.grad()[1], 1.0);
    EXPECT_EQ(x.grad()[2], 0.0);
}

TEST(Autodiff, SharedSubgraphAccumulates) {
    Var x(random_tensor({1, 1, 2, 2}, 26), true);
    const Var y = ops::add(x, x);
    backward(ops::mean(y));
    for (double g : x.grad().data()) EXPECT_DOUBLE_EQ(g, 0.5);
}

TEST(Autodiff, RepeatedSweepAfterZeroGrad) {
    Var x(random_tensor({1, 2, 3, 3}, 27), true);
    Var w(random_tensor({2, 2, 3, 3}, 28), true);
    const Var loss = probe_loss(ops::sigmoid(ops::conv2d(x, w, Var{}, {1, 1, 1})));
    backward(loss);
    const Tensor first = w.grad();
    backward(loss);
    for (std::size_t i = 0; i < first.numel(); ++i) EXPECT_NEAR(w.grad()[i], 2 * first[i], 1e-12);
    w.zero_grad();
    x.zero_grad();
    backward(loss);
    EXPECT_EQ(w.grad(), first);
}

TEST(Autodiff, Errors) {
    Var x(random_tensor({1, 1, 2, 2}, 29), true);
    EXPECT_THROW(backward(x), ValidationError);
    EXPECT_THROW(ops::add(x, Var(random_tensor({1, 1, 2, 3}, 30))), DimensionError);
    EXPECT_THROW(ops::conv2d(x, Var(random_tensor({1, 2, 3, 3}, 31)), Var{}, {1, 1, 1}), DimensionError);
}

}  // namespace
}  // namespace marsdust::nn
