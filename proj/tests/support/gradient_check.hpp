#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "marsdust/autodiff.hpp"
#include "marsdust/rng.hpp"
#include "marsdust/tinynet.hpp"

namespace marsdust::testing {

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t parameters_checked = 0;
    std::size_t nonzero_gradients = 0;
};

/// Fills every parameter, the output convolution included, with small
/// normal values so that every path carries gradient.
inline void randomize_parameters(nn::TinyNet& net, std::uint64_t seed, double scale = 0.3) {
    CounterRng rng(seed);
    for (auto& p : net.parameters()) {
        for (auto& v : p.mutable_value().data()) v = scale * rng.normal();
    }
}

inline nn::Tensor random_batch(nn::Shape shape, std::uint64_t seed, double lo, double hi) {
    CounterRng rng(seed);
    nn::Tensor t(shape);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Sets a point where the network is smooth under small parameter steps.
/// Convolutions that feed a ReLU get weights of gain 0.4/sqrt(fan-in) and
/// biases of +0.5 (every fourth channel -0.5), so their inputs sit near +-0.5
/// with some channels switched off. Attention gates open to about 0.95 and
/// the head is scaled down so outputs stay inside (0, 1).
inline void smooth_point_parameters(nn::TinyNet& net, std::uint64_t seed) {
    CounterRng rng(seed);
    const auto& names = net.parameter_names();
    auto params = net.parameters();
    auto has = [](const std::string& name, const char* part) { return name.find(part) != std::string::npos; };
    for (std::size_t k = 0; k < params.size(); ++k) {
        const std::string& name = names[k];
        nn::Tensor& t = params[k].mutable_value();
        const bool head = name.rfind("head.", 0) == 0;
        const bool gate = has(name, ".ca2.") || has(name, ".pa2.");
        if (name.ends_with(".weight")) {
            const double fan = static_cast<double>(t.shape().c) * t.shape().h * t.shape().w;
            const double gain = head ? 0.25 : 0.4;
            for (auto& v : t.data()) v = gain / std::sqrt(fan) * rng.normal();
        } else if (name.ends_with(".bias")) {
            const bool feeds_relu = !head && !gate && !has(name, ".dw.");
            for (std::size_t i = 0; i < t.numel(); ++i) {
                if (feeds_relu) {
                    t[i] = i % 4 == 3 ? -0.5 : 0.5;
                } else {
                    t[i] = gate ? 3.0 : 0.1 * rng.normal();
                }
            }
        }
    }
}

/// Central differences with step h on every parameter of net against the
/// reverse-mode gradient of sum(forward(x) * probe). The difference side sums
/// (forward(x) - x) * probe with compensation; the constant x term leaves the
/// gradient unchanged. Relative error is |a - n| / max(|a|, |n|, 1e-8).
inline GradientCheckResult check_network_gradients(nn::TinyNet& net, const nn::Tensor& x, const nn::Tensor& probe,
                                                   double h = 1e-3) {
    auto loss_value = [&] {
        const nn::Tensor out = net.forward(nn::Var(x)).value();
        double sum = 0.0;
        double comp = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) {
            const double term = (out[i] - x[i]) * probe[i];
            const double next = sum + term;
            comp += std::abs(sum) >= std::abs(term) ? (sum - next) + term : (term - next) + sum;
            sum = next;
        }
        return sum + comp;
    };
    net.zero_grad();
    nn::backward(nn::ops::dot(net.forward(nn::Var(x)), probe));

    GradientCheckResult r;
    for (auto& p : net.parameters()) {
        const nn::Tensor analytic = p.grad();
        nn::Tensor& value = p.mutable_value();
        for (std::size_t i = 0; i < value.numel(); ++i) {
            const double saved = value[i];
            value[i] = saved + h;
            const double up = loss_value();
            value[i] = saved - h;
            const double down = loss_value();
            value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic.empty() ? 0.0 : analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            r.max_relative_error = std::max(r.max_relative_error, std::abs(a - numeric) / denom);
            r.nonzero_gradients += a != 0.0;
            ++r.parameters_checked;
        }
    }
    return r;
}

}  // namespace marsdust::testing
