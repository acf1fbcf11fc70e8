#include "marsdust/adamw.hpp"

#include <cmath>

#include <fmt/format.h>

#include "marsdust/error.hpp"

namespace marsdust::nn {

AdamW::AdamW(std::vector<Var> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
    if (!(config_.lr > 0.0)) throw ValidationError(fmt::format("learning rate must be > 0, got {}", config_.lr));
    if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) || !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
        throw ValidationError("AdamW betas must lie in [0,1)");
    }
    for (const auto& p : params_) {
        m_.emplace_back(p.shape());
        v_.emplace_back(p.shape());
    }
}

void AdamW::step() {
    ++step_;
    const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Var& p = params_[i];
        const Tensor& g = p.grad();
        if (g.numel() != p.value().numel()) continue;  // never reached by backward
        Tensor& value = p.mutable_value();
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < value.numel(); ++k) {
            value[k] -= config_.lr * config_.weight_decay * value[k];
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bias1;
            const double v_hat = v[k] / bias2;
            value[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace marsdust::nn
