#pragma once

#include <vector>

#include "marsdust/autodiff.hpp"

namespace marsdust::nn {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// Adam with decoupled weight decay: the decay term lr * wd * p is applied to
/// the parameter directly, not folded into the gradient moments.
class AdamW {
public:
    AdamW(std::vector<Var> params, AdamWConfig config);

    void step();
    void zero_grad();
    long long steps() const noexcept { return step_; }
    const AdamWConfig& config() const noexcept { return config_; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamWConfig config_;
    long long step_ = 0;
};

}  // namespace marsdust::nn
