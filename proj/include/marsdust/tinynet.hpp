#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marsdust/autodiff.hpp"
#include "marsdust/weights_io.hpp"

namespace marsdust::nn {

/// Encoder-decoder layout. Channel path: 3 -> base -> 2 base -> 4 base
/// (three DDSC + FA stages) -> 2 base -> base -> 3.
struct NetConfig {
    int base_width = 16;
    int ddsc_modules = 3;
    int ddsc_layers_per_module = 4;
    int growth = 16;
    int downsamples = 2;
    bool use_global_residual = true;

    int bottleneck_width() const noexcept { return base_width << downsamples; }
    int attention_width() const noexcept { return std::max(1, bottleneck_width() / 8); }
    void validate() const;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Intermediate values exposed for inspection and tests.
struct ForwardTrace {
    std::vector<Tensor> channel_gates;  ///< one (N, C, 1, 1) gate per FA block
    std::vector<Tensor> pixel_gates;    ///< one (N, 1, H, W) gate per FA block
    std::vector<int> ddsc_layer_inputs; ///< input channel count of every DDSC layer, in order
    Tensor prediction;                  ///< residual branch before the skip and clamp
};

class TinyNet {
public:
    /// He-normal initialization of every convolution except the output
    /// convolution, which starts at zero so the untrained net with the global
    /// residual is the identity. Biases start at zero.
    TinyNet(const NetConfig& config, std::uint64_t init_seed);

    /// Rebuilds a net from saved weights; the layout comes from the
    /// "net.config" tensor. Throws FormatError on missing or misshapen tensors.
    static TinyNet from_weights(const ModelWeights& weights);

    /// x: (N, 3, H, W) with H and W divisible by 2^downsamples.
    Var forward(const Var& x, ForwardTrace* trace = nullptr) const;
    /// Graph-free forward pass.
    Tensor infer(const Tensor& x) const;

    const NetConfig& config() const noexcept { return config_; }
    std::vector<Var>& parameters() noexcept { return params_; }
    const std::vector<Var>& parameters() const noexcept { return params_; }
    const std::vector<std::string>& parameter_names() const noexcept { return names_; }
    std::size_t parameter_count() const;

    /// Float snapshot including the config tensor.
    ModelWeights to_weights() const;
    void zero_grad();

private:
    struct Conv {
        Var weight;
        Var bias;
    };

    TinyNet() = default;
    void build(const NetConfig& config);
    Conv& add_conv(const std::string& name, int out, int in_per_group, int k);
    Var apply(const Conv& conv, const Var& x, ops::Conv2dOptions opt) const;

    NetConfig config_;
    std::vector<Var> params_;
    std::vector<std::string> names_;
    std::vector<Conv> convs_;
};

}  // namespace marsdust::nn
