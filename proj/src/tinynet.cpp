#include "marsdust/tinynet.hpp"

#include <cmath>

#include <fmt/format.h>

#include "marsdust/error.hpp"
#include "marsdust/rng.hpp"

namespace marsdust::nn {
namespace {

constexpr const char* kConfigTensor = "net.config";

Var concat_or_self(const std::vector<Var>& parts) {
    if (parts.size() == 1) return parts.front();
    return ops::concat_channels(parts);
}

std::vector<std::uint32_t> stored_dims(const std::string& name, const Shape& s) {
    if (name.ends_with(".bias")) return {static_cast<std::uint32_t>(s.c)};
    return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c), static_cast<std::uint32_t>(s.h),
            static_cast<std::uint32_t>(s.w)};
}

}  // namespace

void NetConfig::validate() const {
    if (base_width < 1 || ddsc_modules < 1 || ddsc_layers_per_module < 1 || growth < 1) {
        throw ValidationError(fmt::format(
            "network widths and counts must be >= 1 (base {}, modules {}, layers {}, growth {})", base_width,
            ddsc_modules, ddsc_layers_per_module, growth));
    }
    if (downsamples != 2) {
        throw ValidationError(fmt::format("the encoder down-samples exactly twice, got {}", downsamples));
    }
}

TinyNet::TinyNet(const NetConfig& config, std::uint64_t init_seed) {
    build(config);
    CounterRng rng(init_seed);
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        Tensor& w = convs_[i].weight.mutable_value();
        const bool is_head = i + 1 == convs_.size();
        const Shape s = w.shape();
        const double std = std::sqrt(2.0 / static_cast<double>(s.c * s.h * s.w));
        for (auto& v : w.data()) v = is_head ? 0.0 : std * rng.normal();
    }
}

void TinyNet::build(const NetConfig& config) {
    config.validate();
    config_ = config;
    const int base = config.base_width;
    add_conv("stem", base, 3, 3);
    for (int i = 0; i < config.downsamples; ++i) {
        add_conv(fmt::format("down{}", i + 1), base << (i + 1), base << i, 3);
    }
    const int width = config.bottleneck_width();
    const int aw = config.attention_width();
    for (int m = 0; m < config.ddsc_modules; ++m) {
        for (int l = 0; l < config.ddsc_layers_per_module; ++l) {
            const int cin = width + l * config.growth;
            add_conv(fmt::format("ddsc{}.layer{}.dw", m, l), cin, 1, 3);
            add_conv(fmt::format("ddsc{}.layer{}.pw", m, l), config.growth, cin, 1);
        }
        add_conv(fmt::format("ddsc{}.transition", m), width, width + config.ddsc_layers_per_module * config.growth, 1);
        add_conv(fmt::format("fa{}.ca1", m), aw, width, 1);
        add_conv(fmt::format("fa{}.ca2", m), width, aw, 1);
        add_conv(fmt::format("fa{}.pa1", m), aw, width, 1);
        add_conv(fmt::format("fa{}.pa2", m), 1, aw, 1);
    }
    for (int i = config.downsamples; i > 0; --i) {
        add_conv(fmt::format("up{}", config.downsamples - i + 1), base << (i - 1), base << i, 3);
    }
    add_conv("head", 3, base, 3);
}

TinyNet::Conv& TinyNet::add_conv(const std::string& name, int out, int in_per_group, int k) {
    Conv conv{Var(Tensor(Shape{out, in_per_group, k, k}), true), Var(Tensor(Shape{1, out, 1, 1}), true)};
    params_.push_back(conv.weight);
    names_.push_back(name + ".weight");
    params_.push_back(conv.bias);
    names_.push_back(name + ".bias");
    convs_.push_back(std::move(conv));
    return convs_.back();
}

Var TinyNet::apply(const Conv& conv, const Var& x, ops::Conv2dOptions opt) const {
    return ops::conv2d(x, conv.weight, conv.bias, opt);
}

Var TinyNet::forward(const Var& x, ForwardTrace* trace) const {
    const Shape xs = x.shape();
    const int factor = 1 << config_.downsamples;
    if (xs.c != 3) throw DimensionError(fmt::format("network input needs 3 channels, got {}", xs.c));
    if (xs.h % factor != 0 || xs.w % factor != 0) {
        throw DimensionError(fmt::format("network input {}x{} not divisible by {}", xs.h, xs.w, factor));
    }
    using ops::Conv2dOptions;
    const Conv2dOptions same{1, 1, 1};
    const Conv2dOptions pointwise{1, 0, 1};

    std::size_t next = 0;
    Var h = ops::relu(apply(convs_[next++], x, same));
    for (int i = 0; i < config_.downsamples; ++i) h = ops::relu(apply(convs_[next++], h, Conv2dOptions{2, 1, 1}));

    for (int m = 0; m < config_.ddsc_modules; ++m) {
        std::vector<Var> features{h};
        for (int l = 0; l < config_.ddsc_layers_per_module; ++l) {
            const Var input = concat_or_self(features);
            const int cin = input.shape().c;
            if (trace != nullptr) trace->ddsc_layer_inputs.push_back(cin);
            const Var depthwise = apply(convs_[next++], input, Conv2dOptions{1, 1, cin});
            features.push_back(ops::relu(apply(convs_[next++], depthwise, pointwise)));
        }
        h = ops::relu(apply(convs_[next++], ops::concat_channels(features), pointwise));

        const Var squeeze = ops::relu(apply(convs_[next++], ops::global_avg_pool(h), pointwise));
        const Var channel_gate = ops::sigmoid(apply(convs_[next++], squeeze, pointwise));
        h = ops::scale_channels(h, channel_gate);
        const Var pixel_hidden = ops::relu(apply(convs_[next++], h, pointwise));
        const Var pixel_gate = ops::sigmoid(apply(convs_[next++], pixel_hidden, pointwise));
        h = ops::scale_pixels(h, pixel_gate);
        if (trace != nullptr) {
            trace->channel_gates.push_back(channel_gate.value());
            trace->pixel_gates.push_back(pixel_gate.value());
        }
    }

    for (int i = 0; i < config_.downsamples; ++i) {
        h = ops::relu(apply(convs_[next++], ops::upsample_nearest2x(h), same));
    }
    const Var prediction = apply(convs_[next++], h, same);
    if (trace != nullptr) trace->prediction = prediction.value();
    if (!config_.use_global_residual) return prediction;
    return ops::clamp(ops::add(x, prediction), 0.0, 1.0);
}

Tensor TinyNet::infer(const Tensor& x) const {
    // Parameters are detached copies, so no graph is recorded.
    TinyNet frozen;
    frozen.config_ = config_;
    frozen.names_ = names_;
    for (const auto& conv : convs_) {
        frozen.convs_.push_back(Conv{Var(conv.weight.value(), false), Var(conv.bias.value(), false)});
    }
    return frozen.forward(Var(x, false)).value();
}

std::size_t TinyNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value().numel();
    return n;
}

void TinyNet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

ModelWeights TinyNet::to_weights() const {
    ModelWeights w;
    w.tensors.push_back(NamedTensor{
        kConfigTensor,
        {6},
        {static_cast<float>(config_.base_width), static_cast<float>(config_.ddsc_modules),
         static_cast<float>(config_.ddsc_layers_per_module), static_cast<float>(config_.growth),
         static_cast<float>(config_.downsamples), config_.use_global_residual ? 1.0f : 0.0f}});
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Tensor& t = params_[i].value();
        NamedTensor nt;
        nt.name = names_[i];
        nt.dims = stored_dims(names_[i], t.shape());
        nt.values.reserve(t.numel());
        for (double v : t.data()) nt.values.push_back(static_cast<float>(v));
        w.tensors.push_back(std::move(nt));
    }
    return w;
}

TinyNet TinyNet::from_weights(const ModelWeights& weights) {
    const NamedTensor* cfg = weights.find(kConfigTensor);
    if (cfg == nullptr || cfg->values.size() != 6) {
        throw FormatError("weights lack a valid 'net.config' tensor");
    }
    NetConfig config;
    config.base_width = static_cast<int>(cfg->values[0]);
    config.ddsc_modules = static_cast<int>(cfg->values[1]);
    config.ddsc_layers_per_module = static_cast<int>(cfg->values[2]);
    config.growth = static_cast<int>(cfg->values[3]);
    config.downsamples = static_cast<int>(cfg->values[4]);
    config.use_global_residual = cfg->values[5] != 0.0f;
    try {
        config.validate();
    } catch (const ValidationError& e) {
        throw FormatError(fmt::format("weights carry an invalid network config: {}", e.what()));
    }

    TinyNet net;
    net.build(config);
    if (weights.tensors.size() != net.params_.size() + 1) {
        throw FormatError(fmt::format("weights hold {} tensors, network needs {}", weights.tensors.size(),
                                      net.params_.size() + 1));
    }
    for (std::size_t i = 0; i < net.params_.size(); ++i) {
        const NamedTensor* src = weights.find(net.names_[i]);
        Tensor& dst = net.params_[i].mutable_value();
        if (src == nullptr) throw FormatError(fmt::format("weights lack tensor '{}'", net.names_[i]));
        if (src->dims != stored_dims(src->name, dst.shape()) || src->values.size() != dst.numel()) {
            throw FormatError(fmt::format("tensor '{}' has the wrong shape for network {}", src->name,
                                          dst.shape().str()));
        }
        for (std::size_t k = 0; k < dst.numel(); ++k) dst[k] = static_cast<double>(src->values[k]);
    }
    return net;
}

}  // namespace marsdust::nn
