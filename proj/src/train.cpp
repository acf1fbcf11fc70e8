#include "marsdust/train.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "marsdust/error.hpp"
#include "marsdust/log.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/rng.hpp"

namespace marsdust::nn {
namespace {

constexpr std::uint64_t kInitStream = 0x1417;

}  // namespace

void TrainConfig::validate() const {
    if (patch < 4 || patch % 4 != 0) {
        throw ValidationError(fmt::format("patch size must be a positive multiple of 4, got {}", patch));
    }
    if (batch < 1) throw ValidationError(fmt::format("batch size must be >= 1, got {}", batch));
    if (epochs < 1) throw ValidationError(fmt::format("epochs must be >= 1, got {}", epochs));
    if (!(optimizer.lr > 0.0)) throw ValidationError(fmt::format("learning rate must be > 0, got {}", optimizer.lr));
    if (loss != "L1") throw ValidationError(fmt::format("unsupported loss '{}' (only L1)", loss));
}

TrainConfig TrainConfig::full_scale() {
    TrainConfig c;
    c.patch = 512;
    c.batch = 8;
    c.epochs = 180;
    c.optimizer.lr = 1e-4;
    return c;
}

std::string TrainReport::to_json() const {
    nlohmann::json j;
    j["config"] = {{"patch", config.patch},
                   {"batch", config.batch},
                   {"epochs", config.epochs},
                   {"seed", config.seed},
                   {"loss", config.loss},
                   {"lr", config.optimizer.lr},
                   {"beta1", config.optimizer.beta1},
                   {"beta2", config.optimizer.beta2},
                   {"eps", config.optimizer.eps},
                   {"weight_decay", config.optimizer.weight_decay}};
    j["net"] = {{"base_width", net.base_width},
                {"ddsc_modules", net.ddsc_modules},
                {"ddsc_layers_per_module", net.ddsc_layers_per_module},
                {"growth", net.growth},
                {"downsamples", net.downsamples},
                {"use_global_residual", net.use_global_residual}};
    j["pairs"] = pairs;
    j["epoch_losses"] = epoch_losses;
    j["weights"] = weights_path;
    return j.dump(2);
}

TrainResult train_pairs(const TrainConfig& config, const NetConfig& net_config, std::span<const Image> dusty,
                        std::span<const Image> clean, const EpochCallback& on_epoch) {
    config.validate();
    net_config.validate();
    if (dusty.empty()) throw ValidationError("training needs at least one pair");
    if (dusty.size() != clean.size()) throw ValidationError("dusty and clean lists differ in length");
    for (std::size_t i = 0; i < dusty.size(); ++i) {
        if (!dusty[i].same_shape(clean[i])) {
            throw DimensionError(fmt::format("pair {}: dusty and clean images differ in shape", i));
        }
        if (dusty[i].channels() != 3) throw DimensionError(fmt::format("pair {}: training needs RGB images", i));
        if (dusty[i].width() < config.patch || dusty[i].height() < config.patch) {
            throw ValidationError(fmt::format("patch {} larger than pair {} ({}x{})", config.patch, i,
                                              dusty[i].width(), dusty[i].height()));
        }
    }

    TinyNet net(net_config, derive_seed(config.seed, kInitStream));
    AdamW optimizer(net.parameters(), config.optimizer);
    TrainReport report;
    report.config = config;
    report.net = net_config;
    report.pairs = dusty.size();

    std::vector<std::size_t> visits;
    for (std::size_t i = 0; i < dusty.size(); ++i) {
        const auto tiles = static_cast<std::size_t>(dusty[i].width() / config.patch) *
                           static_cast<std::size_t>(dusty[i].height() / config.patch);
        visits.insert(visits.end(), tiles, i);
    }
    std::vector<std::size_t> order(visits.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        CounterRng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        order = visits;
        for (std::size_t j = order.size() - 1; j > 0; --j) std::swap(order[j], order[rng.below(j + 1)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
            std::vector<Image> inputs;
            std::vector<Image> targets;
            for (std::size_t k = start; k < end; ++k) {
                const Image& d = dusty[order[k]];
                const PatchRegion region{static_cast<int>(rng.below(static_cast<std::uint64_t>(d.width() - config.patch + 1))),
                                         static_cast<int>(rng.below(static_cast<std::uint64_t>(d.height() - config.patch + 1))),
                                         config.patch, config.patch};
                const int rot = static_cast<int>(rng.below(4));
                const bool flip = rng.below(2) == 1;
                inputs.push_back(augment(crop_patch(d, region), rot, flip));
                targets.push_back(augment(crop_patch(clean[order[k]], region), rot, flip));
            }
            optimizer.zero_grad();
            const Var prediction = net.forward(Var(images_to_tensor(inputs)));
            const Var loss = ops::l1_loss(prediction, images_to_tensor(targets));
            backward(loss);
            optimizer.step();
            loss_sum += loss.value()[0] * static_cast<double>(end - start);
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        report.epoch_losses.push_back(mean_loss);
        log::info(fmt::format("epoch {}/{}: mean L1 {:.6f}", epoch + 1, config.epochs, mean_loss));
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
    return TrainResult{std::move(net), std::move(report)};
}

TrainReport train(const TrainConfig& config, const NetConfig& net, const DatasetManifest& manifest,
                  const std::filesystem::path& weights_out, const EpochCallback& on_epoch) {
    if (manifest.records.empty()) throw ValidationError("training manifest is empty");
    config.validate();
    net.validate();
    std::vector<Image> dusty;
    std::vector<Image> clean;
    for (const auto& r : manifest.records) {
        dusty.push_back(load_image(r.dusty));
        clean.push_back(load_image(r.clean));
    }
    auto result = train_pairs(config, net, dusty, clean, on_epoch);
    save_weights(result.net.to_weights(), weights_out);
    result.report.weights_path = weights_out.string();
    return std::move(result.report);
}

}  // namespace marsdust::nn
