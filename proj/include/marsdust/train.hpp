#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "marsdust/adamw.hpp"
#include "marsdust/image.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/tinynet.hpp"

namespace marsdust::nn {

struct TrainConfig {
    int patch = 64;
    int batch = 8;
    int epochs = 30;
    std::uint64_t seed = 0;
    std::string loss = "L1";
    AdamWConfig optimizer{};

    void validate() const;

    /// Full-size recipe: 512 px crops, batch 8, lr 1e-4, 180 epochs.
    static TrainConfig full_scale();
};

struct TrainReport {
    TrainConfig config;
    NetConfig net;
    std::size_t pairs = 0;
    std::vector<double> epoch_losses;
    std::string weights_path;

    std::string to_json() const;
};

struct TrainResult {
    TinyNet net;
    TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Minimizes the L1 loss between the network applied to dusty crops and the
/// matching clean crops. A pair of size w x h is visited
/// floor(w/patch) * floor(h/patch) times per epoch, in shuffled order; each
/// visit takes one random patch with a random quarter-turn rotation and
/// horizontal flip applied identically to both images. Shuffling, cropping,
/// augmentation and initialization depend only on config.seed.
TrainResult train_pairs(const TrainConfig& config, const NetConfig& net, std::span<const Image> dusty,
                        std::span<const Image> clean, const EpochCallback& on_epoch = {});

/// Loads every pair of the manifest, trains, writes the weights file and
/// returns the report. Throws ValidationError on an empty manifest.
TrainReport train(const TrainConfig& config, const NetConfig& net, const DatasetManifest& manifest,
                  const std::filesystem::path& weights_out, const EpochCallback& on_epoch = {});

}  // namespace marsdust::nn
