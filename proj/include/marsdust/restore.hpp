#pragma once

#include <filesystem>
#include <memory>
#include <variant>

#include "marsdust/degrade.hpp"
#include "marsdust/field.hpp"
#include "marsdust/image.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/tinynet.hpp"

namespace marsdust {

inline constexpr double kDefaultTransmissionFloor = 0.05;

/// C = (H - L (1 - T')) / T' with T' = max(T, t_floor), clamped to [0,1].
Image invert_degradation(const Image& hazy, const TransmissionMap& t, const AtmosphericLight& light,
                         double t_floor = kDefaultTransmissionFloor);

struct TransmissionEstimateOptions {
    int window = 15;
    double omega = 0.95;
    double t_floor = kDefaultTransmissionFloor;
};

/// Dark-channel style estimate:
///   T(x) = clamp(1 - omega * min_{window}(min_c H(x,c) / L(c)), t_floor, 1).
/// Throws EstimationError when any L(c) is zero.
TransmissionMap estimate_transmission(const Image& hazy, const AtmosphericLight& light,
                                      const TransmissionEstimateOptions& options = {});

/// Atmospheric light of a dusty image without external data: reflexivity from
/// its top_k dustiest 32 px tiles, scaled by the image's largest sample.
AtmosphericLight estimate_light_from_image(const Image& hazy, std::size_t top_k = 8);

/// Transmission and light of a manifest pair, replayed from its record.
struct KnownParameters {
    TransmissionMap transmission;
    AtmosphericLight light;
    double t_floor = kDefaultTransmissionFloor;

    /// Throws LookupError when no record's dusty file name matches.
    static KnownParameters from_manifest(const DatasetManifest& manifest, const std::filesystem::path& dusty_path,
                                         int width, int height);
};

struct EstimatedParameters {
    TransmissionEstimateOptions options{};
    std::size_t light_tiles = 8;
};

/// A trained network, shared between concurrent restorations.
struct LearnedModel {
    std::shared_ptr<const nn::TinyNet> net;

    /// Throws IoError when the file is missing and FormatError when it is corrupt.
    static LearnedModel from_file(const std::filesystem::path& weights);
};

using RestoreMethod = std::variant<KnownParameters, EstimatedParameters, LearnedModel>;

/// Removes dust with the chosen method. The learned path edge-pads inputs to
/// a multiple of 4 and crops back, and replicates gray inputs to RGB and
/// averages back. Output dimensions always equal input dimensions.
Image remove_dust(const Image& hazy, const RestoreMethod& method);

}  // namespace marsdust
