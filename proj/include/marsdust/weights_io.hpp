#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace marsdust::nn {

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered, uniquely named float tensors.
struct ModelWeights {
    static constexpr std::uint32_t kVersion = 1;

    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// Binary layout, little-endian, no padding:
///   "MDW1" | u32 version | u32 count |
///   count x ( u32 name_len | name bytes | u32 rank | rank x u32 dim | prod(dims) x f32 )
std::vector<std::uint8_t> encode_weights(const ModelWeights& weights);
/// Throws FormatError on bad magic, unsupported version, truncation,
/// duplicate names or trailing bytes.
ModelWeights decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace marsdust::nn
