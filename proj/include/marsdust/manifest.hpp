#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "marsdust/noise.hpp"

namespace marsdust {

/// One clean/dusty pair and everything needed to re-synthesize the dusty image
/// from the clean one: Perlin parameters (their seed is the record seed),
/// alpha and the per-channel atmospheric light.
struct ManifestRecord {
    std::string clean;
    std::string dusty;
    PerlinParams perlin;
    double alpha = 1.0;
    std::vector<double> light;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    /// Record whose dusty file name (last path component) equals file_name.
    const ManifestRecord* find_by_dusty_name(const std::string& file_name) const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// One JSON object per line with keys clean, dusty, scale, octaves,
/// lacunarity, persistence, alpha, light, seed. Reals use 17 significant
/// digits so every value round-trips exactly.
std::string format_manifest_record(const ManifestRecord& record);
ManifestRecord parse_manifest_record(const std::string& line);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Throws IoError when unreadable and FormatError (with the line number) on a
/// malformed line. Blank lines are ignored.
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace marsdust
