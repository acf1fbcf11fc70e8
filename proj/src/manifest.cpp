#include "marsdust/manifest.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "marsdust/error.hpp"

namespace marsdust {
namespace {

using nlohmann::json;

const std::set<std::string>& required_keys() {
    static const std::set<std::string> keys{"clean", "dusty", "scale", "octaves", "lacunarity",
                                            "persistence", "alpha", "light", "seed"};
    return keys;
}

}  // namespace

const ManifestRecord* DatasetManifest::find_by_dusty_name(const std::string& file_name) const {
    for (const auto& r : records) {
        if (std::filesystem::path(r.dusty).filename() == file_name) return &r;
    }
    return nullptr;
}

std::string format_manifest_record(const ManifestRecord& r) {
    std::string light;
    for (std::size_t i = 0; i < r.light.size(); ++i) {
        light += fmt::format("{}{:.17g}", i == 0 ? "" : ",", r.light[i]);
    }
    return fmt::format(
        R"({{"clean":{},"dusty":{},"scale":{:.17g},"octaves":{},"lacunarity":{:.17g},"persistence":{:.17g},"alpha":{:.17g},"light":[{}],"seed":{}}})",
        json(r.clean).dump(), json(r.dusty).dump(), r.perlin.scale, r.perlin.octaves, r.perlin.lacunarity,
        r.perlin.persistence, r.alpha, light, r.perlin.seed);
}

ManifestRecord parse_manifest_record(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("malformed manifest record: {}", e.what()));
    }
    if (!j.is_object()) throw FormatError("manifest record is not a JSON object");
    std::set<std::string> keys;
    for (const auto& item : j.items()) keys.insert(item.key());
    if (keys != required_keys()) {
        throw FormatError("manifest record keys must be exactly clean, dusty, scale, octaves, lacunarity, "
                          "persistence, alpha, light, seed");
    }
    try {
        ManifestRecord r;
        r.clean = j.at("clean").get<std::string>();
        r.dusty = j.at("dusty").get<std::string>();
        r.perlin.scale = j.at("scale").get<double>();
        r.perlin.octaves = j.at("octaves").get<int>();
        r.perlin.lacunarity = j.at("lacunarity").get<double>();
        r.perlin.persistence = j.at("persistence").get<double>();
        if (!j.at("seed").is_number_unsigned()) throw FormatError("manifest seed must be an unsigned integer");
        r.perlin.seed = j.at("seed").get<std::uint64_t>();
        r.alpha = j.at("alpha").get<double>();
        r.light = j.at("light").get<std::vector<double>>();
        return r;
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("manifest record has a field of the wrong type: {}", e.what()));
    }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write manifest '{}'", path.string()));
    for (const auto& r : manifest.records) out << format_manifest_record(r) << '\n';
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing manifest '{}'", path.string()));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read manifest '{}'", path.string()));
    DatasetManifest manifest;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            manifest.records.push_back(parse_manifest_record(line));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return manifest;
}

}  // namespace marsdust
