#include "marsdust/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <fmt/format.h>

#include "marsdust/error.hpp"

namespace marsdust::nn {
namespace {

constexpr char kMagic[4] = {'M', 'D', 'W', '1'};
// Upper bounds that reject absurd headers before allocating.
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxNameLength = 4096;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(fmt::format("weights file truncated while reading {} at byte {}", what, pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* ModelWeights::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::vector<std::uint8_t> encode_weights(const ModelWeights& weights) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, ModelWeights::kVersion);
    put_u32(out, static_cast<std::uint32_t>(weights.tensors.size()));
    std::set<std::string> names;
    for (const auto& t : weights.tensors) {
        if (!names.insert(t.name).second) throw ValidationError(fmt::format("duplicate tensor name '{}'", t.name));
        std::size_t count = 1;
        for (auto d : t.dims) count *= d;
        if (count != t.values.size()) {
            throw ValidationError(fmt::format("tensor '{}' has {} values for {} dims", t.name, t.values.size(), count));
        }
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put_u32(out, d);
        for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

ModelWeights decode_weights(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.take(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic: not an MDW1 weights file");
    const auto version = r.u32("version");
    if (version != ModelWeights::kVersion) {
        throw FormatError(fmt::format("unsupported weights version {} (expected {})", version, ModelWeights::kVersion));
    }
    const auto count = r.u32("tensor count");
    ModelWeights w;
    std::set<std::string> names;
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto name_len = r.u32("name length");
        if (name_len > kMaxNameLength) throw FormatError(fmt::format("tensor {} name length {} too large", i, name_len));
        const auto name = r.take(name_len, "name");
        t.name.assign(name.begin(), name.end());
        if (!names.insert(t.name).second) throw FormatError(fmt::format("duplicate tensor name '{}'", t.name));
        const auto rank = r.u32("rank");
        if (rank > kMaxRank) throw FormatError(fmt::format("tensor '{}' rank {} too large", t.name, rank));
        std::uint64_t elements = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.u32("dims"));
            elements *= t.dims.back();
            if (elements * 4 > r.remaining()) {
                throw FormatError(fmt::format("tensor '{}' shape needs more payload than the file holds", t.name));
            }
        }
        const auto payload = r.take(static_cast<std::size_t>(elements) * 4, "payload");
        t.values.resize(static_cast<std::size_t>(elements));
        for (std::size_t k = 0; k < t.values.size(); ++k) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[4 * k + static_cast<std::size_t>(b)]) << (8 * b);
            t.values[k] = std::bit_cast<float>(bits);
        }
        w.tensors.push_back(std::move(t));
    }
    if (r.remaining() != 0) throw FormatError(fmt::format("{} trailing bytes after last tensor", r.remaining()));
    return w;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
    const auto bytes = encode_weights(weights);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write weights '{}'", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("failed writing weights '{}'", path.string()));
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read weights '{}'", path.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_weights(bytes);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace marsdust::nn
