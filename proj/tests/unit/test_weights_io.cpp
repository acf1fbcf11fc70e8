#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "marsdust/error.hpp"
#include "marsdust/weights_io.hpp"
#include "support/scratch_dir.hpp"

namespace marsdust::nn {
namespace {

using testing::ScratchDir;

ModelWeights golden_weights() {
    ModelWeights w;
    w.tensors.push_back({"a", {2, 3}, {0.0f, 0.25f, -1.5f, 3.0f, 1e-3f, -0.0f}});
    w.tensors.push_back({"layer.bias", {1}, {42.0f}});
    w.tensors.push_back({"scalar", {}, {7.5f}});
    return w;
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

TEST(WeightsIo, ByteLayoutMatchesHandEncoding) {
    std::vector<std::uint8_t> want{'M', 'D', 'W', '1'};
    put_u32(want, 1);
    put_u32(want, 3);
    for (const auto& t : golden_weights().tensors) {
        put_u32(want, static_cast<std::uint32_t>(t.name.size()));
        want.insert(want.end(), t.name.begin(), t.name.end());
        put_u32(want, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put_u32(want, d);
        for (float f : t.values) put_f32(want, f);
    }
    EXPECT_EQ(encode_weights(golden_weights()), want);
}

TEST(WeightsIo, GoldenChecksum) {
    const auto bytes = encode_weights(golden_weights());
    EXPECT_EQ(bytes.size(), 97u);
    EXPECT_EQ(fnv1a64(bytes), 0x230f51902c9ec42cULL);
}

TEST(WeightsIo, FileRoundTripIsBitExact) {
    ScratchDir dir("weights");
    ModelWeights w = golden_weights();
    w.tensors.push_back({"special", {3}, {std::numeric_limits<float>::denorm_min(), -0.0f,
                                          std::numeric_limits<float>::max()}});
    save_weights(w, dir / "w.mdw");
    const ModelWeights back = load_weights(dir / "w.mdw");
    EXPECT_EQ(encode_weights(back), encode_weights(w));
    EXPECT_EQ(back, w);
    EXPECT_NE(back.find("layer.bias"), nullptr);
    EXPECT_EQ(back.find("nothing"), nullptr);
}

TEST(WeightsIo, EveryTruncationIsAFormatError) {
    const auto bytes = encode_weights(golden_weights());
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        EXPECT_THROW(decode_weights(std::span(bytes.data(), n)), FormatError) << "length " << n;
    }
}

TEST(WeightsIo, CorruptHeadersAndPayloads) {
    const auto good = encode_weights(golden_weights());
    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_weights(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    EXPECT_THROW(decode_weights(bad_version), FormatError);
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(decode_weights(trailing), FormatError);
    auto huge_count = good;
    huge_count[8] = 0xff;
    huge_count[9] = 0xff;
    huge_count[10] = 0xff;
    huge_count[11] = 0xff;
    EXPECT_THROW(decode_weights(huge_count), FormatError);
    auto huge_dim = good;
    // First dim of tensor "a" sits after magic, version, count, name length, name and rank.
    const std::size_t dim_at = 4 + 4 + 4 + 4 + 1 + 4;
    huge_dim[dim_at + 3] = 0x7f;
    EXPECT_THROW(decode_weights(huge_dim), FormatError);
    // Two one-letter tensors, the second renamed on the wire to match the first.
    ModelWeights pair;
    pair.tensors.push_back({"a", {1}, {1.0f}});
    pair.tensors.push_back({"b", {1}, {2.0f}});
    auto dup = encode_weights(pair);
    const std::size_t second_name = 12 + (4 + 1 + 4 + 4 + 4) + 4;
    ASSERT_EQ(dup[second_name], 'b');
    dup[second_name] = 'a';
    EXPECT_THROW(decode_weights(dup), FormatError);
    ModelWeights same = pair;
    same.tensors[1].name = "a";
    EXPECT_THROW(encode_weights(same), ValidationError);
}

TEST(WeightsIo, MissingFileIsIoError) {
    ScratchDir dir("wmissing");
    EXPECT_THROW(load_weights(dir / "absent.mdw"), IoError);
    {
        std::ofstream out(dir / "junk.mdw", std::ios::binary);
        out << "MDW";
    }
    EXPECT_THROW(load_weights(dir / "junk.mdw"), FormatError);
}

}  // namespace
}  // namespace marsdust::nn
