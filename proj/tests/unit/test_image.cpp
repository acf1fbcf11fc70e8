#include <gtest/gtest.h>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <vector>

#include "marsdust/error.hpp"
#include "marsdust/image.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/rng.hpp"
#include "support/scratch_dir.hpp"

namespace marsdust {
namespace {

using testing::ScratchDir;

// Minimal libpng writer for arbitrary color types, so decoding is checked
// against files the library itself did not produce.
void write_raw_png(const std::filesystem::path& path, int w, int h, int color_type, int depth,
                   const std::vector<std::uint8_t>& rows_bytes, bool with_palette = false, bool with_trns = false) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    ASSERT_NE(fp, nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        FAIL() << "libpng write failed";
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_color palette[2] = {{0, 0, 0}, {255, 128, 0}};
    if (with_palette) png_set_PLTE(png, info, palette, 2);
    png_color_16 trns{};
    if (with_trns) png_set_tRNS(png, info, nullptr, 0, &trns);
    png_write_info(png, info);
    const std::size_t stride = rows_bytes.size() / static_cast<std::size_t>(h);
    for (int y = 0; y < h; ++y) {
        png_write_row(png, rows_bytes.data() + static_cast<std::size_t>(y) * stride);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Image ramp(int w, int h, int c) {
    std::vector<double> s(static_cast<std::size_t>(w) * h * c);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i % 97) / 96.0;
    return Image(w, h, c, std::move(s));
}

TEST(Image, InterleavedLayout) {
    const Image img(2, 2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.5});
    EXPECT_DOUBLE_EQ(img.at(1, 0, 2), 0.6);
    EXPECT_DOUBLE_EQ(img.at(0, 1, 0), 0.7);
    EXPECT_DOUBLE_EQ(img.pixel(1, 1)[1], 0.0);
    EXPECT_DOUBLE_EQ(img.max_sample(), 1.0);
    EXPECT_EQ(img.pixel_count(), 4u);
}

TEST(Image, RejectsOutOfRangeSamples) {
    EXPECT_THROW(Image(1, 1, 1, std::vector<double>{1.5}), ValidationError);
    EXPECT_THROW(Image(1, 1, 1, std::vector<double>{-0.01}), ValidationError);
    EXPECT_THROW(Image(1, 1, 1, std::vector<double>{std::nan("")}), ValidationError);
    EXPECT_THROW(Image(2, 2, 1, std::vector<double>{0.0, 0.0}), ValidationError);
    EXPECT_THROW(Image(0, 2, 1), ValidationError);
    Image img(2, 2, 1);
    EXPECT_THROW(img.set(0, 0, 0, 2.0), ValidationError);
}

TEST(PngIo, EightBitRoundTripEveryLevel) {
    ScratchDir dir("png8");
    std::vector<double> s(256 * 3);
    for (int v = 0; v < 256; ++v) {
        s[v * 3] = v / 255.0;
        s[v * 3 + 1] = (255 - v) / 255.0;
        s[v * 3 + 2] = (v * 37 % 256) / 255.0;
    }
    const Image img(16, 16, 3, s);
    save_image(img, dir / "a.png");
    const Image back = load_image(dir / "a.png");
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back.samples()[i], s[i]);
}

TEST(PngIo, QuantizationErrorAtMostHalfStep) {
    ScratchDir dir("quant");
    CounterRng rng(11);
    std::vector<double> s(64 * 64);
    for (auto& v : s) v = rng.uniform();
    const Image img(64, 64, 1, s);
    for (int depth : {8, 16}) {
        save_image(img, dir / "q.png", depth);
        const Image back = load_image(dir / "q.png");
        const double step = depth == 8 ? 255.0 : 65535.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(back.samples()[i] - s[i]));
        EXPECT_LE(worst, 0.5 / step + 1e-15) << "depth " << depth;
    }
}

TEST(PngIo, RoundHalfUp) {
    EXPECT_EQ(quantize_sample(0.5 / 255.0, 8), 1u);
    EXPECT_EQ(quantize_sample(0.49 / 255.0, 8), 0u);
    EXPECT_EQ(quantize_sample(1.0, 8), 255u);
    EXPECT_EQ(quantize_sample(1.0, 16), 65535u);
    EXPECT_EQ(quantize_sample(0.0, 16), 0u);
}

TEST(PngIo, DecodesSixteenBitGray) {
    ScratchDir dir("gray16");
    // Big-endian 16-bit samples 0, 1, 65534, 65535.
    write_raw_png(dir / "g.png", 4, 1, PNG_COLOR_TYPE_GRAY, 16, {0, 0, 0, 1, 0xff, 0xfe, 0xff, 0xff});
    const Image img = load_image(dir / "g.png");
    ASSERT_EQ(img.channels(), 1);
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_EQ(img.at(1, 0, 0), 1.0 / 65535.0);
    EXPECT_EQ(img.at(2, 0, 0), 65534.0 / 65535.0);
    EXPECT_EQ(img.at(3, 0, 0), 1.0);
}

TEST(PngIo, DecodesEightBitRgb) {
    ScratchDir dir("rgb8");
    write_raw_png(dir / "c.png", 2, 1, PNG_COLOR_TYPE_RGB, 8, {255, 0, 51, 0, 102, 255});
    const Image img = load_image(dir / "c.png");
    ASSERT_EQ(img.channels(), 3);
    EXPECT_EQ(img.at(0, 0, 2), 51.0 / 255.0);
    EXPECT_EQ(img.at(1, 0, 1), 102.0 / 255.0);
}

TEST(PngIo, RejectsAlphaPaletteAndTransparency) {
    ScratchDir dir("reject");
    write_raw_png(dir / "rgba.png", 1, 1, PNG_COLOR_TYPE_RGBA, 8, {1, 2, 3, 4});
    write_raw_png(dir / "ga.png", 1, 1, PNG_COLOR_TYPE_GRAY_ALPHA, 8, {1, 2});
    write_raw_png(dir / "pal.png", 1, 1, PNG_COLOR_TYPE_PALETTE, 8, {1}, true);
    write_raw_png(dir / "trns.png", 1, 1, PNG_COLOR_TYPE_RGB, 8, {1, 2, 3}, false, true);
    write_raw_png(dir / "g1.png", 8, 1, PNG_COLOR_TYPE_GRAY, 1, {0xaa});
    for (const char* name : {"rgba.png", "ga.png", "pal.png", "trns.png", "g1.png"}) {
        EXPECT_THROW(load_image(dir / name), DecodeError) << name;
    }
}

TEST(PngIo, MissingAndGarbageFiles) {
    ScratchDir dir("garbage");
    EXPECT_THROW(load_image(dir / "absent.png"), IoError);
    {
        FILE* fp = std::fopen((dir / "junk.png").c_str(), "wb");
        std::fputs("not a png at all", fp);
        std::fclose(fp);
    }
    EXPECT_THROW(load_image(dir / "junk.png"), DecodeError);
    EXPECT_THROW(save_image(Image(1, 1, 1), dir / "x.png", 12), ValidationError);
    EXPECT_THROW(list_png_files(dir / "absent"), IoError);
}

TEST(PngIo, ListsPngFilesSorted) {
    ScratchDir dir("list");
    for (const char* name : {"b.png", "a.png", "c.txt", "a2.png"}) {
        save_image(Image(1, 1, 1), dir / name);
    }
    const auto files = list_png_files(dir.path());
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "a.png");
    EXPECT_EQ(files[1].filename(), "a2.png");
    EXPECT_EQ(files[2].filename(), "b.png");
}

TEST(CropPatch, MatchesDirectIndexing) {
    const Image img = ramp(9, 7, 3);
    const PatchRegion r{2, 3, 5, 4};
    const Image patch = crop_patch(img, r);
    ASSERT_EQ(patch.width(), 5);
    ASSERT_EQ(patch.height(), 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) EXPECT_EQ(patch.at(x, y, c), img.at(x + 2, y + 3, c));
    EXPECT_EQ(crop_patch(img, {0, 0, 9, 7}), img);
}

TEST(CropPatch, BoundsErrors) {
    const Image img = ramp(8, 8, 1);
    EXPECT_THROW(crop_patch(img, {-1, 0, 2, 2}), BoundsError);
    EXPECT_THROW(crop_patch(img, {7, 0, 2, 2}), BoundsError);
    EXPECT_THROW(crop_patch(img, {0, 7, 2, 2}), BoundsError);
    EXPECT_THROW(crop_patch(img, {0, 0, 0, 2}), BoundsError);
}

TEST(Augment, RotationIsCounterClockwise) {
    // 2x1 image [a b] turned a quarter counter-clockwise puts b on top.
    const Image img(2, 1, 1, {0.25, 0.75});
    const Image r = augment(img, 1, false);
    ASSERT_EQ(r.width(), 1);
    ASSERT_EQ(r.height(), 2);
    EXPECT_EQ(r.at(0, 0, 0), 0.75);
    EXPECT_EQ(r.at(0, 1, 0), 0.25);
    const Image f = augment(img, 0, true);
    EXPECT_EQ(f.at(0, 0, 0), 0.75);
}

TEST(Augment, PermutesPixelsAndFourTurnsIsIdentity) {
    const Image img = ramp(6, 4, 3);
    std::vector<double> sorted(img.samples().begin(), img.samples().end());
    std::sort(sorted.begin(), sorted.end());
    for (int rot = 0; rot < 4; ++rot) {
        for (bool flip : {false, true}) {
            const Image a = augment(img, rot, flip);
            std::vector<double> s(a.samples().begin(), a.samples().end());
            std::sort(s.begin(), s.end());
            EXPECT_EQ(s, sorted);
            EXPECT_EQ(a.width(), rot % 2 ? 4 : 6);
        }
    }
    Image r = img;
    for (int i = 0; i < 4; ++i) r = augment(r, 1, false);
    EXPECT_EQ(r, img);
    EXPECT_EQ(augment(augment(img, 0, true), 0, true), img);
    EXPECT_EQ(augment(img, 2, false), augment(augment(img, 1, false), 1, false));
}

}  // namespace
}  // namespace marsdust
