#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "marsdust/degrade.hpp"
#include "marsdust/desk_corpus.hpp"
#include "marsdust/error.hpp"
#include "marsdust/image.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/metrics.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/rng.hpp"
#include "support/scratch_dir.hpp"

namespace marsdust {
namespace {

using testing::ScratchDir;

Image random_image(int w, int h, int c, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<double> s(static_cast<std::size_t>(w) * h * c);
    for (auto& v : s) v = rng.uniform();
    return Image(w, h, c, std::move(s));
}

// Straight transcription of the SSIM definition: every window position,
// full 2D Gaussian weights, central moments by explicit sums.
double ssim_oracle(const Image& a, const Image& b) {
    const int n = 11;
    const double sigma = 1.5;
    double wsum = 0.0;
    double w2[11][11];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dy = i - 5, dx = j - 5;
            w2[i][j] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            wsum += w2[i][j];
        }
    const double c1 = 0.0001, c2 = 0.0009;
    double total = 0.0;
    for (int ch = 0; ch < a.channels(); ++ch) {
        double acc = 0.0;
        int count = 0;
        for (int y0 = 0; y0 + n <= a.height(); ++y0) {
            for (int x0 = 0; x0 + n <= a.width(); ++x0) {
                double mx = 0, my = 0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        mx += w2[i][j] / wsum * a.at(x0 + j, y0 + i, ch);
                        my += w2[i][j] / wsum * b.at(x0 + j, y0 + i, ch);
                    }
                double vx = 0, vy = 0, cxy = 0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double p = w2[i][j] / wsum;
                        const double da = a.at(x0 + j, y0 + i, ch) - mx;
                        const double db = b.at(x0 + j, y0 + i, ch) - my;
                        vx += p * da * da;
                        vy += p * db * db;
                        cxy += p * da * db;
                    }
                acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        }
        total += acc / count;
    }
    return total / a.channels();
}

// Dust index from its definition with naive loops.
double dust_index_oracle(const Image& img) {
    const int t = 8;
    double contrast = 0.0;
    int tiles = 0;
    for (int ty = 0; ty + t <= img.height(); ty += t) {
        for (int tx = 0; tx + t <= img.width(); tx += t) {
            double s = 0, s2 = 0;
            for (int y = ty; y < ty + t; ++y)
                for (int x = tx; x < tx + t; ++x) {
                    const double l = img.channels() == 3
                                         ? 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2)
                                         : img.at(x, y, 0);
                    s += l;
                    s2 += l * l;
                }
            const double m = s / (t * t);
            contrast += std::sqrt(std::max(0.0, s2 / (t * t) - m * m));
            ++tiles;
        }
    }
    contrast /= tiles;
    double dark = 0.0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double m = 1.0;
            for (int yy = std::max(0, y - 3); yy <= std::min(img.height() - 1, y + 3); ++yy)
                for (int xx = std::max(0, x - 3); xx <= std::min(img.width() - 1, x + 3); ++xx)
                    for (int c = 0; c < img.channels(); ++c) m = std::min(m, img.at(xx, yy, c));
            dark += m;
        }
    }
    dark /= static_cast<double>(img.pixel_count());
    return 0.5 * (1.0 - std::min(1.0, contrast / 0.2)) + 0.5 * dark;
}

TEST(DustIndex, ConstantImages) {
    EXPECT_NEAR(dust_index(Image(16, 16, 3, 0.9)), 0.95, 1e-15);
    EXPECT_EQ(dust_index(Image(16, 16, 3, 0.0)), 0.5);
    EXPECT_NEAR(dust_index(Image(16, 16, 1, 0.9)), 0.95, 1e-15);
}

TEST(DustIndex, MatchesDefinitionOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image terrain = make_clean_terrain(40, 36, seed);
        EXPECT_NEAR(dust_index(terrain), dust_index_oracle(terrain), 1e-9);
        const Image gray = random_image(24, 17, 1, seed);
        EXPECT_NEAR(dust_index(gray), dust_index_oracle(gray), 1e-9);
    }
}

TEST(DustIndex, ExactlyInvariantUnderQuarterTurnsAndFlips) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image img = make_clean_terrain(64, 64, 100 + seed);
        const double base = dust_index(img);
        for (int rot = 0; rot < 4; ++rot)
            for (bool flip : {false, true}) EXPECT_EQ(dust_index(augment(img, rot, flip)), base);
        EXPECT_GE(base, 0.0);
        EXPECT_LE(base, 1.0);
    }
}

TEST(DustIndex, NonDecreasingInAlpha) {
    const Reflexivity phi = desk_dust_reflexivity();
    int ordered = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        CounterRng rng(trial);
        const Image clean = make_clean_terrain(64, 64, rng.next());
        const NoiseField m = perlin2d(sample_params(rng.next()), 64, 64);
        const AtmosphericLight l = estimate_atmospheric_light(clean, phi);
        double prev = -1.0;
        bool ok = true;
        for (double a : {0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
            const double d = dust_index(synthesize_dusty(clean, make_transmission(m, Alpha(a)), l));
            ok = ok && d >= prev;
            prev = d;
        }
        ordered += ok;
    }
    EXPECT_GE(ordered, 95);
}

TEST(DustIndex, Errors) {
    EXPECT_THROW(dust_index(Image(7, 16, 1)), ValidationError);
    EXPECT_THROW(dust_index(Image(16, 16, 1), 1), ValidationError);
    EXPECT_THROW(dark_channel(Image(4, 4, 1), 4), ValidationError);
}

TEST(DarkChannel, MinFilterOfChannelMinimum) {
    Image img(5, 5, 3, 0.8);
    img.set(2, 2, 1, 0.1);
    const auto d3 = dark_channel(img, 3);
    EXPECT_EQ(d3[0], 0.8);
    EXPECT_EQ(d3[1 * 5 + 1], 0.1);
    EXPECT_EQ(d3[3 * 5 + 3], 0.1);
    EXPECT_EQ(d3[4 * 5 + 4], 0.8);
    const auto d1 = dark_channel(img, 1);
    EXPECT_EQ(d1[1 * 5 + 1], 0.8);
}

TEST(MeanStd, OrderIndependentAndCorrect) {
    std::vector<double> v{1e16, 1.0, -1e16, 3.0, 0.5};
    const MeanStd a = mean_std(v);
    std::reverse(v.begin(), v.end());
    const MeanStd b = mean_std(v);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std, b.std);
    EXPECT_DOUBLE_EQ(a.mean, 4.5 / 5.0);
    const MeanStd c = mean_std(std::vector<double>{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    EXPECT_DOUBLE_EQ(c.mean, 5.0);
    EXPECT_DOUBLE_EQ(c.std, 2.0);
    EXPECT_THROW(mean_std(std::vector<double>{}), ValidationError);
}

TEST(Psnr, IdenticalIsInfiniteAndOffsetGivesTwentyDb) {
    const Image a = random_image(16, 16, 3, 1);
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
    std::vector<double> s(a.samples().begin(), a.samples().end());
    for (auto& v : s) v *= 0.8;
    const Image base(16, 16, 3, s);
    for (auto& v : s) v += 0.1;
    const Image shifted(16, 16, 3, s);
    EXPECT_NEAR(psnr(base, shifted), 20.0, 1e-9);
    EXPECT_EQ(psnr(base, shifted), psnr(shifted, base));
    EXPECT_THROW(psnr(a, Image(16, 15, 3)), DimensionError);
}

TEST(Ssim, MatchesDirectOracle) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Image a = random_image(32, 32, 3, seed);
        const Image b = random_image(32, 32, 3, seed + 50);
        EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
        const Image t = make_clean_terrain(32, 32, seed);
        EXPECT_NEAR(ssim(t, a), ssim_oracle(t, a), 1e-9);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    }
}

TEST(Ssim, IdentityAndErrors) {
    const Image a = random_image(20, 14, 1, 4);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_THROW(ssim(a, Image(20, 13, 1)), DimensionError);
    EXPECT_THROW(ssim(Image(10, 10, 1), Image(10, 10, 1)), ValidationError);
}

class CorpusReportTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::filesystem::create_directories(dir_ / "a");
        std::filesystem::create_directories(dir_ / "b");
        for (int i = 0; i < 4; ++i) {
            const auto p = dir_ / "a" / ("img" + std::to_string(i) + ".png");
            save_image(make_clean_terrain(32, 32, 7 + i), p);
            a_.push_back(p);
        }
        const auto p = dir_ / "b" / "one.png";
        save_image(make_clean_terrain(24, 24, 70), p);
        b_.push_back(p);
    }
    ScratchDir dir_{"report"};
    std::vector<std::filesystem::path> a_;
    std::vector<std::filesystem::path> b_;
};

TEST_F(CorpusReportTest, MeansMatchScalarLoop) {
    const std::vector<ImageSet> sets{{"a", a_}, {"b", b_}};
    const CorpusReport r = corpus_report(sets);
    double sum = 0.0, sq = 0.0;
    std::vector<double> idx;
    for (const auto& p : a_) idx.push_back(dust_index(load_image(p)));
    for (double v : idx) sum += v;
    const double mean = sum / idx.size();
    for (double v : idx) sq += (v - mean) * (v - mean);
    ASSERT_NE(r.find("a"), nullptr);
    EXPECT_NEAR(r.find("a")->dust_index_mean, mean, 1e-12);
    EXPECT_NEAR(r.find("a")->dust_index_std, std::sqrt(sq / idx.size()), 1e-12);
    EXPECT_EQ(r.find("a")->n, 4u);
    const SetSummary* single = r.find("b");
    ASSERT_NE(single, nullptr);
    EXPECT_EQ(single->dust_index_mean, dust_index(load_image(b_[0])));
    EXPECT_EQ(single->dust_index_std, 0.0);
    EXPECT_FALSE(single->psnr_mean.has_value());
    EXPECT_EQ(r.rows.size(), 5u);
    EXPECT_EQ(r.find("c"), nullptr);
}

TEST_F(CorpusReportTest, JobsDoNotChangeResult) {
    const std::vector<ImageSet> sets{{"a", a_}, {"b", b_}};
    EXPECT_EQ(corpus_report(sets, nullptr, {}, 1).to_json(), corpus_report(sets, nullptr, {}, 3).to_json());
}

TEST_F(CorpusReportTest, PairsGiveFullReferenceScoresAndInfinityInJson) {
    DatasetManifest m;
    for (const auto& p : a_) {
        ManifestRecord rec;
        rec.clean = p.string();
        rec.dusty = "dusty/" + p.filename().string();
        rec.light = {1, 1, 1};
        m.records.push_back(rec);
    }
    const std::vector<ImageSet> sets{{"same", a_}};
    const CorpusReport r = corpus_report(sets, &m);
    ASSERT_TRUE(r.find("same")->psnr_mean.has_value());
    EXPECT_TRUE(std::isinf(*r.find("same")->psnr_mean));
    EXPECT_NEAR(*r.find("same")->ssim_mean, 1.0, 1e-12);
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_EQ(j["sets"][0]["psnr_mean"], "inf");
    EXPECT_EQ(j["metric"], "dust_index (FADE-surrogate)");
    EXPECT_NE(r.to_table().find("inf"), std::string::npos);
}

TEST_F(CorpusReportTest, UnreadableImagesSkippedEmptySetsRejected) {
    {
        std::ofstream junk(dir_ / "a" / "broken.png");
        junk << "junk";
    }
    auto with_broken = a_;
    with_broken.push_back(dir_ / "a" / "broken.png");
    const std::vector<ImageSet> sets{{"a", with_broken}};
    const CorpusReport r = corpus_report(sets);
    EXPECT_EQ(r.skipped, 1u);
    EXPECT_EQ(r.find("a")->n, 4u);
    const std::vector<ImageSet> empty{{"e", {}}};
    EXPECT_THROW(corpus_report(empty), ValidationError);
    const std::vector<ImageSet> all_bad{{"x", {dir_ / "a" / "broken.png"}}};
    EXPECT_THROW(corpus_report(all_bad), ValidationError);
}

}  // namespace
}  // namespace marsdust
