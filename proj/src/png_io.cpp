#include "marsdust/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <fmt/format.h>
#include <png.h>

#include "marsdust/error.hpp"

namespace marsdust {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct ReadResult {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<unsigned char> bytes;
};

struct PngErrorState {
    char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
    std::snprintf(state->message, sizeof(state->message), "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// Returns an empty string on success. No C++ object with a destructor is
// created between setjmp and the last libpng call.
std::string read_png(std::FILE* fp, ReadResult& out) {
    PngErrorState err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
    if (png == nullptr) return "cannot allocate png reader";
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return "cannot allocate png info";
    }
    png_bytep* rows = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::free(rows);
        return err.message[0] != '\0' ? err.message : "corrupt png stream";
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    out.color_type = png_get_color_type(png, info);
    const bool supported_type = out.color_type == PNG_COLOR_TYPE_GRAY || out.color_type == PNG_COLOR_TYPE_RGB;
    const bool supported_depth = out.bit_depth == 8 || out.bit_depth == 16;
    if (!supported_type || !supported_depth || png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_destroy_read_struct(&png, &info, nullptr);
        return "";
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    out.bytes.resize(rowbytes * out.height);
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * out.height));
    if (rows == nullptr) png_error(png, "out of memory");
    for (png_uint_32 y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + y * rowbytes;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    std::free(rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return "";
}

std::string color_type_name(int color_type) {
    switch (color_type) {
        case PNG_COLOR_TYPE_GRAY: return "grayscale";
        case PNG_COLOR_TYPE_RGB: return "rgb";
        case PNG_COLOR_TYPE_PALETTE: return "palette";
        case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
        case PNG_COLOR_TYPE_RGB_ALPHA: return "rgb+alpha";
        default: return fmt::format("unknown({})", color_type);
    }
}

std::string write_png(std::FILE* fp, png_uint_32 width, png_uint_32 height, int bit_depth, int color_type,
                      const unsigned char* bytes, std::size_t rowbytes) {
    PngErrorState err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
    if (png == nullptr) return "cannot allocate png writer";
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        return "cannot allocate png info";
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return err.message[0] != '\0' ? err.message : "png write failure";
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(bytes + y * rowbytes));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return "";
}

}  // namespace

unsigned quantize_sample(double s, int bit_depth) {
    const double max = bit_depth == 16 ? 65535.0 : 255.0;
    return static_cast<unsigned>(std::floor(std::clamp(s, 0.0, 1.0) * max + 0.5));
}

Image load_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw IoError(fmt::format("cannot open '{}': {}", path.string(), std::strerror(errno)));
    }
    unsigned char sig[8] = {};
    if (std::fread(sig, 1, sizeof(sig), fp.get()) != sizeof(sig) || png_sig_cmp(sig, 0, sizeof(sig)) != 0) {
        throw DecodeError(fmt::format("'{}' is not a PNG file (bad signature)", path.string()));
    }
    std::rewind(fp.get());

    ReadResult r;
    if (auto msg = read_png(fp.get(), r); !msg.empty()) {
        throw DecodeError(fmt::format("cannot decode '{}': {}", path.string(), msg));
    }
    if (r.color_type != PNG_COLOR_TYPE_GRAY && r.color_type != PNG_COLOR_TYPE_RGB) {
        throw DecodeError(fmt::format("'{}': unsupported colour type {}", path.string(), color_type_name(r.color_type)));
    }
    if (r.bit_depth != 8 && r.bit_depth != 16) {
        throw DecodeError(fmt::format("'{}': unsupported bit depth {}", path.string(), r.bit_depth));
    }
    if (r.bytes.empty()) {
        throw DecodeError(fmt::format("'{}': transparency chunk (alpha) not supported", path.string()));
    }

    const int channels = r.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t n = static_cast<std::size_t>(r.width) * r.height * static_cast<std::size_t>(channels);
    std::vector<double> samples(n);
    if (r.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) samples[i] = r.bytes[i] / 255.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(r.bytes[2 * i]) << 8) | r.bytes[2 * i + 1];
            samples[i] = v / 65535.0;
        }
    }
    return Image(static_cast<int>(r.width), static_cast<int>(r.height), channels, std::move(samples));
}

void save_image(const Image& img, const std::filesystem::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) {
        throw ValidationError(fmt::format("bit depth must be 8 or 16, got {}", bit_depth));
    }
    const auto samples = img.samples();
    const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
    std::vector<unsigned char> bytes(samples.size() * bytes_per_sample);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const unsigned q = quantize_sample(samples[i], bit_depth);
        if (bit_depth == 8) {
            bytes[i] = static_cast<unsigned char>(q);
        } else {
            bytes[2 * i] = static_cast<unsigned char>(q >> 8);
            bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
        }
    }

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw IoError(fmt::format("cannot write '{}': {}", path.string(), std::strerror(errno)));
    }
    const int color_type = img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(img.channels()) *
                                 bytes_per_sample;
    if (auto msg = write_png(fp.get(), static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
                             bit_depth, color_type, bytes.data(), rowbytes);
        !msg.empty()) {
        throw IoError(fmt::format("cannot encode '{}': {}", path.string(), msg));
    }
    if (std::fflush(fp.get()) != 0) {
        throw IoError(fmt::format("cannot flush '{}'", path.string()));
    }
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoError(fmt::format("'{}' is not a readable directory", dir.string()));
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    if (ec) throw IoError(fmt::format("cannot list '{}': {}", dir.string(), ec.message()));
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace marsdust
