// Writes a procedural desk corpus: clean terrain frames and, optionally,
// heavily dusted frames to feed `marsdust estimate-phi`.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "marsdust/desk_corpus.hpp"
#include "marsdust/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Procedural clean/dusty desk corpus"};
    std::string out;
    int count = 10;
    int size = 128;
    int dusty = 0;
    std::uint64_t seed = 0;
    app.add_option("--out", out, "Output directory (clean frames go to <out>/clean)")->required();
    app.add_option("--count", count, "Number of clean frames")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--size", size, "Frame edge length in pixels")->check(CLI::Range(8, 8192))->capture_default_str();
    app.add_option("--realistic-dusty", dusty, "Heavily dusted frames written to <out>/dusty_real")
        ->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const std::filesystem::path root(out);
        marsdust::write_clean_corpus(root / "clean", count, size, seed);
        if (dusty > 0) marsdust::write_realistic_dusty_corpus(root / "dusty_real", dusty, size, seed);
    } catch (const marsdust::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
