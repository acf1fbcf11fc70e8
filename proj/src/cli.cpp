#include "marsdust/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "marsdust/degrade.hpp"
#include "marsdust/error.hpp"
#include "marsdust/log.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/metrics.hpp"
#include "marsdust/parallel.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/restore.hpp"
#include "marsdust/train.hpp"

namespace marsdust::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
    std::uint64_t seed = 0;
    int jobs = 1;
    bool verbose = false;
};

struct EstimatePhiOptions {
    std::string patches;
    std::string out;
    int auto_select = -1;
};

struct SynthOptions {
    std::string clean;
    std::string phi;
    int maps = 7;
    std::string out;
    std::string manifest;
};

struct TrainOptions {
    std::string manifest;
    int patch = 64;
    int batch = 8;
    double lr = 1e-4;
    int epochs = 30;
    int width = 8;
    std::string out;
    std::string report;
};

struct RemoveOptions {
    std::string in;
    std::string method;
    std::string weights;
    std::string manifest;
    std::string out;
};

struct EvalOptions {
    std::string sets;
    std::string pairs;
    std::string out;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
}

Reflexivity read_phi(const fs::path& path) {
    const json j = read_json(path);
    try {
        Reflexivity phi{j.at("phi").get<std::vector<double>>()};
        if (phi.values.empty()) throw FormatError("empty phi");
        return phi;
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("'{}' lacks a numeric \"phi\" array: {}", path.string(), e.what()));
    }
}

// Heavy-dust patches from a directory (whole images) or a JSON-lines list.
// List lines are {"path": p} or {"path": p, "x0", "y0", "width", "height"}
// for manual regions; a pairs manifest line ({"dusty": p, ...}) names a
// dusty frame to auto-select tiles from.
std::vector<Image> collect_patches(const EstimatePhiOptions& opt) {
    std::vector<Image> manual;
    std::vector<Image> frames;
    if (fs::is_directory(opt.patches)) {
        for (const auto& p : list_png_files(opt.patches)) {
            (opt.auto_select > 0 ? frames : manual).push_back(load_image(p));
        }
    } else {
        std::ifstream in(opt.patches);
        if (!in) throw IoError(fmt::format("cannot read patch list '{}'", opt.patches));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw FormatError(fmt::format("{}:{}: {}", opt.patches, line_no, e.what()));
            }
            if (j.contains("dusty")) {
                frames.push_back(load_image(j.at("dusty").get<std::string>()));
            } else if (j.contains("path")) {
                Image img = load_image(j.at("path").get<std::string>());
                if (j.contains("x0")) {
                    const PatchRegion r{j.value("x0", 0), j.value("y0", 0), j.value("width", 0), j.value("height", 0)};
                    img = crop_patch(img, r);
                }
                manual.push_back(std::move(img));
            } else {
                throw FormatError(fmt::format("{}:{}: expected a \"path\" or \"dusty\" key", opt.patches, line_no));
            }
        }
    }
    if (!manual.empty()) return manual;
    const auto k = static_cast<std::size_t>(opt.auto_select > 0 ? opt.auto_select : 16);
    return select_dusty_tiles(frames, k);
}

int cmd_estimate_phi(const EstimatePhiOptions& opt) {
    const auto patches = collect_patches(opt);
    if (patches.empty()) throw EstimationError(fmt::format("no dusty patches found in '{}'", opt.patches));
    const auto est = estimate_reflexivity(patches);
    json j{{"phi", est.phi.values}, {"patches", est.patches_used}, {"skipped_pixels", est.skipped_pixels}};
    write_text(opt.out, j.dump(2) + "\n");
    log::info(fmt::format("phi from {} patches written to {}", est.patches_used, opt.out));
    return 0;
}

int cmd_synth(const SynthOptions& opt, const GlobalOptions& g) {
    if (opt.maps < 1) throw ValidationError(fmt::format("--maps must be >= 1, got {}", opt.maps));
    const auto phi = read_phi(opt.phi);
    PairGenerationOptions gen;
    gen.maps_per_image = opt.maps;
    gen.seed = g.seed;
    gen.jobs = g.jobs;
    const auto manifest = generate_pairs(opt.clean, phi, opt.out, gen);
    write_manifest(manifest, opt.manifest);
    log::info(fmt::format("{} pairs written to {}", manifest.records.size(), opt.manifest));
    return 0;
}

int cmd_train(const TrainOptions& opt, const GlobalOptions& g) {
    if (g.jobs != 1) throw ValidationError("train requires --jobs 1");
    nn::TrainConfig cfg;
    cfg.patch = opt.patch;
    cfg.batch = opt.batch;
    cfg.epochs = opt.epochs;
    cfg.seed = g.seed;
    cfg.optimizer.lr = opt.lr;
    nn::NetConfig net;
    net.base_width = opt.width;
    cfg.validate();
    net.validate();

    const auto manifest = read_manifest(opt.manifest);
    const auto report = nn::train(cfg, net, manifest, opt.out);
    const std::string report_path = opt.report.empty() ? opt.out + ".report.json" : opt.report;
    write_text(report_path, report.to_json() + "\n");
    return 0;
}

int cmd_remove(const RemoveOptions& opt, const GlobalOptions& g) {
    if (opt.method == "analytic-known" && opt.manifest.empty()) {
        throw ValidationError("--method analytic-known needs --manifest");
    }
    if (opt.method == "learned" && opt.weights.empty()) throw ValidationError("--method learned needs --weights");

    const auto inputs = list_png_files(opt.in);
    if (inputs.empty()) throw ValidationError(fmt::format("no PNG images in '{}'", opt.in));
    DatasetManifest manifest;
    if (!opt.manifest.empty()) manifest = read_manifest(opt.manifest);
    std::optional<LearnedModel> model;
    if (opt.method == "learned") model = LearnedModel::from_file(opt.weights);

    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", opt.out, ec.message()));

    parallel_for(inputs.size(), g.jobs, [&](std::size_t i) {
        const Image hazy = load_image(inputs[i]);
        RestoreMethod method = EstimatedParameters{};
        if (opt.method == "analytic-known") {
            method = KnownParameters::from_manifest(manifest, inputs[i], hazy.width(), hazy.height());
        } else if (opt.method == "learned") {
            method = *model;
        }
        save_image(remove_dust(hazy, method), fs::path(opt.out) / inputs[i].filename(), 8);
    });
    log::info(fmt::format("restored {} image(s) into {}", inputs.size(), opt.out));
    return 0;
}

std::vector<ImageSet> parse_sets(const std::string& spec) {
    std::vector<ImageSet> sets;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw ValidationError(fmt::format("--sets entry '{}' is not label=dir", item));
        }
        sets.push_back(ImageSet{item.substr(0, eq), {}});
        sets.back().images.push_back(item.substr(eq + 1));
    }
    if (sets.empty()) throw ValidationError("--sets is empty");
    return sets;
}

int cmd_eval(const EvalOptions& opt, const GlobalOptions& g) {
    auto sets = parse_sets(opt.sets);
    for (auto& set : sets) set.images = list_png_files(set.images.front());
    std::optional<DatasetManifest> pairs;
    if (!opt.pairs.empty()) pairs = read_manifest(opt.pairs);
    const auto report = corpus_report(sets, pairs ? &*pairs : nullptr, {}, g.jobs);
    write_text(opt.out, report.to_json() + "\n");
    std::cout << report.to_table();
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Martian dust-storm synthesis, removal and evaluation", "marsdust"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads for per-image stages")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--verbose", g.verbose, "Log progress to stderr");

    EstimatePhiOptions phi_opt;
    auto* phi_cmd = app.add_subcommand("estimate-phi", "Estimate dust reflexivity from heavy-dust patches");
    phi_cmd->add_option("--patches", phi_opt.patches, "Patch directory or JSON-lines patch list")->required();
    phi_cmd->add_option("--out", phi_opt.out, "Output phi.json")->required();
    phi_cmd->add_option("--auto-select", phi_opt.auto_select, "Pick this many dustiest 32 px tiles per run");

    SynthOptions synth_opt;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize dusty variants of clean images");
    synth_cmd->add_option("--clean", synth_opt.clean, "Directory of clean PNGs")->required();
    synth_cmd->add_option("--phi", synth_opt.phi, "Reflexivity JSON from estimate-phi")->required();
    synth_cmd->add_option("--maps", synth_opt.maps, "Dusty variants per clean image")->capture_default_str();
    synth_cmd->add_option("--out", synth_opt.out, "Output directory for dusty PNGs")->required();
    synth_cmd->add_option("--manifest", synth_opt.manifest, "Output JSON-lines manifest")->required();

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "Train the dust-removal network");
    train_cmd->add_option("--manifest", train_opt.manifest, "Pairs manifest")->required();
    train_cmd->add_option("--patch", train_opt.patch, "Crop size in pixels")->capture_default_str();
    train_cmd->add_option("--batch", train_opt.batch, "Batch size")->capture_default_str();
    train_cmd->add_option("--lr", train_opt.lr, "AdamW learning rate")->capture_default_str();
    train_cmd->add_option("--epochs", train_opt.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--width", train_opt.width, "Base channel width")->capture_default_str();
    train_cmd->add_option("--out", train_opt.out, "Output weights file")->required();
    train_cmd->add_option("--report", train_opt.report, "Training report JSON (default <out>.report.json)");

    RemoveOptions remove_opt;
    auto* remove_cmd = app.add_subcommand("remove", "Remove dust from a directory of images");
    remove_cmd->add_option("--in", remove_opt.in, "Directory of dusty PNGs")->required();
    remove_cmd->add_option("--method", remove_opt.method, "Restoration method")
        ->required()
        ->check(CLI::IsMember({"analytic-known", "analytic-est", "learned"}));
    remove_cmd->add_option("--weights", remove_opt.weights, "Weights file for --method learned");
    remove_cmd->add_option("--manifest", remove_opt.manifest, "Pairs manifest for --method analytic-known");
    remove_cmd->add_option("--out", remove_opt.out, "Output directory")->required();

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "Score image sets with the dust index");
    eval_cmd->add_option("--sets", eval_opt.sets, "label=dir,label=dir,...")->required();
    eval_cmd->add_option("--pairs", eval_opt.pairs, "Pairs manifest for PSNR/SSIM");
    eval_cmd->add_option("--out", eval_opt.out, "Output report JSON")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    log::set_level(g.verbose ? log::Level::debug : log::level_from_env());
    try {
        if (*phi_cmd) return cmd_estimate_phi(phi_opt);
        if (*synth_cmd) return cmd_synth(synth_opt, g);
        if (*train_cmd) return cmd_train(train_opt, g);
        if (*remove_cmd) return cmd_remove(remove_opt, g);
        if (*eval_cmd) return cmd_eval(eval_opt, g);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace marsdust::cli
