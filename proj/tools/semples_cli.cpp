// Command-line front end; talks to the engine exclusively through the
// public C API in semples/semples.h.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semples/semples.h"

namespace {

struct ConfigDeleter {
    void operator()(semples_config* c) const { semples_config_free(c); }
};
using ConfigPtr = std::unique_ptr<semples_config, ConfigDeleter>;

int fail(const char* what, int rc) {
    std::fprintf(stderr, "error: %s: %s\n", what, semples_last_error());
    return rc;
}

/// Builds the effective config: dataset defaults, optional config file,
/// then --set overrides, then the SEMPLES_SEED fallback when no explicit
/// seed was given.
ConfigPtr build_config(const std::string& dataset, const std::string& config_file,
                       const std::vector<std::string>& overrides, int& rc) {
    ConfigPtr cfg(config_file.empty()
                      ? semples_config_create(dataset.c_str())
                      : semples_config_load(dataset.c_str(), config_file.c_str()));
    if (!cfg) {
        rc = fail("loading config", SEMPLES_ERR_CONFIG);
        return nullptr;
    }
    bool seed_overridden = false;
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            rc = SEMPLES_ERR_CONFIG;
            return nullptr;
        }
        std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "seed") seed_overridden = true;
        if (int s = semples_config_set(cfg.get(), key.c_str(), value.c_str())) {
            rc = fail("applying --set", s);
            return nullptr;
        }
    }
    if (!seed_overridden) {
        if (const char* env = std::getenv("SEMPLES_SEED")) {
            if (int s = semples_config_set(cfg.get(), "seed", env)) {
                rc = fail("applying SEMPLES_SEED", s);
                return nullptr;
            }
        }
    }
    rc = SEMPLES_OK;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SemPLeS: prompt-guided weakly-supervised segmentation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(semples_version()));

    std::string dataset = "toy", config_file, encoder = "toy";
    std::vector<std::string> overrides;
    std::string corpus_dir, out_dir, generator_ckpt, bank_ckpt;
    std::string cams_dir, truth_dir, report_path, masks_out_dir;
    std::string image_png, class_name, out_png;
    int checkpoint_every = 0, toy_n = 0, toy_size = 0;
    double threshold = 0.4;
    std::uint64_t toy_seed = 1;

    auto add_train_common = [&](CLI::App* cmd) {
        cmd->add_option("corpus", corpus_dir, "corpus directory")->required();
        cmd->add_option("out", out_dir, "output directory")->required();
        cmd->add_option("--dataset", dataset, "config preset: voc, coco or toy");
        cmd->add_option("--config", config_file, "key=value config file");
        cmd->add_option("--set", overrides, "config override, key=value (repeatable)");
        cmd->add_option("--encoder", encoder, "encoder spec: 'toy' or 'file:<path>'");
        cmd->add_option("--checkpoint-every", checkpoint_every,
                        "also save the trainable component every N steps");
    };

    CLI::App* make_toy = app.add_subcommand("make-toy", "write the synthetic corpus");
    make_toy->add_option("out", out_dir, "output directory")->required();
    make_toy->add_option("--seed", toy_seed, "generation seed");
    make_toy->add_option("--images", toy_n, "image count");
    make_toy->add_option("--size", toy_size, "square image side");

    CLI::App* tmatch = app.add_subcommand("train-match", "phase A: segment-label matching");
    add_train_common(tmatch);

    CLI::App* tprompt = app.add_subcommand("train-prompts", "phase B: learn background prompts");
    add_train_common(tprompt);
    tprompt->add_option("--generator", generator_ckpt, "phase-A generator checkpoint")->required();

    CLI::App* trefine = app.add_subcommand("train-refine", "phase C: semantic refinement");
    add_train_common(trefine);
    trefine->add_option("--generator", generator_ckpt, "phase-A generator checkpoint")->required();
    trefine->add_option("--bank", bank_ckpt, "prompt-bank checkpoint")->required();

    CLI::App* tall = app.add_subcommand("train-all", "all phases, then CAM export");
    add_train_common(tall);

    CLI::App* exp = app.add_subcommand("export-cams", "write CAM containers for a corpus");
    exp->add_option("corpus", corpus_dir, "corpus directory")->required();
    exp->add_option("out", out_dir, "output directory")->required();
    exp->add_option("--generator", generator_ckpt, "generator checkpoint")->required();

    CLI::App* ev = app.add_subcommand("eval", "pseudo-masks + mIoU against truth maps");
    ev->add_option("cams", cams_dir, "directory of .semc containers")->required();
    ev->add_option("truth", truth_dir, "directory of truth class-map PNGs")->required();
    ev->add_option("report", report_path, "output JSON report path")->required();
    ev->add_option("--threshold", threshold, "background threshold in [0,1]");
    ev->add_option("--masks-out", masks_out_dir, "also write pseudo-mask PNGs here");

    CLI::App* vis = app.add_subcommand("visualize", "prompt-to-patch similarity heatmap");
    vis->add_option("bank", bank_ckpt, "prompt-bank checkpoint")->required();
    vis->add_option("image", image_png, "input image PNG")->required();
    vis->add_option("class", class_name, "class name")->required();
    vis->add_option("out", out_png, "output heatmap PNG")->required();
    vis->add_option("--encoder", encoder, "encoder spec: 'toy' or 'file:<path>'");

    CLI11_PARSE(app, argc, argv);

    if (make_toy->parsed()) {
        if (int s = semples_make_toy_corpus(out_dir.c_str(), toy_seed, toy_n, toy_size))
            return fail("make-toy", s);
        std::fprintf(stderr, "wrote toy corpus to %s\n", out_dir.c_str());
        return 0;
    }
    if (exp->parsed()) {
        if (int s = semples_export_cams(corpus_dir.c_str(), generator_ckpt.c_str(),
                                        out_dir.c_str()))
            return fail("export-cams", s);
        std::fprintf(stderr, "wrote CAM containers to %s\n", out_dir.c_str());
        return 0;
    }
    if (ev->parsed()) {
        if (int s = semples_eval(cams_dir.c_str(), truth_dir.c_str(), threshold,
                                 report_path.c_str(),
                                 masks_out_dir.empty() ? nullptr : masks_out_dir.c_str()))
            return fail("eval", s);
        std::fprintf(stderr, "wrote IoU report to %s\n", report_path.c_str());
        return 0;
    }
    if (vis->parsed()) {
        if (int s = semples_visualize(bank_ckpt.c_str(), encoder.c_str(), image_png.c_str(),
                                      class_name.c_str(), out_png.c_str()))
            return fail("visualize", s);
        std::fprintf(stderr, "wrote heatmap to %s\n", out_png.c_str());
        return 0;
    }

    int rc = 0;
    ConfigPtr cfg = build_config(dataset, config_file, overrides, rc);
    if (!cfg) return rc;

    int s = 0;
    if (tmatch->parsed())
        s = semples_train_match(corpus_dir.c_str(), cfg.get(), encoder.c_str(), checkpoint_every,
                                out_dir.c_str());
    else if (tprompt->parsed())
        s = semples_train_prompts(corpus_dir.c_str(), cfg.get(), encoder.c_str(),
                                  generator_ckpt.c_str(), checkpoint_every, out_dir.c_str());
    else if (trefine->parsed())
        s = semples_train_refine(corpus_dir.c_str(), cfg.get(), encoder.c_str(),
                                 generator_ckpt.c_str(), bank_ckpt.c_str(), checkpoint_every,
                                 out_dir.c_str());
    else if (tall->parsed())
        s = semples_train_all(corpus_dir.c_str(), cfg.get(), encoder.c_str(), checkpoint_every,
                              out_dir.c_str());
    if (s) return fail("training", s);
    std::fprintf(stderr, "done; artifacts in %s\n", out_dir.c_str());
    return 0;
}
