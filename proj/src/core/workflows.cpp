#include "core/workflows.hpp"

#include <algorithm>
#include <filesystem>

#include "core/encoder.hpp"
#include "core/image_io.hpp"
#include "core/mask_generator.hpp"
#include "core/prompt_bank.hpp"

namespace fs = std::filesystem;

namespace semples {

namespace {

constexpr int kGeneratorChannels = 8;

struct Session {
    ClassCatalog catalog;
    std::vector<LabeledImage> corpus;
    std::unique_ptr<DualEncoder> encoder;
};

Session open_session(const std::string& corpus_dir, const std::string& encoder_spec) {
    fs::path classes = fs::path(corpus_dir) / "classes.txt";
    if (!fs::exists(classes))
        throw DataError("corpus is missing " + classes.string());
    Session s{ClassCatalog::load(classes.string()), {}, make_encoder(encoder_spec)};
    s.corpus = load_corpus(corpus_dir, s.catalog);
    if (s.corpus.empty()) throw DataError("corpus at " + corpus_dir + " is empty");
    return s;
}

MaskGenerator load_generator(const std::string& path, const ClassCatalog& catalog) {
    if (!fs::exists(path))
        throw DataError("missing generator checkpoint '" + path + "' (run train-match first)");
    auto loaded = MaskGenerator::load(path);
    if (loaded.class_names != catalog.names)
        throw DataError("generator checkpoint classes do not match the corpus catalog");
    return std::move(loaded.generator);
}

PromptBank load_bank(const std::string& path, const ClassCatalog& catalog) {
    if (!fs::exists(path))
        throw DataError("missing prompt-bank checkpoint '" + path + "' (run train-prompts first)");
    PromptBank bank = PromptBank::load(path);
    if (bank.class_names() != catalog.names)
        throw DataError("prompt-bank classes do not match the corpus catalog");
    return bank;
}

std::function<void(int)> periodic_saver(int every, const std::string& dir, const char* tag,
                                        const std::function<void(const std::string&)>& save) {
    if (every <= 0) return nullptr;
    fs::create_directories(dir);
    return [every, dir, tag = std::string(tag), save](int step) {
        if (step % every) return;
        char name[64];
        std::snprintf(name, sizeof(name), "%s_step%06d.ckpt", tag.c_str(), step);
        save((fs::path(dir) / name).string());
    };
}

void export_cams_for(const MaskGenerator& gen, const std::vector<LabeledImage>& corpus,
                     const ClassCatalog& catalog, const std::string& out_dir) {
    fs::create_directories(out_dir);
    catalog.save((fs::path(out_dir) / "classes.txt").string());
    for (const auto& s : corpus) {
        Tensor cams = extract_cams(gen, s.pixels, s.labels);
        write_cam_container((fs::path(out_dir) / (s.id + ".semc")).string(), cams);
    }
}

}  // namespace

TrainPaths train_paths(const std::string& out_dir) {
    fs::path root(out_dir);
    TrainPaths p;
    p.generator_phase_a = (root / "generator_phaseA.ckpt").string();
    p.generator_final = (root / "generator_final.ckpt").string();
    p.bank = (root / "prompt_bank.ckpt").string();
    p.log_a = (root / "log_match.jsonl").string();
    p.log_b = (root / "log_prompt.jsonl").string();
    p.log_c = (root / "log_refine.jsonl").string();
    p.cams_dir = (root / "cams").string();
    p.checkpoints_dir = (root / "checkpoints").string();
    return p;
}

void workflow_train_match(const std::string& corpus_dir, const RunConfig& cfg,
                          const std::string& encoder_spec, int checkpoint_every,
                          const std::string& out_dir) {
    cfg.validate();
    Session s = open_session(corpus_dir, encoder_spec);
    fs::create_directories(out_dir);
    TrainPaths paths = train_paths(out_dir);
    MaskGenerator gen(s.catalog.size(), kGeneratorChannels, static_cast<std::uint64_t>(cfg.seed));
    PromptBank bank(s.catalog, cfg.prompt_len, s.encoder->token_dim(),
                    static_cast<std::uint64_t>(cfg.seed));
    std::vector<StepRecord> log;
    if (cfg.enabled_losses.match) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "match",
                                    [&](const std::string& p) {
                                        gen.save(p, s.catalog.names, cfg.to_text());
                                    });
        log = run_phase(make_phase_plan(Phase::A_match, cfg), s.corpus, gen, bank, *s.encoder,
                        s.catalog, cfg, saver);
    }
    gen.save(paths.generator_phase_a, s.catalog.names, cfg.to_text());
    write_loss_log(paths.log_a, log, cfg);
}

void workflow_train_prompts(const std::string& corpus_dir, const RunConfig& cfg,
                            const std::string& encoder_spec, const std::string& generator_ckpt,
                            int checkpoint_every, const std::string& out_dir) {
    cfg.validate();
    Session s = open_session(corpus_dir, encoder_spec);
    fs::create_directories(out_dir);
    TrainPaths paths = train_paths(out_dir);
    MaskGenerator gen = load_generator(generator_ckpt, s.catalog);
    PromptBank bank(s.catalog, cfg.prompt_len, s.encoder->token_dim(),
                    static_cast<std::uint64_t>(cfg.seed));
    std::vector<StepRecord> log;
    if (cfg.enabled_losses.prompt_I || cfg.enabled_losses.prompt_T) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "prompt",
                                    [&](const std::string& p) { bank.save(p); });
        log = run_phase(make_phase_plan(Phase::B_prompt, cfg), s.corpus, gen, bank, *s.encoder,
                        s.catalog, cfg, saver);
    }
    bank.save(paths.bank);
    write_loss_log(paths.log_b, log, cfg);
}

void workflow_train_refine(const std::string& corpus_dir, const RunConfig& cfg,
                           const std::string& encoder_spec, const std::string& generator_ckpt,
                           const std::string& bank_ckpt, int checkpoint_every,
                           const std::string& out_dir) {
    cfg.validate();
    Session s = open_session(corpus_dir, encoder_spec);
    fs::create_directories(out_dir);
    TrainPaths paths = train_paths(out_dir);
    MaskGenerator gen = load_generator(generator_ckpt, s.catalog);
    PromptBank bank = load_bank(bank_ckpt, s.catalog);
    std::vector<StepRecord> log;
    if (cfg.enabled_losses.refine) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "refine",
                                    [&](const std::string& p) {
                                        gen.save(p, s.catalog.names, cfg.to_text());
                                    });
        log = run_phase(make_phase_plan(Phase::C_refine, cfg), s.corpus, gen, bank, *s.encoder,
                        s.catalog, cfg, saver);
    }
    gen.save(paths.generator_final, s.catalog.names, cfg.to_text());
    write_loss_log(paths.log_c, log, cfg);
}

void workflow_train_all(const std::string& corpus_dir, const RunConfig& cfg,
                        const std::string& encoder_spec, int checkpoint_every,
                        const std::string& out_dir) {
    cfg.validate();
    Session s = open_session(corpus_dir, encoder_spec);
    fs::create_directories(out_dir);
    TrainPaths paths = train_paths(out_dir);
    MaskGenerator gen(s.catalog.size(), kGeneratorChannels, static_cast<std::uint64_t>(cfg.seed));
    PromptBank bank(s.catalog, cfg.prompt_len, s.encoder->token_dim(),
                    static_cast<std::uint64_t>(cfg.seed));
    const EnabledLosses& e = cfg.enabled_losses;

    std::vector<StepRecord> log_a, log_b, log_c;
    if (e.match) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "match",
                                    [&](const std::string& p) {
                                        gen.save(p, s.catalog.names, cfg.to_text());
                                    });
        log_a = run_phase(make_phase_plan(Phase::A_match, cfg), s.corpus, gen, bank, *s.encoder,
                          s.catalog, cfg, saver);
    }
    gen.save(paths.generator_phase_a, s.catalog.names, cfg.to_text());
    write_loss_log(paths.log_a, log_a, cfg);

    if (e.prompt_I || e.prompt_T) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "prompt",
                                    [&](const std::string& p) { bank.save(p); });
        log_b = run_phase(make_phase_plan(Phase::B_prompt, cfg), s.corpus, gen, bank, *s.encoder,
                          s.catalog, cfg, saver);
    }
    bank.save(paths.bank);
    write_loss_log(paths.log_b, log_b, cfg);

    if (e.refine) {
        auto saver = periodic_saver(checkpoint_every, paths.checkpoints_dir, "refine",
                                    [&](const std::string& p) {
                                        gen.save(p, s.catalog.names, cfg.to_text());
                                    });
        log_c = run_phase(make_phase_plan(Phase::C_refine, cfg), s.corpus, gen, bank, *s.encoder,
                          s.catalog, cfg, saver);
    }
    gen.save(paths.generator_final, s.catalog.names, cfg.to_text());
    write_loss_log(paths.log_c, log_c, cfg);

    export_cams_for(gen, s.corpus, s.catalog, paths.cams_dir);
}

void workflow_export_cams(const std::string& corpus_dir, const std::string& generator_ckpt,
                          const std::string& out_dir) {
    fs::path classes = fs::path(corpus_dir) / "classes.txt";
    if (!fs::exists(classes)) throw DataError("corpus is missing " + classes.string());
    ClassCatalog catalog = ClassCatalog::load(classes.string());
    MaskGenerator gen = load_generator(generator_ckpt, catalog);
    auto corpus = load_corpus(corpus_dir, catalog);
    export_cams_for(gen, corpus, catalog, out_dir);
}

IoUReport workflow_eval(const std::string& cams_dir, const std::string& truth_dir,
                        double bg_threshold, const std::string& report_path,
                        const std::string& masks_out_dir, const std::string& classes_path) {
    if (!(bg_threshold >= 0.0 && bg_threshold <= 1.0))
        throw ConfigError("background threshold must be in [0,1]");
    if (!fs::is_directory(cams_dir)) throw DataError("not a directory: " + cams_dir);
    if (!fs::is_directory(truth_dir)) throw DataError("not a directory: " + truth_dir);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(cams_dir))
        if (entry.path().extension() == ".semc") ids.push_back(entry.path().stem().string());
    if (ids.empty()) throw DataError("no .semc CAM containers in " + cams_dir);
    std::sort(ids.begin(), ids.end());

    if (!masks_out_dir.empty()) fs::create_directories(masks_out_dir);
    std::vector<ClassMap> preds, truths;
    int num_classes = 0;
    for (const auto& id : ids) {
        Tensor cams = read_cam_container((fs::path(cams_dir) / (id + ".semc")).string());
        num_classes = std::max(num_classes, cams.dim(0));
        fs::path truth = fs::path(truth_dir) / (id + ".png");
        if (!fs::exists(truth)) throw DataError("missing truth map for sample '" + id + "'");
        ClassMap pred = cams_to_pseudo_mask(cams, bg_threshold, id);
        if (!masks_out_dir.empty())
            write_class_map_png((fs::path(masks_out_dir) / (id + ".png")).string(), pred);
        preds.push_back(std::move(pred));
        truths.push_back(read_class_map_png(truth.string(), id));
    }
    IoUReport rep = compute_miou(preds, truths);

    std::string classes = classes_path;
    if (classes.empty()) {
        fs::path guess = fs::path(cams_dir) / "classes.txt";
        if (fs::exists(guess)) classes = guess.string();
    }
    std::vector<std::string> names;
    if (!classes.empty()) {
        names = ClassCatalog::load(classes).names;
    } else {
        for (int k = 1; k < std::max<int>(num_classes + 1, static_cast<int>(rep.per_class.size()));
             ++k)
            names.push_back("class_" + std::to_string(k));
    }
    while (static_cast<int>(names.size()) + 1 < static_cast<int>(rep.per_class.size()))
        names.push_back("class_" + std::to_string(names.size() + 1));
    write_iou_report_json(report_path, rep, ClassCatalog(names));
    return rep;
}

void workflow_visualize(const std::string& bank_ckpt, const std::string& encoder_spec,
                        const std::string& image_png, const std::string& class_name,
                        const std::string& out_png) {
    PromptBank bank = PromptBank::load(bank_ckpt);
    auto enc = make_encoder(encoder_spec);
    int k = -1;
    for (int i = 0; i < bank.num_classes(); ++i)
        if (bank.class_names()[static_cast<std::size_t>(i)] == class_name) k = i;
    if (k < 0) throw DataError("class '" + class_name + "' not present in the prompt bank");
    Tensor img = read_image_png(image_png);
    visualize_prompt_regions(bank, *enc, img, k, out_png);
}

}  // namespace semples
