#include "semples/semples.h"

#include <cstring>
#include <functional>
#include <string>

#include "core/corpus.hpp"
#include "core/tensor.hpp"
#include "core/toy_corpus.hpp"
#include "core/workflows.hpp"

namespace {

thread_local std::string g_last_error;

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        g_last_error.clear();
        return SEMPLES_OK;
    } catch (const semples::ConfigError& e) {
        g_last_error = e.what();
        return SEMPLES_ERR_CONFIG;
    } catch (const semples::DataError& e) {
        g_last_error = e.what();
        return SEMPLES_ERR_DATA;
    } catch (const semples::NumericError& e) {
        g_last_error = e.what();
        return SEMPLES_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SEMPLES_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SEMPLES_ERR_INTERNAL;
    }
}

std::string str_or(const char* s, const char* fallback) { return s ? s : fallback; }

const semples::RunConfig& as_config(const semples_config* cfg) {
    return *reinterpret_cast<const semples::RunConfig*>(cfg);
}

}  // namespace

extern "C" {

const char* semples_version(void) { return "1.0.0"; }

const char* semples_last_error(void) { return g_last_error.c_str(); }

semples_config* semples_config_create(const char* dataset_tag) {
    semples::RunConfig* out = nullptr;
    int rc = run_guarded([&] {
        out = new semples::RunConfig(semples::default_config(str_or(dataset_tag, "toy")));
    });
    return rc == SEMPLES_OK ? reinterpret_cast<semples_config*>(out) : nullptr;
}

semples_config* semples_config_load(const char* base_tag, const char* path) {
    semples::RunConfig* out = nullptr;
    int rc = run_guarded([&] {
        if (!path) throw semples::ConfigError("config path is null");
        auto cfg = semples::apply_config_file(semples::default_config(str_or(base_tag, "toy")), path);
        out = new semples::RunConfig(cfg);
    });
    return rc == SEMPLES_OK ? reinterpret_cast<semples_config*>(out) : nullptr;
}

int semples_config_set(semples_config* cfg, const char* key, const char* value) {
    return run_guarded([&] {
        if (!cfg || !key || !value) throw semples::ConfigError("null argument to config_set");
        reinterpret_cast<semples::RunConfig*>(cfg)->set(key, value);
    });
}

int semples_config_get(const semples_config* cfg, const char* key, char* buf, size_t buflen) {
    return run_guarded([&] {
        if (!cfg || !key || !buf) throw semples::ConfigError("null argument to config_get");
        std::string v = as_config(cfg).get(key);
        if (v.size() + 1 > buflen)
            throw semples::ConfigError("config_get buffer too small for value of '" +
                                       std::string(key) + "'");
        std::memcpy(buf, v.c_str(), v.size() + 1);
    });
}

void semples_config_free(semples_config* cfg) {
    delete reinterpret_cast<semples::RunConfig*>(cfg);
}

int semples_make_toy_corpus(const char* out_dir, uint64_t seed, int n_images, int image_size) {
    return run_guarded([&] {
        if (!out_dir) throw semples::ConfigError("out_dir is null");
        semples::ToyCorpusSpec spec;
        if (n_images > 0) spec.n = n_images;
        if (image_size > 0) spec.size = image_size;
        semples::make_toy_corpus(out_dir, seed, spec);
    });
}

int semples_train_match(const char* corpus_dir, const semples_config* cfg,
                        const char* encoder_spec, int checkpoint_every, const char* out_dir) {
    return run_guarded([&] {
        if (!corpus_dir || !cfg || !out_dir)
            throw semples::ConfigError("null argument to train_match");
        semples::workflow_train_match(corpus_dir, as_config(cfg), str_or(encoder_spec, "toy"),
                                      checkpoint_every, out_dir);
    });
}

int semples_train_prompts(const char* corpus_dir, const semples_config* cfg,
                          const char* encoder_spec, const char* generator_ckpt,
                          int checkpoint_every, const char* out_dir) {
    return run_guarded([&] {
        if (!corpus_dir || !cfg || !generator_ckpt || !out_dir)
            throw semples::ConfigError("null argument to train_prompts");
        semples::workflow_train_prompts(corpus_dir, as_config(cfg), str_or(encoder_spec, "toy"),
                                        generator_ckpt, checkpoint_every, out_dir);
    });
}

int semples_train_refine(const char* corpus_dir, const semples_config* cfg,
                         const char* encoder_spec, const char* generator_ckpt,
                         const char* bank_ckpt, int checkpoint_every, const char* out_dir) {
    return run_guarded([&] {
        if (!corpus_dir || !cfg || !generator_ckpt || !bank_ckpt || !out_dir)
            throw semples::ConfigError("null argument to train_refine");
        semples::workflow_train_refine(corpus_dir, as_config(cfg), str_or(encoder_spec, "toy"),
                                       generator_ckpt, bank_ckpt, checkpoint_every, out_dir);
    });
}

int semples_train_all(const char* corpus_dir, const semples_config* cfg, const char* encoder_spec,
                      int checkpoint_every, const char* out_dir) {
    return run_guarded([&] {
        if (!corpus_dir || !cfg || !out_dir)
            throw semples::ConfigError("null argument to train_all");
        semples::workflow_train_all(corpus_dir, as_config(cfg), str_or(encoder_spec, "toy"),
                                    checkpoint_every, out_dir);
    });
}

int semples_export_cams(const char* corpus_dir, const char* generator_ckpt, const char* out_dir) {
    return run_guarded([&] {
        if (!corpus_dir || !generator_ckpt || !out_dir)
            throw semples::ConfigError("null argument to export_cams");
        semples::workflow_export_cams(corpus_dir, generator_ckpt, out_dir);
    });
}

int semples_eval(const char* cams_dir, const char* truth_dir, double bg_threshold,
                 const char* report_path, const char* masks_out_dir) {
    return run_guarded([&] {
        if (!cams_dir || !truth_dir || !report_path)
            throw semples::ConfigError("null argument to eval");
        semples::workflow_eval(cams_dir, truth_dir, bg_threshold, report_path,
                               str_or(masks_out_dir, ""));
    });
}

int semples_visualize(const char* bank_ckpt, const char* encoder_spec, const char* image_png,
                      const char* class_name, const char* out_png) {
    return run_guarded([&] {
        if (!bank_ckpt || !image_png || !class_name || !out_png)
            throw semples::ConfigError("null argument to visualize");
        semples::workflow_visualize(bank_ckpt, str_or(encoder_spec, "toy"), image_png, class_name,
                                    out_png);
    });
}

}  // extern "C"
