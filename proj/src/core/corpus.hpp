#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace semples {

/// An RGB image ({3,H,W}, values in [0,1]) plus a multi-hot label vector.
struct LabeledImage {
    std::string id;
    Tensor pixels;
    std::vector<int> labels;  // 0/1 per catalog class

    void validate(int num_classes, bool require_present = true) const;
    std::vector<int> present_classes() const;
};

struct ClassCatalog {
    std::vector<std::string> names;
    std::string prompt_template = "a photo of {}";

    explicit ClassCatalog(std::vector<std::string> n, std::string tmpl = "a photo of {}");
    int size() const { return static_cast<int>(names.size()); }
    int index_of(const std::string& name) const;  // -1 if absent
    /// Template filled with names[k] ("a photo of cat").
    std::string prompt_for(int k) const;
    std::uint64_t hash() const;

    static ClassCatalog load(const std::string& classes_txt_path);
    void save(const std::string& classes_txt_path) const;
};

struct EnabledLosses {
    bool match = true;
    bool prompt_I = true;
    bool prompt_T = true;
    bool refine = true;
};

struct RunConfig {
    double lambda_b = 2.4;
    double lambda_T = 0.02;
    double lambda_refine = 0.05;
    int prompt_len = 30;
    int batch_size = 64;
    double lr_phaseA = 5e-4;
    double lr_phaseB = 5e-4;
    double lr_phaseC = 5e-4;
    int epochs = 60;
    double clamp_eps = 1e-4;
    std::int64_t seed = 0;
    EnabledLosses enabled_losses;

    void validate() const;
    void set(const std::string& key, const std::string& value);  // ConfigError on unknown key
    std::string get(const std::string& key) const;
    std::string to_text() const;  // key=value lines, round-trips through apply_file
};

/// Dataset presets: "voc", "coco", or the desk-scale "toy".
RunConfig default_config(const std::string& dataset_tag);

/// Parses a flat key=value config file on top of `base`.
RunConfig apply_config_file(RunConfig base, const std::string& path);

/// Loads `root/images/<id>.png` for every row of `root/labels.tsv`
/// (id<TAB>comma-separated class names), ordered by id.
std::vector<LabeledImage> load_corpus(const std::string& root, const ClassCatalog& catalog);

/// Writes the corpus in the same layout (round-trip counterpart of load_corpus).
void emit_corpus(const std::string& root, const ClassCatalog& catalog,
                 const std::vector<LabeledImage>& samples);

}  // namespace semples
