#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/encoder.hpp"
#include "core/mask_generator.hpp"
#include "core/prompt_bank.hpp"

namespace semples {

/// Hard per-pixel class map; values in {0..K}, 0 = background, catalog
/// class k stored as k+1.
struct ClassMap {
    std::string id;
    int h = 0, w = 0;
    std::vector<std::uint8_t> values;
};

struct IoUReport {
    std::vector<double> per_class;  // K+1 entries, [0] = background
    std::vector<bool> defined;      // false when the class is absent from both sides
    double miou = 0.0;
};

/// CAMs for one image: generator masks gated to the present classes and
/// max-normalized per channel (channels that are all zero stay zero).
Tensor extract_cams(const MaskGenerator& gen, const Tensor& img, const std::vector<int>& labels);

/// argmax over channels where the max activation reaches bg_threshold,
/// else background; ties break to the lowest class index.
ClassMap cams_to_pseudo_mask(const Tensor& cams, double bg_threshold, const std::string& id = "");

/// Dataset-level mIoU: intersections/unions accumulated over all samples
/// before division. Classes absent from both prediction and truth are
/// excluded from the mean.
IoUReport compute_miou(const std::vector<ClassMap>& preds, const std::vector<ClassMap>& truths);

void write_iou_report_json(const std::string& path, const IoUReport& report,
                           const ClassCatalog& catalog);

// "SEMC" per-image CAM container: header {magic, version, K, H, W}, then
// K*H*W float32 little-endian row-major.
void write_cam_container(const std::string& path, const Tensor& cams);
Tensor read_cam_container(const std::string& path);

// Class maps travel as 8-bit single-channel PNGs (value = class index).
void write_class_map_png(const std::string& path, const ClassMap& map);
ClassMap read_class_map_png(const std::string& path, const std::string& id);

/// Per-patch cosine similarity between u^b_k and the image patches,
/// min-max normalized (a constant map renders mid-scale), bilinear-upsampled
/// to image size. Returns the {H,W} heatmap; when out_png is non-empty also
/// writes the colormapped PNG plus a raw float sidecar (out_png + ".semh")
/// holding the pre-normalization patch-grid similarities.
Tensor visualize_prompt_regions(const PromptBank& bank, const DualEncoder& enc, const Tensor& img,
                                int k, const std::string& out_png = "");

}  // namespace semples
