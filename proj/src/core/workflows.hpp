#pragma once

#include <string>

#include "core/cam_pipeline.hpp"
#include "core/corpus.hpp"
#include "core/trainer.hpp"

namespace semples {

/// Fixed artifact layout under a training output directory.
struct TrainPaths {
    std::string generator_phase_a;  // generator after Segment-Label Matching
    std::string generator_final;    // generator after refinement
    std::string bank;               // learned background prompts
    std::string log_a, log_b, log_c;
    std::string cams_dir;
    std::string checkpoints_dir;
};
TrainPaths train_paths(const std::string& out_dir);

void workflow_train_match(const std::string& corpus_dir, const RunConfig& cfg,
                          const std::string& encoder_spec, int checkpoint_every,
                          const std::string& out_dir);
void workflow_train_prompts(const std::string& corpus_dir, const RunConfig& cfg,
                            const std::string& encoder_spec, const std::string& generator_ckpt,
                            int checkpoint_every, const std::string& out_dir);
void workflow_train_refine(const std::string& corpus_dir, const RunConfig& cfg,
                           const std::string& encoder_spec, const std::string& generator_ckpt,
                           const std::string& bank_ckpt, int checkpoint_every,
                           const std::string& out_dir);
void workflow_train_all(const std::string& corpus_dir, const RunConfig& cfg,
                        const std::string& encoder_spec, int checkpoint_every,
                        const std::string& out_dir);

void workflow_export_cams(const std::string& corpus_dir, const std::string& generator_ckpt,
                          const std::string& out_dir);

/// classes_path may be empty: then <cams_dir>/classes.txt is tried, falling
/// back to generic class names.
IoUReport workflow_eval(const std::string& cams_dir, const std::string& truth_dir,
                        double bg_threshold, const std::string& report_path,
                        const std::string& masks_out_dir, const std::string& classes_path = "");

void workflow_visualize(const std::string& bank_ckpt, const std::string& encoder_spec,
                        const std::string& image_png, const std::string& class_name,
                        const std::string& out_png);

}  // namespace semples
