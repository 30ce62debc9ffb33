#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/encoder.hpp"
#include "core/mask_generator.hpp"
#include "core/objectives.hpp"
#include "core/prompt_bank.hpp"

namespace semples {

enum class Phase { A_match, B_prompt, C_refine };
const char* phase_name(Phase p);

/// Per-phase plan: what trains and which losses apply.
///   A trains the mask generator with L_match;
///   B trains the prompt bank with L_prompt;
///   C trains the mask generator with L_match + lambda * L_refine.
/// Encoders train in no phase.
struct PhasePlan {
    Phase phase;
    EnabledLosses losses;
    int epochs;
    double lr;
};
PhasePlan make_phase_plan(Phase p, const RunConfig& cfg);

struct StepRecord {
    int step = 0;  // 1-based within the phase
    Phase phase = Phase::A_match;
    LossReport report;
};

/// Decoupled-weight-decay adaptive-moment optimizer.
class AdamW {
public:
    explicit AdamW(double weight_decay = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                   double eps = 1e-8);
    void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads, double lr);

private:
    double wd_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

/// Cosine decay over the phase: lr * 0.5 * (1 + cos(pi * t / total)).
double cosine_lr(double base_lr, int step_index, int total_steps);

/// Runs one phase. Only the phase's declared trainable component changes;
/// returns one StepRecord per optimizer step. `on_step` (optional) fires
/// after each step with the 1-based step index.
std::vector<StepRecord> run_phase(const PhasePlan& plan, const std::vector<LabeledImage>& corpus,
                                  MaskGenerator& gen, PromptBank& bank, const DualEncoder& enc,
                                  const ClassCatalog& catalog, const RunConfig& cfg,
                                  const std::function<void(int)>& on_step = nullptr);

struct PipelineLogs {
    std::vector<StepRecord> phase_a, phase_b, phase_c;
};

/// A then B then C, honoring the enabled-loss flags: B runs only if a prompt
/// loss is enabled, C only if the refinement loss is enabled.
PipelineLogs run_pipeline(const std::vector<LabeledImage>& corpus, MaskGenerator& gen,
                          PromptBank& bank, const DualEncoder& enc, const ClassCatalog& catalog,
                          const RunConfig& cfg);

/// JSON-lines log: one meta object (the only line carrying a timestamp),
/// then one object per optimizer step.
void write_loss_log(const std::string& path, const std::vector<StepRecord>& records,
                    const RunConfig& cfg);

}  // namespace semples
