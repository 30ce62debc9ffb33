#pragma once

#include "core/autodiff.hpp"

namespace semples {

/// Scalar loss values for one optimizer step, with the weights applied.
struct LossReport {
    double match = 0.0;
    double prompt_I = 0.0;
    double prompt_T = 0.0;
    double prompt_total = 0.0;
    double refine = 0.0;
    double total = 0.0;
    double lambda_b = 0.0;
    double lambda_T = 0.0;
    double lambda_refine = 0.0;
};

/// cos(a,b) clamped below to eps. Result is in [eps, 1]; gradient uses the
/// pass-through branch at the clamp boundary.
Var clamped_cos(const Var& a, const Var& b, double eps);

/// -log(sim(v_f,u_f)) - lambda_b * log(1 - sim(v_b,u_f)); both the cosine and
/// the 1-cosine complement are clamped to >= eps so the logs stay finite.
Var loss_match(const Var& v_f, const Var& v_b, const Var& u_f, double lambda_b, double eps);

struct PromptLoss {
    Var prompt_I;  // -log(sim(u_b, v_b))
    Var prompt_T;  // -log(1 - sim(u_b, u_f))
    Var total;     // prompt_I + lambda_T * prompt_T
};
PromptLoss loss_prompt(const Var& u_b, const Var& v_b, const Var& u_f, double lambda_T, double eps);

/// -log(1 - sim(v_f, u_b))
Var loss_refine(const Var& v_f, const Var& u_b, double eps);

/// match + lambda * refine
Var loss_total(const Var& match, const Var& refine, double lambda);

}  // namespace semples
