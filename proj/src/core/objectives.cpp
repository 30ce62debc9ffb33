#include "core/objectives.hpp"

#include <cmath>

namespace semples {

namespace {

void check_embedding(const Var& v, const char* name) {
    if (!v->val.finite()) throw NumericError(std::string("loss input ") + name + " is non-finite");
    double n2 = 0.0;
    for (double x : v->val.v) n2 += x * x;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-3)
        throw NumericError(std::string("loss input ") + name + " is not unit-norm");
}

Var neg_log(const Var& x) { return scale(log_op(x), -1.0); }

/// -log(1 - sim), with the complement clamped to >= eps.
Var repel_term(const Var& a, const Var& b, double eps) {
    return neg_log(clamp_min(one_minus(clamped_cos(a, b, eps)), eps));
}

}  // namespace

Var clamped_cos(const Var& a, const Var& b, double eps) {
    if (!a->val.finite() || !b->val.finite()) throw NumericError("clamped_cos: non-finite input");
    return clamp_min(cosine(a, b), eps);
}

Var loss_match(const Var& v_f, const Var& v_b, const Var& u_f, double lambda_b, double eps) {
    check_embedding(v_f, "v_f");
    check_embedding(v_b, "v_b");
    check_embedding(u_f, "u_f");
    Var attract = neg_log(clamped_cos(v_f, u_f, eps));
    return add(attract, scale(repel_term(v_b, u_f, eps), lambda_b));
}

PromptLoss loss_prompt(const Var& u_b, const Var& v_b, const Var& u_f, double lambda_T, double eps) {
    check_embedding(u_b, "u_b");
    check_embedding(v_b, "v_b");
    check_embedding(u_f, "u_f");
    PromptLoss out;
    out.prompt_I = neg_log(clamped_cos(u_b, v_b, eps));
    out.prompt_T = repel_term(u_b, u_f, eps);
    out.total = add(out.prompt_I, scale(out.prompt_T, lambda_T));
    return out;
}

Var loss_refine(const Var& v_f, const Var& u_b, double eps) {
    check_embedding(v_f, "v_f");
    check_embedding(u_b, "u_b");
    return repel_term(v_f, u_b, eps);
}

Var loss_total(const Var& match, const Var& refine, double lambda) {
    return add(match, scale(refine, lambda));
}

}  // namespace semples
