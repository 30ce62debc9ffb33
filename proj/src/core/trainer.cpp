#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

namespace semples {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::A_match: return "match";
        case Phase::B_prompt: return "prompt";
        case Phase::C_refine: return "refine";
    }
    return "?";
}

PhasePlan make_phase_plan(Phase p, const RunConfig& cfg) {
    PhasePlan plan;
    plan.phase = p;
    plan.epochs = cfg.epochs;
    plan.losses = cfg.enabled_losses;
    switch (p) {
        case Phase::A_match: plan.lr = cfg.lr_phaseA; break;
        case Phase::B_prompt: plan.lr = cfg.lr_phaseB; break;
        case Phase::C_refine: plan.lr = cfg.lr_phaseC; break;
    }
    return plan;
}

AdamW::AdamW(double weight_decay, double beta1, double beta2, double eps)
    : wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamW::step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads, double lr) {
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.push_back(Tensor::zeros(p->shape));
            v_.push_back(Tensor::zeros(p->shape));
        }
    }
    if (params.size() != m_.size() || grads.size() != params.size())
        throw std::logic_error("AdamW: parameter group mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            double gj = g.v[j];
            m_[i].v[j] = b1_ * m_[i].v[j] + (1.0 - b1_) * gj;
            v_[i].v[j] = b2_ * v_[i].v[j] + (1.0 - b2_) * gj * gj;
            double mhat = m_[i].v[j] / bc1;
            double vhat = v_[i].v[j] / bc2;
            p.v[j] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p.v[j]);
        }
    }
}

double cosine_lr(double base_lr, int step_index, int total_steps) {
    if (total_steps <= 1) return base_lr;
    double frac = static_cast<double>(step_index) / static_cast<double>(total_steps);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

void check_mask_bounds(const Tensor& masks, int step) {
    for (double x : masks.v)
        if (!(x >= 0.0 && x <= 1.0))
            throw NumericError("mask left [0,1] at step " + std::to_string(step));
}

Var accumulate(const Var& acc, const Var& x) { return acc ? add(acc, x) : x; }

struct BatchTerms {
    Var loss;  // scalar objective driving the optimizer step
    // Component accumulators (batch means), value-only reporting.
    Var match, prompt_I, prompt_T, prompt_total, refine, total;
};

double val_or_zero(const Var& v) { return v ? v->scalar() : 0.0; }

}  // namespace

std::vector<StepRecord> run_phase(const PhasePlan& plan, const std::vector<LabeledImage>& corpus,
                                  MaskGenerator& gen, PromptBank& bank, const DualEncoder& enc,
                                  const ClassCatalog& catalog, const RunConfig& cfg,
                                  const std::function<void(int)>& on_step) {
    if (corpus.empty()) throw DataError("run_phase: empty corpus");
    const double eps = cfg.clamp_eps;
    const Phase phase = plan.phase;
    const bool train_generator = phase != Phase::B_prompt;

    // Frozen text embeddings u^f_k (encoders are frozen, so caching is exact).
    std::vector<Tensor> text_emb;
    for (int k = 0; k < catalog.size(); ++k)
        text_emb.push_back(enc.encode_text_value(catalog.prompt_for(k)));

    // Phase C: prompts are fixed; precompute u^b_k once.
    std::vector<Tensor> bg_emb;
    if (phase == Phase::C_refine)
        for (int k = 0; k < catalog.size(); ++k)
            bg_emb.push_back(background_embedding_value(bank, k, enc));

    const int n = static_cast<int>(corpus.size());
    const int batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const int total_steps = plan.epochs * batches_per_epoch;

    AdamW opt;
    std::vector<StepRecord> log;
    log.reserve(static_cast<std::size_t>(total_steps));
    int step = 0;

    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        std::vector<int> order(corpus.size());
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::uint64_t epoch_seed =
            fnv1a64(std::string(phase_name(phase)) + "/" + std::to_string(epoch),
                    static_cast<std::uint64_t>(cfg.seed) ^ 0xA5A5A5A5A5A5A5A5ull);
        std::mt19937_64 shuffle_rng(epoch_seed);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        for (int b = 0; b < batches_per_epoch; ++b) {
            ++step;
            int lo = b * cfg.batch_size;
            int hi = std::min(n, lo + cfg.batch_size);

            std::vector<Var> gen_leaves = gen.make_param_leaves(train_generator);
            Var bank_leaf = bank.make_leaf(phase == Phase::B_prompt);

            BatchTerms batch{};
            int used_samples = 0;
            for (int bi = lo; bi < hi; ++bi) {
                const LabeledImage& s = corpus[static_cast<std::size_t>(order[static_cast<std::size_t>(bi)])];
                auto present = s.present_classes();
                if (present.empty()) {
                    std::fprintf(stderr, "warning: sample '%s' has no present class; skipped\n",
                                 s.id.c_str());
                    continue;
                }
                ++used_samples;
                Var img = constant(s.pixels);
                Var masks;
                if (train_generator) {
                    masks = gen.forward(img, gen_leaves);
                } else {
                    masks = constant(gen.forward_value(s.pixels));
                }
                check_mask_bounds(masks->val, step);

                BatchTerms samp{};
                for (int k : present) {
                    Triplet trip = compose_triplet(img, masks, k, s.labels, catalog);
                    Var u_f = constant(text_emb[static_cast<std::size_t>(k)]);
                    switch (phase) {
                        case Phase::A_match: {
                            Var lm = loss_match(enc.encode_image(trip.foreground),
                                                enc.encode_image(trip.background), u_f,
                                                cfg.lambda_b, eps);
                            samp.match = accumulate(samp.match, lm);
                            samp.loss = accumulate(samp.loss, lm);
                            samp.total = accumulate(samp.total, lm);
                            break;
                        }
                        case Phase::B_prompt: {
                            Var v_b = constant(enc.encode_image_value(trip.background->val));
                            Var u_b = background_embedding(bank_leaf, k, enc);
                            PromptLoss pl = loss_prompt(u_b, v_b, u_f, cfg.lambda_T, eps);
                            samp.prompt_I = accumulate(samp.prompt_I, pl.prompt_I);
                            samp.prompt_T = accumulate(samp.prompt_T, pl.prompt_T);
                            samp.prompt_total = accumulate(samp.prompt_total, pl.total);
                            // Ablation flags select which parts drive the step.
                            Var objective;
                            if (plan.losses.prompt_I) objective = accumulate(objective, pl.prompt_I);
                            if (plan.losses.prompt_T)
                                objective = accumulate(objective, scale(pl.prompt_T, cfg.lambda_T));
                            samp.loss = accumulate(samp.loss, objective);
                            samp.total = accumulate(samp.total, pl.total);
                            break;
                        }
                        case Phase::C_refine: {
                            Var v_f = enc.encode_image(trip.foreground);
                            Var u_b = constant(bg_emb[static_cast<std::size_t>(k)]);
                            Var lr_k = loss_refine(v_f, u_b, eps);
                            Var lm;
                            if (plan.losses.match) {
                                lm = loss_match(v_f, enc.encode_image(trip.background), u_f,
                                                cfg.lambda_b, eps);
                            } else {
                                lm = constant(Tensor::scalar(0.0));
                            }
                            Var lt = loss_total(lm, lr_k, cfg.lambda_refine);
                            samp.match = accumulate(samp.match, lm);
                            samp.refine = accumulate(samp.refine, lr_k);
                            samp.total = accumulate(samp.total, lt);
                            samp.loss = accumulate(samp.loss, lt);
                            break;
                        }
                    }
                }
                double inv = 1.0 / static_cast<double>(present.size());
                auto fold = [&](Var BatchTerms::* f) {
                    if (samp.*f) batch.*f = accumulate(batch.*f, scale(samp.*f, inv));
                };
                fold(&BatchTerms::loss);
                fold(&BatchTerms::match);
                fold(&BatchTerms::prompt_I);
                fold(&BatchTerms::prompt_T);
                fold(&BatchTerms::prompt_total);
                fold(&BatchTerms::refine);
                fold(&BatchTerms::total);
            }
            if (used_samples == 0 || !batch.loss) {
                std::fprintf(stderr, "warning: batch %d has no usable sample; skipped\n", step);
                continue;
            }
            double inv_n = 1.0 / static_cast<double>(used_samples);
            batch.loss = scale(batch.loss, inv_n);
            if (!std::isfinite(batch.loss->scalar()))
                throw NumericError("NaN loss at step " + std::to_string(step));

            backward(batch.loss);

            double lr = cosine_lr(plan.lr, step - 1, total_steps);
            if (train_generator) {
                std::vector<Tensor*> ps;
                std::vector<const Tensor*> gs;
                auto& params = gen.parameters();
                for (std::size_t i = 0; i < params.size(); ++i) {
                    ps.push_back(&params[i]);
                    gs.push_back(&gen_leaves[i]->grad);
                }
                opt.step(ps, gs, lr);
            } else {
                opt.step({&bank.embeddings()}, {&bank_leaf->grad}, lr);
            }

            StepRecord rec;
            rec.step = step;
            rec.phase = phase;
            rec.report.match = val_or_zero(batch.match) * inv_n;
            rec.report.prompt_I = val_or_zero(batch.prompt_I) * inv_n;
            rec.report.prompt_T = val_or_zero(batch.prompt_T) * inv_n;
            rec.report.prompt_total = val_or_zero(batch.prompt_total) * inv_n;
            rec.report.refine = val_or_zero(batch.refine) * inv_n;
            rec.report.total = val_or_zero(batch.total) * inv_n;
            rec.report.lambda_b = cfg.lambda_b;
            rec.report.lambda_T = cfg.lambda_T;
            rec.report.lambda_refine = cfg.lambda_refine;
            log.push_back(rec);
            if (on_step) on_step(step);
        }
    }
    return log;
}

PipelineLogs run_pipeline(const std::vector<LabeledImage>& corpus, MaskGenerator& gen,
                          PromptBank& bank, const DualEncoder& enc, const ClassCatalog& catalog,
                          const RunConfig& cfg) {
    PipelineLogs logs;
    const EnabledLosses& e = cfg.enabled_losses;
    if (e.match)
        logs.phase_a = run_phase(make_phase_plan(Phase::A_match, cfg), corpus, gen, bank, enc,
                                 catalog, cfg);
    if (e.prompt_I || e.prompt_T)
        logs.phase_b = run_phase(make_phase_plan(Phase::B_prompt, cfg), corpus, gen, bank, enc,
                                 catalog, cfg);
    if (e.refine)
        logs.phase_c = run_phase(make_phase_plan(Phase::C_refine, cfg), corpus, gen, bank, enc,
                                 catalog, cfg);
    return logs;
}

void write_loss_log(const std::string& path, const std::vector<StepRecord>& records,
                    const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write loss log: " + path);
    nlohmann::json meta;
    meta["meta"] = true;
    meta["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
    meta["config"] = cfg.to_text();
    out << meta.dump() << "\n";
    for (const auto& r : records) {
        nlohmann::json j;
        j["step"] = r.step;
        j["phase"] = phase_name(r.phase);
        j["match"] = r.report.match;
        j["prompt_I"] = r.report.prompt_I;
        j["prompt_T"] = r.report.prompt_T;
        j["prompt_total"] = r.report.prompt_total;
        j["refine"] = r.report.refine;
        j["total"] = r.report.total;
        j["lambda_b"] = r.report.lambda_b;
        j["lambda_T"] = r.report.lambda_T;
        j["lambda_refine"] = r.report.lambda_refine;
        out << j.dump() << "\n";
    }
}

}  // namespace semples
