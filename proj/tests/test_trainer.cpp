#include "core/trainer.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/toy_corpus.hpp"
#include "doctest.h"
#include "tmpdir.hpp"

using namespace semples;
using semples::testing::TempDir;

namespace {

struct Fixture {
    TempDir tmp{"trainer"};
    ClassCatalog catalog{{"block", "orb"}};
    std::vector<LabeledImage> corpus;
    RunConfig cfg = default_config("toy");

    Fixture() {
        ToyCorpusSpec spec;
        spec.n = 8;
        spec.size = 32;
        make_toy_corpus(tmp.str(), 5, spec);
        corpus = load_corpus(tmp.str(), catalog);
        cfg.epochs = 2;
        cfg.batch_size = 4;
    }
};

std::uint64_t encoder_hash(const DualEncoder& enc) {
    auto bytes = enc.serialize_params();
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace

TEST_CASE("cosine schedule starts at the base rate and decays to zero") {
    CHECK(cosine_lr(0.1, 0, 10) == doctest::Approx(0.1));
    CHECK(cosine_lr(0.1, 5, 10) == doctest::Approx(0.05));
    CHECK(cosine_lr(0.1, 10, 10) == doctest::Approx(0.0).epsilon(1e-12));
    for (int t = 1; t <= 10; ++t) CHECK(cosine_lr(0.1, t, 10) < cosine_lr(0.1, t - 1, 10));
    CHECK(cosine_lr(0.1, 0, 1) == 0.1);
}

TEST_CASE("one optimizer step matches the update rule by hand") {
    AdamW opt(0.01);
    Tensor p = Tensor::scalar(1.0);
    Tensor g = Tensor::scalar(0.5);
    opt.step({&p}, {&g}, 0.1);
    // Bias-corrected first step: mhat = g, vhat = g^2.
    double want = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
    CHECK(p.v[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("each phase touches only its trainable component") {
    Fixture f;
    auto enc = make_toy_encoder();
    std::uint64_t enc_before = encoder_hash(*enc);
    MaskGenerator gen(2, 4, 1);
    PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(), 1);
    std::uint64_t gen0 = gen.param_hash(), bank0 = bank.param_hash();

    run_phase(make_phase_plan(Phase::A_match, f.cfg), f.corpus, gen, bank, *enc, f.catalog, f.cfg);
    CHECK(gen.param_hash() != gen0);
    CHECK(bank.param_hash() == bank0);

    std::uint64_t gen1 = gen.param_hash();
    run_phase(make_phase_plan(Phase::B_prompt, f.cfg), f.corpus, gen, bank, *enc, f.catalog, f.cfg);
    CHECK(gen.param_hash() == gen1);
    CHECK(bank.param_hash() != bank0);

    std::uint64_t bank1 = bank.param_hash();
    run_phase(make_phase_plan(Phase::C_refine, f.cfg), f.corpus, gen, bank, *enc, f.catalog, f.cfg);
    CHECK(gen.param_hash() != gen1);
    CHECK(bank.param_hash() == bank1);

    CHECK(encoder_hash(*enc) == enc_before);
}

TEST_CASE("phase A drives the matching loss down") {
    Fixture f;
    f.cfg.epochs = 8;
    auto enc = make_toy_encoder();
    MaskGenerator gen(2, 4, 1);
    PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(), 1);
    auto log = run_phase(make_phase_plan(Phase::A_match, f.cfg), f.corpus, gen, bank, *enc,
                         f.catalog, f.cfg);
    REQUIRE(log.size() >= 8);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 3; ++i) {
        head += log[static_cast<std::size_t>(i)].report.match;
        tail += log[log.size() - 1 - static_cast<std::size_t>(i)].report.match;
    }
    CHECK(tail < head);
}

TEST_CASE("log has one record per optimizer step") {
    Fixture f;
    f.cfg.epochs = 3;
    f.cfg.batch_size = 3;  // 8 samples -> 3 batches per epoch
    auto enc = make_toy_encoder();
    MaskGenerator gen(2, 4, 1);
    PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(), 1);
    auto log = run_phase(make_phase_plan(Phase::A_match, f.cfg), f.corpus, gen, bank, *enc,
                         f.catalog, f.cfg);
    REQUIRE(log.size() == 9);
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].step == static_cast<int>(i) + 1);
        CHECK(log[i].phase == Phase::A_match);
        CHECK(std::isfinite(log[i].report.total));
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    Fixture f;
    auto enc = make_toy_encoder();
    auto run = [&]() {
        MaskGenerator gen(2, 4, static_cast<std::uint64_t>(f.cfg.seed));
        PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(),
                        static_cast<std::uint64_t>(f.cfg.seed));
        run_pipeline(f.corpus, gen, bank, *enc, f.catalog, f.cfg);
        return std::make_pair(gen.param_hash(), bank.param_hash());
    };
    f.cfg.epochs = 1;
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);

    f.cfg.seed = 2;
    auto c = run();
    CHECK(c.first != a.first);
}

TEST_CASE("disabled phases are skipped by the pipeline") {
    Fixture f;
    f.cfg.epochs = 1;
    f.cfg.enabled_losses = {true, false, false, false};
    auto enc = make_toy_encoder();
    MaskGenerator gen(2, 4, 1);
    PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(), 1);
    std::uint64_t bank0 = bank.param_hash();
    PipelineLogs logs = run_pipeline(f.corpus, gen, bank, *enc, f.catalog, f.cfg);
    CHECK(!logs.phase_a.empty());
    CHECK(logs.phase_b.empty());
    CHECK(logs.phase_c.empty());
    CHECK(bank.param_hash() == bank0);
}

TEST_CASE("loss log is meta line plus one JSON object per step") {
    Fixture f;
    f.cfg.epochs = 1;
    auto enc = make_toy_encoder();
    MaskGenerator gen(2, 4, 1);
    PromptBank bank(f.catalog, f.cfg.prompt_len, enc->token_dim(), 1);
    auto log = run_phase(make_phase_plan(Phase::A_match, f.cfg), f.corpus, gen, bank, *enc,
                         f.catalog, f.cfg);
    write_loss_log(f.tmp.file("log.jsonl"), log, f.cfg);

    std::ifstream in(f.tmp.file("log.jsonl"));
    std::string line;
    REQUIRE(std::getline(in, line));
    auto meta = nlohmann::json::parse(line);
    CHECK(meta.contains("ts"));
    CHECK(meta.at("config").get<std::string>() == f.cfg.to_text());

    std::size_t steps = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(!j.contains("ts"));
        CHECK(j.at("phase") == "match");
        CHECK(j.at("step") == static_cast<int>(steps) + 1);
        CHECK(j.at("match").get<double>() == doctest::Approx(log[steps].report.match));
        ++steps;
    }
    CHECK(steps == log.size());
}
