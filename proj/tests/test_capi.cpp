// Exercises the shared-library surface only: everything goes through
// semples/semples.h, the way an external binding would use it.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "semples/semples.h"
#include "tmpdir.hpp"

using semples::testing::TempDir;
namespace fs = std::filesystem;

TEST_CASE("version and error strings are always valid") {
    REQUIRE(semples_version() != nullptr);
    CHECK(std::strlen(semples_version()) > 0);
    REQUIRE(semples_last_error() != nullptr);
}

TEST_CASE("config handles: create, set, get, reject") {
    semples_config* cfg = semples_config_create("voc");
    REQUIRE(cfg != nullptr);
    char buf[64];
    REQUIRE(semples_config_get(cfg, "lambda_b", buf, sizeof(buf)) == SEMPLES_OK);
    CHECK(std::string(buf) == "2.3999999999999999");

    CHECK(semples_config_set(cfg, "epochs", "3") == SEMPLES_OK);
    REQUIRE(semples_config_get(cfg, "epochs", buf, sizeof(buf)) == SEMPLES_OK);
    CHECK(std::string(buf) == "3");

    CHECK(semples_config_set(cfg, "bogus", "1") == SEMPLES_ERR_CONFIG);
    CHECK(std::strlen(semples_last_error()) > 0);
    CHECK(semples_config_set(cfg, "epochs", "x") == SEMPLES_ERR_CONFIG);
    CHECK(semples_config_get(cfg, "lambda_b", buf, 2) == SEMPLES_ERR_CONFIG);
    semples_config_free(cfg);

    CHECK(semples_config_create("imagenet") == nullptr);
    CHECK(std::strlen(semples_last_error()) > 0);
    semples_config_free(nullptr);  // must be a no-op
}

TEST_CASE("status codes map the error classes") {
    TempDir tmp("capi_err");
    CHECK(semples_make_toy_corpus(tmp.file("c").c_str(), 1, 4, 30) == SEMPLES_ERR_CONFIG);
    CHECK(semples_eval("/nonexistent/cams", "/nonexistent/truth", 0.5,
                       tmp.file("r.json").c_str(), nullptr) == SEMPLES_ERR_DATA);
    CHECK(semples_eval(tmp.str().c_str(), tmp.str().c_str(), 1.5, tmp.file("r.json").c_str(),
                       nullptr) == SEMPLES_ERR_CONFIG);
    semples_config* cfg = semples_config_create("toy");
    REQUIRE(cfg != nullptr);
    CHECK(semples_train_match(nullptr, cfg, "toy", 0, tmp.str().c_str()) == SEMPLES_ERR_CONFIG);
    CHECK(semples_train_prompts(tmp.str().c_str(), cfg, "toy", tmp.file("no.ckpt").c_str(), 0,
                                tmp.str().c_str()) == SEMPLES_ERR_DATA);
    semples_config_free(cfg);
}

TEST_CASE("tiny end-to-end run through the C surface") {
    TempDir tmp("capi_e2e");
    std::string corpus = tmp.file("corpus");
    std::string out = tmp.file("out");
    REQUIRE(semples_make_toy_corpus(corpus.c_str(), 2, 6, 32) == SEMPLES_OK);

    semples_config* cfg = semples_config_create("toy");
    REQUIRE(cfg != nullptr);
    REQUIRE(semples_config_set(cfg, "epochs", "1") == SEMPLES_OK);
    REQUIRE(semples_config_set(cfg, "batch_size", "3") == SEMPLES_OK);
    REQUIRE(semples_train_all(corpus.c_str(), cfg, "toy", 0, out.c_str()) == SEMPLES_OK);
    semples_config_free(cfg);

    CHECK(fs::exists(out + "/generator_phaseA.ckpt"));
    CHECK(fs::exists(out + "/generator_final.ckpt"));
    CHECK(fs::exists(out + "/prompt_bank.ckpt"));
    CHECK(fs::exists(out + "/log_match.jsonl"));
    CHECK(fs::exists(out + "/log_prompt.jsonl"));
    CHECK(fs::exists(out + "/log_refine.jsonl"));
    CHECK(fs::exists(out + "/cams/toy0000.semc"));
    CHECK(fs::exists(out + "/cams/classes.txt"));

    REQUIRE(semples_eval((out + "/cams").c_str(), (corpus + "/truth").c_str(), 0.4,
                         tmp.file("iou.json").c_str(), tmp.file("masks").c_str()) == SEMPLES_OK);
    CHECK(fs::exists(tmp.file("iou.json")));
    CHECK(fs::exists(tmp.file("masks") + "/toy0000.png"));

    REQUIRE(semples_visualize((out + "/prompt_bank.ckpt").c_str(), "toy",
                              (corpus + "/images/toy0000.png").c_str(), "block",
                              tmp.file("heat.png").c_str()) == SEMPLES_OK);
    CHECK(fs::exists(tmp.file("heat.png")));
    CHECK(fs::exists(tmp.file("heat.png") + ".semh"));
    CHECK(semples_visualize((out + "/prompt_bank.ckpt").c_str(), "toy",
                            (corpus + "/images/toy0000.png").c_str(), "ghost",
                            tmp.file("h2.png").c_str()) == SEMPLES_ERR_DATA);
}
