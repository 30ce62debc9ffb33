#include "core/prompt_bank.hpp"

#include <cmath>

#include "doctest.h"
#include "fd_check.hpp"
#include "tmpdir.hpp"

using namespace semples;
using namespace semples::testing;

namespace {
const ClassCatalog kCat({"cat", "dog", "bird"});
}

TEST_CASE("bank shape and seeded initialization") {
    PromptBank bank(kCat, 5, 16, 99);
    CHECK(bank.num_classes() == 3);
    CHECK(bank.prompt_len() == 5);
    CHECK(bank.token_dim() == 16);
    CHECK(bank.class_names() == kCat.names);
    CHECK(bank.embeddings().shape == std::vector<int>{3, 5, 16});

    // Init draws from a zero-mean Gaussian with std 0.02.
    double mean = 0.0, var = 0.0;
    for (double x : bank.embeddings().v) mean += x;
    mean /= static_cast<double>(bank.embeddings().size());
    for (double x : bank.embeddings().v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(bank.embeddings().size());
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::sqrt(var) == doctest::Approx(0.02).epsilon(0.25));

    CHECK(PromptBank(kCat, 5, 16, 99).param_hash() == bank.param_hash());
    CHECK(PromptBank(kCat, 5, 16, 100).param_hash() != bank.param_hash());
}

TEST_CASE("spec-scale bank: 20 classes, 30 prompts") {
    std::vector<std::string> names;
    for (int i = 0; i < 20; ++i) names.push_back("class_" + std::to_string(i));
    PromptBank bank(ClassCatalog(names), 30, 16, 1);
    CHECK(bank.embeddings().shape == std::vector<int>{20, 30, 16});
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    TempDir tmp("bank");
    PromptBank bank(kCat, 4, 16, 3);
    bank.embeddings().v[7] = 0.123456789012345;
    bank.save(tmp.file("b.ckpt"));
    PromptBank back = PromptBank::load(tmp.file("b.ckpt"));
    CHECK(back.embeddings().v == bank.embeddings().v);
    CHECK(back.class_names() == bank.class_names());
    CHECK(back.seed() == bank.seed());
    CHECK_THROWS_AS(PromptBank::load(tmp.file("missing.ckpt")), DataError);
}

TEST_CASE("background embeddings are unit norm and rows stay independent") {
    auto enc = make_toy_encoder();
    PromptBank bank(kCat, 4, enc->token_dim(), 5);

    Tensor u = background_embedding_value(bank, 1, *enc);
    double n = 0.0;
    for (double x : u.v) n += x * x;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));

    Var leafv = bank.make_leaf(true);
    Var u_b = background_embedding(leafv, 1, *enc);
    backward(dot(u_b, constant(enc->encode_text_value("a photo of dog"))));
    std::size_t row = static_cast<std::size_t>(bank.prompt_len()) * bank.token_dim();
    bool any_row1 = false;
    for (std::size_t i = 0; i < leafv->grad.size(); ++i) {
        if (i / row == 1) {
            any_row1 = any_row1 || leafv->grad.v[i] != 0.0;
        } else {
            CHECK(leafv->grad.v[i] == 0.0);
        }
    }
    CHECK(any_row1);
}

TEST_CASE("background embedding gradient matches finite differences") {
    auto enc = make_toy_encoder();
    PromptBank bank(kCat, 3, enc->token_dim(), 11);
    Tensor probe = enc->encode_text_value("a photo of dog");
    check_fd(
        [&](const std::vector<Var>& in) {
            return dot(background_embedding(in[0], 2, *enc), constant(probe));
        },
        {bank.embeddings()});
}
