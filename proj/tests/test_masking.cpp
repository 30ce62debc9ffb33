#include "core/mask_generator.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "fd_check.hpp"
#include "tmpdir.hpp"

using namespace semples;
using namespace semples::testing;

TEST_CASE("generator masks stay inside [0,1] with the right shape") {
    MaskGenerator gen(3, 6, 42);
    std::mt19937_64 rng(51);
    Tensor img = rand_uniform({3, 16, 16}, rng, 0.0, 1.0);
    Tensor masks = gen.forward_value(img);
    REQUIRE(masks.shape == std::vector<int>{3, 16, 16});
    for (double m : masks.v) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
    CHECK_THROWS_AS(gen.forward_value(rand_uniform({3, 18, 18}, rng, 0.0, 1.0)), DataError);
}

TEST_CASE("construction is deterministic per seed") {
    CHECK(MaskGenerator(2, 4, 5).param_hash() == MaskGenerator(2, 4, 5).param_hash());
    CHECK(MaskGenerator(2, 4, 5).param_hash() != MaskGenerator(2, 4, 6).param_hash());
    CHECK_THROWS_AS(MaskGenerator(0, 4, 5), ConfigError);
}

TEST_CASE("foreground and background partition the image exactly") {
    ClassCatalog cat({"cat", "dog"});
    MaskGenerator gen(2, 4, 7);
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor imgT = rand_uniform({3, 8, 8}, rng, 0.0, 1.0);
        Var img = constant(imgT);
        Var masks = constant(gen.forward_value(imgT));
        Triplet t = compose_triplet(img, masks, 1, {0, 1}, cat);
        for (std::size_t i = 0; i < imgT.size(); ++i) {
            double sum = t.foreground->val.v[i] + t.background->val.v[i];
            CHECK(std::fabs(sum - imgT.v[i]) <= std::fabs(imgT.v[i]) * 4e-16 + 1e-300);
        }
    }
}

TEST_CASE("triplet handles extreme masks and carries the prompt text") {
    ClassCatalog cat({"cat"});
    std::mt19937_64 rng(57);
    Tensor imgT = rand_uniform({3, 4, 4}, rng, 0.0, 1.0);
    Var img = constant(imgT);

    Triplet ones = compose_triplet(img, constant(Tensor::full({1, 4, 4}, 1.0)), 0, {1}, cat);
    CHECK(ones.foreground->val.v == imgT.v);
    for (double x : ones.background->val.v) CHECK(x == 0.0);

    Triplet zeros = compose_triplet(img, constant(Tensor::full({1, 4, 4}, 0.0)), 0, {1}, cat);
    CHECK(zeros.background->val.v == imgT.v);
    for (double x : zeros.foreground->val.v) CHECK(x == 0.0);

    Triplet half = compose_triplet(img, constant(Tensor::full({1, 4, 4}, 0.5)), 0, {1}, cat);
    for (std::size_t i = 0; i < imgT.size(); ++i) {
        CHECK(half.foreground->val.v[i] == doctest::Approx(0.5 * imgT.v[i]).epsilon(1e-15));
        CHECK(half.background->val.v[i] == doctest::Approx(0.5 * imgT.v[i]).epsilon(1e-15));
    }
    CHECK(half.text == "a photo of cat");
}

TEST_CASE("triplet composition rejects invalid classes") {
    ClassCatalog cat({"cat", "dog"});
    MaskGenerator gen(2, 4, 7);
    std::mt19937_64 rng(59);
    Tensor imgT = rand_uniform({3, 8, 8}, rng, 0.0, 1.0);
    Var img = constant(imgT);
    Var masks = constant(gen.forward_value(imgT));
    CHECK_THROWS_AS(compose_triplet(img, masks, 2, {1, 1}, cat), std::out_of_range);
    CHECK_THROWS_AS(compose_triplet(img, masks, -1, {1, 1}, cat), std::out_of_range);
    CHECK_THROWS_WITH_AS(compose_triplet(img, masks, 1, {1, 0}, cat), doctest::Contains("'dog'"),
                         DataError);
}

TEST_CASE("gradients flow to every generator parameter") {
    MaskGenerator gen(2, 3, 13);
    std::mt19937_64 rng(61);
    Tensor img = rand_uniform({3, 8, 8}, rng, 0.0, 1.0);

    std::vector<Tensor> inputs = gen.parameters();
    check_fd(
        [&](const std::vector<Var>& in) {
            Var masks = gen.forward(constant(img), in);
            return mean(mul(masks, masks));
        },
        inputs, 2e-4);
}

TEST_CASE("checkpoints round-trip parameters, class names and config text") {
    TempDir tmp("gen");
    MaskGenerator gen(2, 4, 21);
    gen.save(tmp.file("g.ckpt"), {"cat", "dog"}, "epochs=3\n");
    auto loaded = MaskGenerator::load(tmp.file("g.ckpt"));
    CHECK(loaded.generator.param_hash() == gen.param_hash());
    CHECK(loaded.class_names == std::vector<std::string>{"cat", "dog"});
    CHECK(loaded.config_text == "epochs=3\n");
    CHECK_THROWS_AS(MaskGenerator::load(tmp.file("missing.ckpt")), DataError);
}
