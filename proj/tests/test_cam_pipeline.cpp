#include "core/cam_pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "core/image_io.hpp"
#include "core/toy_domain.hpp"
#include "doctest.h"
#include "fd_check.hpp"
#include "tmpdir.hpp"

using namespace semples;
using namespace semples::testing;

namespace {

ClassMap map_of(int h, int w, std::vector<std::uint8_t> vals, const std::string& id = "") {
    return ClassMap{id, h, w, std::move(vals)};
}

// Straight-line per-class counting, kept independent of the implementation.
double oracle_miou(const std::vector<ClassMap>& preds, const std::vector<ClassMap>& truths,
                   int num_values) {
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < num_values; ++c) {
        long long inter = 0, pn = 0, tn = 0;
        for (std::size_t s = 0; s < preds.size(); ++s)
            for (std::size_t i = 0; i < preds[s].values.size(); ++i) {
                bool p = preds[s].values[i] == c, t = truths[s].values[i] == c;
                inter += p && t;
                pn += p;
                tn += t;
            }
        if (pn + tn == 0) continue;
        sum += static_cast<double>(inter) / static_cast<double>(pn + tn - inter);
        ++defined;
    }
    return defined ? sum / defined : 0.0;
}

}  // namespace

TEST_CASE("CAM extraction gates absent classes and normalizes present ones") {
    MaskGenerator gen(3, 4, 2);
    std::mt19937_64 rng(81);
    Tensor img = rand_uniform({3, 16, 16}, rng, 0.0, 1.0);
    Tensor cams = extract_cams(gen, img, {1, 0, 1});
    REQUIRE(cams.shape == std::vector<int>{3, 16, 16});
    std::size_t hw = 256;
    for (int k : {0, 2}) {
        double mx = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            double v = cams.v[static_cast<std::size_t>(k) * hw + i];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            mx = std::max(mx, v);
        }
        CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < hw; ++i) CHECK(cams.v[hw + i] == 0.0);
    CHECK_THROWS_AS(extract_cams(gen, img, {1, 0}), DataError);
}

TEST_CASE("pseudo-mask thresholding and tie breaking") {
    // 2x2, two classes; channel 0 then channel 1.
    Tensor cams({2, 2, 2}, {0.9, 0.5, 0.2, 0.4,   //
                            0.9, 0.6, 0.1, 0.4});  // ties at pixels 0 and 3
    ClassMap m = cams_to_pseudo_mask(cams, 0.5);
    CHECK(m.values == std::vector<std::uint8_t>{1, 2, 0, 0});  // tie -> class 0; sub-threshold -> bg

    ClassMap loose = cams_to_pseudo_mask(cams, 0.0);
    CHECK(loose.values == std::vector<std::uint8_t>{1, 2, 1, 1});

    ClassMap strict = cams_to_pseudo_mask(cams, 1.0);
    CHECK(strict.values == std::vector<std::uint8_t>{0, 0, 0, 0});

    CHECK_THROWS_AS(cams_to_pseudo_mask(cams, -0.1), ConfigError);
    CHECK_THROWS_AS(cams_to_pseudo_mask(cams, 1.1), ConfigError);

    // All-zero CAMs always yield background, even at threshold 0.
    ClassMap none = cams_to_pseudo_mask(Tensor({2, 2, 2}), 0.0);
    CHECK(none.values == std::vector<std::uint8_t>{0, 0, 0, 0});
}

TEST_CASE("mIoU on a worked 2x2 example") {
    // pred: [1,1,0,2], truth: [1,0,0,2]
    auto pred = map_of(2, 2, {1, 1, 0, 2});
    auto truth = map_of(2, 2, {1, 0, 0, 2});
    IoUReport rep = compute_miou({pred}, {truth});
    REQUIRE(rep.per_class.size() == 3);
    CHECK(rep.per_class[0] == doctest::Approx(0.5));   // bg: inter 1, union 2
    CHECK(rep.per_class[1] == doctest::Approx(0.5));   // class 1: inter 1, union 2
    CHECK(rep.per_class[2] == doctest::Approx(1.0));   // class 2: exact
    CHECK(rep.miou == doctest::Approx((0.5 + 0.5 + 1.0) / 3.0));
}

TEST_CASE("classes absent from both sides are excluded from the mean") {
    auto pred = map_of(1, 2, {0, 3});
    auto truth = map_of(1, 2, {0, 3});
    IoUReport rep = compute_miou({pred}, {truth});
    REQUIRE(rep.per_class.size() == 4);
    CHECK(rep.defined[0]);
    CHECK(!rep.defined[1]);
    CHECK(!rep.defined[2]);
    CHECK(rep.defined[3]);
    CHECK(rep.miou == doctest::Approx(1.0));
}

TEST_CASE("mIoU matches a brute-force oracle on random maps") {
    std::mt19937_64 rng(91);
    std::uniform_int_distribution<int> val(0, 3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ClassMap> preds, truths;
        for (int s = 0; s < 3; ++s) {
            std::vector<std::uint8_t> p(64), t(64);
            for (int i = 0; i < 64; ++i) {
                p[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(val(rng));
                t[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(val(rng));
            }
            preds.push_back(map_of(8, 8, std::move(p)));
            truths.push_back(map_of(8, 8, std::move(t)));
        }
        IoUReport rep = compute_miou(preds, truths);
        CHECK(rep.miou == doctest::Approx(oracle_miou(preds, truths, 4)).epsilon(1e-12));

        // Dataset-level accumulation is invariant to sample order.
        std::vector<ClassMap> rp = {preds[2], preds[0], preds[1]};
        std::vector<ClassMap> rt = {truths[2], truths[0], truths[1]};
        CHECK(compute_miou(rp, rt).miou == doctest::Approx(rep.miou).epsilon(1e-12));
    }
}

TEST_CASE("mIoU rejects mismatched shapes naming the sample") {
    auto pred = map_of(2, 2, {0, 0, 0, 0}, "s17");
    auto truth = map_of(1, 4, {0, 0, 0, 0}, "s17");
    CHECK_THROWS_WITH_AS(compute_miou({pred}, {truth}), doctest::Contains("s17"), DataError);
    CHECK_THROWS_AS(compute_miou({pred}, {}), DataError);
}

TEST_CASE("CAM containers round-trip through float32") {
    TempDir tmp("semc");
    std::mt19937_64 rng(93);
    Tensor cams = rand_uniform({2, 5, 7}, rng, 0.0, 1.0);
    write_cam_container(tmp.file("x.semc"), cams);
    Tensor back = read_cam_container(tmp.file("x.semc"));
    REQUIRE(back.shape == cams.shape);
    for (std::size_t i = 0; i < cams.size(); ++i)
        CHECK(back.v[i] == static_cast<double>(static_cast<float>(cams.v[i])));
    CHECK_THROWS_AS(read_cam_container(tmp.file("missing.semc")), DataError);
}

TEST_CASE("class maps round-trip through PNG") {
    TempDir tmp("cmap");
    std::mt19937_64 rng(95);
    std::uniform_int_distribution<int> val(0, 5);
    std::vector<std::uint8_t> vals(35);
    for (auto& v : vals) v = static_cast<std::uint8_t>(val(rng));
    ClassMap m = map_of(5, 7, vals, "m1");
    write_class_map_png(tmp.file("m.png"), m);
    ClassMap back = read_class_map_png(tmp.file("m.png"), "m1");
    CHECK(back.h == 5);
    CHECK(back.w == 7);
    CHECK(back.values == vals);
}

TEST_CASE("thresholding an already-hard mask is idempotent") {
    std::mt19937_64 rng(97);
    std::uniform_int_distribution<int> val(0, 2);
    std::vector<std::uint8_t> vals(16);
    for (auto& v : vals) v = static_cast<std::uint8_t>(val(rng));
    // Re-encode the hard mask as one-hot CAMs and re-threshold.
    Tensor cams({2, 4, 4});
    for (std::size_t i = 0; i < 16; ++i)
        if (vals[i]) cams.v[static_cast<std::size_t>(vals[i] - 1) * 16 + i] = 1.0;
    CHECK(cams_to_pseudo_mask(cams, 0.5).values == vals);
}

TEST_CASE("prompt-region heatmap has image dims and writes its artifacts") {
    TempDir tmp("viz");
    auto enc = make_toy_encoder();
    ClassCatalog cat({"block", "orb"});
    PromptBank bank(cat, 4, enc->token_dim(), 3);

    Tensor img({3, 32, 48});
    toy::paint(img, toy::Texture::Neutral, 0, 32, 0, 48, 8);
    toy::paint(img, toy::Texture::Block, 0, 32, 0, 16, 8);

    Tensor heat = visualize_prompt_regions(bank, *enc, img, 0, tmp.file("h.png"));
    REQUIRE(heat.shape == std::vector<int>{32, 48});
    double lo = 1e9, hi = -1e9;
    for (double x : heat.v) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::filesystem::exists(tmp.file("h.png")));
    CHECK(std::filesystem::exists(tmp.file("h.png") + ".semh"));

    Tensor png = read_image_png(tmp.file("h.png"));
    CHECK(png.shape == std::vector<int>{3, 32, 48});

    // Constant similarity map renders mid-scale.
    Tensor flat({3, 32, 32});
    toy::paint(flat, toy::Texture::Neutral, 0, 32, 0, 32, 8);
    Tensor mid = visualize_prompt_regions(bank, *enc, flat, 1);
    for (double x : mid.v) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(visualize_prompt_regions(bank, *enc, img, 5), std::out_of_range);
}
