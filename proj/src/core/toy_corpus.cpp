#include "core/toy_corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "core/cam_pipeline.hpp"
#include "core/image_io.hpp"
#include "core/toy_domain.hpp"

namespace fs = std::filesystem;

namespace semples {

void make_toy_corpus(const std::string& out_dir, std::uint64_t seed, const ToyCorpusSpec& spec) {
    if (spec.n < 1 || spec.size < 16 || spec.size % 16)
        throw ConfigError("toy corpus: size must be a positive multiple of 16");
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "truth");
    fs::create_directories(fs::path(out_dir) / "cooccur");

    ClassCatalog catalog({toy::kBlockName, toy::kOrbName});
    catalog.save((fs::path(out_dir) / "classes.txt").string());

    const int S = spec.size;
    const int cell = S / 4;       // pooling-grid cell; checker parity aligns to it
    const int band_h = cell;      // co-occurring texture band = one grid row
    const int block_sz = std::max(8, S * 3 / 8);
    const int orb_r = std::max(4, S / 6);
    std::size_t hw = static_cast<std::size_t>(S) * S;

    std::vector<LabeledImage> samples;
    for (int i = 0; i < spec.n; ++i) {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(i) + 17);
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "toy%04d", i);

        bool has_block = (i % 3) != 0;
        bool has_orb = (i % 3) != 1;
        bool cooccur = has_block &&
                       std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.cooccur_rate;
        bool band_top = std::uniform_int_distribution<int>(0, 1)(rng) == 1;

        Tensor img({3, S, S});
        toy::paint(img, toy::Texture::Neutral, 0, S, 0, S, cell);
        std::vector<std::uint8_t> truth(hw, 0), region(hw, 0);

        if (cooccur) {
            int y0 = band_top ? 0 : S - band_h;
            toy::paint(img, toy::Texture::Cooccur, y0, y0 + band_h, 0, S, cell);
            for (int y = y0; y < y0 + band_h; ++y)
                for (int x = 0; x < S; ++x) region[static_cast<std::size_t>(y) * S + x] = 1;
        }

        // Objects live in the band-free interior.
        int lo_y = band_top ? band_h + 2 : 2;
        int hi_y = band_top ? S - 2 : S - band_h - 2;
        int bx0 = 0, by0 = 0;
        if (has_block) {
            by0 = std::uniform_int_distribution<int>(lo_y, hi_y - block_sz)(rng);
            bx0 = std::uniform_int_distribution<int>(2, S - block_sz - 2)(rng);
            toy::paint(img, toy::Texture::Block, by0, by0 + block_sz, bx0, bx0 + block_sz, cell);
            for (int y = by0; y < by0 + block_sz; ++y)
                for (int x = bx0; x < bx0 + block_sz; ++x)
                    truth[static_cast<std::size_t>(y) * S + x] = 1;
        }
        if (has_orb) {
            int cy = 0, cx = 0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                cy = std::uniform_int_distribution<int>(lo_y + orb_r, hi_y - orb_r)(rng);
                cx = std::uniform_int_distribution<int>(orb_r + 2, S - orb_r - 2)(rng);
                bool clash = has_block && cy + orb_r > by0 - 2 && cy - orb_r < by0 + block_sz + 2 &&
                             cx + orb_r > bx0 - 2 && cx - orb_r < bx0 + block_sz + 2;
                if (!clash) break;
            }
            for (int y = cy - orb_r; y <= cy + orb_r; ++y)
                for (int x = cx - orb_r; x <= cx + orb_r; ++x) {
                    if ((y - cy) * (y - cy) + (x - cx) * (x - cx) > orb_r * orb_r) continue;
                    for (int ch = 0; ch < 3; ++ch)
                        img.v[static_cast<std::size_t>(ch) * hw + static_cast<std::size_t>(y) * S + x] =
                            toy::kOrbColor[static_cast<std::size_t>(ch)];
                    truth[static_cast<std::size_t>(y) * S + x] = 2;
                }
        }

        // Mild pixel noise so nothing is exactly constant.
        std::uniform_real_distribution<double> noise(-0.02, 0.02);
        for (double& x : img.v) x = std::clamp(x + noise(rng), 0.0, 1.0);

        LabeledImage s;
        s.id = idbuf;
        s.pixels = std::move(img);
        s.labels = {has_block ? 1 : 0, has_orb ? 1 : 0};
        samples.push_back(std::move(s));

        ClassMap tm{idbuf, S, S, std::move(truth)};
        write_class_map_png((fs::path(out_dir) / "truth" / (std::string(idbuf) + ".png")).string(), tm);
        ClassMap rm{idbuf, S, S, std::move(region)};
        write_class_map_png((fs::path(out_dir) / "cooccur" / (std::string(idbuf) + ".png")).string(),
                            rm);
    }
    emit_corpus(out_dir, catalog, samples);
}

}  // namespace semples
