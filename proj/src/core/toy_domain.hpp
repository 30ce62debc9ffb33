#pragma once

#include <array>

#include "core/tensor.hpp"

namespace semples::toy {

// The synthetic domain shared by the toy encoder and the toy corpus
// generator. Two object classes plus two background textures:
//   block    - flat red square (object, class "block")
//   orb      - flat blue disc (object, class "orb")
//   cooccur  - green checkerboard, statistically tied to "block" images
//   neutral  - flat gray filler
// Checker cells are defined in pooling-grid units so the pattern survives
// the encoder's 4x4 average pooling at any resolution.

using Color = std::array<double, 3>;

inline constexpr Color kBlockColor{0.80, 0.15, 0.10};
inline constexpr Color kOrbColor{0.10, 0.20, 0.85};
inline constexpr Color kCooccurA{0.10, 0.70, 0.20};
inline constexpr Color kCooccurB{0.05, 0.35, 0.10};
inline constexpr Color kNeutralColor{0.50, 0.50, 0.50};

inline constexpr const char* kBlockName = "block";
inline constexpr const char* kOrbName = "orb";

enum class Texture { Block, Orb, Cooccur, Neutral };

/// Pooled 4x4 feature ({3,4,4} flattened to {48}) of the texture rendered
/// full-frame; this is what the toy projection is anchored to.
inline Tensor canonical_feature(Texture t) {
    Tensor f({48});
    auto put = [&](int gy, int gx, const Color& c) {
        for (int ch = 0; ch < 3; ++ch) f.v[static_cast<std::size_t>(ch) * 16 + gy * 4 + gx] = c[ch];
    };
    for (int gy = 0; gy < 4; ++gy)
        for (int gx = 0; gx < 4; ++gx) {
            switch (t) {
                case Texture::Block: put(gy, gx, kBlockColor); break;
                case Texture::Orb: put(gy, gx, kOrbColor); break;
                case Texture::Neutral: put(gy, gx, kNeutralColor); break;
                case Texture::Cooccur: put(gy, gx, (gy + gx) % 2 == 0 ? kCooccurA : kCooccurB); break;
            }
        }
    return f;
}

/// Paints `tex` over [y0,y1)x[x0,x1) of a {3,H,W} image. `cell` is the
/// checker cell size in pixels; parity is taken in absolute coordinates so
/// the pattern aligns with the encoder's pooling grid.
inline void paint(Tensor& img, Texture tex, int y0, int y1, int x0, int x1, int cell) {
    int H = img.dim(1), W = img.dim(2);
    std::size_t hw = static_cast<std::size_t>(H) * W;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            Color c{};
            switch (tex) {
                case Texture::Block: c = kBlockColor; break;
                case Texture::Orb: c = kOrbColor; break;
                case Texture::Neutral: c = kNeutralColor; break;
                case Texture::Cooccur:
                    c = ((y / cell) + (x / cell)) % 2 == 0 ? kCooccurA : kCooccurB;
                    break;
            }
            for (int ch = 0; ch < 3; ++ch) img.v[ch * hw + static_cast<std::size_t>(y) * W + x] = c[ch];
        }
}

}  // namespace semples::toy
