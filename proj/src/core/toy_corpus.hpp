#pragma once

#include <string>

#include "core/corpus.hpp"

namespace semples {

struct ToyCorpusSpec {
    int n = 64;            // image count
    int size = 64;         // square image side, multiple of 16
    double cooccur_rate = 0.97;  // fraction of "block" images carrying the texture
};

/// Generates the synthetic two-class corpus on disk:
///   out/classes.txt        class names (block, orb)
///   out/images/<id>.png    RGB images
///   out/labels.tsv         id<TAB>classes
///   out/truth/<id>.png     ground-truth class maps (0 bg, 1 block, 2 orb)
///   out/cooccur/<id>.png   co-occurring-texture region (0/1)
/// "block" foregrounds co-occur with a distinctive background texture;
/// "orb" foregrounds do not. Deterministic per seed.
void make_toy_corpus(const std::string& out_dir, std::uint64_t seed, const ToyCorpusSpec& spec = {});

}  // namespace semples
