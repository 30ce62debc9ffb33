#include "core/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "core/image_io.hpp"
#include "core/toy_domain.hpp"

namespace semples {

namespace {

constexpr std::uint32_t kEncoderMagic = 0x454d4553;  // "SEME"
constexpr std::uint32_t kEncoderVersion = 1;

void normalize_inplace(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) throw NumericError("cannot normalize zero vector");
    for (double& x : v) x /= n;
}

Tensor hashed_unit_vector(const std::string& word, std::uint64_t seed, int dim, double scl) {
    std::mt19937_64 rng(fnv1a64(word) ^ (seed * 0x9e3779b97f4a7c15ull + 1));
    Tensor t = Tensor::randn({dim}, rng);
    normalize_inplace(t.v);
    for (double& x : t.v) x *= scl;
    return t;
}

// Gauss-Jordan inverse of a small dense matrix.
std::vector<double> invert_matrix(std::vector<double> a, int n) {
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
                std::abs(a[static_cast<std::size_t>(piv) * n + col]))
                piv = r;
        if (std::abs(a[static_cast<std::size_t>(piv) * n + col]) < 1e-12)
            throw NumericError("toy encoder anchors are degenerate");
        for (int c = 0; c < n; ++c) {
            std::swap(a[static_cast<std::size_t>(col) * n + c], a[static_cast<std::size_t>(piv) * n + c]);
            std::swap(inv[static_cast<std::size_t>(col) * n + c], inv[static_cast<std::size_t>(piv) * n + c]);
        }
        double d = a[static_cast<std::size_t>(col) * n + col];
        for (int c = 0; c < n; ++c) {
            a[static_cast<std::size_t>(col) * n + c] /= d;
            inv[static_cast<std::size_t>(col) * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[static_cast<std::size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
                inv[static_cast<std::size_t>(r) * n + c] -= f * inv[static_cast<std::size_t>(col) * n + c];
            }
        }
    }
    return inv;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

Tensor DualEncoder::encode_image_value(const Tensor& img) const {
    return encode_image(constant(img))->val;
}

Tensor DualEncoder::encode_text_value(const std::string& text) const {
    return encode_tokens(constant(tokenize(text)))->val;
}

LinearDualEncoder::LinearDualEncoder(Params p) : params_(std::move(p)) {
    const auto& pr = params_.projection;
    if (pr.shape.size() != 2 || pr.dim(1) != 3 * params_.grid_h * params_.grid_w)
        throw DataError("encoder projection shape mismatch");
    if (params_.image_bias.shape != std::vector<int>{pr.dim(0)})
        throw DataError("encoder bias shape mismatch");
    if (params_.token_proj.shape.size() != 2 || params_.token_proj.dim(0) != pr.dim(0))
        throw DataError("encoder token projection shape mismatch");
    if (params_.patch % params_.grid_h || params_.patch % params_.grid_w)
        throw DataError("patch size must be a multiple of the pooling grid");
}

Var LinearDualEncoder::encode_image(const Var& img) const {
    if (!img->val.finite()) throw NumericError("encode_image: non-finite input");
    if (img->val.shape.size() != 3 || img->val.dim(0) != 3)
        throw DataError("encode_image: expects {3,H,W}, got " + shape_str(img->val.shape));
    if (img->val.dim(1) % params_.grid_h || img->val.dim(2) % params_.grid_w)
        throw DataError("encode_image: image dims must be multiples of " +
                        std::to_string(params_.grid_h) + "x" + std::to_string(params_.grid_w));
    auto pooled = grid_avgpool(img, params_.grid_h, params_.grid_w);
    auto feat = reshape(pooled, {3 * params_.grid_h * params_.grid_w});
    auto proj = add(matvec(params_.projection, feat), constant(params_.image_bias));
    return l2_normalize(proj);
}

Var LinearDualEncoder::encode_tokens(const Var& seq) const {
    if (seq->val.shape.size() != 2 || seq->val.dim(1) != token_dim())
        throw DataError("encode_tokens: expects {L," + std::to_string(token_dim()) + "}");
    if (!seq->val.finite()) throw NumericError("encode_tokens: non-finite input");
    return l2_normalize(matvec(params_.token_proj, mean_rows(seq)));
}

Tensor LinearDualEncoder::token_embedding(const std::string& word) const {
    auto it = params_.vocab.find(word);
    if (it != params_.vocab.end()) return it->second;
    return hashed_unit_vector(word, params_.vocab_seed, token_dim(), 1.0);
}

Tensor LinearDualEncoder::tokenize(const std::string& text) const {
    std::vector<std::string> words;
    std::string cur;
    for (char c : lowercase(text)) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += c;
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    if (words.empty()) throw DataError("tokenize: empty text");
    int D = token_dim();
    Tensor seq({static_cast<int>(words.size()), D});
    for (std::size_t i = 0; i < words.size(); ++i) {
        Tensor e = token_embedding(words[i]);
        std::copy(e.v.begin(), e.v.end(), seq.v.begin() + static_cast<std::ptrdiff_t>(i) * D);
    }
    return seq;
}

std::vector<Tensor> LinearDualEncoder::encode_patches(const Tensor& img) const {
    if (img.shape.size() != 3 || img.dim(0) != 3) throw DataError("encode_patches: expects {3,H,W}");
    int ps = params_.patch;
    if (img.dim(1) % ps || img.dim(2) % ps)
        throw DataError("encode_patches: image dims must be multiples of the patch size " +
                        std::to_string(ps));
    int gy = img.dim(1) / ps, gx = img.dim(2) / ps;
    int H = img.dim(1), W = img.dim(2);
    std::size_t hw = static_cast<std::size_t>(H) * W;
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(gy) * gx);
    for (int py = 0; py < gy; ++py)
        for (int px = 0; px < gx; ++px) {
            Tensor patch({3, ps, ps});
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < ps; ++y)
                    for (int x = 0; x < ps; ++x)
                        patch.v[(static_cast<std::size_t>(c) * ps + y) * ps + x] =
                            img.v[c * hw + static_cast<std::size_t>(py * ps + y) * W + px * ps + x];
            out.push_back(encode_image_value(patch));
        }
    return out;
}

std::vector<std::uint8_t> LinearDualEncoder::serialize_params() const {
    ByteWriter w;
    w.u32(kEncoderMagic);
    w.u32(kEncoderVersion);
    w.u32(static_cast<std::uint32_t>(params_.grid_h));
    w.u32(static_cast<std::uint32_t>(params_.grid_w));
    w.u32(static_cast<std::uint32_t>(params_.patch));
    w.u64(params_.vocab_seed);
    w.tensor(params_.projection);
    w.tensor(params_.image_bias);
    w.tensor(params_.token_proj);
    w.u32(static_cast<std::uint32_t>(params_.vocab.size()));
    for (const auto& [word, emb] : params_.vocab) {
        w.str(word);
        w.tensor(emb);
    }
    return w.buf;
}

std::unique_ptr<LinearDualEncoder> make_toy_encoder(std::uint64_t seed, double cooccur_bias) {
    constexpr int D = 16;
    constexpr int F = 48;  // 3 channels x 4x4 grid
    std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dull + 0x1234567);

    // Orthonormal anchors: block, orb, cooccur, neutral, plus one reserved
    // for the zero-image fixed point.
    constexpr int kAnchors = 5;
    std::vector<std::vector<double>> anchors;
    for (int i = 0; i < kAnchors; ++i) {
        Tensor r = Tensor::randn({D}, rng);
        for (const auto& prev : anchors) {
            double d = 0.0;
            for (int j = 0; j < D; ++j) d += r.v[j] * prev[j];
            for (int j = 0; j < D; ++j) r.v[j] -= d * prev[j];
        }
        normalize_inplace(r.v);
        anchors.push_back(r.v);
    }

    // Canonical texture features (columns of Fm, 48x4).
    const Tensor feats[4] = {toy::canonical_feature(toy::Texture::Block),
                             toy::canonical_feature(toy::Texture::Orb),
                             toy::canonical_feature(toy::Texture::Cooccur),
                             toy::canonical_feature(toy::Texture::Neutral)};

    // P = E G^{-1} F^T maps each canonical feature exactly onto its anchor;
    // a damped random component on the orthogonal complement keeps the map
    // nondegenerate for arbitrary images.
    std::vector<double> gram(16, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int t = 0; t < F; ++t) s += feats[i].v[t] * feats[j].v[t];
            gram[static_cast<std::size_t>(i) * 4 + j] = s;
        }
    std::vector<double> ginv = invert_matrix(gram, 4);

    // pinv = G^{-1} F^T, 4x48.
    std::vector<double> pinv(4 * F, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int t = 0; t < F; ++t) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j) s += ginv[static_cast<std::size_t>(i) * 4 + j] * feats[j].v[t];
            pinv[static_cast<std::size_t>(i) * F + t] = s;
        }

    // Featureless gray barely registers, like a contrastive encoder that
    // never had to discriminate it; salient textures land on unit anchors.
    constexpr double kAnchorGain[4] = {1.0, 1.0, 1.0, 0.5};

    Tensor proj({D, F});
    Tensor q = Tensor::randn({D, F}, rng, 0.08);
    for (int d = 0; d < D; ++d)
        for (int t = 0; t < F; ++t) {
            double s = 0.0;
            for (int i = 0; i < 4; ++i)
                s += kAnchorGain[i] * anchors[i][d] * pinv[static_cast<std::size_t>(i) * F + t];
            // Project the random part away from span(F): q - q F pinv.
            double qf = q.v[static_cast<std::size_t>(d) * F + t];
            double corr = 0.0;
            for (int i = 0; i < 4; ++i) {
                double qfi = 0.0;
                for (int u = 0; u < F; ++u)
                    qfi += q.v[static_cast<std::size_t>(d) * F + u] * feats[i].v[u];
                corr += qfi * pinv[static_cast<std::size_t>(i) * F + t];
            }
            proj.v[static_cast<std::size_t>(d) * F + t] = s + qf - corr;
        }

    Tensor bias({D});
    for (int d = 0; d < D; ++d) bias.v[d] = 0.05 * anchors[4][d];

    Tensor token_proj({D, D});
    for (int d = 0; d < D; ++d) token_proj.v[static_cast<std::size_t>(d) * D + d] = 1.0;

    LinearDualEncoder::Params p;
    p.projection = std::move(proj);
    p.image_bias = std::move(bias);
    p.token_proj = std::move(token_proj);
    p.grid_h = p.grid_w = 4;
    p.patch = 16;
    p.vocab_seed = seed;

    // Class words sit on their texture anchors; the "block" text additionally
    // carries a component along the co-occurring background anchor, modelling
    // the dataset bias the framework is built to suppress.
    std::vector<double> block_vec(D);
    for (int d = 0; d < D; ++d) block_vec[d] = anchors[0][d] + cooccur_bias * anchors[2][d];
    normalize_inplace(block_vec);
    p.vocab[toy::kBlockName] = Tensor({D}, block_vec);
    p.vocab[toy::kOrbName] = Tensor({D}, anchors[1]);
    for (const char* w : {"a", "an", "the", "photo", "of", "picture", "image"})
        p.vocab[w] = hashed_unit_vector(w, seed, D, 0.02);

    return std::make_unique<LinearDualEncoder>(std::move(p));
}

void save_encoder_checkpoint(const std::string& path, const LinearDualEncoder& enc) {
    ByteWriter w;
    w.buf = enc.serialize_params();
    w.save(path);
}

std::unique_ptr<LinearDualEncoder> load_encoder_checkpoint(const std::string& path) {
    ByteReader r(path);
    if (r.u32() != kEncoderMagic) throw DataError("not an encoder checkpoint: " + path);
    if (r.u32() != kEncoderVersion) throw DataError("unsupported encoder checkpoint version: " + path);
    LinearDualEncoder::Params p;
    p.grid_h = static_cast<int>(r.u32());
    p.grid_w = static_cast<int>(r.u32());
    p.patch = static_cast<int>(r.u32());
    p.vocab_seed = r.u64();
    p.projection = r.tensor();
    p.image_bias = r.tensor();
    p.token_proj = r.tensor();
    std::uint32_t nwords = r.u32();
    for (std::uint32_t i = 0; i < nwords; ++i) {
        std::string word = r.str();
        p.vocab[word] = r.tensor();
    }
    return std::make_unique<LinearDualEncoder>(std::move(p));
}

std::unique_ptr<DualEncoder> make_encoder(const std::string& spec) {
    if (spec.empty() || spec == "toy") return make_toy_encoder();
    if (spec.rfind("file:", 0) == 0) return load_encoder_checkpoint(spec.substr(5));
    throw ConfigError("unknown encoder spec '" + spec + "' (valid: toy, file:<path>)");
}

}  // namespace semples
