#include "core/prompt_bank.hpp"

#include "core/image_io.hpp"

namespace semples {

namespace {
constexpr std::uint32_t kBankMagic = 0x424d4553;  // "SEMB"
constexpr std::uint32_t kBankVersion = 1;
}  // namespace

PromptBank::PromptBank(const ClassCatalog& catalog, int prompt_len, int token_dim,
                       std::uint64_t seed, double init_std)
    : class_names_(catalog.names), seed_(seed) {
    if (prompt_len < 1) throw ConfigError("prompt_len must be >= 1");
    if (token_dim < 1) throw ConfigError("token_dim must be >= 1");
    std::mt19937_64 rng(seed * 0x6a09e667f3bcc909ull + 0x5eed);
    embeddings_ = Tensor::randn({catalog.size(), prompt_len, token_dim}, rng, init_std);
}

void PromptBank::save(const std::string& path) const {
    ByteWriter w;
    w.u32(kBankMagic);
    w.u32(kBankVersion);
    w.u64(seed_);
    ClassCatalog cat(class_names_);
    w.u64(cat.hash());
    w.u32(static_cast<std::uint32_t>(class_names_.size()));
    for (const auto& n : class_names_) w.str(n);
    w.tensor(embeddings_);
    w.save(path);
}

PromptBank PromptBank::load(const std::string& path) {
    ByteReader r(path);
    if (r.u32() != kBankMagic) throw DataError("not a prompt-bank file: " + path);
    if (r.u32() != kBankVersion) throw DataError("unsupported prompt-bank version: " + path);
    PromptBank b;
    b.seed_ = r.u64();
    std::uint64_t stored_hash = r.u64();
    std::uint32_t n = r.u32();
    b.class_names_.resize(n);
    for (auto& s : b.class_names_) s = r.str();
    if (ClassCatalog(b.class_names_).hash() != stored_hash)
        throw DataError("prompt-bank catalog hash mismatch: " + path);
    b.embeddings_ = r.tensor();
    if (b.embeddings_.shape.size() != 3 || b.embeddings_.dim(0) != static_cast<int>(n))
        throw DataError("prompt-bank embedding shape mismatch: " + path);
    return b;
}

Var background_embedding(const Var& bank_leaf, int k, const DualEncoder& enc) {
    return enc.encode_tokens(select_seq(bank_leaf, k));
}

Tensor background_embedding_value(const PromptBank& bank, int k, const DualEncoder& enc) {
    return background_embedding(bank.make_leaf(false), k, enc)->val;
}

}  // namespace semples
