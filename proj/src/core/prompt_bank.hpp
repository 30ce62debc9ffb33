#pragma once

#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/corpus.hpp"
#include "core/encoder.hpp"

namespace semples {

/// Per-class learnable background prompt sequences p_k. One sequence of
/// prompt_len token embeddings per catalog class; no class-name token is
/// appended.
class PromptBank {
public:
    /// Gaussian init (documented std 0.02), deterministic per seed.
    PromptBank(const ClassCatalog& catalog, int prompt_len, int token_dim, std::uint64_t seed,
               double init_std = 0.02);

    int num_classes() const { return embeddings_.dim(0); }
    int prompt_len() const { return embeddings_.dim(1); }
    int token_dim() const { return embeddings_.dim(2); }

    Tensor& embeddings() { return embeddings_; }
    const Tensor& embeddings() const { return embeddings_; }
    const std::vector<std::string>& class_names() const { return class_names_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t param_hash() const { return hash_tensor(embeddings_); }

    Var make_leaf(bool requires_grad) const { return leaf(embeddings_, requires_grad); }

    void save(const std::string& path) const;
    static PromptBank load(const std::string& path);

private:
    PromptBank() = default;
    Tensor embeddings_;  // {K, L_p, D_tok}
    std::vector<std::string> class_names_;
    std::uint64_t seed_ = 0;
};

/// u^b_k = E_T(p_k); unit-norm, differentiable w.r.t. bank row k only.
Var background_embedding(const Var& bank_leaf, int k, const DualEncoder& enc);
Tensor background_embedding_value(const PromptBank& bank, int k, const DualEncoder& enc);

}  // namespace semples
