#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/tensor.hpp"

namespace semples {

/// Frozen vision-language dual encoder. Both towers map into a shared
/// unit-norm embedding space; outputs are differentiable with respect to
/// their inputs (never with respect to encoder parameters, which no phase
/// may update).
class DualEncoder {
public:
    virtual ~DualEncoder() = default;

    virtual int embed_dim() const = 0;
    virtual int token_dim() const = 0;
    virtual int patch_size() const = 0;

    /// {3,H,W} image -> unit-norm {D}. Throws NumericError on non-finite input.
    virtual Var encode_image(const Var& img) const = 0;
    /// {L,D_tok} token-embedding sequence -> unit-norm {D}. L >= 1.
    virtual Var encode_tokens(const Var& seq) const = 0;
    /// Text -> token-embedding sequence {L,D_tok}; deterministic.
    virtual Tensor tokenize(const std::string& text) const = 0;
    /// One unit-norm {D} per patch, row-major patch order. Image dims must
    /// be divisible by patch_size().
    virtual std::vector<Tensor> encode_patches(const Tensor& img) const = 0;

    /// Full parameter dump; used by freezing checks and checkpoints.
    virtual std::vector<std::uint8_t> serialize_params() const = 0;

    // Convenience value-only paths.
    Tensor encode_image_value(const Tensor& img) const;
    Tensor encode_text_value(const std::string& text) const;
};

/// The concrete encoder family used here: 4x4 average-pooled image features
/// under a fixed linear projection, token sequences averaged and linearly
/// projected, both L2-normalized. Covers the procedurally built toy backend
/// and file-loaded checkpoints.
class LinearDualEncoder final : public DualEncoder {
public:
    struct Params {
        Tensor projection;  // {D, 3*gh*gw}
        Tensor image_bias;  // {D}; makes the all-zero image a documented fixed point
        Tensor token_proj;  // {D, D_tok}
        int grid_h = 4, grid_w = 4;
        int patch = 16;
        std::uint64_t vocab_seed = 0;               // fallback for unknown words
        std::map<std::string, Tensor> vocab;        // word -> {D_tok}
    };

    explicit LinearDualEncoder(Params p);

    int embed_dim() const override { return params_.projection.dim(0); }
    int token_dim() const override { return params_.token_proj.dim(1); }
    int patch_size() const override { return params_.patch; }

    Var encode_image(const Var& img) const override;
    Var encode_tokens(const Var& seq) const override;
    Tensor tokenize(const std::string& text) const override;
    std::vector<Tensor> encode_patches(const Tensor& img) const override;
    std::vector<std::uint8_t> serialize_params() const override;

    Tensor token_embedding(const std::string& word) const;
    const Params& params() const { return params_; }

private:
    Params params_;
};

/// Deterministic toy backend. Constructed so that the toy-domain textures
/// map onto orthonormal anchors, class-name tokens land on their matching
/// texture anchors, and the "block" class text carries a co-occurring
/// background component of relative weight `cooccur_bias`.
std::unique_ptr<LinearDualEncoder> make_toy_encoder(std::uint64_t seed = 7,
                                                    double cooccur_bias = 0.4);

/// Checkpoint adapter: loads a pretrained LinearDualEncoder from the file
/// format documented in the README (magic "SEME").
std::unique_ptr<LinearDualEncoder> load_encoder_checkpoint(const std::string& path);
void save_encoder_checkpoint(const std::string& path, const LinearDualEncoder& enc);

/// "toy" or "file:<path>".
std::unique_ptr<DualEncoder> make_encoder(const std::string& spec);

}  // namespace semples
