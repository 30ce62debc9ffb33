#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/corpus.hpp"
#include "core/tensor.hpp"

namespace semples {

/// Trainable mask generator S: a small convolutional encoder-decoder with a
/// K-channel sigmoid head, bilinear-upsampled to input resolution. Output
/// masks are in [0,1] by construction.
class MaskGenerator {
public:
    MaskGenerator(int num_classes, int channels, std::uint64_t seed);

    int num_classes() const { return num_classes_; }
    int channels() const { return channels_; }

    /// Copies the current parameters into autodiff leaves (fixed order).
    std::vector<Var> make_param_leaves(bool requires_grad) const;
    /// Applies the generator using the given leaves; returns masks {K,H,W}.
    /// Image dims must be divisible by 4.
    Var forward(const Var& img, const std::vector<Var>& params) const;
    /// Value-only forward with the stored parameters.
    Tensor forward_value(const Tensor& img) const;

    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    std::uint64_t param_hash() const;

    /// Versioned checkpoint: parameters plus a manifest (class names and the
    /// RunConfig used for training).
    void save(const std::string& path, const std::vector<std::string>& class_names,
              const std::string& config_text) const;
    struct Loaded;
    static Loaded load(const std::string& path);

private:
    int num_classes_;
    int channels_;
    std::vector<Tensor> params_;  // w1,b1,w2,b2,w3,b3,w4,b4
};

struct MaskGenerator::Loaded {
    MaskGenerator generator;
    std::vector<std::string> class_names;
    std::string config_text;
};

/// Foreground/background/text triplet for one present class.
struct Triplet {
    Var foreground;  // M_k * X
    Var background;  // (1 - M_k) * X
    std::string text;
};

/// Composes the class-k triplet. Throws if k is out of range or class k is
/// absent from the sample's labels.
Triplet compose_triplet(const Var& img, const Var& masks, int k, const std::vector<int>& labels,
                        const ClassCatalog& catalog);

}  // namespace semples
