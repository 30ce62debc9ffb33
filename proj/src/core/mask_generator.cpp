#include "core/mask_generator.hpp"

#include <cmath>

#include "core/image_io.hpp"

namespace semples {

namespace {
constexpr std::uint32_t kGenMagic = 0x474d4553;  // "SEMG"
constexpr std::uint32_t kGenVersion = 1;

Tensor conv_init(int co, int ci, int k, std::mt19937_64& rng) {
    double std = std::sqrt(2.0 / (ci * k * k));
    return Tensor::randn({co, ci, k, k}, rng, std);
}
}  // namespace

MaskGenerator::MaskGenerator(int num_classes, int channels, std::uint64_t seed)
    : num_classes_(num_classes), channels_(channels) {
    if (num_classes < 1 || channels < 1) throw ConfigError("mask generator: bad dimensions");
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0xbeef);
    params_.push_back(conv_init(channels, 3, 3, rng));
    params_.push_back(Tensor::zeros({channels}));
    params_.push_back(conv_init(channels, channels, 3, rng));
    params_.push_back(Tensor::zeros({channels}));
    params_.push_back(conv_init(channels, channels, 3, rng));
    params_.push_back(Tensor::zeros({channels}));
    params_.push_back(conv_init(num_classes, channels, 3, rng));
    params_.push_back(Tensor::zeros({num_classes}));
}

std::vector<Var> MaskGenerator::make_param_leaves(bool requires_grad) const {
    std::vector<Var> leaves;
    leaves.reserve(params_.size());
    for (const auto& p : params_) leaves.push_back(leaf(p, requires_grad));
    return leaves;
}

Var MaskGenerator::forward(const Var& img, const std::vector<Var>& p) const {
    if (img->val.shape.size() != 3 || img->val.dim(0) != 3)
        throw DataError("mask generator: expects {3,H,W}");
    int H = img->val.dim(1), W = img->val.dim(2);
    if (H % 4 || W % 4) throw DataError("mask generator: image dims must be multiples of 4");
    if (p.size() != params_.size()) throw std::logic_error("mask generator: wrong leaf count");
    auto h = relu(conv2d(img, p[0], p[1]));
    h = avgpool2(h);
    h = relu(conv2d(h, p[2], p[3]));
    h = avgpool2(h);
    h = relu(conv2d(h, p[4], p[5]));
    h = conv2d(h, p[6], p[7]);
    h = bilinear_resize(h, H, W);
    return sigmoid(h);
}

Tensor MaskGenerator::forward_value(const Tensor& img) const {
    return forward(constant(img), make_param_leaves(false))->val;
}

std::uint64_t MaskGenerator::param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params_) h = fnv1a64(p.v.data(), p.v.size() * sizeof(double), h);
    return h;
}

void MaskGenerator::save(const std::string& path, const std::vector<std::string>& class_names,
                         const std::string& config_text) const {
    ByteWriter w;
    w.u32(kGenMagic);
    w.u32(kGenVersion);
    w.u32(static_cast<std::uint32_t>(num_classes_));
    w.u32(static_cast<std::uint32_t>(channels_));
    w.u32(static_cast<std::uint32_t>(class_names.size()));
    for (const auto& n : class_names) w.str(n);
    w.str(config_text);
    w.u32(static_cast<std::uint32_t>(params_.size()));
    for (const auto& p : params_) w.tensor(p);
    w.save(path);
}

MaskGenerator::Loaded MaskGenerator::load(const std::string& path) {
    ByteReader r(path);
    if (r.u32() != kGenMagic) throw DataError("not a mask-generator checkpoint: " + path);
    if (r.u32() != kGenVersion) throw DataError("unsupported generator checkpoint version: " + path);
    int K = static_cast<int>(r.u32());
    int C = static_cast<int>(r.u32());
    std::uint32_t nn = r.u32();
    std::vector<std::string> names(nn);
    for (auto& n : names) n = r.str();
    std::string cfg = r.str();
    std::uint32_t np = r.u32();
    MaskGenerator gen(K, C, 0);
    if (np != gen.params_.size()) throw DataError("generator checkpoint: parameter count mismatch");
    for (auto& p : gen.params_) {
        Tensor t = r.tensor();
        if (t.shape != p.shape) throw DataError("generator checkpoint: parameter shape mismatch");
        p = std::move(t);
    }
    return Loaded{std::move(gen), std::move(names), std::move(cfg)};
}

Triplet compose_triplet(const Var& img, const Var& masks, int k, const std::vector<int>& labels,
                        const ClassCatalog& catalog) {
    if (masks->val.shape.size() != 3) throw DataError("compose_triplet: masks must be {K,H,W}");
    int K = masks->val.dim(0);
    if (k < 0 || k >= K || k >= catalog.size())
        throw std::out_of_range("compose_triplet: class index " + std::to_string(k) + " out of range");
    if (k >= static_cast<int>(labels.size()) || labels[static_cast<std::size_t>(k)] != 1)
        throw DataError("compose_triplet: class '" + catalog.names[static_cast<std::size_t>(k)] +
                        "' absent from sample labels");
    Var mk = select_seq(masks, k);  // {H,W}
    Triplet t;
    t.foreground = mask_mul(img, mk);
    t.background = mask_mul(img, one_minus(mk));
    t.text = catalog.prompt_for(k);
    return t;
}

}  // namespace semples
