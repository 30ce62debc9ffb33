#include "core/cam_pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "core/image_io.hpp"

namespace semples {

namespace {
constexpr std::uint32_t kCamMagic = 0x434d4553;   // "SEMC"
constexpr std::uint32_t kHeatMagic = 0x484d4553;  // "SEMH"
constexpr std::uint32_t kCamVersion = 1;

// Low-to-high color ramp: dark blue -> green -> red.
void heat_color(double x, std::uint8_t rgb[3]) {
    x = std::clamp(x, 0.0, 1.0);
    double r, g, b;
    if (x < 0.5) {
        double t = x * 2.0;
        r = 0.0;
        g = t;
        b = 0.55 * (1.0 - t);
    } else {
        double t = (x - 0.5) * 2.0;
        r = t;
        g = 1.0 - t;
        b = 0.0;
    }
    rgb[0] = static_cast<std::uint8_t>(r * 255.0 + 0.5);
    rgb[1] = static_cast<std::uint8_t>(g * 255.0 + 0.5);
    rgb[2] = static_cast<std::uint8_t>(b * 255.0 + 0.5);
}
}  // namespace

Tensor extract_cams(const MaskGenerator& gen, const Tensor& img, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != gen.num_classes())
        throw DataError("extract_cams: label vector length mismatch");
    Tensor cams = gen.forward_value(img);
    int K = cams.dim(0);
    std::size_t hw = static_cast<std::size_t>(cams.dim(1)) * cams.dim(2);
    for (int k = 0; k < K; ++k) {
        double* ch = cams.v.data() + static_cast<std::size_t>(k) * hw;
        if (!labels[static_cast<std::size_t>(k)]) {
            std::fill(ch, ch + hw, 0.0);
            continue;
        }
        double mx = 0.0;
        for (std::size_t i = 0; i < hw; ++i) mx = std::max(mx, ch[i]);
        if (mx > 0.0)
            for (std::size_t i = 0; i < hw; ++i) ch[i] /= mx;
    }
    return cams;
}

ClassMap cams_to_pseudo_mask(const Tensor& cams, double bg_threshold, const std::string& id) {
    if (cams.shape.size() != 3) throw DataError("cams_to_pseudo_mask: expects {K,H,W}");
    if (!(bg_threshold >= 0.0 && bg_threshold <= 1.0))
        throw ConfigError("background threshold must be in [0,1]");
    int K = cams.dim(0), H = cams.dim(1), W = cams.dim(2);
    std::size_t hw = static_cast<std::size_t>(H) * W;
    ClassMap out;
    out.id = id;
    out.h = H;
    out.w = W;
    out.values.resize(hw, 0);
    for (std::size_t i = 0; i < hw; ++i) {
        int best = -1;
        double best_v = 0.0;
        for (int k = 0; k < K; ++k) {
            double v = cams.v[static_cast<std::size_t>(k) * hw + i];
            if (v > best_v) {  // strict: ties keep the lowest class index
                best_v = v;
                best = k;
            }
        }
        out.values[i] = (best >= 0 && best_v >= bg_threshold) ? static_cast<std::uint8_t>(best + 1) : 0;
    }
    return out;
}

IoUReport compute_miou(const std::vector<ClassMap>& preds, const std::vector<ClassMap>& truths) {
    if (preds.size() != truths.size())
        throw DataError("compute_miou: prediction/truth count mismatch");
    int num_values = 0;
    for (const auto& m : preds)
        for (std::uint8_t v : m.values) num_values = std::max(num_values, static_cast<int>(v) + 1);
    for (const auto& m : truths)
        for (std::uint8_t v : m.values) num_values = std::max(num_values, static_cast<int>(v) + 1);
    num_values = std::max(num_values, 1);

    std::vector<long long> inter(static_cast<std::size_t>(num_values), 0);
    std::vector<long long> pred_n(static_cast<std::size_t>(num_values), 0);
    std::vector<long long> truth_n(static_cast<std::size_t>(num_values), 0);
    for (std::size_t s = 0; s < preds.size(); ++s) {
        const auto& p = preds[s];
        const auto& t = truths[s];
        if (p.h != t.h || p.w != t.w || p.values.size() != t.values.size())
            throw DataError("compute_miou: shape mismatch for sample '" +
                            (p.id.empty() ? t.id : p.id) + "'");
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            ++pred_n[p.values[i]];
            ++truth_n[t.values[i]];
            if (p.values[i] == t.values[i]) ++inter[p.values[i]];
        }
    }
    IoUReport rep;
    rep.per_class.assign(static_cast<std::size_t>(num_values), 0.0);
    rep.defined.assign(static_cast<std::size_t>(num_values), false);
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < num_values; ++c) {
        long long uni = pred_n[c] + truth_n[c] - inter[c];
        if (uni == 0) continue;  // absent from both sides everywhere
        rep.defined[c] = true;
        rep.per_class[c] = static_cast<double>(inter[c]) / static_cast<double>(uni);
        sum += rep.per_class[c];
        ++defined;
    }
    rep.miou = defined ? sum / defined : 0.0;
    return rep;
}

void write_iou_report_json(const std::string& path, const IoUReport& report,
                           const ClassCatalog& catalog) {
    nlohmann::json per;
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        if (!report.defined[c]) continue;
        std::string name = c == 0 ? "background" : catalog.names.at(c - 1);
        per[name] = report.per_class[c];
    }
    nlohmann::json j;
    j["per_class"] = per;
    j["miou"] = report.miou;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write IoU report: " + path);
    out << j.dump(2) << "\n";
}

void write_cam_container(const std::string& path, const Tensor& cams) {
    if (cams.shape.size() != 3) throw DataError("CAM container expects {K,H,W}");
    ByteWriter w;
    w.u32(kCamMagic);
    w.u32(kCamVersion);
    w.u32(static_cast<std::uint32_t>(cams.dim(0)));
    w.u32(static_cast<std::uint32_t>(cams.dim(1)));
    w.u32(static_cast<std::uint32_t>(cams.dim(2)));
    for (double x : cams.v) w.f32(static_cast<float>(x));
    w.save(path);
}

Tensor read_cam_container(const std::string& path) {
    ByteReader r(path);
    if (r.u32() != kCamMagic) throw DataError("not a CAM container: " + path);
    if (r.u32() != kCamVersion) throw DataError("unsupported CAM container version: " + path);
    int K = static_cast<int>(r.u32());
    int H = static_cast<int>(r.u32());
    int W = static_cast<int>(r.u32());
    Tensor t({K, H, W});
    for (double& x : t.v) x = static_cast<double>(r.f32());
    return t;
}

void write_class_map_png(const std::string& path, const ClassMap& map) {
    write_gray_png(path, map.values.data(), map.h, map.w);
}

ClassMap read_class_map_png(const std::string& path, const std::string& id) {
    ClassMap m;
    m.id = id;
    m.values = read_gray_png(path, m.h, m.w);
    return m;
}

Tensor visualize_prompt_regions(const PromptBank& bank, const DualEncoder& enc, const Tensor& img,
                                int k, const std::string& out_png) {
    if (k < 0 || k >= bank.num_classes())
        throw std::out_of_range("visualize_prompt_regions: class index out of range");
    Tensor u_b = background_embedding_value(bank, k, enc);
    std::vector<Tensor> patches = enc.encode_patches(img);
    int ps = enc.patch_size();
    int gh = img.dim(1) / ps, gw = img.dim(2) / ps;

    Tensor raw({gh, gw});
    for (std::size_t i = 0; i < patches.size(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < u_b.size(); ++j) d += u_b.v[j] * patches[i].v[j];
        raw.v[i] = d;
    }

    double lo = raw.v[0], hi = raw.v[0];
    for (double x : raw.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    Tensor norm({1, gh, gw});
    for (std::size_t i = 0; i < raw.size(); ++i)
        norm.v[i] = hi > lo ? (raw.v[i] - lo) / (hi - lo) : 0.5;  // constant map -> mid-scale

    Tensor heat = bilinear_resize(constant(norm), img.dim(1), img.dim(2))->val;
    heat.shape = {img.dim(1), img.dim(2)};

    if (!out_png.empty()) {
        int H = heat.dim(0), W = heat.dim(1);
        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(H) * W * 3);
        for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i)
            heat_color(heat.v[i], &rgb[i * 3]);
        ByteWriter side;
        side.u32(kHeatMagic);
        side.u32(kCamVersion);
        side.u32(static_cast<std::uint32_t>(gh));
        side.u32(static_cast<std::uint32_t>(gw));
        for (double x : raw.v) side.f32(static_cast<float>(x));
        side.save(out_png + ".semh");
        Tensor rgb_t({3, H, W});
        std::size_t hw = static_cast<std::size_t>(H) * W;
        for (std::size_t i = 0; i < hw; ++i)
            for (int c = 0; c < 3; ++c) rgb_t.v[c * hw + i] = rgb[i * 3 + c] / 255.0;
        write_image_png(out_png, rgb_t);
    }
    return heat;
}

}  // namespace semples
