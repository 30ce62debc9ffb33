#include "core/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "core/image_io.hpp"

namespace fs = std::filesystem;

namespace semples {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

}  // namespace

void LabeledImage::validate(int num_classes, bool require_present) const {
    if (static_cast<int>(labels.size()) != num_classes)
        throw DataError("sample '" + id + "': label vector length " + std::to_string(labels.size()) +
                        " != K=" + std::to_string(num_classes));
    bool any = false;
    for (int l : labels) {
        if (l != 0 && l != 1) throw DataError("sample '" + id + "': labels must be 0 or 1");
        any = any || l == 1;
    }
    if (require_present && !any) throw DataError("sample '" + id + "': no present class");
    if (pixels.shape.size() != 3 || pixels.dim(0) != 3)
        throw DataError("sample '" + id + "': pixels must be {3,H,W}");
    for (double x : pixels.v)
        if (!(x >= 0.0 && x <= 1.0)) throw DataError("sample '" + id + "': pixel outside [0,1]");
}

std::vector<int> LabeledImage::present_classes() const {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(labels.size()); ++k)
        if (labels[k]) out.push_back(k);
    return out;
}

ClassCatalog::ClassCatalog(std::vector<std::string> n, std::string tmpl)
    : names(std::move(n)), prompt_template(std::move(tmpl)) {
    if (names.empty()) throw ConfigError("catalog: no classes");
    std::set<std::string> uniq;
    for (const auto& name : names) {
        if (name.empty()) throw ConfigError("catalog: empty class name");
        if (!uniq.insert(name).second) throw ConfigError("catalog: duplicate class name '" + name + "'");
    }
    auto first = prompt_template.find("{}");
    if (first == std::string::npos || prompt_template.find("{}", first + 1) != std::string::npos)
        throw ConfigError("prompt template must contain exactly one {} placeholder");
}

int ClassCatalog::index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (names[i] == name) return i;
    return -1;
}

std::string ClassCatalog::prompt_for(int k) const {
    if (k < 0 || k >= size()) throw std::out_of_range("prompt_for: class index out of range");
    std::string out = prompt_template;
    out.replace(out.find("{}"), 2, names[k]);
    return out;
}

std::uint64_t ClassCatalog::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& n : names) {
        h = fnv1a64(n, h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

ClassCatalog ClassCatalog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open class list: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) names.push_back(line);
    }
    return ClassCatalog(std::move(names));
}

void ClassCatalog::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write class list: " + path);
    for (const auto& n : names) out << n << "\n";
}

void RunConfig::validate() const {
    if (!(lambda_b >= 0 && lambda_T >= 0 && lambda_refine >= 0))
        throw ConfigError("loss weights must be nonnegative");
    if (prompt_len < 1) throw ConfigError("prompt_len must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr_phaseA > 0 && lr_phaseB > 0 && lr_phaseC > 0))
        throw ConfigError("learning rates must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(clamp_eps > 0 && clamp_eps <= 0.01)) throw ConfigError("clamp_eps must be in (0, 0.01]");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "lambda_b")
        lambda_b = parse_real(key, value);
    else if (key == "lambda_T")
        lambda_T = parse_real(key, value);
    else if (key == "lambda_refine")
        lambda_refine = parse_real(key, value);
    else if (key == "prompt_len")
        prompt_len = static_cast<int>(parse_int(key, value));
    else if (key == "batch_size")
        batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "lr_phaseA")
        lr_phaseA = parse_real(key, value);
    else if (key == "lr_phaseB")
        lr_phaseB = parse_real(key, value);
    else if (key == "lr_phaseC")
        lr_phaseC = parse_real(key, value);
    else if (key == "epochs")
        epochs = static_cast<int>(parse_int(key, value));
    else if (key == "clamp_eps")
        clamp_eps = parse_real(key, value);
    else if (key == "seed")
        seed = parse_int(key, value);
    else if (key == "enabled_losses") {
        EnabledLosses e{false, false, false, false};
        for (const auto& part : split(value, ',')) {
            auto p = trim(part);
            if (p.empty()) continue;
            if (p == "match")
                e.match = true;
            else if (p == "prompt_I")
                e.prompt_I = true;
            else if (p == "prompt_T")
                e.prompt_T = true;
            else if (p == "refine")
                e.refine = true;
            else
                throw ConfigError("unknown loss flag '" + p + "' (valid: match, prompt_I, prompt_T, refine)");
        }
        enabled_losses = e;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::string RunConfig::get(const std::string& key) const {
    std::ostringstream os;
    os.precision(17);
    if (key == "lambda_b")
        os << lambda_b;
    else if (key == "lambda_T")
        os << lambda_T;
    else if (key == "lambda_refine")
        os << lambda_refine;
    else if (key == "prompt_len")
        os << prompt_len;
    else if (key == "batch_size")
        os << batch_size;
    else if (key == "lr_phaseA")
        os << lr_phaseA;
    else if (key == "lr_phaseB")
        os << lr_phaseB;
    else if (key == "lr_phaseC")
        os << lr_phaseC;
    else if (key == "epochs")
        os << epochs;
    else if (key == "clamp_eps")
        os << clamp_eps;
    else if (key == "seed")
        os << seed;
    else if (key == "enabled_losses") {
        bool first = true;
        auto put = [&](bool on, const char* name) {
            if (!on) return;
            if (!first) os << ",";
            os << name;
            first = false;
        };
        put(enabled_losses.match, "match");
        put(enabled_losses.prompt_I, "prompt_I");
        put(enabled_losses.prompt_T, "prompt_T");
        put(enabled_losses.refine, "refine");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return os.str();
}

std::string RunConfig::to_text() const {
    static const char* keys[] = {"lambda_b",  "lambda_T", "lambda_refine", "prompt_len",
                                 "batch_size", "lr_phaseA", "lr_phaseB",   "lr_phaseC",
                                 "epochs",    "clamp_eps", "seed",         "enabled_losses"};
    std::ostringstream os;
    for (const char* k : keys) os << k << "=" << get(k) << "\n";
    return os.str();
}

RunConfig default_config(const std::string& tag) {
    RunConfig c;
    if (tag == "voc") {
        c.lambda_b = 2.4;
        c.lambda_T = 0.02;
        c.lambda_refine = 0.05;
        c.lr_phaseA = c.lr_phaseB = c.lr_phaseC = 5e-4;
    } else if (tag == "coco") {
        c.lambda_b = 0.75;
        c.lambda_T = 0.01;
        c.lambda_refine = 0.2;
        c.lr_phaseA = c.lr_phaseB = c.lr_phaseC = 5e-6;
    } else if (tag == "toy") {
        // Desk-scale preset: small prompts, fast phases, aggressive rates
        // sized for the synthetic corpus and the toy encoder.
        c.lambda_b = 1.0;
        c.lambda_T = 0.2;
        c.lambda_refine = 2.0;
        c.prompt_len = 8;
        c.batch_size = 16;
        c.lr_phaseA = 2e-2;
        c.lr_phaseB = 5e-2;
        c.lr_phaseC = 2e-2;
        c.epochs = 40;
        c.seed = 1;
    } else {
        throw ConfigError("unknown dataset tag '" + tag + "' (valid: voc, coco, toy)");
    }
    c.validate();
    return c;
}

RunConfig apply_config_file(RunConfig base, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    base.validate();
    return base;
}

std::vector<LabeledImage> load_corpus(const std::string& root, const ClassCatalog& catalog) {
    fs::path rootp(root);
    fs::path tsv = rootp / "labels.tsv";
    std::ifstream in(tsv);
    if (!in) throw DataError("cannot open " + tsv.string());
    struct Row {
        std::string id;
        std::vector<int> labels;
    };
    std::vector<Row> rows;
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(tsv.string() + ":" + std::to_string(lineno) + ": expected id<TAB>classes");
        Row row;
        row.id = trim(line.substr(0, tab));
        if (row.id.empty()) throw DataError(tsv.string() + ":" + std::to_string(lineno) + ": empty id");
        if (!ids.insert(row.id).second)
            throw DataError(tsv.string() + ": duplicate id '" + row.id + "'");
        row.labels.assign(static_cast<std::size_t>(catalog.size()), 0);
        bool any = false;
        for (const auto& part : split(line.substr(tab + 1), ',')) {
            auto name = trim(part);
            if (name.empty()) continue;
            int k = catalog.index_of(name);
            if (k < 0)
                throw DataError("sample '" + row.id + "': class '" + name + "' not in catalog");
            row.labels[static_cast<std::size_t>(k)] = 1;
            any = true;
        }
        if (!any) throw DataError("sample '" + row.id + "': empty label row");
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });

    std::vector<LabeledImage> out;
    out.reserve(rows.size());
    for (auto& row : rows) {
        fs::path img = rootp / "images" / (row.id + ".png");
        if (!fs::exists(img)) throw DataError("sample '" + row.id + "': missing image " + img.string());
        LabeledImage s;
        s.id = std::move(row.id);
        s.pixels = read_image_png(img.string());
        s.labels = std::move(row.labels);
        s.validate(catalog.size());
        out.push_back(std::move(s));
    }
    return out;
}

void emit_corpus(const std::string& root, const ClassCatalog& catalog,
                 const std::vector<LabeledImage>& samples) {
    fs::path rootp(root);
    fs::create_directories(rootp / "images");
    std::ofstream tsv(rootp / "labels.tsv", std::ios::trunc | std::ios::binary);
    if (!tsv) throw DataError("cannot write labels.tsv under " + root);
    for (const auto& s : samples) {
        s.validate(catalog.size());
        write_image_png((rootp / "images" / (s.id + ".png")).string(), s.pixels);
        tsv << s.id << "\t";
        bool first = true;
        for (int k : s.present_classes()) {
            if (!first) tsv << ",";
            tsv << catalog.names[static_cast<std::size_t>(k)];
            first = false;
        }
        tsv << "\n";
    }
}

}  // namespace semples
