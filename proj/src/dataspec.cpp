#include "hybrideval/dataspec.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/rng.hpp"
#include "hybrideval/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace hybrideval {

using nlohmann::json;

std::string_view to_string(ClassLabel c) {
    switch (c) {
        case ClassLabel::Fungal: return "fungal";
        case ClassLabel::Healthy: return "healthy";
        case ClassLabel::Virus: return "virus";
        case ClassLabel::Unknown: return "unknown";
    }
    return "?";
}

std::string_view to_string(Source s) {
    switch (s) {
        case Source::Real: return "real";
        case Source::Synthetic: return "synthetic";
        case Source::Distractor: return "distractor";
    }
    return "?";
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

std::string_view to_string(Treatment t) {
    switch (t) {
        case Treatment::H0: return "H0";
        case Treatment::H1: return "H1";
        case Treatment::H2: return "H2";
        case Treatment::H3: return "H3";
        case Treatment::H4: return "H4";
    }
    return "?";
}

std::optional<ClassLabel> parse_class(std::string_view text) {
    for (auto c : {ClassLabel::Fungal, ClassLabel::Healthy, ClassLabel::Virus, ClassLabel::Unknown}) {
        if (text == to_string(c)) return c;
    }
    return std::nullopt;
}

std::optional<Source> parse_source(std::string_view text) {
    for (auto s : {Source::Real, Source::Synthetic, Source::Distractor}) {
        if (text == to_string(s)) return s;
    }
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
    for (auto s : {Split::Train, Split::Val, Split::Test}) {
        if (text == to_string(s)) return s;
    }
    return std::nullopt;
}

std::optional<Treatment> parse_treatment(std::string_view text) {
    for (auto t : {Treatment::H0, Treatment::H1, Treatment::H2, Treatment::H3, Treatment::H4}) {
        if (text == to_string(t)) return t;
    }
    return std::nullopt;
}

std::vector<Treatment> parse_treatment_list(std::string_view text) {
    auto require = [](std::string_view name) {
        auto t = parse_treatment(trim(name));
        if (!t) throw Error(ErrorKind::Data, "unknown treatment '" + std::string(name) + "'");
        return *t;
    };
    std::vector<Treatment> out;
    if (const auto range = text.find(".."); range != std::string_view::npos) {
        const auto lo = static_cast<int>(require(text.substr(0, range)));
        const auto hi = static_cast<int>(require(text.substr(range + 2)));
        if (lo > hi) throw Error(ErrorKind::Data, "empty treatment range '" + std::string(text) + "'");
        for (int t = lo; t <= hi; ++t) out.push_back(static_cast<Treatment>(t));
        return out;
    }
    for (const auto& part : split_csv_line(text)) {
        const auto t = require(part);
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    if (out.empty()) throw Error(ErrorKind::Data, "no treatments selected");
    return out;
}

TreatmentConfig default_config(Treatment t, std::uint64_t seed, std::size_t real_per_class) {
    static constexpr std::size_t kRatio[] = {0, 1, 1, 10, 10};
    TreatmentConfig c;
    c.treatment = t;
    c.real_per_class = real_per_class;
    c.synth_ratio = kRatio[static_cast<int>(t)];
    c.include_unknown = t == Treatment::H4;
    c.seed = seed;
    return c;
}

std::size_t round_fraction(std::size_t pool_size, double fraction) {
    const double n = static_cast<double>(pool_size);
    const double product = n * fraction;
    // Exact residual of the floating-point product (n is exact below 2^53).
    const double residual = std::fma(n, fraction, -product);
    const double floor = std::floor(product);
    const double diff = product - floor;
    double rounded;
    if (diff < 0.5) {
        rounded = floor;
    } else if (diff > 0.5) {
        rounded = floor + 1.0;
    } else if (residual < 0.0) {
        rounded = floor;
    } else if (residual > 0.0) {
        rounded = floor + 1.0;
    } else {
        rounded = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
    }
    return static_cast<std::size_t>(rounded);
}

namespace {

void check_fraction(double f, std::string_view name) {
    if (!(f > 0.0 && f < 1.0)) {
        throw Error(ErrorKind::Data, std::string(name) + " must lie in (0, 1), got " + format_double(f));
    }
}

}  // namespace

SplitCounts split_counts(std::size_t pool_size, double test_fraction, double val_fraction,
                         SplitMode mode) {
    if (pool_size == 0) throw Error(ErrorKind::Data, "pool is empty");
    check_fraction(val_fraction, "validation fraction");
    SplitCounts c;
    if (mode == SplitMode::ThreeWay) {
        check_fraction(test_fraction, "test fraction");
        c.test = round_fraction(pool_size, test_fraction);
        c.val = round_fraction(pool_size, val_fraction);
    } else {
        c.val = round_fraction(pool_size, val_fraction);
    }
    const bool fits = c.test + c.val < pool_size;
    if (!fits || c.val == 0 || (mode == SplitMode::ThreeWay && c.test == 0)) {
        throw Error(ErrorKind::Data, "pool of " + std::to_string(pool_size) +
                                         " is too small to give every split at least one item");
    }
    c.train = pool_size - c.test - c.val;
    return c;
}

namespace {

void check_config(const TreatmentConfig& c) {
    check_fraction(c.test_fraction, "test fraction");
    check_fraction(c.val_fraction_of_remainder, "validation fraction");
    if (c.real_per_class == 0) throw Error(ErrorKind::Data, "real_per_class must be positive");
    if (c.treatment == Treatment::H0 && c.synth_ratio != 0) {
        throw Error(ErrorKind::Data, "H0 uses real images only; synth_ratio must be 0");
    }
    if (c.treatment != Treatment::H0 && c.synth_ratio == 0) {
        throw Error(ErrorKind::Data, std::string(to_string(c.treatment)) + " requires synth_ratio >= 1");
    }
    if (c.treatment == Treatment::H4 && !c.include_unknown) {
        throw Error(ErrorKind::Data, "H4 requires include_unknown");
    }
}

}  // namespace

TreatmentPlan plan_treatment(const TreatmentConfig& config) {
    check_config(config);
    TreatmentPlan plan;
    const std::size_t r = config.real_per_class;
    if (config.treatment == Treatment::H0) {
        // 70:15:15 over the whole real sample.
        plan.per_class = split_counts(r, config.test_fraction, config.test_fraction, SplitMode::ThreeWay);
        plan.test_per_class = plan.per_class.test;
        plan.real_trainval_per_class = r - plan.test_per_class;
    } else {
        plan.test_per_class = round_fraction(r, config.test_fraction);
        if (plan.test_per_class == 0 || plan.test_per_class >= r) {
            throw Error(ErrorKind::Data, "real_per_class " + std::to_string(r) + " too small for a test split");
        }
        plan.real_trainval_per_class = r - plan.test_per_class;
        plan.synth_per_class = plan.real_trainval_per_class * config.synth_ratio;
        const std::size_t real_used =
            config.treatment == Treatment::H1 ? 0 : plan.real_trainval_per_class;
        plan.per_class = split_counts(real_used + plan.synth_per_class, 0.0,
                                      config.val_fraction_of_remainder, SplitMode::TwoWay);
        plan.per_class.test = plan.test_per_class;
    }
    if (config.include_unknown) plan.unknown_total = plan.per_class.train + plan.per_class.val;
    return plan;
}

namespace {

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

std::vector<ImageEntry> sorted_by_id(std::vector<ImageEntry> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return v;
}

std::vector<ImageEntry> of_class(const std::vector<ImageEntry>& pool, ClassLabel c) {
    std::vector<ImageEntry> out;
    for (const auto& e : pool) {
        if (e.class_label == c) out.push_back(e);
    }
    return sorted_by_id(std::move(out));
}

void check_pools(const std::vector<ImageEntry>& real, const std::vector<ImageEntry>& synth,
                 const std::vector<ImageEntry>& distractor) {
    std::set<std::string_view> seen;
    auto scan = [&](const std::vector<ImageEntry>& pool, Source expected) {
        for (const auto& e : pool) {
            if (e.source != expected) {
                throw Error(ErrorKind::Data, "entry '" + e.id + "' has source " +
                                                 std::string(to_string(e.source)) + " in the " +
                                                 std::string(to_string(expected)) + " pool");
            }
            if ((e.class_label == ClassLabel::Unknown) != (e.source == Source::Distractor)) {
                throw Error(ErrorKind::Data, "entry '" + e.id + "': class unknown is reserved for distractors");
            }
            if (!seen.insert(e.id).second) throw Error(ErrorKind::Data, "duplicate id '" + e.id + "' in pools");
        }
    };
    scan(real, Source::Real);
    scan(synth, Source::Synthetic);
    scan(distractor, Source::Distractor);
}

std::vector<ImageEntry> take_sample(std::vector<ImageEntry> candidates, std::size_t count,
                                    std::uint64_t seed, std::string_view what) {
    if (candidates.size() < count) {
        throw Error(ErrorKind::Data, std::string(what) + " has " + std::to_string(candidates.size()) +
                                         " images, " + std::to_string(count) + " required");
    }
    seeded_shuffle(candidates, seed);
    candidates.resize(count);
    return candidates;
}

bool entry_order(const ManifestEntry& a, const ManifestEntry& b) {
    return std::tie(a.split, a.image.class_label, a.image.id) <
           std::tie(b.split, b.image.class_label, b.image.id);
}

json entry_to_json(const ManifestEntry& e) {
    return json{{"id", e.image.id},
                {"path", e.image.path},
                {"class", to_string(e.image.class_label)},
                {"source", to_string(e.image.source)},
                {"split", to_string(e.split)}};
}

}  // namespace

TreatmentManifest build_treatment(const TreatmentConfig& config,
                                  const std::vector<ImageEntry>& real_pool,
                                  const std::vector<ImageEntry>& synth_pool,
                                  const std::vector<ImageEntry>& distractor_pool) {
    const TreatmentPlan plan = plan_treatment(config);
    check_pools(real_pool, synth_pool, distractor_pool);

    const std::string tname(to_string(config.treatment));
    TreatmentManifest manifest;
    manifest.config = config;

    auto assign = [&](std::vector<ImageEntry> pool, std::size_t val_count, std::uint64_t seed) {
        seeded_shuffle(pool, seed);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            manifest.entries.push_back({std::move(pool[i]), i < val_count ? Split::Val : Split::Train});
        }
    };

    for (ClassLabel c : kCropClasses) {
        const std::string cname(to_string(c));
        // Independent of the treatment, so every treatment shares the test split.
        auto real = take_sample(of_class(real_pool, c), config.real_per_class,
                                derive_seed(config.seed, "real/" + cname), "class '" + cname + "' (real)");
        for (std::size_t i = 0; i < plan.test_per_class; ++i) {
            manifest.entries.push_back({real[i], Split::Test});
        }

        std::vector<ImageEntry> trainval;
        if (config.treatment != Treatment::H1) {
            trainval.assign(real.begin() + static_cast<std::ptrdiff_t>(plan.test_per_class), real.end());
        }
        if (plan.synth_per_class > 0) {
            auto synth = take_sample(of_class(synth_pool, c), plan.synth_per_class,
                                     derive_seed(config.seed, "synthetic/" + cname),
                                     "class '" + cname + "' (synthetic)");
            trainval.insert(trainval.end(), synth.begin(), synth.end());
        }
        // Entries are normalized by id before the split shuffle so the
        // outcome does not depend on how the pools were concatenated.
        trainval = sorted_by_id(std::move(trainval));
        assign(std::move(trainval), plan.per_class.val, derive_seed(config.seed, tname + "/split/" + cname));
    }

    if (plan.unknown_total > 0) {
        auto unknown = take_sample(of_class(distractor_pool, ClassLabel::Unknown), plan.unknown_total,
                                   derive_seed(config.seed, "distractor"), "class 'unknown' (distractor)");
        unknown = sorted_by_id(std::move(unknown));
        assign(std::move(unknown), plan.per_class.val, derive_seed(config.seed, tname + "/split/unknown"));
    }

    std::sort(manifest.entries.begin(), manifest.entries.end(), entry_order);
    manifest.checksum = manifest_checksum(manifest.entries);
    return manifest;
}

std::string canonical_entries(const std::vector<ManifestEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) arr.push_back(entry_to_json(e));
    return arr.dump();
}

std::string manifest_checksum(const std::vector<ManifestEntry>& entries) {
    return sha256_hex(canonical_entries(entries));
}

std::string test_split_checksum(const TreatmentManifest& manifest) {
    std::vector<ManifestEntry> test;
    for (const auto& e : manifest.entries) {
        if (e.split == Split::Test) test.push_back(e);
    }
    return manifest_checksum(test);
}

std::vector<Violation> validate_manifest(const TreatmentManifest& manifest) {
    std::vector<Violation> out;
    const auto& cfg = manifest.config;

    try {
        check_config(cfg);
    } catch (const Error& e) {
        out.push_back({std::string("config: ") + e.what(), {}});
    }

    std::map<std::string, std::vector<Split>> splits_of;
    std::vector<std::string> test_not_real, source_rule, class_source, unexpected_unknown;
    std::map<Split, std::map<ClassLabel, std::size_t>> counts;

    for (const auto& e : manifest.entries) {
        const auto& img = e.image;
        splits_of[img.id].push_back(e.split);
        counts[e.split][img.class_label] += 1;
        if (e.split == Split::Test && img.source != Source::Real) test_not_real.push_back(img.id);
        if ((img.class_label == ClassLabel::Unknown) != (img.source == Source::Distractor)) {
            class_source.push_back(img.id);
        }
        if (e.split != Split::Test) {
            const bool real_forbidden = cfg.treatment == Treatment::H1 && img.source == Source::Real;
            const bool synth_forbidden = cfg.treatment == Treatment::H0 && img.source == Source::Synthetic;
            if (real_forbidden || synth_forbidden) source_rule.push_back(img.id);
        }
        if (img.class_label == ClassLabel::Unknown && !cfg.include_unknown) unexpected_unknown.push_back(img.id);
    }

    std::vector<std::string> across, repeated;
    for (const auto& [id, splits] : splits_of) {
        if (splits.size() < 2) continue;
        const bool mixed = std::any_of(splits.begin(), splits.end(), [&](Split s) { return s != splits[0]; });
        (mixed ? across : repeated).push_back(id);
    }
    if (!across.empty()) out.push_back({"duplicate-across-splits", across});
    if (!repeated.empty()) out.push_back({"duplicate-within-split", repeated});
    if (!test_not_real.empty()) out.push_back({"test-entries-must-be-real", test_not_real});
    if (!source_rule.empty()) {
        out.push_back({std::string("source-rule: ") +
                           (cfg.treatment == Treatment::H1 ? "H1 trains on synthetic images only"
                                                           : "H0 trains on real images only"),
                       source_rule});
    }
    if (!class_source.empty()) out.push_back({"class-source-mismatch", class_source});
    if (!unexpected_unknown.empty()) out.push_back({"unknown-class-not-enabled", unexpected_unknown});

    for (Split s : {Split::Train, Split::Val, Split::Test}) {
        std::set<std::size_t> sizes;
        for (ClassLabel c : kCropClasses) sizes.insert(counts[s][c]);
        if (sizes.size() > 1) {
            std::string rule = "unbalanced-" + std::string(to_string(s)) + ":";
            for (ClassLabel c : kCropClasses) {
                rule += " " + std::string(to_string(c)) + "=" + std::to_string(counts[s][c]);
            }
            out.push_back({rule, {}});
        }
    }
    if (cfg.include_unknown && counts[Split::Train][ClassLabel::Unknown] == 0) {
        out.push_back({"unknown-class-missing", {}});
    }

    if (!std::is_sorted(manifest.entries.begin(), manifest.entries.end(), entry_order)) {
        out.push_back({"entries-not-sorted", {}});
    }
    if (manifest.checksum != manifest_checksum(manifest.entries)) {
        out.push_back({"checksum-mismatch", {}});
    }
    return out;
}

std::string manifest_to_json(const TreatmentManifest& m) {
    const auto& c = m.config;
    json doc;
    doc["treatment"] = to_string(c.treatment);
    doc["seed"] = c.seed;
    doc["config"] = {{"real_per_class", c.real_per_class},
                     {"synth_ratio", c.synth_ratio},
                     {"include_unknown", c.include_unknown},
                     {"test_fraction", c.test_fraction},
                     {"val_fraction_of_remainder", c.val_fraction_of_remainder}};
    json arr = json::array();
    for (const auto& e : m.entries) arr.push_back(entry_to_json(e));
    doc["entries"] = std::move(arr);
    doc["checksum"] = m.checksum;
    return doc.dump(2) + "\n";
}

TreatmentManifest manifest_from_json(std::string_view text) {
    TreatmentManifest m;
    try {
        const json doc = json::parse(text);
        auto t = parse_treatment(doc.at("treatment").get<std::string>());
        if (!t) throw Error(ErrorKind::Data, "manifest names an unknown treatment");
        auto& c = m.config;
        c.treatment = *t;
        c.seed = doc.at("seed").get<std::uint64_t>();
        const auto& cfg = doc.at("config");
        c.real_per_class = cfg.at("real_per_class").get<std::size_t>();
        c.synth_ratio = cfg.at("synth_ratio").get<std::size_t>();
        c.include_unknown = cfg.at("include_unknown").get<bool>();
        c.test_fraction = cfg.at("test_fraction").get<double>();
        c.val_fraction_of_remainder = cfg.at("val_fraction_of_remainder").get<double>();
        for (const auto& e : doc.at("entries")) {
            auto cls = parse_class(e.at("class").get<std::string>());
            auto src = parse_source(e.at("source").get<std::string>());
            auto split = parse_split(e.at("split").get<std::string>());
            if (!cls || !src || !split) throw Error(ErrorKind::Data, "manifest entry has an invalid enum field");
            m.entries.push_back({{e.at("id").get<std::string>(), e.at("path").get<std::string>(), *cls, *src},
                                 *split});
        }
        m.checksum = doc.at("checksum").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Data, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

namespace {

void scan_dir(const std::filesystem::path& dir, const std::filesystem::path& root, ClassLabel cls,
              Source src, std::vector<ImageEntry>& out) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) return;
    std::vector<fs::path> files;
    for (const auto& f : fs::recursive_directory_iterator(dir)) {
        if (!f.is_regular_file()) continue;
        if (f.path().filename().string().starts_with(".")) continue;
        files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto rel = fs::relative(f, root).generic_string();
        out.push_back({rel, rel, cls, src});
    }
}

Pools load_listing(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Data, "cannot read pool listing " + file.string());
    Pools pools;
    std::string line;
    std::getline(in, line);
    if (trim(line) != "path,class,source") {
        throw Error(ErrorKind::Data, "pool listing must start with header path,class,source");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        auto cls = f.size() == 3 ? parse_class(f[1]) : std::nullopt;
        auto src = f.size() == 3 ? parse_source(f[2]) : std::nullopt;
        if (!cls || !src) {
            throw Error(ErrorKind::Data, "pool listing line " + std::to_string(lineno) + " is malformed");
        }
        ImageEntry e{f[0], f[0], *cls, *src};
        switch (*src) {
            case Source::Real: pools.real.push_back(std::move(e)); break;
            case Source::Synthetic: pools.synthetic.push_back(std::move(e)); break;
            case Source::Distractor: pools.distractor.push_back(std::move(e)); break;
        }
    }
    return pools;
}

}  // namespace

Pools load_pools(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(root)) return load_listing(root);
    if (!fs::is_directory(root)) throw Error(ErrorKind::Data, "pool path " + root.string() + " does not exist");
    Pools pools;
    for (ClassLabel c : kCropClasses) {
        scan_dir(root / "real" / std::string(to_string(c)), root, c, Source::Real, pools.real);
        scan_dir(root / "synthetic" / std::string(to_string(c)), root, c, Source::Synthetic, pools.synthetic);
    }
    scan_dir(root / "distractor", root, ClassLabel::Unknown, Source::Distractor, pools.distractor);
    return pools;
}

}  // namespace hybrideval
