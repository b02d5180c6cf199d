#pragma once

// Treatment construction: turns pools of real, synthetic and distractor
// images into balanced, reproducible train/val/test manifests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybrideval {

enum class ClassLabel { Fungal, Healthy, Virus, Unknown };
enum class Source { Real, Synthetic, Distractor };
enum class Split { Train, Val, Test };
enum class Treatment { H0, H1, H2, H3, H4 };

/// The three disease classes, in canonical order.
inline constexpr ClassLabel kCropClasses[] = {ClassLabel::Fungal, ClassLabel::Healthy,
                                              ClassLabel::Virus};

std::string_view to_string(ClassLabel c);
std::string_view to_string(Source s);
std::string_view to_string(Split s);
std::string_view to_string(Treatment t);

std::optional<ClassLabel> parse_class(std::string_view text);
std::optional<Source> parse_source(std::string_view text);
std::optional<Split> parse_split(std::string_view text);
std::optional<Treatment> parse_treatment(std::string_view text);

/// Parses "H0..H4", "H0,H2,H3" or a single name. Throws Error(Data) on junk.
std::vector<Treatment> parse_treatment_list(std::string_view text);

struct ImageEntry {
    std::string id;
    std::string path;
    ClassLabel class_label = ClassLabel::Fungal;
    Source source = Source::Real;

    bool operator==(const ImageEntry&) const = default;
};

struct TreatmentConfig {
    Treatment treatment = Treatment::H0;
    std::size_t real_per_class = 750;
    std::size_t synth_ratio = 0;
    bool include_unknown = false;
    double test_fraction = 0.15;
    double val_fraction_of_remainder = 0.20;
    std::uint64_t seed = 0;

    bool operator==(const TreatmentConfig&) const = default;
};

/// Canonical H0-H4 settings: synthetic ratios 0/1/1/10/10, unknown class on H4.
TreatmentConfig default_config(Treatment t, std::uint64_t seed, std::size_t real_per_class = 750);

struct ManifestEntry {
    ImageEntry image;
    Split split = Split::Train;

    bool operator==(const ManifestEntry&) const = default;
};

struct TreatmentManifest {
    TreatmentConfig config;
    std::vector<ManifestEntry> entries;  // sorted by (split, class, id)
    std::string checksum;                // SHA-256 of the canonical entry list
};

enum class SplitMode { ThreeWay, TwoWay };

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;

    bool operator==(const SplitCounts&) const = default;
};

/// Rounds pool_size * fraction to the nearest integer, ties to even. The
/// product is rounded as an exact real number, so a fraction such as 0.15,
/// whose binary value sits just below 0.15, never produces a false tie.
std::size_t round_fraction(std::size_t pool_size, double fraction);

/// Train/val/test sizes for a pool. ThreeWay takes test, then val, from the
/// full pool; TwoWay takes only val (test = 0). Throws Error(Data) if any
/// produced split would be empty.
SplitCounts split_counts(std::size_t pool_size, double test_fraction, double val_fraction,
                         SplitMode mode);

/// Per-class sizes a treatment will request from the pools.
struct TreatmentPlan {
    std::size_t test_per_class = 0;
    std::size_t real_trainval_per_class = 0;
    std::size_t synth_per_class = 0;
    std::size_t unknown_total = 0;
    SplitCounts per_class;  // train/val/test sizes of each balanced class
};

TreatmentPlan plan_treatment(const TreatmentConfig& config);

/// Builds one treatment. Deterministic in (pools, config); the test split
/// depends only on (real_pool, real_per_class, test_fraction, seed), so it is
/// shared by every treatment built from the same inputs.
/// Throws Error(Data) naming the deficient class, or the duplicated id.
TreatmentManifest build_treatment(const TreatmentConfig& config,
                                  const std::vector<ImageEntry>& real_pool,
                                  const std::vector<ImageEntry>& synth_pool,
                                  const std::vector<ImageEntry>& distractor_pool);

struct Violation {
    std::string rule;
    std::vector<std::string> ids;
};

/// Checks every manifest invariant. Violations are returned, not thrown.
std::vector<Violation> validate_manifest(const TreatmentManifest& manifest);

/// Canonical JSON text of the entry list; the checksum is its SHA-256.
std::string canonical_entries(const std::vector<ManifestEntry>& entries);
std::string manifest_checksum(const std::vector<ManifestEntry>& entries);

/// Checksum of only the test entries, for cross-treatment comparison.
std::string test_split_checksum(const TreatmentManifest& manifest);

std::string manifest_to_json(const TreatmentManifest& manifest);
TreatmentManifest manifest_from_json(std::string_view text);

/// Image pools on disk.
struct Pools {
    std::vector<ImageEntry> real;
    std::vector<ImageEntry> synthetic;
    std::vector<ImageEntry> distractor;
};

/// Loads pools either from a directory tree
///   <root>/real/<class>/*, <root>/synthetic/<class>/*, <root>/distractor/**
/// or from a CSV listing file with header `path,class,source`.
/// Missing source directories yield empty pools. Ids are the relative paths.
Pools load_pools(const std::filesystem::path& root);

}  // namespace hybrideval
