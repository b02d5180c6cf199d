#pragma once

// Subcommand implementations. Each returns a process exit code:
//   0 ok, 2 data/manifest, 3 predictions, 4 projection, 5 report,
//   64 usage; a failing trainer's own exit code is passed through.

#include "hybrideval/dataspec.hpp"
#include "hybrideval/tsne.hpp"
#include "hybrideval/umap.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hybrideval {

inline constexpr int kExitUsage = 64;

struct ManifestOptions {
    std::filesystem::path pools;
    std::vector<Treatment> treatments;
    std::uint64_t seed = 42;
    std::size_t real_per_class = 750;
    std::filesystem::path out;
};

struct EvalOptions {
    std::filesystem::path predictions;
    std::string treatment = "adhoc";
    std::filesystem::path out;
};

enum class Method { Tsne, Umap, Both };

struct ProjectOptions {
    std::filesystem::path embeddings;
    std::filesystem::path sidecar;  // defaults to the CSV path with a .json extension
    std::string treatment = "adhoc";
    Method method = Method::Both;
    TsneParams tsne;
    UmapParams umap;
    std::filesystem::path out;
};

struct ReportOptions {
    std::filesystem::path out;  // run root holding eval/ and projection/
    std::vector<std::string> treatments;  // empty: every treatment under eval/
};

struct PipelineOptions {
    std::optional<std::filesystem::path> pools;
    std::vector<Treatment> treatments;
    std::uint64_t seed = 42;
    std::size_t real_per_class = 750;
    std::filesystem::path out;
    std::string trainer_cmd;
    bool skip_train = false;
    std::optional<std::filesystem::path> predictions;  // fixture interchange root
    Method method = Method::Both;
    TsneParams tsne;
    UmapParams umap;
};

int cmd_manifest(const ManifestOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_project(const ProjectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);
int cmd_pipeline(const PipelineOptions& opts, std::ostream& out, std::ostream& err);

/// "1234567" -> "1,234,567".
std::string with_thousands(std::size_t value);

/// Replaces {manifest}, {out}, {seed} and {treatment} in a trainer template,
/// single-quoting each substituted value for the shell.
std::string expand_trainer_command(const std::string& tmpl, const std::filesystem::path& manifest,
                                   const std::filesystem::path& out_dir, std::uint64_t seed,
                                   const std::string& treatment);

}  // namespace hybrideval
