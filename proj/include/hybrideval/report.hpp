#pragma once

// SVG figures and markdown tables for a set of treatments.

#include "hybrideval/matrix.hpp"
#include "hybrideval/metrics.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hybrideval {

/// Fixed class colors: fungal blue, healthy green, virus red, unknown violet.
/// Other names map to a secondary palette by a hash of the name, so a class
/// keeps its color regardless of the order classes appear in.
std::string class_color(std::string_view class_name);

/// Palette order of the named classes first, then the rest alphabetically.
std::vector<std::string> legend_order(std::vector<std::string> class_names);

std::string confusion_svg(const ConfusionMatrix& cm, std::string_view title = "");
void render_confusion_svg(const ConfusionMatrix& cm, const std::filesystem::path& out,
                          std::string_view title = "");

/// One circle per row of `coords` (first two columns), colored by label.
std::string scatter_svg(const Matrix& coords, const std::vector<std::string>& labels,
                        std::string_view title = "");
void render_scatter_svg(const Matrix& coords, const std::vector<std::string>& labels,
                        const std::filesystem::path& out, std::string_view title = "");

struct TreatmentMetrics {
    std::string treatment;
    std::vector<std::string> class_names;
    std::vector<ClassMetrics> per_class;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<bool> undefined_ratio;  // class had no predictions or no support
};

TreatmentMetrics summarize(std::string treatment, const ConfusionMatrix& cm);

struct ClusterScore {
    std::string treatment;
    std::string method;  // "tsne", "umap", or "none" for raw embeddings
    std::string space;   // "2d" or "embedding"
    double silhouette = 0.0;
    double dbi = 0.0;
};

std::string tables_markdown(const std::vector<TreatmentMetrics>& metrics,
                            const std::vector<ClusterScore>& scores);
void render_tables(const std::vector<TreatmentMetrics>& metrics, const std::vector<ClusterScore>& scores,
                   const std::filesystem::path& out);

struct GalleryEntry {
    std::string id;
    std::string true_label;
    std::string pred_label;
    bool correct = false;
};

/// Misclassified samples first, then by true class and id.
std::vector<GalleryEntry> gallery_entries(const std::vector<EvalRecord>& records,
                                          const std::vector<std::string>& class_names);
std::string gallery_json(std::string_view treatment, const std::vector<GalleryEntry>& entries);

}  // namespace hybrideval
