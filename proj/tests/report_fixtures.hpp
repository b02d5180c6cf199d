#pragma once

// Fixed inputs for the report goldens, shared by the unit and acceptance tests.

#include "hybrideval/report.hpp"
#include "hybrideval/util.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>

namespace fixtures {

using namespace hybrideval;

// The H3 outcome: one virus image predicted fungal, everything else right.
inline ConfusionMatrix h3_confusion() {
    return {{"fungal", "healthy", "virus"}, {{114, 0, 0}, {0, 113, 0}, {1, 0, 112}}};
}

inline ConfusionMatrix h0_confusion() {
    return {{"fungal", "healthy", "virus"}, {{100, 6, 8}, {4, 105, 4}, {9, 3, 101}}};
}

// Four classes; nothing is ever predicted unknown, so its precision is 0/0.
inline ConfusionMatrix h4_confusion() {
    return {{"fungal", "healthy", "virus", "unknown"},
            {{110, 1, 1, 0}, {0, 112, 0, 0}, {2, 0, 110, 0}, {3, 2, 1, 0}}};
}

// Twelve points in three loose groups plus three distractors.
inline void scatter_fixture(Matrix& coords, std::vector<std::string>& labels) {
    const double xy[15][2] = {{-4.0, 1.0},  {-3.5, 1.6}, {-4.4, 0.7}, {-3.9, 1.3}, {2.0, 3.5},
                              {2.6, 3.1},   {1.7, 3.9},  {2.2, 2.8},  {0.5, -3.0}, {0.9, -3.6},
                              {0.1, -2.7},  {0.6, -3.3}, {5.0, -1.0}, {-1.0, -5.0}, {4.1, 0.2}};
    const char* names[4] = {"fungal", "healthy", "virus", "unknown"};
    coords = Matrix(15, 2);
    labels.clear();
    for (std::size_t i = 0; i < 15; ++i) {
        coords(i, 0) = xy[i][0];
        coords(i, 1) = xy[i][1];
        labels.emplace_back(names[i < 12 ? i / 4 : 3]);
    }
}

inline std::vector<TreatmentMetrics> table_metrics() {
    return {summarize("H0", h0_confusion()), summarize("H3", h3_confusion()), summarize("H4", h4_confusion())};
}

inline std::vector<ClusterScore> table_scores() {
    return {{"H0", "tsne", "2d", 0.3125, 1.2449}, {"H0", "umap", "2d", 0.4051, 0.9875},
            {"H0", "none", "embedding", 0.1482, 2.0031}, {"H3", "tsne", "2d", 0.6149, 0.5550},
            {"H3", "umap", "2d", 0.7735, 0.3385}, {"H3", "none", "embedding", 0.3917, 1.0104}};
}

// Byte comparison against tests/golden/<name>. With HYBRIDEVAL_UPDATE_GOLDENS
// set, the golden is rewritten instead and the comparison trivially passes.
inline bool matches_golden(const std::string& name, const std::string& actual) {
    const std::filesystem::path path = std::filesystem::path(GOLDEN_DIR) / name;
    if (std::getenv("HYBRIDEVAL_UPDATE_GOLDENS") != nullptr) {
        write_file_atomic(path, actual);
        return true;
    }
    if (!std::filesystem::exists(path)) return false;
    return read_file(path) == actual;
}

}  // namespace fixtures
