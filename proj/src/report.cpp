#include "hybrideval/report.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/rng.hpp"
#include "hybrideval/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

namespace hybrideval {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kPalette{{
    {"fungal", "blue"},
    {"healthy", "green"},
    {"virus", "red"},
    {"unknown", "violet"},
}};

constexpr std::array<std::string_view, 6> kExtraColors{"orange", "teal", "saddlebrown", "gray", "gold", "black"};

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_open(int width, int height) {
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    return s.str();
}

}  // namespace

std::string class_color(std::string_view name) {
    for (const auto& [cls, color] : kPalette) {
        if (cls == name) return std::string(color);
    }
    return std::string(kExtraColors[fnv1a64(name) % kExtraColors.size()]);
}

std::vector<std::string> legend_order(std::vector<std::string> names) {
    auto rank = [](const std::string& n) {
        for (std::size_t i = 0; i < kPalette.size(); ++i) {
            if (kPalette[i].first == n) return i;
        }
        return kPalette.size();
    };
    std::sort(names.begin(), names.end(), [&](const auto& a, const auto& b) {
        const auto ra = rank(a), rb = rank(b);
        return ra != rb ? ra < rb : a < b;
    });
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

std::string confusion_svg(const ConfusionMatrix& cm, std::string_view title) {
    constexpr int kCell = 80, kLeft = 120, kTop = 80, kRight = 20, kBottom = 60;
    const int c = static_cast<int>(cm.size());
    const int width = kLeft + c * kCell + kRight;
    const int height = kTop + c * kCell + kBottom;

    std::ostringstream s;
    s << svg_open(width, height);
    s << "<g font-family=\"sans-serif\">\n";
    if (!title.empty()) {
        s << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">" << xml_escape(title)
          << "</text>\n";
    }
    s << "<text x=\"" << kLeft + c * kCell / 2 << "\" y=\"" << kTop - 36
      << "\" font-size=\"13\" text-anchor=\"middle\">Predicted label</text>\n";
    s << "<text x=\"24\" y=\"" << kTop + c * kCell / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 24 "
      << kTop + c * kCell / 2 << ")\">True label</text>\n";

    for (int p = 0; p < c; ++p) {
        s << "<text x=\"" << kLeft + p * kCell + kCell / 2 << "\" y=\"" << kTop - 10
          << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(cm.class_names[static_cast<std::size_t>(p)])
          << "</text>\n";
    }
    for (int t = 0; t < c; ++t) {
        const auto& row = cm.counts[static_cast<std::size_t>(t)];
        const auto row_max = *std::max_element(row.begin(), row.end());
        s << "<text x=\"" << kLeft - 10 << "\" y=\"" << kTop + t * kCell + kCell / 2 + 4
          << "\" font-size=\"12\" text-anchor=\"end\">" << xml_escape(cm.class_names[static_cast<std::size_t>(t)])
          << "</text>\n";
        for (int p = 0; p < c; ++p) {
            const auto count = row[static_cast<std::size_t>(p)];
            const double intensity = row_max == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(row_max);
            // White to dark blue.
            const int r = static_cast<int>(std::lround(255.0 + (8.0 - 255.0) * intensity));
            const int g = static_cast<int>(std::lround(255.0 + (48.0 - 255.0) * intensity));
            const int b = static_cast<int>(std::lround(255.0 + (107.0 - 255.0) * intensity));
            const int x = kLeft + p * kCell, y = kTop + t * kCell;
            s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
              << "\" fill=\"rgb(" << r << ',' << g << ',' << b << ")\" stroke=\"#999999\" stroke-width=\"1\""
              << " data-true=\"" << t << "\" data-pred=\"" << p << "\" data-intensity=\"" << fixed2(intensity) << "\"/>\n";
            s << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 5 << "\" font-size=\"15\" text-anchor=\"middle\" fill=\""
              << (intensity > 0.5 ? "white" : "black") << "\">" << count << "</text>\n";
        }
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

void render_confusion_svg(const ConfusionMatrix& cm, const std::filesystem::path& out, std::string_view title) {
    write_file_atomic(out, confusion_svg(cm, title));
}

std::string scatter_svg(const Matrix& coords, const std::vector<std::string>& labels, std::string_view title) {
    if (labels.size() != coords.rows) throw Error(ErrorKind::Report, "scatter labels must match the point count");
    if (coords.rows > 0 && coords.cols < 2) throw Error(ErrorKind::Report, "scatter needs two coordinate columns");
    for (double v : coords.data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Report, "scatter coordinates must be finite");
    }
    constexpr int kWidth = 640, kHeight = 480;
    constexpr double kPlotX = 20, kPlotY = 40, kPlotW = 460, kPlotH = 420;
    constexpr double kMargin = 0.05;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (std::size_t i = 0; i < coords.rows; ++i) {
        xmin = std::min(xmin, coords(i, 0));
        xmax = std::max(xmax, coords(i, 0));
        ymin = std::min(ymin, coords(i, 1));
        ymax = std::max(ymax, coords(i, 1));
    }
    // Zero extent maps to the center of the viewport.
    auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.5; };
    const double inner_w = kPlotW * (1.0 - 2.0 * kMargin), inner_h = kPlotH * (1.0 - 2.0 * kMargin);

    std::ostringstream s;
    s << svg_open(kWidth, kHeight);
    s << "<g font-family=\"sans-serif\">\n";
    if (!title.empty()) {
        s << "<text x=\"" << kPlotX + kPlotW / 2 << "\" y=\"26\" font-size=\"16\" text-anchor=\"middle\">" << xml_escape(title)
          << "</text>\n";
    }
    s << "<rect x=\"" << kPlotX << "\" y=\"" << kPlotY << "\" width=\"" << kPlotW << "\" height=\"" << kPlotH
      << "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
    s << "<g fill-opacity=\"0.6\">\n";
    for (std::size_t i = 0; i < coords.rows; ++i) {
        const double px = kPlotX + kPlotW * kMargin + inner_w * scale(coords(i, 0), xmin, xmax);
        const double py = kPlotY + kPlotH * kMargin + inner_h * (1.0 - scale(coords(i, 1), ymin, ymax));
        s << "<circle cx=\"" << fixed2(px) << "\" cy=\"" << fixed2(py) << "\" r=\"3\" fill=\"" << class_color(labels[i])
          << "\"/>\n";
    }
    s << "</g>\n";

    const auto legend = legend_order(labels);
    s << "<g class=\"legend\">\n";
    for (std::size_t k = 0; k < legend.size(); ++k) {
        const int y = static_cast<int>(kPlotY) + 20 + static_cast<int>(k) * 22;
        s << "<circle cx=\"510\" cy=\"" << y << "\" r=\"6\" fill=\"" << class_color(legend[k]) << "\"/>\n";
        s << "<text x=\"524\" y=\"" << y + 5 << "\" font-size=\"13\">" << xml_escape(legend[k]) << "</text>\n";
    }
    s << "</g>\n</g>\n</svg>\n";
    return s.str();
}

void render_scatter_svg(const Matrix& coords, const std::vector<std::string>& labels, const std::filesystem::path& out,
                        std::string_view title) {
    write_file_atomic(out, scatter_svg(coords, labels, title));
}

TreatmentMetrics summarize(std::string treatment, const ConfusionMatrix& cm) {
    TreatmentMetrics m;
    m.treatment = std::move(treatment);
    m.class_names = cm.class_names;
    m.per_class = per_class_metrics(cm);
    m.weighted_f1 = weighted_f1(m.per_class);
    m.accuracy = accuracy(cm);
    for (std::size_t c = 0; c < cm.size(); ++c) {
        m.undefined_ratio.push_back(cm.row_sum(c) == 0 || cm.col_sum(c) == 0);
    }
    return m;
}

std::string tables_markdown(const std::vector<TreatmentMetrics>& metrics, const std::vector<ClusterScore>& scores) {
    std::ostringstream s;
    s << "# Evaluation report\n\n";
    s << "## Classification metrics\n\n";
    bool zero_ratio = false;
    for (const auto& t : metrics) {
        s << "### " << t.treatment << "\n\n";
        s << "| Class | Precision | Recall | F1-score | Weighted average F1-score |\n";
        s << "|---|---|---|---|---|\n";
        const std::size_t weighted_row = t.per_class.empty() ? 0 : (t.per_class.size() - 1) / 2;
        for (std::size_t c = 0; c < t.per_class.size(); ++c) {
            const auto& m = t.per_class[c];
            const bool undefined = c < t.undefined_ratio.size() && t.undefined_ratio[c];
            zero_ratio = zero_ratio || undefined;
            s << "| " << t.class_names[c] << (undefined ? "\\*" : "") << " | " << format_half_up(m.precision, 2) << " | "
              << format_half_up(m.recall, 2) << " | " << format_half_up(m.f1, 2) << " | "
              << (c == weighted_row ? format_half_up(t.weighted_f1, 2) : "") << " |\n";
        }
        s << "\nAccuracy: " << format_half_up(t.accuracy, 2) << "\n\n";
    }
    if (metrics.empty()) s << "_No classification metrics available._\n\n";
    if (zero_ratio) s << "\\* Undefined ratios (0/0, no predictions or no support for the class) are reported as 0.\n\n";

    s << "## Clustering metrics\n\n";
    std::vector<ClusterScore> projected, raw;
    for (const auto& sc : scores) (sc.space == "embedding" ? raw : projected).push_back(sc);
    if (scores.empty()) {
        s << "_No clustering scores available; section omitted._\n";
        return s.str();
    }
    if (!projected.empty()) {
        std::vector<std::string> treatments;
        for (const auto& sc : projected) {
            if (std::find(treatments.begin(), treatments.end(), sc.treatment) == treatments.end()) {
                treatments.push_back(sc.treatment);
            }
        }
        auto cell = [&](const std::string& t, const std::string& method, bool sil) -> std::string {
            for (const auto& sc : projected) {
                if (sc.treatment == t && sc.method == method) return format_half_up(sil ? sc.silhouette : sc.dbi, 2);
            }
            return "-";
        };
        s << "| Treatment | t-SNE Silhouette<sup>[1]</sup> | t-SNE DBI<sup>[2]</sup> | UMAP Silhouette<sup>[1]</sup> | UMAP DBI<sup>[2]</sup> |\n";
        s << "|---|---|---|---|---|\n";
        for (const auto& t : treatments) {
            s << "| " << t << " | " << cell(t, "tsne", true) << " | " << cell(t, "tsne", false) << " | "
              << cell(t, "umap", true) << " | " << cell(t, "umap", false) << " |\n";
        }
        s << "\n";
    }
    if (!raw.empty()) {
        s << "Scores on the raw embeddings:\n\n";
        s << "| Treatment | Silhouette<sup>[1]</sup> | DBI<sup>[2]</sup> |\n|---|---|---|\n";
        for (const auto& sc : raw) {
            s << "| " << sc.treatment << " | " << format_half_up(sc.silhouette, 2) << " | " << format_half_up(sc.dbi, 2)
              << " |\n";
        }
        s << "\n";
    }
    s << "[1] Silhouette: higher is better (range -1 to 1; members of single-point clusters score 0).\n";
    s << "[2] Davies-Bouldin index: lower is better.\n";
    return s.str();
}

void render_tables(const std::vector<TreatmentMetrics>& metrics, const std::vector<ClusterScore>& scores,
                   const std::filesystem::path& out) {
    write_file_atomic(out, tables_markdown(metrics, scores));
}

std::vector<GalleryEntry> gallery_entries(const std::vector<EvalRecord>& records,
                                          const std::vector<std::string>& class_names) {
    std::vector<GalleryEntry> out;
    for (const auto& r : records) {
        out.push_back({r.id, class_names.at(r.true_label), class_names.at(r.pred_label), r.true_label == r.pred_label});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.correct, a.true_label, a.id) < std::tie(b.correct, b.true_label, b.id);
    });
    return out;
}

std::string gallery_json(std::string_view treatment, const std::vector<GalleryEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    std::size_t correct = 0;
    for (const auto& e : entries) {
        arr.push_back({{"id", e.id}, {"true", e.true_label}, {"pred", e.pred_label}, {"correct", e.correct}});
        correct += e.correct ? 1 : 0;
    }
    nlohmann::json doc{{"treatment", treatment},
                       {"correct", correct},
                       {"incorrect", entries.size() - correct},
                       {"entries", std::move(arr)}};
    return doc.dump(2) + "\n";
}

}  // namespace hybrideval
