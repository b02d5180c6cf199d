#include "hybrideval/interchange.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace hybrideval {

using nlohmann::json;

namespace {

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

// Resolves a class given by name or by index.
std::optional<std::size_t> resolve_label(const std::string& text, const std::vector<std::string>& names) {
    auto it = std::find(names.begin(), names.end(), text);
    if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
    long long idx = 0;
    if (parse_int(text, idx) && idx >= 0 && static_cast<std::size_t>(idx) < names.size()) {
        return static_cast<std::size_t>(idx);
    }
    return std::nullopt;
}

}  // namespace

PredictionSet parse_predictions(std::string_view text) {
    auto fail = [](std::size_t line, const std::string& msg) {
        return Error(ErrorKind::Predictions, "predictions line " + std::to_string(line) + ": " + msg);
    };
    const auto lines = lines_of(text);
    if (lines.empty() || trim(lines[0]).empty()) throw Error(ErrorKind::Predictions, "predictions file is empty");

    const auto header = split_csv_line(lines[0]);
    if (header.size() < 5 || header[0] != "id" || header[1] != "true_label" || header[2] != "pred_label") {
        throw fail(1, "header must be id,true_label,pred_label,p_<class>... with at least two classes");
    }
    PredictionSet set;
    for (std::size_t c = 3; c < header.size(); ++c) {
        if (!header[c].starts_with("p_") || header[c].size() == 2) throw fail(1, "column '" + header[c] + "' is not p_<class>");
        set.class_names.push_back(header[c].substr(2));
    }
    const std::size_t nc = set.class_names.size();

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t lineno = li + 1;
        if (trim(lines[li]).empty()) continue;
        const auto f = split_csv_line(lines[li]);
        if (f.size() != header.size()) {
            throw fail(lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        EvalRecord r;
        r.id = f[0];
        if (r.id.empty()) throw fail(lineno, "empty id");
        auto t = resolve_label(f[1], set.class_names);
        auto p = resolve_label(f[2], set.class_names);
        if (!t) throw fail(lineno, "unknown true label '" + f[1] + "'");
        if (!p) throw fail(lineno, "unknown predicted label '" + f[2] + "'");
        r.true_label = *t;
        r.pred_label = *p;
        for (std::size_t c = 0; c < nc; ++c) {
            double v = 0.0;
            if (!parse_double(f[3 + c], v)) throw fail(lineno, "probability '" + f[3 + c] + "' is not a number");
            r.probs.push_back(v);
        }
        if (auto msg = check_record(r, nc); !msg.empty()) throw fail(lineno, msg);
        set.records.push_back(std::move(r));
    }
    if (set.records.empty()) throw Error(ErrorKind::Predictions, "predictions file has no rows");
    return set;
}

PredictionSet read_predictions(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Predictions, "cannot read predictions file " + path.string());
    }
    return parse_predictions(text);
}

std::string format_predictions(const PredictionSet& set) {
    std::ostringstream out;
    out << "id,true_label,pred_label";
    for (const auto& c : set.class_names) out << ",p_" << c;
    out << '\n';
    for (const auto& r : set.records) {
        out << r.id << ',' << set.class_names.at(r.true_label) << ',' << set.class_names.at(r.pred_label);
        for (double p : r.probs) out << ',' << format_double(p);
        out << '\n';
    }
    return out.str();
}

std::string format_embeddings_csv(const EmbeddingSet& emb) {
    std::ostringstream out;
    out << "id,label";
    for (std::size_t k = 0; k < emb.vectors.cols; ++k) out << ",e" << k;
    out << '\n';
    for (std::size_t i = 0; i < emb.size(); ++i) {
        out << emb.ids[i] << ',' << emb.class_names.at(emb.labels[i]);
        for (double v : emb.vectors.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

std::string format_sidecar(const EmbeddingSidecar& s) {
    json doc{{"n", s.n}, {"d", s.d}, {"class_names", s.class_names}, {"producer", s.producer}, {"checksum", s.checksum}};
    return doc.dump(2) + "\n";
}

EmbeddingSidecar parse_sidecar(std::string_view text) {
    EmbeddingSidecar s;
    try {
        const auto doc = json::parse(text);
        s.n = doc.at("n").get<std::size_t>();
        s.d = doc.at("d").get<std::size_t>();
        s.class_names = doc.at("class_names").get<std::vector<std::string>>();
        s.producer = doc.value("producer", "");
        s.checksum = doc.at("checksum").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Projection, std::string("malformed embeddings sidecar: ") + e.what());
    }
    return s;
}

EmbeddingSet parse_embeddings(std::string_view csv, const EmbeddingSidecar& sidecar) {
    auto fail = [](std::size_t line, const std::string& msg) {
        return Error(ErrorKind::Projection, "embeddings line " + std::to_string(line) + ": " + msg);
    };
    if (sha256_hex(csv) != sidecar.checksum) {
        throw Error(ErrorKind::Projection, "embeddings checksum does not match its sidecar");
    }
    const auto lines = lines_of(csv);
    if (lines.empty()) throw Error(ErrorKind::Projection, "embeddings file is empty");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") throw fail(1, "header must be id,label,e0,...");
    for (std::size_t k = 2; k < header.size(); ++k) {
        if (header[k] != "e" + std::to_string(k - 2)) throw fail(1, "expected column e" + std::to_string(k - 2));
    }
    const std::size_t d = header.size() - 2;
    if (d != sidecar.d) throw Error(ErrorKind::Projection, "embedding width " + std::to_string(d) + " != sidecar d");

    EmbeddingSet emb;
    emb.class_names = sidecar.class_names;
    std::vector<double> values;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto f = split_csv_line(lines[li]);
        if (f.size() != header.size()) throw fail(li + 1, "wrong field count");
        auto label = resolve_label(f[1], emb.class_names);
        if (!label) throw fail(li + 1, "unknown label '" + f[1] + "'");
        emb.ids.push_back(f[0]);
        emb.labels.push_back(*label);
        for (std::size_t k = 0; k < d; ++k) {
            double v = 0.0;
            if (!parse_double(f[2 + k], v) || !std::isfinite(v)) throw fail(li + 1, "bad value '" + f[2 + k] + "'");
            values.push_back(v);
        }
    }
    if (emb.ids.size() != sidecar.n) {
        throw Error(ErrorKind::Projection, "embeddings have " + std::to_string(emb.ids.size()) +
                                               " rows, sidecar says " + std::to_string(sidecar.n));
    }
    emb.vectors.rows = emb.ids.size();
    emb.vectors.cols = d;
    emb.vectors.data = std::move(values);
    return emb;
}

EmbeddingSet read_embeddings(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
    std::string csv_text, side_text;
    try {
        csv_text = read_file(csv);
        side_text = read_file(sidecar);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Projection, e.what());
    }
    return parse_embeddings(csv_text, parse_sidecar(side_text));
}

void write_embeddings(const std::filesystem::path& csv, const std::filesystem::path& sidecar,
                      const EmbeddingSet& emb, const std::string& producer) {
    const std::string text = format_embeddings_csv(emb);
    EmbeddingSidecar s{emb.size(), emb.vectors.cols, emb.class_names, producer, sha256_hex(text)};
    write_file_atomic(csv, text);
    write_file_atomic(sidecar, format_sidecar(s));
}

std::string format_projection_csv(const EmbeddingSet& emb, const ProjectionResult& result) {
    static constexpr const char* kAxes[] = {"x", "y", "z"};
    std::ostringstream out;
    out << "id,label";
    for (std::size_t c = 0; c < result.coords.cols; ++c) out << ',' << kAxes[c];
    out << '\n';
    for (std::size_t i = 0; i < emb.size(); ++i) {
        out << emb.ids[i] << ',' << emb.class_names.at(emb.labels[i]);
        for (double v : result.coords.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

std::string format_projection_diagnostics(const std::string& method, const ProjectionResult& result) {
    json params = json::object();
    for (const auto& [k, v] : result.params) params[k] = v;
    json doc{{"method", method},
             {"seed", result.seed},
             {"params", params},
             {"final_loss", result.final_loss()},
             {"loss_trace", result.loss_trace},
             {"metric", "euclidean"},
             {"warnings", result.warnings}};
    return doc.dump(2) + "\n";
}

ProjectionTable parse_projection_csv(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw Error(ErrorKind::Report, "projection file is empty");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 4 || header[0] != "id" || header[1] != "label" || header[2] != "x" || header[3] != "y") {
        throw Error(ErrorKind::Report, "projection header must be id,label,x,y");
    }
    ProjectionTable t;
    std::vector<double> values;
    const std::size_t dims = header.size() - 2;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto f = split_csv_line(lines[li]);
        if (f.size() != header.size()) throw Error(ErrorKind::Report, "projection line " + std::to_string(li + 1) + " malformed");
        t.ids.push_back(f[0]);
        t.labels.push_back(f[1]);
        for (std::size_t k = 0; k < dims; ++k) {
            double v = 0.0;
            if (!parse_double(f[2 + k], v)) throw Error(ErrorKind::Report, "projection line " + std::to_string(li + 1) + " malformed");
            values.push_back(v);
        }
    }
    t.coords.rows = t.ids.size();
    t.coords.cols = dims;
    t.coords.data = std::move(values);
    return t;
}

}  // namespace hybrideval
