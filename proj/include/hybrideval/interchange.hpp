#pragma once

// File formats shared with the trainer and between pipeline stages.
//
//   predictions.csv   id,true_label,pred_label,p_<class0>,...,p_<classC-1>
//   embeddings.csv    id,label,e0,...,e{d-1}
//   embeddings.json   {n, d, class_names, producer, checksum}
//   <method>.csv      id,label,x,y
//   <method>.json     {method, seed, params, final_loss, loss_trace, warnings}
//
// Labels are written as class names; integer class indices are accepted on
// input. Checksums are SHA-256 of the exact CSV bytes.

#include "hybrideval/metrics.hpp"
#include "hybrideval/projection.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hybrideval {

struct PredictionSet {
    std::vector<std::string> class_names;
    std::vector<EvalRecord> records;
};

/// Throws Error(Predictions) with the 1-based line number of the first
/// malformed or invariant-violating row. An empty file is an error.
PredictionSet parse_predictions(std::string_view text);
PredictionSet read_predictions(const std::filesystem::path& path);
std::string format_predictions(const PredictionSet& set);

struct EmbeddingSidecar {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::string> class_names;
    std::string producer;
    std::string checksum;
};

std::string format_embeddings_csv(const EmbeddingSet& emb);
std::string format_sidecar(const EmbeddingSidecar& sidecar);
EmbeddingSidecar parse_sidecar(std::string_view text);

/// Parses the CSV using the sidecar's class list and checks n, d and the
/// checksum against it. Throws Error(Projection).
EmbeddingSet parse_embeddings(std::string_view csv, const EmbeddingSidecar& sidecar);
EmbeddingSet read_embeddings(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

/// Writes both files atomically; the sidecar checksum is computed here.
void write_embeddings(const std::filesystem::path& csv, const std::filesystem::path& sidecar,
                      const EmbeddingSet& emb, const std::string& producer);

struct ProjectionTable {
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    Matrix coords;
};

std::string format_projection_csv(const EmbeddingSet& emb, const ProjectionResult& result);
std::string format_projection_diagnostics(const std::string& method, const ProjectionResult& result);
ProjectionTable parse_projection_csv(std::string_view text);

}  // namespace hybrideval
