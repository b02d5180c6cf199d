#pragma once

// Confusion matrices and per-class precision / recall / F1.

#include <cstdint>
#include <string>
#include <vector>

namespace hybrideval {

struct EvalRecord {
    std::string id;
    std::size_t true_label = 0;
    std::size_t pred_label = 0;
    std::vector<double> probs;
};

/// Counts indexed [true][predicted].
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::uint64_t>> counts;

    std::size_t size() const { return counts.size(); }
    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t t) const;
    std::uint64_t col_sum(std::size_t p) const;

    bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

/// Index of the largest probability, lowest index on ties.
std::size_t argmax(const std::vector<double>& probs);

/// Empty string when the record satisfies the EvalRecord invariants,
/// otherwise a message describing the first broken one.
std::string check_record(const EvalRecord& record, std::size_t num_classes);

/// Throws Error(Predictions) naming the record id on an out-of-range label.
/// When class_names is empty, names default to "0", "1", ...
ConfusionMatrix confusion_matrix(const std::vector<EvalRecord>& records, std::size_t num_classes,
                                 std::vector<std::string> class_names = {});

/// 0/0 ratios are reported as 0.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

/// Support-weighted mean of per-class F1. Throws if every support is zero.
double weighted_f1(const std::vector<ClassMetrics>& metrics);

/// Trace over total. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// F1 from TP/FP/FN pooled over all classes.
double micro_f1(const ConfusionMatrix& cm);

}  // namespace hybrideval
