#include "hybrideval/metrics.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/util.hpp"

#include <cmath>
#include <numeric>

namespace hybrideval {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
    return sum;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const {
    return std::accumulate(counts[t].begin(), counts[t].end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t p) const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) sum += row[p];
    return sum;
}

std::size_t argmax(const std::vector<double>& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

std::string check_record(const EvalRecord& r, std::size_t num_classes) {
    if (r.true_label >= num_classes) return "true label out of range";
    if (r.pred_label >= num_classes) return "predicted label out of range";
    if (r.probs.empty()) return {};
    if (r.probs.size() != num_classes) {
        return "expected " + std::to_string(num_classes) + " probabilities, got " + std::to_string(r.probs.size());
    }
    double sum = 0.0;
    for (double p : r.probs) {
        if (!(p >= 0.0 && p <= 1.0)) return "probability " + format_double(p) + " outside [0, 1]";
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) return "probabilities sum to " + format_double(sum) + ", not 1";
    if (argmax(r.probs) != r.pred_label) return "predicted label is not the argmax of the probabilities";
    return {};
}

ConfusionMatrix confusion_matrix(const std::vector<EvalRecord>& records, std::size_t num_classes,
                                 std::vector<std::string> class_names) {
    if (class_names.empty()) {
        for (std::size_t i = 0; i < num_classes; ++i) class_names.push_back(std::to_string(i));
    }
    if (class_names.size() != num_classes) {
        throw Error(ErrorKind::Predictions, "class name count does not match num_classes");
    }
    ConfusionMatrix cm;
    cm.class_names = std::move(class_names);
    cm.counts.assign(num_classes, std::vector<std::uint64_t>(num_classes, 0));
    for (const auto& r : records) {
        if (r.true_label >= num_classes || r.pred_label >= num_classes) {
            throw Error(ErrorKind::Predictions, "record '" + r.id + "' has a label outside [0, " +
                                                    std::to_string(num_classes) + ")");
        }
        cm.counts[r.true_label][r.pred_label] += 1;
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> out(cm.size());
    for (std::size_t c = 0; c < cm.size(); ++c) {
        const auto tp = cm.counts[c][c];
        const auto support = cm.row_sum(c);
        auto& m = out[c];
        m.precision = ratio(tp, cm.col_sum(c));
        m.recall = ratio(tp, support);
        m.f1 = harmonic(m.precision, m.recall);
        m.support = support;
    }
    return out;
}

double weighted_f1(const std::vector<ClassMetrics>& metrics) {
    std::uint64_t total = 0;
    for (const auto& m : metrics) total += m.support;
    if (total == 0) throw Error(ErrorKind::Predictions, "weighted F1 needs at least one supported class");
    double sum = 0.0;
    for (const auto& m : metrics) sum += static_cast<double>(m.support) * m.f1;
    return sum / static_cast<double>(total);
}

double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw Error(ErrorKind::Predictions, "accuracy of an empty confusion matrix");
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < cm.size(); ++c) trace += cm.counts[c][c];
    return ratio(trace, total);
}

double micro_f1(const ConfusionMatrix& cm) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t c = 0; c < cm.size(); ++c) {
        tp += cm.counts[c][c];
        fp += cm.col_sum(c) - cm.counts[c][c];
        fn += cm.row_sum(c) - cm.counts[c][c];
    }
    return harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
}

}  // namespace hybrideval
