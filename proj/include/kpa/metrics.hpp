#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpa/ingest.hpp"
#include "kpa/policies.hpp"

namespace kpa {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision and recall are 0 when undefined; f1 is 0 when P + R = 0.
Metrics confusion_metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
inline Metrics confusion_metrics(const ConfusionCounts& c) { return confusion_metrics(c.tp, c.fp, c.fn, c.tn); }

/// Confusion counts of `policy` on scored pairs. TH decides each pair on its
/// own; BM and BM_TH pick per comment (topic, stance, comment text) the key
/// point with the highest score, ties to the smaller key point text.
ConfusionCounts evaluate_policy(std::span<const LabeledPair> pairs, const Policy& policy);

/// {0, midpoints between consecutive distinct scores, 1}, ascending.
std::vector<double> threshold_grid(std::vector<double> scores);

struct TunedThreshold {
    double threshold = 0.0;
    double f1 = 0.0;
};

/// Lowest threshold on the grid that maximizes F1 of the TH or BM_TH policy.
TunedThreshold tune_threshold(std::span<const LabeledPair> dev, PolicyKind kind);

struct SamplePoint {
    bool label = false;
    double score = 0.0;
};

struct CoverageCurve {
    std::vector<double> levels;
    std::vector<double> precision_at;
    /// Threshold realizing each value; nullopt means "cover everything".
    std::vector<std::optional<double>> thresholds_at;
};

std::vector<double> default_coverage_levels();  // 0.2, 0.4, 0.6, 0.8, 1.0

/// Highest precision over thresholds whose coverage (fraction of scores
/// strictly above the threshold) is at least each level. No interpolation.
CoverageCurve precision_at_coverage(std::span<const SamplePoint> sample, std::span<const double> levels);

/// A labeled (comment, key point, score) record of an evaluation sample.
struct SampleRecord {
    std::string comment_id;
    std::string key_point_id;
    double score = 0.0;
    bool label = false;
};

/// Line-delimited JSON {"comment_id","key_point_id","score","label"}.
std::vector<SampleRecord> load_labeled_sample(const std::string& path);

/// Keeps the best-scoring record per comment (ties: smaller key point id),
/// ordered by comment id.
std::vector<SampleRecord> best_match_per_comment(std::span<const SampleRecord> records);

/// Topic-stratified uniform sample without replacement. Quotas differ by at
/// most one; topics short of their quota give everything they have and the
/// deficit moves to the others. Deterministic for a seed.
std::vector<Comment> sample_uniform(const Dataset& dataset, std::size_t n, std::uint64_t seed);

}  // namespace kpa
