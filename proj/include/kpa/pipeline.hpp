#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kpa/config.hpp"
#include "kpa/ingest.hpp"
#include "kpa/metrics.hpp"
#include "kpa/selection.hpp"

namespace kpa {

class MatchScorer;
class QualityScorer;

/// Analysis of one topic, or one topic+stance when stances are split.
struct GroupResult {
    std::string topic;
    Stance stance = Stance::None;
    std::vector<Comment> comments;  // the analyzed (filtered) comments
    std::size_t candidate_count = 0;
    std::vector<KeyPointResult> key_points;
    std::map<std::string, std::vector<Assignment>> assignments;
    std::vector<std::string> unmatched;

    double candidate_fraction() const;
    /// Fraction of comments assigned to at least one key point.
    double coverage() const;

    bool operator==(const GroupResult&) const = default;
};

struct AnalysisResult {
    AnalysisConfig config;
    std::string dataset_name;
    std::size_t input_comments = 0;
    std::vector<std::string> filtered_out;  // ids removed by the corpus filters
    std::vector<GroupResult> groups;

    bool operator==(const AnalysisResult&) const = default;
};

/// Filter the dataset, then per topic (and stance, when configured): extract
/// candidates, select key points, keep the top max_kps and match every
/// comment to them with the final policy. A group without candidates gets
/// no key points and all of its comments unmatched.
AnalysisResult run_analysis(const Dataset& dataset, const AnalysisConfig& cfg, const MatchScorer& scorer,
                            const QualityScorer& quality);

/// Re-runs only the final matching of every group against the given key
/// point lists (group index -> key points), as after an analyst revision.
AnalysisResult rematch(const AnalysisResult& previous, const std::vector<std::vector<KeyPointResult>>& key_points,
                       const MatchScorer& scorer);

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;
};

/// Cross-validation folds over topics. make() shuffles the topics by seed,
/// cuts them into `folds` test blocks, takes the following topics
/// (cyclically) as dev and leaves the rest for training. With 28 topics and
/// 4 folds this gives 17/4/7.
struct FoldSpec {
    std::vector<Fold> folds;

    static FoldSpec make(std::vector<std::string> topics, std::size_t folds, std::uint64_t seed);
    /// Throws DataError unless the sets are disjoint per fold and every topic
    /// is tested exactly once.
    void validate(const std::vector<std::string>& topics) const;
};

using ScorerProvider = std::function<std::shared_ptr<const MatchScorer>(std::size_t fold_index, const Fold& fold)>;

struct PolicyEvaluation {
    PolicyKind kind = PolicyKind::BM;
    std::optional<double> threshold;  // tuned on dev, absent for bm
    ConfusionCounts counts;
    Metrics metrics;
};

struct FoldEvaluation {
    std::size_t fold = 0;
    std::vector<PolicyEvaluation> policies;
};

struct MatchingEvaluation {
    std::vector<FoldEvaluation> folds;
    /// Per-policy mean of the fold metrics, in the requested policy order.
    std::vector<std::pair<PolicyKind, Metrics>> average;
};

MatchingEvaluation run_matching_eval(std::span<const LabeledPair> pairs, const FoldSpec& folds,
                                     const ScorerProvider& scorer_for_fold, std::span<const PolicyKind> policies,
                                     unsigned workers = 1);

}  // namespace kpa
