#include "kpa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

#include "kpa/error.hpp"
#include "kpa/scoring.hpp"

namespace kpa {

double GroupResult::candidate_fraction() const {
    return comments.empty() ? 0.0 : static_cast<double>(candidate_count) / static_cast<double>(comments.size());
}

double GroupResult::coverage() const {
    return comments.empty() ? 0.0
                            : static_cast<double>(comments.size() - unmatched.size()) /
                                  static_cast<double>(comments.size());
}

namespace {

void leave_unmatched(GroupResult& group) {
    group.key_points.clear();
    group.assignments.clear();
    group.unmatched.clear();
    for (const auto& c : group.comments) {
        group.assignments[c.id];
        group.unmatched.push_back(c.id);
    }
}

void apply_final_match(GroupResult& group, std::vector<KeyPointResult> key_points, const Policy& policy,
                       const MatchScorer& scorer, unsigned workers) {
    if (key_points.empty()) {
        leave_unmatched(group);
        return;
    }
    auto fm = final_match(group.comments, std::move(key_points), policy, scorer, group.topic, workers);
    group.key_points = std::move(fm.key_points);
    group.assignments = std::move(fm.assignments);
    group.unmatched = std::move(fm.unmatched);
}

}  // namespace

AnalysisResult run_analysis(const Dataset& dataset, const AnalysisConfig& cfg, const MatchScorer& scorer,
                            const QualityScorer& quality) {
    cfg.validate();
    if (dataset.comments.empty()) throw DataError("no comments");

    AnalysisResult result;
    result.config = cfg;
    result.dataset_name = dataset.name;
    result.input_comments = dataset.comments.size();

    auto kept = filter_comments(dataset.comments, cfg.filter, &quality);
    std::unordered_set<std::string> kept_ids;
    for (const auto& c : kept) kept_ids.insert(c.id);
    for (const auto& c : dataset.comments) {
        if (!kept_ids.count(c.id)) result.filtered_out.push_back(c.id);
    }

    std::map<std::pair<std::string, Stance>, std::vector<Comment>> partition;
    for (auto& c : kept) {
        Stance key_stance = cfg.per_stance ? c.stance : Stance::None;
        partition[{c.topic_id, key_stance}].push_back(std::move(c));
    }

    const double t = cfg.selection_threshold;
    SelectionOptions options{cfg.rematch_threshold, cfg.workers};
    for (auto& [key, comments] : partition) {
        GroupResult group;
        group.topic = key.first;
        group.stance = key.second;
        group.comments = std::move(comments);

        auto candidates = extract_candidates(group.comments, cfg.candidates, quality);
        group.candidate_count = candidates.size();
        if (candidates.empty()) {
            leave_unmatched(group);
        } else {
            auto items = to_items(group.comments);
            auto selected = select_key_points(items, candidates, t, scorer, group.topic, options);
            selected = truncate_key_points(std::move(selected), cfg.max_kps);
            apply_final_match(group, std::move(selected), cfg.final_policy(), scorer, cfg.workers);
        }
        result.groups.push_back(std::move(group));
    }
    return result;
}

AnalysisResult rematch(const AnalysisResult& previous, const std::vector<std::vector<KeyPointResult>>& key_points,
                       const MatchScorer& scorer) {
    if (key_points.size() != previous.groups.size())
        throw DataError("rematch: key point lists do not line up with the analysis groups");
    AnalysisResult next = previous;
    for (std::size_t g = 0; g < next.groups.size(); ++g) {
        apply_final_match(next.groups[g], key_points[g], next.config.final_policy(), scorer, next.config.workers);
    }
    return next;
}

FoldSpec FoldSpec::make(std::vector<std::string> topics, std::size_t folds, std::uint64_t seed) {
    std::sort(topics.begin(), topics.end());
    topics.erase(std::unique(topics.begin(), topics.end()), topics.end());
    const std::size_t n = topics.size();
    if (folds < 2) throw ConfigError("need at least 2 folds");
    if (n < folds) throw ConfigError("need at least as many topics as folds");
    std::mt19937_64 rng(seed);
    std::shuffle(topics.begin(), topics.end(), rng);

    FoldSpec spec;
    std::size_t start = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t size = n / folds + (f < n % folds ? 1 : 0);
        // 4 dev topics out of 28, scaled to the topic count.
        auto dev_size = static_cast<std::size_t>(std::lround(static_cast<double>(n) * 4.0 / 28.0));
        dev_size = std::clamp<std::size_t>(dev_size, 1, n - size);
        Fold fold;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t offset = (i + n - start) % n;  // position relative to the test block
            const auto& topic = topics[i];
            if (offset < size) fold.test.push_back(topic);
            else if (offset < size + dev_size) fold.dev.push_back(topic);
            else fold.train.push_back(topic);
        }
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.dev.begin(), fold.dev.end());
        std::sort(fold.test.begin(), fold.test.end());
        spec.folds.push_back(std::move(fold));
        start += size;
    }
    return spec;
}

void FoldSpec::validate(const std::vector<std::string>& topics) const {
    if (folds.empty()) throw DataError("fold spec has no folds");
    std::set<std::string> all(topics.begin(), topics.end());
    std::map<std::string, int> tested;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& fold = folds[f];
        std::set<std::string> seen;
        for (const auto* part : {&fold.train, &fold.dev, &fold.test}) {
            for (const auto& t : *part) {
                if (!seen.insert(t).second)
                    throw DataError("fold " + std::to_string(f) + ": topic '" + t + "' appears in two sets");
                if (!all.count(t)) throw DataError("fold " + std::to_string(f) + ": unknown topic '" + t + "'");
            }
        }
        if (fold.dev.empty() || fold.test.empty())
            throw DataError("fold " + std::to_string(f) + ": dev and test sets must be non-empty");
        for (const auto& t : fold.test) ++tested[t];
    }
    for (const auto& t : all) {
        if (tested[t] != 1) throw DataError("topic '" + t + "' is not tested exactly once across folds");
    }
}

MatchingEvaluation run_matching_eval(std::span<const LabeledPair> pairs, const FoldSpec& folds,
                                     const ScorerProvider& scorer_for_fold, std::span<const PolicyKind> policies,
                                     unsigned workers) {
    std::set<std::string> topic_set;
    for (const auto& p : pairs) topic_set.insert(p.topic);
    folds.validate({topic_set.begin(), topic_set.end()});
    if (policies.empty()) throw ConfigError("no policies to evaluate");

    MatchingEvaluation out;
    std::vector<Metrics> sums(policies.size());
    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
        const Fold& fold = folds.folds[f];
        std::set<std::string> dev_topics(fold.dev.begin(), fold.dev.end());
        std::set<std::string> test_topics(fold.test.begin(), fold.test.end());
        std::vector<LabeledPair> dev, test;
        for (const auto& p : pairs) {
            if (dev_topics.count(p.topic)) dev.push_back(p);
            else if (test_topics.count(p.topic)) test.push_back(p);
        }
        auto scorer = scorer_for_fold ? scorer_for_fold(f, fold) : nullptr;
        for (auto* part : {&dev, &test}) {
            if (scorer) {
                std::vector<ScorePair> requests;
                requests.reserve(part->size());
                for (const auto& p : *part) requests.push_back({p.comment_text, p.key_point_text, p.topic});
                auto scores = score_pairs(*scorer, requests, workers);
                for (std::size_t i = 0; i < part->size(); ++i) (*part)[i].score = scores[i];
            } else {
                for (const auto& p : *part) {
                    if (!p.score) throw DataError("pairs carry no scores and no scorer was given");
                }
            }
        }
        if (dev.empty() || test.empty())
            throw DataError("fold " + std::to_string(f) + ": no labeled pairs in its dev or test topics");

        FoldEvaluation fe;
        fe.fold = f;
        for (std::size_t k = 0; k < policies.size(); ++k) {
            PolicyEvaluation pe;
            pe.kind = policies[k];
            Policy policy = Policy::bm();
            if (pe.kind != PolicyKind::BM) {
                pe.threshold = tune_threshold(dev, pe.kind).threshold;
                policy = Policy{pe.kind, pe.threshold};
            }
            pe.counts = evaluate_policy(test, policy);
            pe.metrics = confusion_metrics(pe.counts);
            sums[k].accuracy += pe.metrics.accuracy;
            sums[k].precision += pe.metrics.precision;
            sums[k].recall += pe.metrics.recall;
            sums[k].f1 += pe.metrics.f1;
            fe.policies.push_back(pe);
        }
        out.folds.push_back(std::move(fe));
    }
    const auto n = static_cast<double>(folds.folds.size());
    for (std::size_t k = 0; k < policies.size(); ++k) {
        Metrics m{sums[k].accuracy / n, sums[k].precision / n, sums[k].recall / n, sums[k].f1 / n};
        out.average.emplace_back(policies[k], m);
    }
    return out;
}

}  // namespace kpa
