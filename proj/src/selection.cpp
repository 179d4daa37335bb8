#include "kpa/selection.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "kpa/error.hpp"
#include "kpa/scoring.hpp"

namespace kpa {

std::string_view to_string(ItemKind kind) { return kind == ItemKind::Comment ? "comment" : "candidate"; }

bool match_order(const Match& l, const Match& r) {
    if (l.score != r.score) return l.score > r.score;
    if (l.kind != r.kind) return l.kind == ItemKind::Comment;
    return l.item_id < r.item_id;
}

std::vector<MatchItem> to_items(std::span<const Comment> comments) {
    std::vector<MatchItem> items;
    items.reserve(comments.size());
    for (const auto& c : comments) items.push_back({c.id, c.analysis_text, ItemKind::Comment});
    return items;
}

namespace {

// Candidates ordered by id, so a left-to-right argmax resolves ties to the
// smallest id.
std::vector<const KeyPointCandidate*> by_id(std::span<const KeyPointCandidate> candidates) {
    std::vector<const KeyPointCandidate*> sorted;
    sorted.reserve(candidates.size());
    for (const auto& c : candidates) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(), [](auto* l, auto* r) { return l->id < r->id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->id == sorted[i - 1]->id) throw DataError("duplicate key point id '" + sorted[i]->id + "'");
    }
    return sorted;
}

}  // namespace

MatchMap get_matches(std::span<const MatchItem> items, std::span<const KeyPointCandidate> candidates, double threshold,
                     const MatchScorer& scorer, std::string_view topic, unsigned workers) {
    if (candidates.empty()) throw DataError("no key point candidates to match against");
    auto sorted = by_id(candidates);
    std::vector<std::string> item_texts;
    item_texts.reserve(items.size());
    for (const auto& it : items) item_texts.push_back(it.text);
    std::vector<std::string> kp_texts;
    kp_texts.reserve(sorted.size());
    for (const auto* c : sorted) kp_texts.push_back(c->text);

    Eigen::MatrixXd scores = score_matrix(scorer, item_texts, kp_texts, topic, workers);
    MatchMap out;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) best = j;
        }
        if (scores(i, best) > threshold) {
            const auto& item = items[static_cast<std::size_t>(i)];
            out[sorted[static_cast<std::size_t>(best)]->id].push_back({item.id, item.kind, scores(i, best)});
        }
    }
    for (auto& [id, matches] : out) std::sort(matches.begin(), matches.end(), match_order);
    return out;
}

std::vector<KeyPointResult> select_key_points(std::span<const MatchItem> comments,
                                              std::span<const KeyPointCandidate> candidates, double threshold,
                                              const MatchScorer& scorer, std::string_view topic,
                                              const SelectionOptions& options) {
    if (candidates.empty()) return {};
    std::unordered_map<std::string, const KeyPointCandidate*> candidate_by_id;
    for (const auto* c : by_id(candidates)) candidate_by_id.emplace(c->id, c);
    std::unordered_map<std::string, const MatchItem*> item_by_id;
    for (const auto& it : comments) item_by_id.emplace(it.id, &it);

    MatchMap k_to_c = get_matches(comments, candidates, threshold, scorer, topic, options.workers);

    std::vector<std::string> ranked;
    ranked.reserve(k_to_c.size());
    for (const auto& [id, matches] : k_to_c) ranked.push_back(id);
    // k_to_c iterates ids ascending; a stable sort on count keeps that order on ties.
    std::stable_sort(ranked.begin(), ranked.end(), [&](const std::string& l, const std::string& r) {
        return k_to_c[l].size() > k_to_c[r].size();
    });

    std::vector<MatchItem> pool;
    std::set<std::string> removed;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto* lower = candidate_by_id.at(ranked[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const auto* higher = candidate_by_id.at(ranked[j]);
            if (symmetric_score(scorer, lower->text, higher->text, topic) > threshold) {
                pool.push_back({lower->id, lower->text, ItemKind::Candidate});
                for (const auto& m : k_to_c[lower->id]) {
                    if (m.kind == ItemKind::Comment) {
                        pool.push_back(*item_by_id.at(m.item_id));
                    } else {
                        pool.push_back({m.item_id, candidate_by_id.at(m.item_id)->text, ItemKind::Candidate});
                    }
                }
                k_to_c.erase(lower->id);
                removed.insert(lower->id);
                break;
            }
        }
    }

    std::vector<KeyPointCandidate> survivors;
    for (const auto& id : ranked) {
        if (!removed.count(id)) survivors.push_back(*candidate_by_id.at(id));
    }
    if (!pool.empty()) {
        double rematch_threshold = options.rematch_threshold.value_or(threshold);
        MatchMap rematched = get_matches(pool, survivors, rematch_threshold, scorer, topic, options.workers);
        for (auto& [id, matches] : rematched) {
            auto& merged = k_to_c[id];
            merged.insert(merged.end(), matches.begin(), matches.end());
            std::sort(merged.begin(), merged.end(), match_order);
        }
    }

    std::stable_sort(survivors.begin(), survivors.end(), [&](const KeyPointCandidate& l, const KeyPointCandidate& r) {
        auto lc = k_to_c[l.id].size();
        auto rc = k_to_c[r.id].size();
        if (lc != rc) return lc > rc;
        return l.id < r.id;
    });

    std::vector<KeyPointResult> results;
    results.reserve(survivors.size());
    for (const auto& kp : survivors) {
        KeyPointResult r;
        r.id = kp.id;
        r.text = kp.text;
        r.source_comment_id = kp.source_comment_id;
        r.selection_matches = k_to_c[kp.id];
        for (const auto& m : r.selection_matches) {
            if (m.kind == ItemKind::Comment) r.matched.push_back(m);
        }
        r.prevalence = comments.empty() ? 0.0
                                        : static_cast<double>(r.matched.size()) / static_cast<double>(comments.size());
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<KeyPointResult> truncate_key_points(std::vector<KeyPointResult> results, std::size_t max_kps) {
    if (max_kps < 1) throw ConfigError("max_kps must be >= 1");
    if (results.size() > max_kps) results.resize(max_kps);
    return results;
}

FinalMatch final_match(std::span<const Comment> comments, std::vector<KeyPointResult> key_points, const Policy& policy,
                       const MatchScorer& scorer, std::string_view topic, unsigned workers) {
    if (key_points.empty()) throw DataError("no key points");
    policy.validate();
    std::set<std::string> seen;
    std::vector<std::string> kp_texts;
    for (const auto& kp : key_points) {
        if (!seen.insert(kp.id).second) throw DataError("duplicate key point id '" + kp.id + "'");
        kp_texts.push_back(kp.text);
    }
    std::vector<std::string> texts;
    texts.reserve(comments.size());
    for (const auto& c : comments) texts.push_back(c.analysis_text);

    Eigen::MatrixXd scores = score_matrix(scorer, texts, kp_texts, topic, workers);
    std::unordered_map<std::string, std::size_t> kp_index;
    for (std::size_t j = 0; j < key_points.size(); ++j) {
        kp_index.emplace(key_points[j].id, j);
        key_points[j].matched.clear();
    }

    FinalMatch out;
    for (std::size_t i = 0; i < comments.size(); ++i) {
        std::map<std::string, double> row;
        for (std::size_t j = 0; j < key_points.size(); ++j) {
            row.emplace(key_points[j].id, scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        auto chosen = apply_policy(row, policy);
        auto& assigned = out.assignments[comments[i].id];
        for (const auto& id : chosen) {
            double s = row.at(id);
            assigned.push_back({id, s});
            key_points[kp_index.at(id)].matched.push_back({comments[i].id, ItemKind::Comment, s});
        }
        if (chosen.empty()) out.unmatched.push_back(comments[i].id);
    }
    for (auto& kp : key_points) {
        std::sort(kp.matched.begin(), kp.matched.end(), match_order);
        kp.prevalence = comments.empty() ? 0.0
                                         : static_cast<double>(kp.matched.size()) / static_cast<double>(comments.size());
    }
    out.key_points = std::move(key_points);
    return out;
}

}  // namespace kpa
