#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpa/extraction.hpp"
#include "kpa/ingest.hpp"
#include "kpa/policies.hpp"

namespace kpa {

class MatchScorer;

enum class ItemKind { Comment, Candidate };

std::string_view to_string(ItemKind kind);

/// Something that can be matched to a key point: a comment, or a candidate
/// absorbed during de-duplication.
struct MatchItem {
    std::string id;
    std::string text;
    ItemKind kind = ItemKind::Comment;
};

struct Match {
    std::string item_id;
    ItemKind kind = ItemKind::Comment;
    double score = 0.0;

    bool operator==(const Match&) const = default;
};

/// Display order for match lists: score descending, comments before
/// absorbed candidates, then id.
bool match_order(const Match& l, const Match& r);

/// Candidate id -> its matched items in match_order. Candidates without
/// matches have no entry.
using MatchMap = std::map<std::string, std::vector<Match>>;

struct KeyPointResult {
    std::string id;
    std::string text;
    std::string source_comment_id;
    /// Items gathered by the selection procedure, absorbed candidates included.
    std::vector<Match> selection_matches;
    /// Comments assigned by the final matching pass.
    std::vector<Match> matched;
    double prevalence = 0.0;

    bool operator==(const KeyPointResult&) const = default;
};

std::vector<MatchItem> to_items(std::span<const Comment> comments);

/// Each item goes to its best-scoring candidate (ties: smallest id) when
/// that score is strictly above `threshold`.
MatchMap get_matches(std::span<const MatchItem> items, std::span<const KeyPointCandidate> candidates, double threshold,
                     const MatchScorer& scorer, std::string_view topic = {}, unsigned workers = 1);

struct SelectionOptions {
    /// Threshold for re-matching the removed candidates; defaults to the
    /// selection threshold.
    std::optional<double> rematch_threshold;
    unsigned workers = 1;
};

/// Greedy key point selection:
///  1. match comments to candidates (best match above threshold);
///  2. rank matched candidates by match count (ties: id);
///  3. walk the ranking and drop every candidate whose symmetric score with
///     any candidate ranked above it (dropped ones included) exceeds the
///     threshold, pooling it together with its matches;
///  4. re-match the pool against the surviving candidates and merge;
///  5. re-rank survivors by total match count (ties: id).
std::vector<KeyPointResult> select_key_points(std::span<const MatchItem> comments,
                                              std::span<const KeyPointCandidate> candidates, double threshold,
                                              const MatchScorer& scorer, std::string_view topic = {},
                                              const SelectionOptions& options = {});

std::vector<KeyPointResult> truncate_key_points(std::vector<KeyPointResult> results, std::size_t max_kps);

struct Assignment {
    std::string key_point_id;
    double score = 0.0;

    bool operator==(const Assignment&) const = default;
};

struct FinalMatch {
    /// Comment id -> assigned key points (at most one except under TH).
    std::map<std::string, std::vector<Assignment>> assignments;
    std::vector<KeyPointResult> key_points;  // `matched` and `prevalence` recomputed
    std::vector<std::string> unmatched;      // in input order
};

/// Applies `policy` per comment over the final key point list and rebuilds
/// every key point's matched list and prevalence (matched / |comments|).
FinalMatch final_match(std::span<const Comment> comments, std::vector<KeyPointResult> key_points,
                       const Policy& policy, const MatchScorer& scorer, std::string_view topic = {},
                       unsigned workers = 1);

}  // namespace kpa
