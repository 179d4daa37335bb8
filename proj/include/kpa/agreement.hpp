#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kpa {

enum class Judgment { Match, NoMatch, Unclear };

Judgment parse_judgment(std::string_view text);
std::string_view to_string(Judgment j);

/// True iff strictly more than half of the judgments are Match; Unclear
/// counts as no match.
bool majority_label(std::span<const Judgment> judgments);

/// Cohen's kappa with marginal-product chance agreement; 1 when chance
/// agreement is 1.
double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

/// Fleiss' kappa over an items x categories count matrix in which every row
/// sums to the same number of ratings (>= 2).
double fleiss_kappa(const Eigen::MatrixXi& table);

struct PairKey {
    std::string comment_id;
    std::string key_point_id;

    auto operator<=>(const PairKey&) const = default;
};

struct Annotation {
    std::string annotator_id;
    Judgment judgment = Judgment::NoMatch;
};

/// Judgments per (comment, key point) pair, at most one per annotator.
class AnnotationSet {
public:
    void add(const std::string& comment_id, const std::string& key_point_id, const std::string& annotator_id,
             Judgment judgment);

    const std::map<PairKey, std::vector<Annotation>>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    /// Copy without the judgments of the given annotators.
    AnnotationSet without(const std::set<std::string>& annotators) const;

    /// Line-delimited JSON {"comment_id","key_point_id","annotator_id","judgment"}.
    static AnnotationSet load(const std::string& path);

private:
    std::map<PairKey, std::vector<Annotation>> items_;
};

/// Items x categories counts. Two categories (match, no match) with Unclear
/// folded into no match, or three when `keep_unclear` is set.
Eigen::MatrixXi fleiss_table(const AnnotationSet& annotations, bool keep_unclear = false);

/// Mean pairwise Cohen's kappa per annotator, over peers sharing at least
/// `min_shared` items; annotators with fewer than `min_peers` such peers are
/// left out.
std::map<std::string, double> annotator_kappa(const AnnotationSet& annotations, std::size_t min_shared = 50,
                                              std::size_t min_peers = 5);

/// Annotators whose kappa falls below `min_kappa`.
std::set<std::string> low_agreement_annotators(const std::map<std::string, double>& kappas, double min_kappa = 0.1);

struct SplitConsistency {
    double kappa = 0.0;
    std::vector<PairKey> items;
    std::vector<bool> first;   // majority label of the first half per item
    std::vector<bool> second;
    std::vector<std::vector<std::size_t>> first_half;  // judgment indices per item
};

/// Splits each item's 14 judgments into two seeded halves of 7, takes the
/// majority label of each half and returns Cohen's kappa between halves.
SplitConsistency split_consistency_detail(const AnnotationSet& annotations, std::uint64_t seed,
                                          std::size_t judgments_per_item = 14);
double split_consistency(const AnnotationSet& annotations, std::uint64_t seed);

}  // namespace kpa
