#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kpa {

/// One scoring request: `a` is the comment side, `b` the key point side.
struct ScorePair {
    std::string a;
    std::string b;
    std::string topic;
};

struct QualityItem {
    std::string text;
    std::string topic;
};

/// Match score between a comment and a key point, in [0,1]. Implementations
/// must be safe to call concurrently.
class MatchScorer {
public:
    virtual ~MatchScorer() = default;

    virtual double score(std::string_view a, std::string_view b, std::string_view topic) const = 0;

    /// Positional batch scoring. The default calls score() per pair and
    /// reports the failing position on error.
    virtual std::vector<double> score_batch(std::span<const ScorePair> pairs) const;
};

class QualityScorer {
public:
    virtual ~QualityScorer() = default;

    virtual double quality(std::string_view text, std::string_view topic) const = 0;
    virtual std::vector<double> quality_batch(std::span<const QualityItem> items) const;
};

/// Exact-bytes key for (a, b, topic).
std::string score_key(std::string_view a, std::string_view b, std::string_view topic);

/// Stored match and quality values. Topic "*" acts as a wildcard when no
/// exact entry exists.
class ScoreTable {
public:
    void set(std::string_view a, std::string_view b, std::string_view topic, double score);
    void set_quality(std::string_view text, std::string_view topic, double quality);

    std::optional<double> find(std::string_view a, std::string_view b, std::string_view topic) const;
    std::optional<double> find_quality(std::string_view text, std::string_view topic) const;

    std::size_t size() const { return scores_.size(); }
    std::size_t quality_size() const { return quality_.size(); }

    /// Line-delimited JSON: {"comment","key_point","topic","score"} match
    /// records and {"text","topic","quality"} quality records.
    static ScoreTable load(const std::string& path);

private:
    std::unordered_map<std::string, double> scores_;
    std::unordered_map<std::string, double> quality_;
};

class TableMatchScorer : public MatchScorer {
public:
    explicit TableMatchScorer(std::shared_ptr<const ScoreTable> table, bool strict = false,
                              double default_score = 0.0);

    double score(std::string_view a, std::string_view b, std::string_view topic) const override;

private:
    std::shared_ptr<const ScoreTable> table_;
    bool strict_;
    double default_score_;
};

class TableQualityScorer : public QualityScorer {
public:
    explicit TableQualityScorer(std::shared_ptr<const ScoreTable> table, bool strict = false,
                                double default_quality = 0.0);

    double quality(std::string_view text, std::string_view topic) const override;

private:
    std::shared_ptr<const ScoreTable> table_;
    bool strict_;
    double default_quality_;
};

class ConstantQualityScorer : public QualityScorer {
public:
    explicit ConstantQualityScorer(double value);
    double quality(std::string_view, std::string_view) const override { return value_; }

private:
    double value_;
};

/// Jaccard similarity of lowercased token sets; 0 when both are empty.
double lexical_score(std::string_view a, std::string_view b);

class LexicalMatchScorer : public MatchScorer {
public:
    double score(std::string_view a, std::string_view b, std::string_view) const override {
        return lexical_score(a, b);
    }
};

/// Concurrent reads, exclusive writes.
class ScoreCache {
public:
    std::optional<double> get(const std::string& key) const;
    void put(const std::string& key, double value);

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, double> values_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

/// Serves repeated (a, b, topic) requests from a ScoreCache; only misses are
/// forwarded to the wrapped scorer, as one batch.
class CachingMatchScorer : public MatchScorer {
public:
    CachingMatchScorer(std::shared_ptr<const MatchScorer> inner,
                       std::shared_ptr<ScoreCache> cache = std::make_shared<ScoreCache>());

    double score(std::string_view a, std::string_view b, std::string_view topic) const override;
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;

    const ScoreCache& cache() const { return *cache_; }

private:
    std::shared_ptr<const MatchScorer> inner_;
    std::shared_ptr<ScoreCache> cache_;
};

/// Batch scoring with range validation. With workers > 1 the batch is split
/// into contiguous chunks scored concurrently; results stay positional.
std::vector<double> score_pairs(const MatchScorer& scorer, std::span<const ScorePair> pairs,
                                unsigned workers = 1);

std::vector<double> score_quality(const QualityScorer& scorer, std::span<const QualityItem> items);

/// Mean of the two directional scores.
double symmetric_score(const MatchScorer& scorer, std::string_view a, std::string_view b,
                       std::string_view topic);

/// Dense item x key point score matrix: entry (i, j) = score(items[i], kps[j]).
Eigen::MatrixXd score_matrix(const MatchScorer& scorer, std::span<const std::string> items,
                             std::span<const std::string> key_points, std::string_view topic,
                             unsigned workers = 1);

}  // namespace kpa
