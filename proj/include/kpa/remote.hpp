#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "kpa/scoring.hpp"

namespace kpa {

struct RemoteOptions {
    std::string endpoint;  // e.g. http://127.0.0.1:8100
    std::size_t batch_size = 64;
    int retries = 3;
    std::chrono::milliseconds backoff{100};  // doubled after every failed attempt
    std::chrono::seconds timeout{30};
};

/// Client for the scorer sidecar:
///   POST /v1/match_scores {"pairs":[{"comment","key_point","topic"}]} -> {"scores":[...]}
///   POST /v1/quality      {"items":[{"text","topic"}]}                -> {"scores":[...]}
/// Every returned score is range-checked; results are cached by exact
/// (a, b, topic) bytes, so repeated requests never reach the network.
class RemoteMatchScorer : public MatchScorer {
public:
    explicit RemoteMatchScorer(RemoteOptions options, std::shared_ptr<ScoreCache> cache = std::make_shared<ScoreCache>());

    double score(std::string_view a, std::string_view b, std::string_view topic) const override;
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;

    /// HTTP requests issued so far, retries included.
    std::size_t requests_sent() const { return requests_.load(); }
    const ScoreCache& cache() const { return *cache_; }

private:
    RemoteOptions options_;
    std::shared_ptr<ScoreCache> cache_;
    mutable std::atomic<std::size_t> requests_{0};
};

class RemoteQualityScorer : public QualityScorer {
public:
    explicit RemoteQualityScorer(RemoteOptions options);

    double quality(std::string_view text, std::string_view topic) const override;
    std::vector<double> quality_batch(std::span<const QualityItem> items) const override;

    std::size_t requests_sent() const { return requests_.load(); }

private:
    RemoteOptions options_;
    std::shared_ptr<ScoreCache> cache_ = std::make_shared<ScoreCache>();
    mutable std::atomic<std::size_t> requests_{0};
};

/// One-shot form of RemoteMatchScorer::score_batch sharing a caller-owned cache.
std::vector<double> remote_score(const RemoteOptions& options, std::span<const ScorePair> pairs,
                                 std::shared_ptr<ScoreCache> cache);

}  // namespace kpa
