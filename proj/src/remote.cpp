#include "kpa/remote.hpp"

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

namespace kpa {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    Endpoint ep;
    ep.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    ep.prefix = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

// POSTs `body` and returns the validated "scores" array of `expected` entries.
std::vector<double> post_scores(const RemoteOptions& options, const std::string& path, const json& body,
                                std::size_t expected, std::atomic<std::size_t>& requests) {
    auto ep = split_endpoint(options.endpoint);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);

    std::string payload = body.dump();
    std::string last_error;
    auto delay = options.backoff;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        ++requests;
        auto res = client.Post(ep.prefix + path, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ScorerError(ScorerError::Reason::Transport,
                              options.endpoint + path + " rejected the request with status " + std::to_string(res->status));
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ScorerError(ScorerError::Reason::Protocol, std::string("malformed scorer response: ") + e.what());
        }
        if (!reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array())
            throw ScorerError(ScorerError::Reason::Protocol, "scorer response lacks a scores array");
        const auto& arr = reply["scores"];
        if (arr.size() != expected) {
            throw ScorerError(ScorerError::Reason::Protocol, "scorer returned " + std::to_string(arr.size()) +
                                                                 " scores for " + std::to_string(expected) + " requests");
        }
        std::vector<double> scores;
        scores.reserve(expected);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number())
                throw ScorerError(ScorerError::Reason::Protocol, "non-numeric score", static_cast<std::ptrdiff_t>(i));
            double s = arr[i].get<double>();
            if (!(s >= 0.0 && s <= 1.0)) {
                throw ScorerError(ScorerError::Reason::Protocol,
                                  "protocol violation: score " + arr[i].dump() + " outside [0,1]",
                                  static_cast<std::ptrdiff_t>(i));
            }
            scores.push_back(s);
        }
        return scores;
    }
    throw ScorerError(ScorerError::Reason::Transport,
                      options.endpoint + path + " failed after " + std::to_string(options.retries + 1) +
                          " attempts: " + last_error);
}

}  // namespace

RemoteMatchScorer::RemoteMatchScorer(RemoteOptions options, std::shared_ptr<ScoreCache> cache)
    : options_(std::move(options)), cache_(std::move(cache)) {
    if (options_.batch_size == 0) throw ConfigError("remote batch size must be positive");
}

double RemoteMatchScorer::score(std::string_view a, std::string_view b, std::string_view topic) const {
    ScorePair p{std::string(a), std::string(b), std::string(topic)};
    return score_batch(std::span<const ScorePair>(&p, 1)).front();
}

std::vector<double> RemoteMatchScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out(pairs.size(), 0.0);
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (auto v = cache_->get(score_key(pairs[i].a, pairs[i].b, pairs[i].topic))) {
            out[i] = *v;
        } else {
            missing.push_back(i);
        }
    }
    for (std::size_t start = 0; start < missing.size(); start += options_.batch_size) {
        std::size_t end = std::min(missing.size(), start + options_.batch_size);
        json body;
        body["pairs"] = json::array();
        for (std::size_t m = start; m < end; ++m) {
            const auto& p = pairs[missing[m]];
            body["pairs"].push_back({{"comment", p.a}, {"key_point", p.b}, {"topic", p.topic}});
        }
        std::vector<double> scores;
        try {
            scores = post_scores(options_, "/v1/match_scores", body, end - start, requests_);
        } catch (const ScorerError& e) {
            auto index = e.index() >= 0 ? static_cast<std::ptrdiff_t>(missing[start + static_cast<std::size_t>(e.index())]) : -1;
            throw ScorerError(e.reason(), e.what(), index);
        }
        for (std::size_t m = start; m < end; ++m) {
            const auto& p = pairs[missing[m]];
            out[missing[m]] = scores[m - start];
            cache_->put(score_key(p.a, p.b, p.topic), scores[m - start]);
        }
    }
    return out;
}

RemoteQualityScorer::RemoteQualityScorer(RemoteOptions options) : options_(std::move(options)) {
    if (options_.batch_size == 0) throw ConfigError("remote batch size must be positive");
}

double RemoteQualityScorer::quality(std::string_view text, std::string_view topic) const {
    QualityItem item{std::string(text), std::string(topic)};
    return quality_batch(std::span<const QualityItem>(&item, 1)).front();
}

std::vector<double> RemoteQualityScorer::quality_batch(std::span<const QualityItem> items) const {
    std::vector<double> out(items.size(), 0.0);
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (auto v = cache_->get(score_key(items[i].text, {}, items[i].topic))) {
            out[i] = *v;
        } else {
            missing.push_back(i);
        }
    }
    for (std::size_t start = 0; start < missing.size(); start += options_.batch_size) {
        std::size_t end = std::min(missing.size(), start + options_.batch_size);
        json body;
        body["items"] = json::array();
        for (std::size_t m = start; m < end; ++m) {
            const auto& it = items[missing[m]];
            body["items"].push_back({{"text", it.text}, {"topic", it.topic}});
        }
        auto scores = post_scores(options_, "/v1/quality", body, end - start, requests_);
        for (std::size_t m = start; m < end; ++m) {
            const auto& it = items[missing[m]];
            out[missing[m]] = scores[m - start];
            cache_->put(score_key(it.text, {}, it.topic), scores[m - start]);
        }
    }
    return out;
}

std::vector<double> remote_score(const RemoteOptions& options, std::span<const ScorePair> pairs,
                                 std::shared_ptr<ScoreCache> cache) {
    RemoteMatchScorer scorer(options, std::move(cache));
    return scorer.score_batch(pairs);
}

}  // namespace kpa
