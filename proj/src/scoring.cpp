#include "kpa/scoring.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/text.hpp"

namespace kpa {

namespace {

void check_range(double value, std::ptrdiff_t index) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw ScorerError(ScorerError::Reason::Protocol,
                          "score " + std::to_string(value) + " outside [0,1] at index " + std::to_string(index), index);
    }
}

}  // namespace

std::vector<double> MatchScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        try {
            out.push_back(score(pairs[i].a, pairs[i].b, pairs[i].topic));
        } catch (const ScorerError& e) {
            throw ScorerError(e.reason(), e.what(), static_cast<std::ptrdiff_t>(i));
        } catch (const std::exception& e) {
            throw ScorerError(ScorerError::Reason::Lookup, e.what(), static_cast<std::ptrdiff_t>(i));
        }
    }
    return out;
}

std::vector<double> QualityScorer::quality_batch(std::span<const QualityItem> items) const {
    std::vector<double> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        try {
            out.push_back(quality(items[i].text, items[i].topic));
        } catch (const ScorerError& e) {
            throw ScorerError(e.reason(), e.what(), static_cast<std::ptrdiff_t>(i));
        }
    }
    return out;
}

std::string score_key(std::string_view a, std::string_view b, std::string_view topic) {
    std::string key;
    key.reserve(a.size() + b.size() + topic.size() + 16);
    // Length prefixes keep the key injective for arbitrary bytes.
    key += std::to_string(a.size());
    key += ':';
    key += a;
    key += std::to_string(b.size());
    key += ':';
    key += b;
    key += topic;
    return key;
}

void ScoreTable::set(std::string_view a, std::string_view b, std::string_view topic, double score) {
    check_range(score, -1);
    scores_[score_key(a, b, topic)] = score;
}

void ScoreTable::set_quality(std::string_view text, std::string_view topic, double quality) {
    check_range(quality, -1);
    quality_[score_key(text, {}, topic)] = quality;
}

std::optional<double> ScoreTable::find(std::string_view a, std::string_view b, std::string_view topic) const {
    if (auto it = scores_.find(score_key(a, b, topic)); it != scores_.end()) return it->second;
    if (auto it = scores_.find(score_key(a, b, "*")); it != scores_.end()) return it->second;
    return std::nullopt;
}

std::optional<double> ScoreTable::find_quality(std::string_view text, std::string_view topic) const {
    if (auto it = quality_.find(score_key(text, {}, topic)); it != quality_.end()) return it->second;
    if (auto it = quality_.find(score_key(text, {}, "*")); it != quality_.end()) return it->second;
    return std::nullopt;
}

ScoreTable ScoreTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score table '" + path + "'");
    ScoreTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto where = "score table line " + std::to_string(line_no) + ": ";
        try {
            auto rec = nlohmann::json::parse(line);
            std::string topic = rec.value("topic", std::string("*"));
            if (rec.contains("score")) {
                double s = rec.at("score").get<double>();
                if (!(s >= 0.0 && s <= 1.0)) throw DataError(where + "score outside [0,1]");
                table.set(rec.at("comment").get<std::string>(), rec.at("key_point").get<std::string>(), topic, s);
            } else if (rec.contains("quality")) {
                double q = rec.at("quality").get<double>();
                if (!(q >= 0.0 && q <= 1.0)) throw DataError(where + "quality outside [0,1]");
                table.set_quality(rec.at("text").get<std::string>(), topic, q);
            } else {
                throw DataError(where + "record needs a score or quality field");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        }
    }
    return table;
}

TableMatchScorer::TableMatchScorer(std::shared_ptr<const ScoreTable> table, bool strict, double default_score)
    : table_(std::move(table)), strict_(strict), default_score_(default_score) {
    check_range(default_score_, -1);
}

double TableMatchScorer::score(std::string_view a, std::string_view b, std::string_view topic) const {
    if (auto s = table_->find(a, b, topic)) return *s;
    if (strict_) {
        throw ScorerError(ScorerError::Reason::Lookup,
                          "no stored score for (" + std::string(a) + " | " + std::string(b) + " | " +
                              std::string(topic) + ")");
    }
    return default_score_;
}

TableQualityScorer::TableQualityScorer(std::shared_ptr<const ScoreTable> table, bool strict, double default_quality)
    : table_(std::move(table)), strict_(strict), default_quality_(default_quality) {
    check_range(default_quality_, -1);
}

double TableQualityScorer::quality(std::string_view text, std::string_view topic) const {
    if (auto q = table_->find_quality(text, topic)) return *q;
    if (strict_) throw ScorerError(ScorerError::Reason::Lookup, "no stored quality for '" + std::string(text) + "'");
    return default_quality_;
}

ConstantQualityScorer::ConstantQualityScorer(double value) : value_(value) { check_range(value_, -1); }

double lexical_score(std::string_view a, std::string_view b) {
    auto ta = text::tokenize_lower(a);
    auto tb = text::tokenize_lower(b);
    std::set<std::string> sa(ta.begin(), ta.end());
    std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    std::size_t total = sa.size() + sb.size() - common;
    return static_cast<double>(common) / static_cast<double>(total);
}

std::optional<double> ScoreCache::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = values_.find(key); it != values_.end()) {
        ++hits_;
        return it->second;
    }
    ++misses_;
    return std::nullopt;
}

void ScoreCache::put(const std::string& key, double value) {
    std::unique_lock lock(mutex_);
    values_.insert_or_assign(key, value);
}

std::size_t ScoreCache::size() const {
    std::shared_lock lock(mutex_);
    return values_.size();
}

CachingMatchScorer::CachingMatchScorer(std::shared_ptr<const MatchScorer> inner, std::shared_ptr<ScoreCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

double CachingMatchScorer::score(std::string_view a, std::string_view b, std::string_view topic) const {
    auto key = score_key(a, b, topic);
    if (auto v = cache_->get(key)) return *v;
    double s = inner_->score(a, b, topic);
    cache_->put(key, s);
    return s;
}

std::vector<double> CachingMatchScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out(pairs.size(), 0.0);
    std::vector<std::size_t> missing;
    std::vector<ScorePair> requests;
    std::unordered_map<std::string, std::size_t> pending;  // key -> position in requests
    std::vector<std::size_t> slot(pairs.size(), 0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto key = score_key(pairs[i].a, pairs[i].b, pairs[i].topic);
        if (auto v = cache_->get(key)) {
            out[i] = *v;
            continue;
        }
        auto [it, inserted] = pending.try_emplace(key, requests.size());
        if (inserted) requests.push_back(pairs[i]);
        missing.push_back(i);
        slot[i] = it->second;
    }
    if (requests.empty()) return out;
    std::vector<double> fresh;
    try {
        fresh = inner_->score_batch(requests);
    } catch (const ScorerError& e) {
        std::ptrdiff_t index = -1;
        if (e.index() >= 0) {
            for (std::size_t i : missing) {
                if (slot[i] == static_cast<std::size_t>(e.index())) {
                    index = static_cast<std::ptrdiff_t>(i);
                    break;
                }
            }
        }
        throw ScorerError(e.reason(), e.what(), index);
    }
    if (fresh.size() != requests.size())
        throw ScorerError(ScorerError::Reason::Protocol, "scorer returned a batch of the wrong size");
    for (std::size_t r = 0; r < requests.size(); ++r) {
        check_range(fresh[r], static_cast<std::ptrdiff_t>(r));
        cache_->put(score_key(requests[r].a, requests[r].b, requests[r].topic), fresh[r]);
    }
    for (std::size_t i : missing) out[i] = fresh[slot[i]];
    return out;
}

std::vector<double> score_pairs(const MatchScorer& scorer, std::span<const ScorePair> pairs, unsigned workers) {
    if (pairs.empty()) return {};
    std::vector<double> out(pairs.size());
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(pairs.size())));
    if (workers == 1) {
        out = scorer.score_batch(pairs);
    } else {
        std::size_t chunk = (pairs.size() + workers - 1) / workers;
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> threads;
            for (unsigned w = 0; w < workers; ++w) {
                std::size_t begin = w * chunk;
                std::size_t end = std::min(pairs.size(), begin + chunk);
                if (begin >= end) break;
                threads.emplace_back([&, w, begin, end] {
                    try {
                        auto part = scorer.score_batch(pairs.subspan(begin, end - begin));
                        if (part.size() != end - begin)
                            throw ScorerError(ScorerError::Reason::Protocol, "scorer returned a batch of the wrong size");
                        std::copy(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
                    } catch (const ScorerError& e) {
                        auto index = e.index() >= 0 ? e.index() + static_cast<std::ptrdiff_t>(begin) : -1;
                        errors[w] = std::make_exception_ptr(ScorerError(e.reason(), e.what(), index));
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    if (out.size() != pairs.size())
        throw ScorerError(ScorerError::Reason::Protocol, "scorer returned a batch of the wrong size");
    for (std::size_t i = 0; i < out.size(); ++i) check_range(out[i], static_cast<std::ptrdiff_t>(i));
    return out;
}

std::vector<double> score_quality(const QualityScorer& scorer, std::span<const QualityItem> items) {
    if (items.empty()) return {};
    auto out = scorer.quality_batch(items);
    if (out.size() != items.size())
        throw ScorerError(ScorerError::Reason::Protocol, "quality scorer returned a batch of the wrong size");
    for (std::size_t i = 0; i < out.size(); ++i) check_range(out[i], static_cast<std::ptrdiff_t>(i));
    return out;
}

double symmetric_score(const MatchScorer& scorer, std::string_view a, std::string_view b, std::string_view topic) {
    std::vector<ScorePair> both{{std::string(a), std::string(b), std::string(topic)},
                                {std::string(b), std::string(a), std::string(topic)}};
    auto s = score_pairs(scorer, both);
    return (s[0] + s[1]) / 2.0;
}

Eigen::MatrixXd score_matrix(const MatchScorer& scorer, std::span<const std::string> items,
                             std::span<const std::string> key_points, std::string_view topic, unsigned workers) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(items.size()), static_cast<Eigen::Index>(key_points.size()));
    if (items.empty() || key_points.empty()) return m;
    std::vector<ScorePair> pairs;
    pairs.reserve(items.size() * key_points.size());
    for (const auto& item : items) {
        for (const auto& kp : key_points) pairs.push_back({item, kp, std::string(topic)});
    }
    auto scores = score_pairs(scorer, pairs, workers);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scores[k++];
    }
    return m;
}

}  // namespace kpa
