#include "kpa/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/text.hpp"

namespace kpa {

Metrics confusion_metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    std::size_t total = tp + fp + fn + tn;
    if (total == 0) throw DataError("confusion counts are all zero");
    Metrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

namespace {

void tally(ConfusionCounts& c, bool predicted, bool label) {
    if (predicted && label) ++c.tp;
    else if (predicted) ++c.fp;
    else if (label) ++c.fn;
    else ++c.tn;
}

std::string comment_key(const LabeledPair& p) {
    return p.topic + '\x1f' + std::string(to_string(p.stance)) + '\x1f' + p.comment_text;
}

}  // namespace

ConfusionCounts evaluate_policy(std::span<const LabeledPair> pairs, const Policy& policy) {
    policy.validate();
    for (const auto& p : pairs) {
        if (!p.score) throw DataError("labeled pair without a score");
    }
    ConfusionCounts counts;
    if (policy.kind == PolicyKind::TH) {
        for (const auto& p : pairs) tally(counts, *p.score > *policy.threshold, p.label);
        return counts;
    }
    std::map<std::string, std::vector<const LabeledPair*>> groups;
    for (const auto& p : pairs) groups[comment_key(p)].push_back(&p);
    for (const auto& [key, members] : groups) {
        const LabeledPair* best = members.front();
        for (const auto* p : members) {
            if (*p->score > *best->score || (*p->score == *best->score && p->key_point_text < best->key_point_text))
                best = p;
        }
        bool best_matches = policy.kind == PolicyKind::BM || *best->score > *policy.threshold;
        for (const auto* p : members) tally(counts, p == best && best_matches, p->label);
    }
    return counts;
}

std::vector<double> threshold_grid(std::vector<double> scores) {
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    std::vector<double> grid{0.0};
    for (std::size_t i = 1; i < scores.size(); ++i) grid.push_back((scores[i - 1] + scores[i]) / 2.0);
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

TunedThreshold tune_threshold(std::span<const LabeledPair> dev, PolicyKind kind) {
    if (dev.empty()) throw DataError("empty dev set");
    if (kind == PolicyKind::BM) throw ConfigError("bm policy has no threshold to tune");
    std::vector<double> scores;
    scores.reserve(dev.size());
    for (const auto& p : dev) {
        if (!p.score) throw DataError("dev pair without a score");
        scores.push_back(*p.score);
    }
    TunedThreshold best{0.0, -1.0};
    for (double t : threshold_grid(std::move(scores))) {
        Policy policy{kind, t};
        double f1 = confusion_metrics(evaluate_policy(dev, policy)).f1;
        if (f1 > best.f1) best = {t, f1};
    }
    return best;
}

std::vector<double> default_coverage_levels() { return {0.2, 0.4, 0.6, 0.8, 1.0}; }

CoverageCurve precision_at_coverage(std::span<const SamplePoint> sample, std::span<const double> levels) {
    if (sample.empty()) throw DataError("empty sample");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] <= 1.0)) throw ConfigError("coverage levels must lie in (0,1]");
        if (i > 0 && levels[i] < levels[i - 1]) throw ConfigError("coverage levels must be ascending");
    }
    std::vector<SamplePoint> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& l, const auto& r) { return l.score > r.score; });

    // One operating point per distinct score: the threshold just below it
    // covers every item scoring at least that much.
    struct OperatingPoint {
        std::size_t covered;
        std::size_t correct;
        std::optional<double> threshold;
    };
    std::vector<OperatingPoint> points;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        correct += sorted[i].label ? 1 : 0;
        bool group_end = i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score;
        if (!group_end) continue;
        std::optional<double> t;
        if (i + 1 < sorted.size()) t = (sorted[i].score + sorted[i + 1].score) / 2.0;
        points.push_back({i + 1, correct, t});
    }

    const auto n = static_cast<double>(sorted.size());
    CoverageCurve curve;
    curve.levels.assign(levels.begin(), levels.end());
    for (double level : levels) {
        double best = -1.0;
        std::optional<double> best_t;
        for (const auto& p : points) {
            // Small slack so that levels such as 0.6 of 5 items are not lost to rounding.
            if (static_cast<double>(p.covered) < level * n - 1e-9) continue;
            double precision = static_cast<double>(p.correct) / static_cast<double>(p.covered);
            if (precision > best) {
                best = precision;
                best_t = p.threshold;
            }
        }
        curve.precision_at.push_back(best);
        curve.thresholds_at.push_back(best_t);
    }
    return curve;
}

std::vector<SampleRecord> load_labeled_sample(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sample '" + path + "'");
    std::vector<SampleRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto where = "line " + std::to_string(line_no) + ": ";
        try {
            auto rec = nlohmann::json::parse(line);
            SampleRecord r;
            r.comment_id = rec.at("comment_id").is_string() ? rec.at("comment_id").get<std::string>()
                                                            : rec.at("comment_id").dump();
            r.key_point_id = rec.at("key_point_id").is_string() ? rec.at("key_point_id").get<std::string>()
                                                                : rec.at("key_point_id").dump();
            r.score = rec.at("score").get<double>();
            if (!(r.score >= 0.0 && r.score <= 1.0)) throw DataError(where + "score outside [0,1]");
            const auto& label = rec.at("label");
            if (label.is_boolean()) {
                r.label = label.get<bool>();
            } else if (label.is_number_integer() && (label.get<int>() == 0 || label.get<int>() == 1)) {
                r.label = label.get<int>() == 1;
            } else {
                throw DataError(where + "label must be true/false or 1/0");
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        }
    }
    return out;
}

std::vector<SampleRecord> best_match_per_comment(std::span<const SampleRecord> records) {
    std::map<std::string, SampleRecord> best;
    for (const auto& r : records) {
        auto [it, inserted] = best.try_emplace(r.comment_id, r);
        if (inserted) continue;
        auto& cur = it->second;
        if (r.score > cur.score || (r.score == cur.score && r.key_point_id < cur.key_point_id)) cur = r;
    }
    std::vector<SampleRecord> out;
    out.reserve(best.size());
    for (auto& [id, r] : best) out.push_back(std::move(r));
    return out;
}

std::vector<Comment> sample_uniform(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample size must be >= 1");
    if (dataset.comments.empty()) throw DataError("no comments");
    if (n > dataset.comments.size()) {
        throw DataError("sample size " + std::to_string(n) + " exceeds the " +
                        std::to_string(dataset.comments.size()) + " available comments");
    }
    std::map<std::string, std::vector<std::size_t>> by_topic;
    for (std::size_t i = 0; i < dataset.comments.size(); ++i) by_topic[dataset.comments[i].topic_id].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<std::string> topics;
    for (const auto& [t, idx] : by_topic) topics.push_back(t);
    // Random priority for receiving the remainder of an uneven split.
    std::vector<std::string> priority = topics;
    std::shuffle(priority.begin(), priority.end(), rng);

    std::map<std::string, std::size_t> quota;
    std::vector<std::string> open = priority;
    std::size_t remaining = n;
    while (remaining > 0 && !open.empty()) {
        std::size_t base = remaining / open.size();
        std::size_t extra = remaining % open.size();
        std::vector<std::string> still_open;
        std::size_t granted = 0;
        for (std::size_t i = 0; i < open.size(); ++i) {
            const auto& t = open[i];
            std::size_t want = base + (i < extra ? 1 : 0);
            std::size_t capacity = by_topic[t].size() - quota[t];
            std::size_t give = std::min(want, capacity);
            quota[t] += give;
            granted += give;
            if (quota[t] < by_topic[t].size()) still_open.push_back(t);
        }
        remaining -= granted;
        open = std::move(still_open);
    }

    std::vector<Comment> out;
    out.reserve(n);
    for (const auto& t : topics) {
        auto idx = by_topic[t];
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(quota[t]);
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) out.push_back(dataset.comments[i]);
    }
    return out;
}

}  // namespace kpa
