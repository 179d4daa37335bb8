#include "kpa/report.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/text.hpp"

namespace kpa {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view s) {
    auto v = text::to_lower(text::trim(s));
    if (v == "structured" || v == "json") return ReportFormat::Structured;
    if (v == "table" || v == "human-table") return ReportFormat::Table;
    throw ConfigError("unknown report format '" + std::string(s) + "'");
}

long whole_percent(double prevalence) { return std::lround(prevalence * 100.0); }

namespace {

json matches_json(const std::vector<Match>& matches) {
    json arr = json::array();
    for (const auto& m : matches) {
        arr.push_back({{"id", m.item_id}, {"kind", std::string(to_string(m.kind))}, {"score", m.score}});
    }
    return arr;
}

std::vector<Match> matches_from_json(const json& arr) {
    std::vector<Match> out;
    for (const auto& m : arr) {
        auto kind = m.at("kind").get<std::string>() == "candidate" ? ItemKind::Candidate : ItemKind::Comment;
        out.push_back({m.at("id").get<std::string>(), kind, m.at("score").get<double>()});
    }
    return out;
}

}  // namespace

json to_json(const KeyPointResult& kp, std::size_t comment_count) {
    json j;
    j["id"] = kp.id;
    j["text"] = kp.text;
    j["source_comment_id"] = kp.source_comment_id;
    j["count"] = kp.matched.size();
    j["prevalence"] = kp.prevalence;
    j["percentage"] = comment_count == 0 ? 0.0 : 100.0 * kp.prevalence;
    j["selection_count"] = kp.selection_matches.size();
    j["matched"] = matches_json(kp.matched);
    j["selection_matches"] = matches_json(kp.selection_matches);
    return j;
}

json to_json(const AnalysisResult& result) {
    json j;
    j["dataset"] = result.dataset_name;
    j["config"] = to_json(result.config);
    j["input_comments"] = result.input_comments;
    j["filtered_out"] = result.filtered_out;
    json groups = json::array();
    for (const auto& g : result.groups) {
        json gj;
        gj["topic"] = g.topic;
        gj["stance"] = std::string(to_string(g.stance));
        gj["comment_count"] = g.comments.size();
        gj["candidate_count"] = g.candidate_count;
        gj["candidate_fraction"] = g.candidate_fraction();
        gj["coverage"] = g.coverage();
        json kps = json::array();
        for (const auto& kp : g.key_points) kps.push_back(to_json(kp, g.comments.size()));
        gj["key_points"] = std::move(kps);
        json assignments = json::object();
        for (const auto& [cid, list] : g.assignments) {
            json arr = json::array();
            for (const auto& a : list) arr.push_back({{"key_point_id", a.key_point_id}, {"score", a.score}});
            assignments[cid] = std::move(arr);
        }
        gj["assignments"] = std::move(assignments);
        gj["unmatched"] = g.unmatched;
        json comments = json::array();
        for (const auto& c : g.comments) {
            json cj = {{"id", c.id}, {"text", c.raw_text}, {"analysis_text", c.analysis_text},
                       {"stance", std::string(to_string(c.stance))}};
            if (c.quality) cj["quality"] = *c.quality;
            comments.push_back(std::move(cj));
        }
        gj["comments"] = std::move(comments);
        groups.push_back(std::move(gj));
    }
    j["groups"] = std::move(groups);
    return j;
}

AnalysisResult analysis_from_json(const json& j) {
    try {
        AnalysisResult r;
        r.dataset_name = j.at("dataset").get<std::string>();
        r.config = config_from_json(j.at("config"));
        r.input_comments = j.at("input_comments").get<std::size_t>();
        r.filtered_out = j.at("filtered_out").get<std::vector<std::string>>();
        for (const auto& gj : j.at("groups")) {
            GroupResult g;
            g.topic = gj.at("topic").get<std::string>();
            g.stance = parse_stance(gj.at("stance").get<std::string>());
            g.candidate_count = gj.at("candidate_count").get<std::size_t>();
            for (const auto& cj : gj.at("comments")) {
                Comment c;
                c.id = cj.at("id").get<std::string>();
                c.topic_id = g.topic;
                c.stance = parse_stance(cj.at("stance").get<std::string>());
                c.raw_text = cj.at("text").get<std::string>();
                c.analysis_text = cj.at("analysis_text").get<std::string>();
                if (cj.contains("quality")) c.quality = cj.at("quality").get<double>();
                g.comments.push_back(std::move(c));
            }
            for (const auto& kj : gj.at("key_points")) {
                KeyPointResult kp;
                kp.id = kj.at("id").get<std::string>();
                kp.text = kj.at("text").get<std::string>();
                kp.source_comment_id = kj.at("source_comment_id").get<std::string>();
                kp.prevalence = kj.at("prevalence").get<double>();
                kp.matched = matches_from_json(kj.at("matched"));
                kp.selection_matches = matches_from_json(kj.at("selection_matches"));
                g.key_points.push_back(std::move(kp));
            }
            for (const auto& [cid, arr] : gj.at("assignments").items()) {
                auto& list = g.assignments[cid];
                for (const auto& a : arr) list.push_back({a.at("key_point_id").get<std::string>(), a.at("score").get<double>()});
            }
            g.unmatched = gj.at("unmatched").get<std::vector<std::string>>();
            r.groups.push_back(std::move(g));
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed analysis document: ") + e.what());
    }
}

namespace {

std::string clip(const std::string& s, std::size_t width) {
    if (s.size() <= width) return s;
    return s.substr(0, width - 3) + "...";
}

std::string table_report(const AnalysisResult& result) {
    std::string out;
    out += fmt::format("Key point analysis: {} ({} comments, {} filtered out)\n", result.dataset_name,
                       result.input_comments, result.filtered_out.size());
    auto policy = result.config.final_policy();
    out += fmt::format("domain={} selection_threshold={} policy={}{}\n", to_string(result.config.domain),
                       result.config.selection_threshold, to_string(policy.kind),
                       policy.threshold ? fmt::format("({})", *policy.threshold) : std::string());
    if (result.groups.empty()) out += "\nno key points extracted\n";
    std::unordered_map<std::string, const Comment*> by_id;
    for (const auto& g : result.groups) {
        by_id.clear();
        for (const auto& c : g.comments) by_id.emplace(c.id, &c);
        out += fmt::format("\n== {}{} ==\n", g.topic,
                           g.stance == Stance::None ? std::string() : fmt::format(" [{}]", to_string(g.stance)));
        out += fmt::format("comments: {}  candidates: {} ({}%)  coverage: {}%\n", g.comments.size(), g.candidate_count,
                           whole_percent(g.candidate_fraction()), whole_percent(g.coverage()));
        if (g.key_points.empty()) {
            out += "no key points extracted\n";
            continue;
        }
        out += fmt::format("{:>4}  {:<60}  {:>9}  {:>6}  {:>5}\n", "rank", "key point", "selection", "count", "%");
        for (std::size_t i = 0; i < g.key_points.size(); ++i) {
            const auto& kp = g.key_points[i];
            out += fmt::format("{:>4}  {:<60}  {:>9}  {:>6}  {:>4}%\n", i + 1, clip(kp.text, 60),
                               kp.selection_matches.size(), kp.matched.size(),
                               whole_percent(kp.prevalence));
            for (std::size_t m = 0; m < kp.matched.size() && m < 2; ++m) {
                auto it = by_id.find(kp.matched[m].item_id);
                std::string text = it == by_id.end() ? kp.matched[m].item_id : it->second->analysis_text;
                out += fmt::format("        - ({:.3f}) {}\n", kp.matched[m].score, clip(text, 100));
            }
        }
        if (!g.unmatched.empty()) out += fmt::format("unmatched: {}\n", g.unmatched.size());
    }
    return out;
}

}  // namespace

std::string emit_report(const AnalysisResult& result, ReportFormat format) {
    if (format == ReportFormat::Structured) return to_json(result).dump(2) + "\n";
    return table_report(result);
}

json to_json(const MatchingEvaluation& eval) {
    auto metrics_json = [](const Metrics& m) {
        return json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    };
    json j;
    json folds = json::array();
    for (const auto& f : eval.folds) {
        json fj;
        fj["fold"] = f.fold;
        json ps = json::array();
        for (const auto& p : f.policies) {
            json pj = metrics_json(p.metrics);
            pj["policy"] = std::string(to_string(p.kind));
            pj["threshold"] = p.threshold ? json(*p.threshold) : json(nullptr);
            pj["tp"] = p.counts.tp;
            pj["fp"] = p.counts.fp;
            pj["fn"] = p.counts.fn;
            pj["tn"] = p.counts.tn;
            ps.push_back(std::move(pj));
        }
        fj["policies"] = std::move(ps);
        folds.push_back(std::move(fj));
    }
    j["folds"] = std::move(folds);
    json avg = json::array();
    for (const auto& [kind, m] : eval.average) {
        json aj = metrics_json(m);
        aj["policy"] = std::string(to_string(kind));
        avg.push_back(std::move(aj));
    }
    j["average"] = std::move(avg);
    return j;
}

std::string format_matching_table(const MatchingEvaluation& eval) {
    std::string out = fmt::format("{:<16} {:>9} {:>9} {:>9} {:>9}\n", "Selection Policy", "Accuracy", "Precision",
                                  "Recall", "F1");
    for (const auto& [kind, m] : eval.average) {
        out += fmt::format("{:<16} {:>9.3f} {:>9.3f} {:>9.3f} {:>9.3f}\n", to_string(kind), m.accuracy, m.precision,
                           m.recall, m.f1);
    }
    return out;
}

json to_json(const CoverageCurve& curve, std::size_t sample_size) {
    json j;
    j["sample_size"] = sample_size;
    json points = json::array();
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        points.push_back({{"coverage", curve.levels[i]},
                          {"precision", curve.precision_at[i]},
                          {"threshold", curve.thresholds_at[i] ? json(*curve.thresholds_at[i]) : json(nullptr)}});
    }
    j["curve"] = std::move(points);
    return j;
}

std::string format_coverage_table(const CoverageCurve& curve) {
    std::string out = fmt::format("{:>8} {:>9} {:>9}\n", "coverage", "precision", "threshold");
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        out += fmt::format("{:>8.2f} {:>9.3f} {:>9}\n", curve.levels[i], curve.precision_at[i],
                           curve.thresholds_at[i] ? fmt::format("{:.4f}", *curve.thresholds_at[i]) : "-inf");
    }
    return out;
}

}  // namespace kpa
