#include "kpa/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/scoring.hpp"
#include "kpa/text.hpp"

namespace kpa {

using nlohmann::json;

std::string_view to_string(Stance stance) {
    switch (stance) {
        case Stance::Pro: return "pro";
        case Stance::Con: return "con";
        case Stance::None: break;
    }
    return "none";
}

std::string_view to_string(Domain domain) {
    switch (domain) {
        case Domain::Arguments: return "arguments";
        case Domain::Survey: return "survey";
        case Domain::Reviews: return "reviews";
    }
    return "arguments";
}

Stance parse_stance(std::string_view s) {
    std::string v = text::to_lower(text::trim(s));
    if (v == "pro" || v == "1" || v == "+1") return Stance::Pro;
    if (v == "con" || v == "-1") return Stance::Con;
    if (v.empty() || v == "none" || v == "0") return Stance::None;
    throw DataError("unknown stance '" + std::string(s) + "'");
}

Domain parse_domain(std::string_view s) {
    std::string v = text::to_lower(text::trim(s));
    if (v == "arguments") return Domain::Arguments;
    if (v == "survey") return Domain::Survey;
    if (v == "reviews") return Domain::Reviews;
    throw ConfigError("unknown domain '" + std::string(s) + "'");
}

FilterConfig FilterConfig::for_domain(Domain domain) {
    FilterConfig cfg;
    cfg.first_sentence_only = domain == Domain::Survey;
    cfg.low_quality_fraction = domain == Domain::Arguments ? 0.10 : 0.0;
    return cfg;
}

void FilterConfig::validate() const {
    if (min_chars < 1) throw ConfigError("filter.min_chars must be >= 1");
    if (min_tokens > max_tokens) throw ConfigError("filter.min_tokens must not exceed filter.max_tokens");
    if (!(low_quality_fraction >= 0.0 && low_quality_fraction < 1.0))
        throw ConfigError("filter.low_quality_fraction must lie in [0,1)");
}

namespace {

bool passes_surface_rules(const Comment& c, const FilterConfig& cfg) {
    if (cfg.ascii_only && !text::is_ascii(c.raw_text)) return false;
    if (text::char_count(c.analysis_text) < static_cast<std::size_t>(cfg.min_chars)) return false;
    auto tokens = static_cast<long>(text::token_count(c.analysis_text));
    return tokens >= cfg.min_tokens && tokens <= cfg.max_tokens;
}

// Indices (into `pool`) of the floor(f * n) lowest-quality comments.
std::vector<std::size_t> lowest_quality(const std::vector<Comment>& pool, const std::vector<std::size_t>& members,
                                        double fraction) {
    auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    std::vector<std::size_t> order = members;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (*pool[l].quality != *pool[r].quality) return *pool[l].quality < *pool[r].quality;
        return pool[l].id < pool[r].id;
    });
    order.resize(drop);
    return order;
}

}  // namespace

std::vector<Comment> filter_comments(const std::vector<Comment>& comments, const FilterConfig& cfg,
                                     const QualityScorer* quality) {
    cfg.validate();
    if (cfg.low_quality_fraction > 0.0 && quality == nullptr)
        throw ConfigError("low_quality_fraction > 0 requires a quality scorer");

    std::vector<Comment> survivors;
    survivors.reserve(comments.size());
    for (const auto& c : comments) {
        Comment copy = c;
        if (cfg.first_sentence_only && !text::trim(copy.raw_text).empty())
            copy.analysis_text = text::first_sentence(copy.raw_text);
        if (passes_surface_rules(copy, cfg)) survivors.push_back(std::move(copy));
    }
    if (cfg.low_quality_fraction <= 0.0 || survivors.empty()) return survivors;

    std::vector<QualityItem> items;
    items.reserve(survivors.size());
    for (const auto& c : survivors) items.push_back({c.analysis_text, c.topic_id});
    auto scores = score_quality(*quality, items);
    for (std::size_t i = 0; i < survivors.size(); ++i) survivors[i].quality = scores[i];

    std::vector<std::vector<std::size_t>> scopes;
    if (cfg.per_topic_quality) {
        std::map<std::string, std::vector<std::size_t>> by_topic;
        for (std::size_t i = 0; i < survivors.size(); ++i) by_topic[survivors[i].topic_id].push_back(i);
        for (auto& [topic, idx] : by_topic) scopes.push_back(std::move(idx));
    } else {
        scopes.emplace_back(survivors.size());
        std::iota(scopes.back().begin(), scopes.back().end(), std::size_t{0});
    }

    std::vector<bool> removed(survivors.size(), false);
    for (const auto& scope : scopes) {
        for (std::size_t i : lowest_quality(survivors, scope, cfg.low_quality_fraction)) removed[i] = true;
    }
    std::vector<Comment> kept;
    kept.reserve(survivors.size());
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (!removed[i]) kept.push_back(std::move(survivors[i]));
    }
    return kept;
}

Dataset make_dataset(std::vector<Comment> comments, Domain domain, std::string name) {
    Dataset ds;
    ds.name = std::move(name);
    ds.domain = domain;
    std::set<std::string> topics;
    std::unordered_set<std::string> ids;
    for (auto& c : comments) {
        if (!ids.insert(c.id).second) throw DataError("duplicate id '" + c.id + "'");
        if (domain == Domain::Arguments && c.stance == Stance::None)
            throw DataError("comment '" + c.id + "': arguments domain requires stance pro or con");
        if (c.analysis_text.empty()) {
            c.analysis_text = domain == Domain::Survey ? text::first_sentence(c.raw_text)
                                                       : std::string(text::trim(c.raw_text));
        }
        topics.insert(c.topic_id);
    }
    ds.topics.assign(topics.begin(), topics.end());
    ds.comments = std::move(comments);
    return ds;
}

Dataset parse_dataset(std::istream& in, Domain domain, std::string name) {
    std::vector<Comment> comments;
    std::unordered_set<std::string> ids;
    std::set<std::string> topics;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto where = [&](const std::string& msg) { return "line " + std::to_string(line_no) + ": " + msg; };
        Comment c;
        try {
            json rec = json::parse(line);
            if (!rec.is_object()) throw DataError(where("record is not an object"));
            if (!rec.contains("id") || !rec.contains("topic") || !rec.contains("text"))
                throw DataError(where("record needs id, topic and text"));
            c.id = rec.at("id").is_string() ? rec.at("id").get<std::string>() : rec.at("id").dump();
            c.topic_id = rec.at("topic").get<std::string>();
            c.raw_text = rec.at("text").get<std::string>();
            if (rec.contains("stance") && !rec.at("stance").is_null()) {
                const auto& st = rec.at("stance");
                c.stance = parse_stance(st.is_string() ? st.get<std::string>() : st.dump());
            }
            if (rec.contains("quality") && !rec.at("quality").is_null()) {
                double q = rec.at("quality").get<double>();
                if (!(q >= 0.0 && q <= 1.0)) throw DataError(where("quality outside [0,1]"));
                c.quality = q;
            }
        } catch (const json::exception& e) {
            throw DataError(where(std::string("malformed record: ") + e.what()));
        } catch (const DataError& e) {
            std::string msg = e.what();
            throw DataError(msg.rfind("line ", 0) == 0 ? msg : where(msg));
        }
        if (text::trim(c.raw_text).empty()) throw DataError(where("empty comment"));
        if (!ids.insert(c.id).second) throw DataError("duplicate id at line " + std::to_string(line_no));
        if (domain == Domain::Arguments && c.stance == Stance::None)
            throw DataError(where("arguments domain requires stance pro or con"));
        c.analysis_text = domain == Domain::Survey ? text::first_sentence(c.raw_text)
                                                   : std::string(text::trim(c.raw_text));
        topics.insert(c.topic_id);
        comments.push_back(std::move(c));
    }
    Dataset ds;
    ds.name = std::move(name);
    ds.domain = domain;
    ds.topics.assign(topics.begin(), topics.end());
    ds.comments = std::move(comments);
    return ds;
}

Dataset load_dataset(const std::string& path, Domain domain) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path + "'");
    return parse_dataset(in, domain, path);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    for (const auto& c : dataset.comments) {
        json rec = {{"id", c.id}, {"topic", c.topic_id}, {"text", c.raw_text}};
        if (c.stance != Stance::None) rec["stance"] = std::string(to_string(c.stance));
        if (c.quality) rec["quality"] = *c.quality;
        out << rec.dump() << '\n';
    }
}

void save_dataset(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset '" + path + "'");
    write_dataset(out, dataset);
}

namespace {

// RFC 4180 style: quoted fields may contain separators, newlines and "".
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_no;
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            ++line_no;
            fields.push_back(std::move(field));
            return true;
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (in_quotes) throw DataError("line " + std::to_string(line_no + 1) + ": unterminated quoted field");
    if (!any) return false;
    ++line_no;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

std::vector<LabeledPair> parse_labeled_pairs(std::istream& in) {
    std::vector<LabeledPair> pairs;
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    if (!read_csv_record(in, fields, line_no)) return pairs;
    if (fields.size() == 1 && text::trim(fields[0]).empty()) return pairs;

    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < fields.size(); ++i) column[text::to_lower(text::trim(fields[i]))] = i;
    for (const char* name : {"topic", "stance", "comment_text", "key_point_text", "label"}) {
        if (!column.count(name)) throw DataError(std::string("labeled pairs: missing column '") + name + "'");
    }
    auto score_col = column.find("score");

    while (read_csv_record(in, fields, line_no)) {
        if (fields.size() == 1 && text::trim(fields[0]).empty()) continue;
        auto where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() < column.size()) throw DataError(where + "expected " + std::to_string(column.size()) + " columns");
        LabeledPair p;
        p.topic = fields[column["topic"]];
        p.stance = parse_stance(fields[column["stance"]]);
        p.comment_text = fields[column["comment_text"]];
        p.key_point_text = fields[column["key_point_text"]];
        auto label = text::trim(fields[column["label"]]);
        if (label == "1") {
            p.label = true;
        } else if (label == "0") {
            p.label = false;
        } else {
            throw DataError(where + "label must be 1 or 0, got '" + std::string(label) + "'");
        }
        if (score_col != column.end() && !text::trim(fields[score_col->second]).empty()) {
            try {
                p.score = std::stod(fields[score_col->second]);
            } catch (const std::exception&) {
                throw DataError(where + "invalid score");
            }
            if (!(*p.score >= 0.0 && *p.score <= 1.0)) throw DataError(where + "score outside [0,1]");
        }
        pairs.push_back(std::move(p));
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const LabeledPair& l, const LabeledPair& r) { return l.topic < r.topic; });
    return pairs;
}

std::vector<LabeledPair> load_labeled_pairs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open labeled pairs '" + path + "'");
    return parse_labeled_pairs(in);
}

std::map<std::string, std::vector<LabeledPair>> group_by_topic(const std::vector<LabeledPair>& pairs) {
    std::map<std::string, std::vector<LabeledPair>> groups;
    for (const auto& p : pairs) groups[p.topic].push_back(p);
    return groups;
}

}  // namespace kpa
