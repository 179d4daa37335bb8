#include "kpa/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/remote.hpp"
#include "kpa/scoring.hpp"
#include "kpa/text.hpp"

namespace kpa {

using nlohmann::json;

namespace {

std::pair<std::string_view, std::string_view> split_prefix(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos) return {s, {}};
    return {s.substr(0, colon), s.substr(colon + 1)};
}

std::string unquote(std::string_view v) {
    v = text::trim(v);
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
        v = v.substr(1, v.size() - 2);
    }
    return std::string(v);
}

double parse_real(std::string_view key, std::string_view v) {
    std::string s(text::trim(v));
    try {
        std::size_t used = 0;
        double d = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected a real number, got '" + s + "'");
    }
}

long long parse_integer(std::string_view key, std::string_view v) {
    auto s = text::trim(v);
    long long out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(s) + "'");
    return out;
}

bool parse_flag(std::string_view key, std::string_view v) {
    auto s = text::to_lower(text::trim(v));
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(v) + "'");
}

std::string join(const std::set<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ',';
        out += w;
    }
    return out;
}

}  // namespace

ScorerSelector ScorerSelector::parse(std::string_view s) {
    auto trimmed = text::trim(s);
    auto [head, rest] = split_prefix(trimmed);
    std::string kind = text::to_lower(head);
    if (kind == "lexical" && rest.empty()) return {Kind::Lexical, {}};
    if (kind == "table" && !rest.empty()) return {Kind::Table, std::string(rest)};
    if (kind == "remote" && !rest.empty()) return {Kind::Remote, std::string(rest)};
    throw ConfigError("scorer must be table:<path>, lexical or remote:<url>, got '" + std::string(s) + "'");
}

std::string ScorerSelector::str() const {
    switch (kind) {
        case Kind::Table: return "table:" + target;
        case Kind::Remote: return "remote:" + target;
        case Kind::Lexical: break;
    }
    return "lexical";
}

QualitySelector QualitySelector::parse(std::string_view s) {
    auto trimmed = text::trim(s);
    auto [head, rest] = split_prefix(trimmed);
    std::string kind = text::to_lower(head);
    if (kind == "auto" && rest.empty()) return {Kind::Auto, {}};
    if (kind == "field" && rest.empty()) return {Kind::Field, {}};
    if (kind == "table" && !rest.empty()) return {Kind::Table, std::string(rest)};
    if (kind == "remote" && !rest.empty()) return {Kind::Remote, std::string(rest)};
    if (kind == "constant" && !rest.empty()) {
        double q = parse_real("quality", rest);
        if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quality constant must lie in [0,1]");
        return {Kind::Constant, std::string(rest)};
    }
    throw ConfigError("quality must be auto, field, constant:<q>, table:<path> or remote:<url>, got '" +
                      std::string(s) + "'");
}

std::string QualitySelector::str() const {
    switch (kind) {
        case Kind::Table: return "table:" + target;
        case Kind::Remote: return "remote:" + target;
        case Kind::Constant: return "constant:" + target;
        case Kind::Field: return "field";
        case Kind::Auto: break;
    }
    return "auto";
}

AnalysisConfig AnalysisConfig::for_domain(Domain domain) {
    AnalysisConfig cfg;
    cfg.domain = domain;
    cfg.filter = FilterConfig::for_domain(domain);
    cfg.candidates = CandidateConfig::for_domain(domain);
    switch (domain) {
        case Domain::Arguments:
            cfg.selection_threshold = 0.856;
            cfg.max_kps = 10;
            cfg.per_stance = true;
            break;
        case Domain::Survey:
            cfg.selection_threshold = 0.856;
            cfg.max_kps = 20;
            cfg.per_stance = false;
            break;
        case Domain::Reviews:
            cfg.selection_threshold = 0.999;
            cfg.max_kps = 2;
            cfg.per_stance = false;
            break;
    }
    return cfg;
}

Policy AnalysisConfig::final_policy() const {
    if (policy == PolicyKind::BM) return Policy::bm();
    return Policy{policy, policy_threshold.value_or(selection_threshold)};
}

void AnalysisConfig::validate() const {
    filter.validate();
    candidates.validate();
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(selection_threshold)) throw ConfigError("selection_threshold must lie in [0,1]");
    if (rematch_threshold && !in_unit(*rematch_threshold)) throw ConfigError("rematch_threshold must lie in [0,1]");
    if (policy_threshold && !in_unit(*policy_threshold)) throw ConfigError("threshold must lie in [0,1]");
    if (max_kps < 1) throw ConfigError("max_kps must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    final_policy().validate();
}

void apply_setting(AnalysisConfig& cfg, std::string_view raw_key, std::string_view raw_value) {
    std::string key = text::to_lower(text::trim(raw_key));
    std::string value = unquote(raw_value);
    auto unit = [&](double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key + " must lie in [0,1]");
        return v;
    };
    auto positive = [&](long long v) {
        if (v < 1) throw ConfigError(key + " must be >= 1");
        return v;
    };

    if (key == "domain") cfg.domain = parse_domain(value);
    else if (key == "profile") {
        // Only meaningful as the first setting; handled by parse_config.
        if (parse_domain(value) != cfg.domain) cfg = AnalysisConfig::for_domain(parse_domain(value));
    } else if (key == "selection_threshold") cfg.selection_threshold = unit(parse_real(key, value));
    else if (key == "rematch_threshold") {
        if (value.empty()) cfg.rematch_threshold.reset();
        else cfg.rematch_threshold = unit(parse_real(key, value));
    } else if (key == "max_kps") cfg.max_kps = static_cast<std::size_t>(positive(parse_integer(key, value)));
    else if (key == "policy") cfg.policy = parse_policy_kind(value);
    else if (key == "threshold") {
        if (value.empty()) cfg.policy_threshold.reset();
        else cfg.policy_threshold = unit(parse_real(key, value));
    } else if (key == "scorer") cfg.scorer = ScorerSelector::parse(value);
    else if (key == "quality") cfg.quality = QualitySelector::parse(value);
    else if (key == "scorer.strict") cfg.strict_table = parse_flag(key, value);
    else if (key == "seed") {
        auto v = parse_integer(key, value);
        if (v < 0) throw ConfigError("seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(v);
    } else if (key == "per_stance") cfg.per_stance = parse_flag(key, value);
    else if (key == "workers") cfg.workers = static_cast<unsigned>(positive(parse_integer(key, value)));
    else if (key == "filter.min_chars") cfg.filter.min_chars = static_cast<int>(parse_integer(key, value));
    else if (key == "filter.min_tokens") cfg.filter.min_tokens = static_cast<int>(parse_integer(key, value));
    else if (key == "filter.max_tokens") cfg.filter.max_tokens = static_cast<int>(parse_integer(key, value));
    else if (key == "filter.ascii_only") cfg.filter.ascii_only = parse_flag(key, value);
    else if (key == "filter.first_sentence_only") cfg.filter.first_sentence_only = parse_flag(key, value);
    else if (key == "filter.low_quality_fraction") cfg.filter.low_quality_fraction = parse_real(key, value);
    else if (key == "filter.per_topic_quality") cfg.filter.per_topic_quality = parse_flag(key, value);
    else if (key == "candidates.max_tokens") cfg.candidates.max_tokens = static_cast<int>(parse_integer(key, value));
    else if (key == "candidates.min_quality") cfg.candidates.min_quality = unit(parse_real(key, value));
    else if (key == "candidates.pronouns") {
        std::set<std::string> words;
        std::stringstream ss(value);
        std::string w;
        while (std::getline(ss, w, ',')) {
            auto t = text::to_lower(text::trim(w));
            if (!t.empty()) words.insert(t);
        }
        cfg.candidates.pronoun_blocklist = std::move(words);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

AnalysisConfig parse_config(std::istream& in, std::optional<Domain> domain_override) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    std::optional<Domain> profile, domain;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        std::string_view body = text::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = text::to_lower(text::trim(body.substr(0, eq)));
        std::string value = unquote(body.substr(eq + 1));
        if (key == "profile") profile = parse_domain(value);
        else if (key == "domain") domain = parse_domain(value);
        entries.emplace_back(std::move(key), std::move(value));
    }
    Domain base = domain_override.value_or(profile.value_or(domain.value_or(Domain::Arguments)));
    AnalysisConfig cfg = AnalysisConfig::for_domain(base);
    for (const auto& [key, value] : entries) {
        if (key == "profile") continue;
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        } catch (const Error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (domain_override) cfg.domain = *domain_override;
    cfg.validate();
    return cfg;
}

AnalysisConfig load_config(const std::string& path, std::optional<Domain> domain_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    auto cfg = parse_config(in, domain_override);
    // table paths in a config file are relative to the file
    auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& target) {
        std::filesystem::path p(target);
        if (p.is_relative()) target = (base / p).lexically_normal().string();
    };
    if (cfg.scorer.kind == ScorerSelector::Kind::Table) resolve(cfg.scorer.target);
    if (cfg.quality.kind == QualitySelector::Kind::Table) resolve(cfg.quality.target);
    return cfg;
}

json to_json(const AnalysisConfig& cfg) {
    json j;
    j["domain"] = std::string(to_string(cfg.domain));
    j["selection_threshold"] = cfg.selection_threshold;
    j["rematch_threshold"] = cfg.rematch_threshold ? json(*cfg.rematch_threshold) : json(nullptr);
    j["max_kps"] = cfg.max_kps;
    j["policy"] = std::string(to_string(cfg.policy));
    j["threshold"] = cfg.policy_threshold ? json(*cfg.policy_threshold) : json(nullptr);
    j["scorer"] = cfg.scorer.str();
    j["quality"] = cfg.quality.str();
    j["scorer.strict"] = cfg.strict_table;
    j["seed"] = cfg.seed;
    j["per_stance"] = cfg.per_stance;
    j["workers"] = cfg.workers;
    j["filter.min_chars"] = cfg.filter.min_chars;
    j["filter.min_tokens"] = cfg.filter.min_tokens;
    j["filter.max_tokens"] = cfg.filter.max_tokens;
    j["filter.ascii_only"] = cfg.filter.ascii_only;
    j["filter.first_sentence_only"] = cfg.filter.first_sentence_only;
    j["filter.low_quality_fraction"] = cfg.filter.low_quality_fraction;
    j["filter.per_topic_quality"] = cfg.filter.per_topic_quality;
    j["candidates.max_tokens"] = cfg.candidates.max_tokens;
    j["candidates.min_quality"] = cfg.candidates.min_quality;
    j["candidates.pronouns"] = join(cfg.candidates.pronoun_blocklist);
    return j;
}

AnalysisConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    std::optional<Domain> base;
    if (j.contains("profile")) base = parse_domain(j["profile"].get<std::string>());
    else if (j.contains("domain")) base = parse_domain(j["domain"].get<std::string>());
    AnalysisConfig cfg = AnalysisConfig::for_domain(base.value_or(Domain::Arguments));
    for (const auto& [key, value] : j.items()) {
        if (key == "profile") continue;
        std::string v;
        if (value.is_null()) v = "";
        else if (value.is_string()) v = value.get<std::string>();
        else if (value.is_number_float()) {
            // Full precision so that a snapshot reloads to the same doubles.
            std::ostringstream os;
            os.precision(17);
            os << value.get<double>();
            v = os.str();
        } else v = value.dump();
        apply_setting(cfg, key, v);
    }
    cfg.validate();
    return cfg;
}

Scorers make_scorers(const AnalysisConfig& cfg, const Dataset* dataset) {
    Scorers out;
    std::shared_ptr<const ScoreTable> table;
    auto load_table = [&](const std::string& path) {
        if (!table) table = std::make_shared<ScoreTable>(ScoreTable::load(path));
        return table;
    };
    switch (cfg.scorer.kind) {
        case ScorerSelector::Kind::Table:
            out.match = std::make_shared<CachingMatchScorer>(
                std::make_shared<TableMatchScorer>(load_table(cfg.scorer.target), cfg.strict_table));
            break;
        case ScorerSelector::Kind::Lexical:
            out.match = std::make_shared<CachingMatchScorer>(std::make_shared<LexicalMatchScorer>());
            break;
        case ScorerSelector::Kind::Remote:
            out.match = std::make_shared<RemoteMatchScorer>(RemoteOptions{cfg.scorer.target});
            break;
    }

    auto field_scorer = [&]() -> std::shared_ptr<const QualityScorer> {
        auto fields = std::make_shared<ScoreTable>();
        if (dataset) {
            for (const auto& c : dataset->comments) {
                if (c.quality) fields->set_quality(c.analysis_text, c.topic_id, *c.quality);
            }
        }
        return std::make_shared<TableQualityScorer>(fields, cfg.strict_table);
    };

    switch (cfg.quality.kind) {
        case QualitySelector::Kind::Table:
            out.quality = std::make_shared<TableQualityScorer>(
                std::make_shared<ScoreTable>(ScoreTable::load(cfg.quality.target)), cfg.strict_table);
            break;
        case QualitySelector::Kind::Constant:
            out.quality = std::make_shared<ConstantQualityScorer>(std::stod(cfg.quality.target));
            break;
        case QualitySelector::Kind::Field:
            if (!dataset) throw ConfigError("quality 'field' reads the dataset's quality values; none given");
            out.quality = field_scorer();
            break;
        case QualitySelector::Kind::Remote:
            out.quality = std::make_shared<RemoteQualityScorer>(RemoteOptions{cfg.quality.target});
            break;
        case QualitySelector::Kind::Auto:
            if (cfg.scorer.kind == ScorerSelector::Kind::Table) {
                out.quality = std::make_shared<TableQualityScorer>(load_table(cfg.scorer.target), cfg.strict_table);
            } else if (cfg.scorer.kind == ScorerSelector::Kind::Remote) {
                out.quality = std::make_shared<RemoteQualityScorer>(RemoteOptions{cfg.scorer.target});
            } else {
                bool has_field = false;
                if (dataset) {
                    for (const auto& c : dataset->comments) has_field = has_field || c.quality.has_value();
                }
                out.quality = has_field ? field_scorer() : std::make_shared<ConstantQualityScorer>(1.0);
            }
            break;
    }
    return out;
}

}  // namespace kpa
