#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "kpa/extraction.hpp"
#include "kpa/ingest.hpp"
#include "kpa/policies.hpp"

namespace kpa {

class MatchScorer;
class QualityScorer;

/// "table:<path>" | "lexical" | "remote:<url>"
struct ScorerSelector {
    enum class Kind { Table, Lexical, Remote };
    Kind kind = Kind::Lexical;
    std::string target;

    static ScorerSelector parse(std::string_view text);
    std::string str() const;
    bool operator==(const ScorerSelector&) const = default;
};

/// "auto" | "table:<path>" | "constant:<q>" | "field" | "remote:<url>".
/// `auto` follows the match scorer: the same table, the same remote
/// endpoint, or for the lexical scorer the dataset's quality field when
/// present and 1.0 otherwise.
struct QualitySelector {
    enum class Kind { Auto, Table, Constant, Field, Remote };
    Kind kind = Kind::Auto;
    std::string target;

    static QualitySelector parse(std::string_view text);
    std::string str() const;
    bool operator==(const QualitySelector&) const = default;
};

struct AnalysisConfig {
    Domain domain = Domain::Arguments;
    FilterConfig filter;
    CandidateConfig candidates;
    double selection_threshold = 0.856;
    /// Threshold for re-matching candidates removed as redundant; the
    /// selection threshold when unset.
    std::optional<double> rematch_threshold;
    std::size_t max_kps = 10;
    PolicyKind policy = PolicyKind::BM;
    /// Final-matching threshold for th / bm+th; the selection threshold when unset.
    std::optional<double> policy_threshold;
    ScorerSelector scorer;
    QualitySelector quality;
    bool strict_table = false;
    std::uint64_t seed = 0;
    bool per_stance = true;
    unsigned workers = 1;

    /// Defaults for one of the profiles `arguments`, `survey`, `reviews`.
    static AnalysisConfig for_domain(Domain domain);

    Policy final_policy() const;
    void validate() const;

    bool operator==(const AnalysisConfig&) const = default;
};

/// Sets one `key = value` entry. Throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(AnalysisConfig& cfg, std::string_view key, std::string_view value);

/// Key-value config: `key = value` lines, `#` comments, optional quotes.
/// The profile is chosen by `domain_override`, else the `profile` key, else
/// the `domain` key, else arguments; remaining keys are applied over it.
AnalysisConfig parse_config(std::istream& in, std::optional<Domain> domain_override = std::nullopt);
AnalysisConfig load_config(const std::string& path, std::optional<Domain> domain_override = std::nullopt);

/// Flat JSON object using the config-file keys.
nlohmann::json to_json(const AnalysisConfig& cfg);
AnalysisConfig config_from_json(const nlohmann::json& j);

struct Scorers {
    std::shared_ptr<const MatchScorer> match;
    std::shared_ptr<const QualityScorer> quality;
};

/// Builds the scorers named by the config. Match scorers other than the
/// remote one (which caches internally) are wrapped in a score cache.
Scorers make_scorers(const AnalysisConfig& cfg, const Dataset* dataset = nullptr);

}  // namespace kpa
