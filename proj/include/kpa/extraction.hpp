#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kpa/ingest.hpp"

namespace kpa {

class QualityScorer;

struct KeyPointCandidate {
    std::string id;
    std::string source_comment_id;
    std::string text;
    std::size_t token_count = 0;
    double quality = 0.0;

    bool operator==(const KeyPointCandidate&) const = default;
};

struct CandidateConfig {
    int max_tokens = 12;
    double min_quality = 0.7;
    std::set<std::string> pronoun_blocklist = default_pronouns();

    static std::set<std::string> default_pronouns();
    static CandidateConfig for_domain(Domain domain);
    void validate() const;

    bool operator==(const CandidateConfig&) const = default;
};

/// Candidate id derived from the comment it came from.
std::string candidate_id(std::string_view comment_id);

/// True when `text` holds exactly one sentence.
bool is_single_sentence(std::string_view text);

/// Single-sentence comments that pass the token cap, the quality floor and
/// the pronoun-start rule, ordered by quality descending then id.
std::vector<KeyPointCandidate> extract_candidates(const std::vector<Comment>& comments, const CandidateConfig& cfg,
                                                  const QualityScorer& quality);

}  // namespace kpa
