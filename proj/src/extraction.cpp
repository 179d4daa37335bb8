#include "kpa/extraction.hpp"

#include <algorithm>

#include "kpa/error.hpp"
#include "kpa/scoring.hpp"
#include "kpa/text.hpp"

namespace kpa {

std::set<std::string> CandidateConfig::default_pronouns() {
    return {"i",  "you", "he",  "she",  "it",   "we",  "they", "this", "that", "these", "those", "there",
            "me", "him", "her", "us",   "them", "my",  "your", "his",  "its",  "our",   "their"};
}

CandidateConfig CandidateConfig::for_domain(Domain domain) {
    CandidateConfig cfg;
    switch (domain) {
        case Domain::Arguments:
            cfg.max_tokens = 12;
            cfg.min_quality = 0.7;
            break;
        case Domain::Survey:
            cfg.max_tokens = 10;
            cfg.min_quality = 0.4;
            break;
        case Domain::Reviews:
            cfg.max_tokens = 12;
            cfg.min_quality = 0.35;
            break;
    }
    return cfg;
}

void CandidateConfig::validate() const {
    if (max_tokens < 1) throw ConfigError("candidates.max_tokens must be >= 1");
    if (!(min_quality >= 0.0 && min_quality <= 1.0)) throw ConfigError("candidates.min_quality must lie in [0,1]");
}

std::string candidate_id(std::string_view comment_id) { return "kp-" + std::string(comment_id); }

bool is_single_sentence(std::string_view s) {
    auto trimmed = text::trim(s);
    if (trimmed.empty()) return false;
    return text::first_sentence(trimmed) == trimmed;
}

std::vector<KeyPointCandidate> extract_candidates(const std::vector<Comment>& comments, const CandidateConfig& cfg,
                                                  const QualityScorer& quality) {
    cfg.validate();
    std::vector<KeyPointCandidate> shortlisted;
    std::vector<QualityItem> items;
    for (const auto& c : comments) {
        auto sentence = std::string(text::trim(c.analysis_text));
        if (!is_single_sentence(sentence)) continue;
        auto tokens = text::tokenize_lower(sentence);
        if (tokens.empty() || tokens.size() > static_cast<std::size_t>(cfg.max_tokens)) continue;
        if (cfg.pronoun_blocklist.count(tokens.front())) continue;
        shortlisted.push_back({candidate_id(c.id), c.id, sentence, tokens.size(), 0.0});
        items.push_back({sentence, c.topic_id});
    }
    auto scores = score_quality(quality, items);
    std::vector<KeyPointCandidate> out;
    for (std::size_t i = 0; i < shortlisted.size(); ++i) {
        if (scores[i] < cfg.min_quality) continue;
        shortlisted[i].quality = scores[i];
        out.push_back(std::move(shortlisted[i]));
    }
    std::sort(out.begin(), out.end(), [](const KeyPointCandidate& l, const KeyPointCandidate& r) {
        if (l.quality != r.quality) return l.quality > r.quality;
        return l.id < r.id;
    });
    return out;
}

}  // namespace kpa
