#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace kpa {

enum class PolicyKind { TH, BM, BM_TH };

/// Selection policy: how a comment's per-key-point scores turn into matches.
/// TH keeps every score > threshold, BM the single best, BM_TH the best only
/// when it beats the threshold. Comparisons are strict.
struct Policy {
    PolicyKind kind = PolicyKind::BM;
    std::optional<double> threshold;

    static Policy th(double t) { return {PolicyKind::TH, t}; }
    static Policy bm() { return {PolicyKind::BM, std::nullopt}; }
    static Policy bm_th(double t) { return {PolicyKind::BM_TH, t}; }

    /// Throws ConfigError unless the threshold is present exactly when the
    /// kind needs one, and lies in [0,1].
    void validate() const;

    bool operator==(const Policy&) const = default;
};

std::string_view to_string(PolicyKind kind);   // "th" | "bm" | "bm+th"
PolicyKind parse_policy_kind(std::string_view text);

/// Argmax ties go to the lexicographically smallest id.
std::set<std::string> apply_policy(const std::map<std::string, double>& scores, const Policy& policy);

}  // namespace kpa
