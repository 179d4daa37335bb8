#include "kpa/policies.hpp"

#include "kpa/error.hpp"
#include "kpa/text.hpp"

namespace kpa {

void Policy::validate() const {
    bool needs = kind != PolicyKind::BM;
    if (needs && !threshold) throw ConfigError(std::string(to_string(kind)) + " policy requires a threshold");
    if (!needs && threshold) throw ConfigError("bm policy takes no threshold");
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0))
        throw ConfigError("policy threshold must lie in [0,1]");
}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::TH: return "th";
        case PolicyKind::BM: return "bm";
        case PolicyKind::BM_TH: return "bm+th";
    }
    return "bm";
}

PolicyKind parse_policy_kind(std::string_view s) {
    std::string v = text::to_lower(text::trim(s));
    if (v == "th") return PolicyKind::TH;
    if (v == "bm") return PolicyKind::BM;
    if (v == "bm+th" || v == "bm_th" || v == "bmth") return PolicyKind::BM_TH;
    throw ConfigError("unknown policy '" + std::string(s) + "'");
}

std::set<std::string> apply_policy(const std::map<std::string, double>& scores, const Policy& policy) {
    policy.validate();
    std::set<std::string> out;
    if (policy.kind == PolicyKind::TH) {
        for (const auto& [id, s] : scores) {
            if (s > *policy.threshold) out.insert(id);
        }
        return out;
    }
    if (scores.empty()) throw DataError("no key points");
    // std::map iterates ids ascending, so the first maximum wins ties.
    auto best = scores.begin();
    for (auto it = scores.begin(); it != scores.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    if (policy.kind == PolicyKind::BM || best->second > *policy.threshold) out.insert(best->first);
    return out;
}

}  // namespace kpa
