#include "kpa/agreement.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "kpa/error.hpp"
#include "kpa/text.hpp"

namespace kpa {

Judgment parse_judgment(std::string_view s) {
    std::string v = text::to_lower(text::trim(s));
    if (v == "match" || v == "1" || v == "yes") return Judgment::Match;
    if (v == "no-match" || v == "no_match" || v == "nomatch" || v == "0" || v == "no") return Judgment::NoMatch;
    if (v == "unclear") return Judgment::Unclear;
    throw DataError("unknown judgment '" + std::string(s) + "'");
}

std::string_view to_string(Judgment j) {
    switch (j) {
        case Judgment::Match: return "match";
        case Judgment::NoMatch: return "no-match";
        case Judgment::Unclear: return "unclear";
    }
    return "unclear";
}

bool majority_label(std::span<const Judgment> judgments) {
    if (judgments.empty()) throw DataError("no judgments");
    auto matches = static_cast<std::size_t>(std::count(judgments.begin(), judgments.end(), Judgment::Match));
    return 2 * matches > judgments.size();
}

double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw DataError("cohen_kappa: label vectors differ in length");
    if (a.empty()) throw DataError("cohen_kappa: no items");
    // integer counts keep rational fixtures exact: kappa = (n*agree - e) / (n*n - e)
    std::int64_t agree = 0, a_true = 0, b_true = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i];
        a_true += a[i];
        b_true += b[i];
    }
    const auto n = static_cast<std::int64_t>(a.size());
    std::int64_t chance = a_true * b_true + (n - a_true) * (n - b_true);
    if (chance == n * n) return 1.0;
    return static_cast<double>(n * agree - chance) / static_cast<double>(n * n - chance);
}

double fleiss_kappa(const Eigen::MatrixXi& table) {
    if (table.rows() == 0 || table.cols() == 0) throw DataError("fleiss_kappa: empty table");
    if ((table.array() < 0).any()) throw DataError("fleiss_kappa: negative count");
    Eigen::VectorXi raters = table.rowwise().sum();
    const int n = raters(0);
    if (n < 2) throw DataError("fleiss_kappa: need at least two ratings per item");
    if ((raters.array() != n).any()) throw DataError("fleiss_kappa: items have unequal numbers of ratings");

    Eigen::MatrixXd counts = table.cast<double>();
    const double items = static_cast<double>(table.rows());
    Eigen::RowVectorXd p = counts.colwise().sum() / (items * n);
    Eigen::VectorXd agreement = (counts.rowwise().squaredNorm().array() - n) / (static_cast<double>(n) * (n - 1));
    double p_bar = agreement.mean();
    double p_e = p.squaredNorm();
    if (p_e == 1.0) return 1.0;
    return (p_bar - p_e) / (1.0 - p_e);
}

void AnnotationSet::add(const std::string& comment_id, const std::string& key_point_id,
                        const std::string& annotator_id, Judgment judgment) {
    auto& list = items_[PairKey{comment_id, key_point_id}];
    for (const auto& a : list) {
        if (a.annotator_id == annotator_id) {
            throw DataError("annotator '" + annotator_id + "' judged (" + comment_id + ", " + key_point_id +
                            ") more than once");
        }
    }
    list.push_back({annotator_id, judgment});
}

AnnotationSet AnnotationSet::without(const std::set<std::string>& annotators) const {
    AnnotationSet out;
    for (const auto& [key, list] : items_) {
        for (const auto& a : list) {
            if (!annotators.count(a.annotator_id)) out.add(key.comment_id, key.key_point_id, a.annotator_id, a.judgment);
        }
    }
    return out;
}

AnnotationSet AnnotationSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open annotations '" + path + "'");
    AnnotationSet set;
    std::string line;
    std::size_t line_no = 0;
    auto as_string = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            set.add(as_string(rec.at("comment_id")), as_string(rec.at("key_point_id")),
                    as_string(rec.at("annotator_id")), parse_judgment(rec.at("judgment").get<std::string>()));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

Eigen::MatrixXi fleiss_table(const AnnotationSet& annotations, bool keep_unclear) {
    const int categories = keep_unclear ? 3 : 2;
    Eigen::MatrixXi table = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(annotations.size()), categories);
    Eigen::Index row = 0;
    for (const auto& [key, list] : annotations.items()) {
        for (const auto& a : list) {
            int col = 1;
            if (a.judgment == Judgment::Match) col = 0;
            else if (a.judgment == Judgment::Unclear && keep_unclear) col = 2;
            ++table(row, col);
        }
        ++row;
    }
    return table;
}

std::map<std::string, double> annotator_kappa(const AnnotationSet& annotations, std::size_t min_shared,
                                              std::size_t min_peers) {
    // annotator -> item index -> binary judgment
    std::map<std::string, std::map<std::size_t, bool>> by_annotator;
    std::size_t item = 0;
    for (const auto& [key, list] : annotations.items()) {
        for (const auto& a : list) by_annotator[a.annotator_id][item] = a.judgment == Judgment::Match;
        ++item;
    }
    std::vector<std::string> names;
    for (const auto& [name, judgments] : by_annotator) names.push_back(name);

    std::map<std::string, std::vector<double>> pairwise;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& ji = by_annotator[names[i]];
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            const auto& jj = by_annotator[names[j]];
            std::vector<bool> a, b;
            for (const auto& [idx, label] : ji) {
                if (auto it = jj.find(idx); it != jj.end()) {
                    a.push_back(label);
                    b.push_back(it->second);
                }
            }
            if (a.size() < min_shared || a.empty()) continue;
            double k = cohen_kappa(a, b);
            pairwise[names[i]].push_back(k);
            pairwise[names[j]].push_back(k);
        }
    }
    std::map<std::string, double> out;
    for (const auto& [name, kappas] : pairwise) {
        if (kappas.size() < min_peers || kappas.empty()) continue;
        out[name] = std::accumulate(kappas.begin(), kappas.end(), 0.0) / static_cast<double>(kappas.size());
    }
    return out;
}

std::set<std::string> low_agreement_annotators(const std::map<std::string, double>& kappas, double min_kappa) {
    std::set<std::string> out;
    for (const auto& [name, k] : kappas) {
        if (k < min_kappa) out.insert(name);
    }
    return out;
}

SplitConsistency split_consistency_detail(const AnnotationSet& annotations, std::uint64_t seed,
                                          std::size_t judgments_per_item) {
    if (annotations.empty()) throw DataError("split_consistency: no annotations");
    if (judgments_per_item < 2 || judgments_per_item % 2 != 0)
        throw ConfigError("split_consistency: judgments per item must be even");
    const std::size_t half = judgments_per_item / 2;
    std::mt19937_64 rng(seed);
    SplitConsistency out;
    for (const auto& [key, list] : annotations.items()) {
        if (list.size() != judgments_per_item) {
            throw DataError("split_consistency: item (" + key.comment_id + ", " + key.key_point_id + ") has " +
                            std::to_string(list.size()) + " judgments, expected " +
                            std::to_string(judgments_per_item));
        }
        std::vector<std::size_t> order(list.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Judgment> first, second;
        for (std::size_t i = 0; i < order.size(); ++i) (i < half ? first : second).push_back(list[order[i]].judgment);
        out.items.push_back(key);
        out.first.push_back(majority_label(first));
        out.second.push_back(majority_label(second));
        std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
        std::sort(chosen.begin(), chosen.end());
        out.first_half.push_back(std::move(chosen));
    }
    out.kappa = cohen_kappa(out.first, out.second);
    return out;
}

double split_consistency(const AnnotationSet& annotations, std::uint64_t seed) {
    return split_consistency_detail(annotations, seed).kappa;
}

}  // namespace kpa
