// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "kpa/agreement.hpp"
#include "kpa/extraction.hpp"
#include "kpa/ingest.hpp"
#include "kpa/metrics.hpp"
#include "kpa/pipeline.hpp"
#include "kpa/policies.hpp"
#include "kpa/scoring.hpp"
#include "kpa/selection.hpp"
#include "selection_oracle.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1 ---------------------------------------------------------------------

Outcome oracle_equivalence() {
    Outcome out;
    std::mt19937_64 rng(20201);
    const double thresholds[] = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const int instances = 600;
    auto start = Clock::now();
    std::size_t removals = 0;
    for (int run = 0; run < instances && out.pass; ++run) {
        int n = std::uniform_int_distribution<int>(1, 15)(rng);
        int m = std::uniform_int_distribution<int>(1, 6)(rng);
        oracle::Instance in;
        in.n_comments = n;
        in.n_candidates = m;
        in.t = thresholds[std::uniform_int_distribution<int>(0, 6)(rng)];
        int total = n + m;
        // coarse grid so ties and exact-threshold scores occur
        std::uniform_int_distribution<int> grid(0, 20);
        in.score.assign(total, std::vector<double>(total, 0.0));
        for (auto& row : in.score)
            for (auto& s : row) s = grid(rng) / 20.0;

        std::vector<std::string> texts(total);
        for (int i = 0; i < n; ++i) {
            in.ids.push_back(fmt::format("c{:02}", i));
            texts[i] = fmt::format("comment text {}", i);
        }
        for (int j = 0; j < m; ++j) {
            in.ids.push_back(fmt::format("k{}", j));
            texts[n + j] = fmt::format("candidate text {}", j);
        }
        auto table = std::make_shared<kpa::ScoreTable>();
        for (int a = 0; a < total; ++a)
            for (int b = 0; b < total; ++b) table->set(texts[a], texts[b], "T", in.score[a][b]);
        kpa::TableMatchScorer scorer(table, true);

        std::vector<kpa::MatchItem> items;
        for (int i = 0; i < n; ++i) items.push_back({in.ids[i], texts[i], kpa::ItemKind::Comment});
        std::vector<kpa::KeyPointCandidate> cands;
        // hand the library the candidates in a shuffled order
        std::vector<int> order(m);
        for (int j = 0; j < m; ++j) order[j] = j;
        std::shuffle(order.begin(), order.end(), rng);
        for (int j : order) cands.push_back({in.ids[n + j], "", texts[n + j], 3, 1.0});
        std::shuffle(items.begin(), items.end(), rng);

        auto expected = oracle::select_key_points(in);
        auto got = kpa::select_key_points(items, cands, in.t, scorer, "T");

        std::size_t expected_items = 0;
        for (const auto& e : expected) expected_items += e.items.size();
        std::size_t first_stage = 0;
        for (int i = 0; i < n; ++i) {
            double best = -1;
            for (int j = 0; j < m; ++j) best = std::max(best, in.score[i][n + j]);
            if (best > in.t) ++first_stage;
        }
        if (expected_items > first_stage) ++removals;

        if (got.size() != expected.size()) {
            out.fail(fmt::format("instance {}: {} key points vs oracle {}", run, got.size(), expected.size()));
            break;
        }
        for (std::size_t r = 0; r < got.size(); ++r) {
            const auto& e = expected[r];
            if (got[r].id != in.ids[e.candidate]) {
                out.fail(fmt::format("instance {}: rank {} is {} vs oracle {}", run, r, got[r].id, in.ids[e.candidate]));
                break;
            }
            std::vector<std::pair<std::string, double>> lhs, rhs;
            for (const auto& mt : got[r].selection_matches) lhs.emplace_back(mt.item_id, mt.score);
            for (const auto& a : e.items) rhs.emplace_back(in.ids[a.item], a.score);
            std::sort(lhs.begin(), lhs.end());
            std::sort(rhs.begin(), rhs.end());
            if (lhs != rhs) {
                out.fail(fmt::format("instance {}: assignments of {} differ", run, got[r].id));
                break;
            }
            if (!std::is_sorted(got[r].selection_matches.begin(), got[r].selection_matches.end(),
                                [](const auto& x, const auto& y) { return x.score > y.score; })) {
                out.fail(fmt::format("instance {}: matches of {} not sorted by score", run, got[r].id));
                break;
            }
        }
    }
    double secs = seconds_since(start);
    if (out.pass && secs >= 5.0) out.fail(fmt::format("took {:.2f}s", secs));
    if (out.pass)
        out.detail = fmt::format("{} instances identical, {} with re-matched items, {:.2f}s", instances, removals, secs);
    return out;
}

// --- 2 ---------------------------------------------------------------------

Outcome metric_identity() {
    Outcome out;
    struct Row {
        const char* name;
        double p, r, f1;
    } rows[] = {{"first model, bm+th", 0.877, 0.751, 0.809}, {"second model, bm+th", 0.849, 0.711, 0.773}};
    std::vector<std::string> parts;
    for (const auto& row : rows) {
        // 1000 positives; fp chosen so the precision rounds to the reported value
        std::size_t tp = static_cast<std::size_t>(std::lround(row.r * 1000));
        std::size_t fn = 1000 - tp;
        std::size_t fp = static_cast<std::size_t>(std::lround(tp / row.p - tp));
        auto m = kpa::confusion_metrics(tp, fp, fn, 3000);
        if (std::abs(m.precision - row.p) > 0.0005 || std::abs(m.recall - row.r) > 0.0005)
            out.fail(fmt::format("{}: counts do not reproduce P/R", row.name));
        if (std::abs(m.f1 - row.f1) > 0.002)
            out.fail(fmt::format("{}: F1 {:.4f} vs {:.3f}", row.name, m.f1, row.f1));
        parts.push_back(fmt::format("{} F1={:.4f} (tp={} fp={} fn={})", row.name, m.f1, tp, fp, fn));
    }
    if (out.pass) out.detail = parts[0] + "; " + parts[1];
    return out;
}

// --- 3 ---------------------------------------------------------------------

Outcome coverage_curve() {
    Outcome out;
    std::vector<kpa::SamplePoint> sample = {{true, .9}, {true, .8}, {false, .7}, {true, .6}, {false, .5}};
    auto levels = kpa::default_coverage_levels();
    auto curve = kpa::precision_at_coverage(sample, levels);
    std::vector<double> expected = {1.0, 1.0, 0.75, 0.75, 0.6};
    if (curve.precision_at != expected) {
        out.fail(fmt::format("fixture curve [{}]", fmt::join(curve.precision_at, ", ")));
        return out;
    }
    std::mt19937_64 rng(7);
    for (int run = 0; run < 1000; ++run) {
        int n = std::uniform_int_distribution<int>(1, 40)(rng);
        std::vector<kpa::SamplePoint> s;
        for (int i = 0; i < n; ++i)
            s.push_back({std::bernoulli_distribution(0.6)(rng), std::uniform_int_distribution<int>(0, 10)(rng) / 10.0});
        auto c = kpa::precision_at_coverage(s, levels);
        for (std::size_t i = 1; i < c.precision_at.size(); ++i) {
            if (c.precision_at[i] > c.precision_at[i - 1]) {
                out.fail(fmt::format("sample {}: precision rises from level {} to {}", run, levels[i - 1], levels[i]));
                return out;
            }
        }
    }
    out.detail = "fixture [1, 1, 0.75, 0.75, 0.6]; 1000 random samples nonincreasing";
    return out;
}

// --- 4 ---------------------------------------------------------------------

std::set<std::string> policy_by_definition(const std::map<std::string, double>& s, kpa::PolicyKind kind, double t) {
    std::set<std::string> out;
    if (kind == kpa::PolicyKind::TH) {
        for (const auto& [k, v] : s)
            if (v > t) out.insert(k);
        return out;
    }
    double best = -1;
    for (const auto& [k, v] : s) best = std::max(best, v);
    std::vector<std::string> tied;
    for (const auto& [k, v] : s)
        if (v == best) tied.push_back(k);
    std::string pick = *std::min_element(tied.begin(), tied.end());
    if (kind == kpa::PolicyKind::BM || best > t) out.insert(pick);
    return out;
}

Outcome policy_semantics() {
    Outcome out;
    const double grid[] = {0, 0.25, 0.5, 0.75, 1};
    const double thresholds[] = {0, 0.25, 0.5, 0.75, 1, 0.3};
    std::size_t checks = 0;
    for (int k = 1; k <= 4 && out.pass; ++k) {
        int maps = 1;
        for (int i = 0; i < k; ++i) maps *= 5;
        for (int code = 0; code < maps && out.pass; ++code) {
            std::map<std::string, double> scores;
            int c = code;
            for (int i = 0; i < k; ++i, c /= 5) scores[fmt::format("kp{}", i)] = grid[c % 5];
            for (double t : thresholds) {
                for (auto kind : {kpa::PolicyKind::TH, kpa::PolicyKind::BM, kpa::PolicyKind::BM_TH}) {
                    kpa::Policy p = kind == kpa::PolicyKind::BM ? kpa::Policy::bm() : kpa::Policy{kind, t};
                    auto got = kpa::apply_policy(scores, p);
                    ++checks;
                    if (got != policy_by_definition(scores, kind, t)) {
                        out.fail(fmt::format("{} at t={} disagrees on map #{} of {} key points", kpa::to_string(kind), t,
                                             code, k));
                        break;
                    }
                    if (kind != kpa::PolicyKind::BM) {
                        for (const auto& id : got)
                            if (!(scores.at(id) > t)) out.fail("a score equal to t matched");
                    }
                }
            }
        }
    }
    for (double t : grid) {
        std::map<std::string, double> at_t = {{"a", t}};
        if (!kpa::apply_policy(at_t, kpa::Policy::th(t)).empty() || !kpa::apply_policy(at_t, kpa::Policy::bm_th(t)).empty())
            out.fail(fmt::format("score exactly {} matched", t));
    }
    if (out.pass) out.detail = fmt::format("{} policy evaluations agree; score == t never matches", checks);
    return out;
}

// --- 5 ---------------------------------------------------------------------

Outcome filter_conformance() {
    Outcome out;
    struct Row {
        const char* id;
        const char* text;
        double quality;
    };
    const Row rows[] = {
        {"a01", "Public transport reduces traffic in crowded cities.", 0.90},
        {"a02", "Subsidies make bus fares affordable for students.", 0.85},
        {"a03", "Trains emit far less carbon than private cars.", 0.80},
        {"a04", "Better transit gives rural residents access to jobs.", 0.88},
        {"a05", "Cheaper tickets would increase ridership across the region.", 0.82},
        {"a06", "It would cut pollution in every major city.", 0.90},  // pronoun start
        {"a07",
         "Funding public transport helps elderly people who can no longer drive reach doctors and shops safely.",
         0.90},  // 17 tokens, over the candidate cap
        {"a08", "Transit subsidies are a reasonable use of public money.", 0.50},  // below candidate quality
        {"a09", "Buses are nice I guess sometimes maybe.", 0.10},                  // bottom decile
        {"a10", "Public money should fund roads for drivers instead.", 0.75},
        {"a11", "Reliable service matters more than low prices for riders.", 0.78},
        {"v01", "Public transport is tr\xc3\xa8s important for cities.", 0.90},  // non-ascii
        {"v02", "I go to X", 0.90},                                             // 9 characters
        {"v03", "Absolutely necessary investment.", 0.90},                      // 3 tokens
        {"v04",
         "Public transport should be subsidized because it reduces congestion and pollution and it also "
         "helps people without cars reach work school and hospitals every single day of the year in all weather.",
         0.90},  // 35 tokens
    };
    std::vector<kpa::Comment> comments;
    auto table = std::make_shared<kpa::ScoreTable>();
    for (const auto& r : rows) {
        comments.push_back({r.id, "T", kpa::Stance::Pro, r.text, r.text, std::nullopt});
        table->set_quality(r.text, "T", r.quality);
    }
    kpa::TableQualityScorer quality(table, true);
    auto filter = kpa::FilterConfig::for_domain(kpa::Domain::Arguments);
    auto kept = kpa::filter_comments(comments, filter, &quality);
    std::vector<std::string> kept_ids;
    for (const auto& c : kept) kept_ids.push_back(c.id);
    std::vector<std::string> expected_kept = {"a01", "a02", "a03", "a04", "a05", "a06", "a07", "a08", "a10", "a11"};
    if (kept_ids != expected_kept) out.fail(fmt::format("filter kept [{}]", fmt::join(kept_ids, ", ")));

    auto cands = kpa::extract_candidates(kept, kpa::CandidateConfig::for_domain(kpa::Domain::Arguments), quality);
    std::vector<std::string> cand_ids;
    for (const auto& c : cands) cand_ids.push_back(c.source_comment_id);
    std::sort(cand_ids.begin(), cand_ids.end());
    std::vector<std::string> expected_cands = {"a01", "a02", "a03", "a04", "a05", "a10", "a11"};
    if (cand_ids != expected_cands) out.fail(fmt::format("candidates [{}]", fmt::join(cand_ids, ", ")));
    if (out.pass) out.detail = "10 of 15 comments survive, 7 candidates, one violation per rule removed";
    return out;
}

// --- 6 ---------------------------------------------------------------------

Outcome agreement_statistics() {
    Outcome out;
    std::vector<bool> a = {true, true, true, true, false, false, false, false, true, false};
    std::vector<bool> b = {true, true, true, true, false, false, false, false, false, true};
    double k = kpa::cohen_kappa(a, b);
    if (k != 0.6) out.fail(fmt::format("Cohen 4/4/2 = {:.17g}", k));
    if (kpa::cohen_kappa(a, a) != 1.0) out.fail("Cohen of identical vectors != 1");

    Eigen::MatrixXi unanimous(3, 2);
    unanimous << 7, 0, 0, 7, 7, 0;
    if (kpa::fleiss_kappa(unanimous) != 1.0) out.fail("Fleiss unanimous != 1");

    // six annotators on 60 items; "loner" shares only 10 items with each
    kpa::AnnotationSet set;
    std::mt19937_64 rng(3);
    std::vector<std::string> regular = {"r1", "r2", "r3", "r4", "r5", "r6"};
    for (int i = 0; i < 60; ++i) {
        bool truth = i % 3 == 0;
        for (const auto& ann : regular) {
            bool flip = std::bernoulli_distribution(0.1)(rng);
            set.add(fmt::format("c{}", i), "kp", ann, truth != flip ? kpa::Judgment::Match : kpa::Judgment::NoMatch);
        }
        if (i < 10) set.add(fmt::format("c{}", i), "kp", "loner", truth ? kpa::Judgment::Match : kpa::Judgment::NoMatch);
    }
    auto kappas = kpa::annotator_kappa(set, 50, 5);
    if (kappas.count("loner")) out.fail("under-connected annotator got a kappa");
    for (const auto& r : regular)
        if (!kappas.count(r)) out.fail(r + " missing from annotator kappa");

    kpa::AnnotationSet fourteen;
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 14; ++j)
            fourteen.add(fmt::format("c{}", i), "kp", fmt::format("w{}", j),
                         std::bernoulli_distribution(0.5)(rng) ? kpa::Judgment::Match : kpa::Judgment::NoMatch);
    double s1 = kpa::split_consistency(fourteen, 11);
    double s2 = kpa::split_consistency(fourteen, 11);
    if (s1 != s2) out.fail("split consistency differs for the same seed");
    auto d1 = kpa::split_consistency_detail(fourteen, 11);
    auto d2 = kpa::split_consistency_detail(fourteen, 11);
    if (d1.first_half != d2.first_half) out.fail("split halves differ for the same seed");
    if (out.pass)
        out.detail = fmt::format("Cohen 0.6 exact, Fleiss 1.0, {} eligible annotators, split kappa {:.4f} reproducible",
                                 kappas.size(), s1);
    return out;
}

// --- 7 ---------------------------------------------------------------------

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome end_to_end_determinism() {
    Outcome out;
    fs::path data = KPA_DATA_DIR;
    fs::path tmp = fs::temp_directory_path() / fmt::format("kpa-accept-{}", ::getpid());
    fs::create_directories(tmp);
    std::string base = fmt::format("\"{}\" analyze --input \"{}\" --config \"{}\" --seed 7 --report-format structured",
                                   KPA_BIN, (data / "mini" / "comments.jsonl").string(),
                                   (data / "mini" / "config.conf").string());
    auto start = Clock::now();
    for (int run = 1; run <= 2; ++run) {
        auto cmd = fmt::format("{} --out \"{}\"", base, (tmp / fmt::format("run{}.json", run)).string());
        if (int rc = std::system(cmd.c_str()); rc != 0) {
            out.fail(fmt::format("run {} exited with {}", run, rc));
            return out;
        }
    }
    double secs = seconds_since(start);
    auto r1 = read_all(tmp / "run1.json");
    auto r2 = read_all(tmp / "run2.json");
    if (r1.empty()) out.fail("empty report");
    if (r1 != r2) out.fail("reports differ");
    if (secs >= 10.0) out.fail(fmt::format("two runs took {:.2f}s", secs));
    auto doc = nlohmann::json::parse(r1);
    std::vector<std::string> ranked;
    for (const auto& kp : doc["groups"][0]["key_points"])
        ranked.push_back(fmt::format("{}({})", kp["id"].get<std::string>(), kp["selection_count"].get<int>()));
    fs::remove_all(tmp);
    if (out.pass)
        out.detail = fmt::format("{} bytes identical across runs, {:.2f}s, ranking [{}]", r1.size(), secs,
                                 fmt::join(ranked, ", "));
    return out;
}

// --- 8 ---------------------------------------------------------------------

Outcome oracle_scorer_cross_validation() {
    Outcome out;
    // 28 topics, 3 key points each, every comment matching exactly one of them
    std::vector<kpa::LabeledPair> pairs;
    auto table = std::make_shared<kpa::ScoreTable>();
    std::vector<std::string> topics;
    for (int t = 0; t < 28; ++t) {
        auto topic = fmt::format("topic {:02}", t);
        topics.push_back(topic);
        for (int c = 0; c < 8; ++c) {
            auto comment = fmt::format("comment {} on {}", c, topic);
            for (int k = 0; k < 3; ++k) {
                auto kp = fmt::format("key point {} on {}", k, topic);
                bool label = c % 3 == k;
                pairs.push_back({comment, kp, topic, kpa::Stance::Pro, label, std::nullopt});
                table->set(comment, kp, topic, label ? 1.0 : 0.0);
            }
        }
    }
    auto folds = kpa::FoldSpec::make(topics, 4, 42);
    folds.validate(topics);
    std::shared_ptr<const kpa::MatchScorer> scorer = std::make_shared<kpa::TableMatchScorer>(table, true);
    kpa::ScorerProvider provider = [scorer](std::size_t, const kpa::Fold&) { return scorer; };
    std::vector<kpa::PolicyKind> kinds = {kpa::PolicyKind::TH, kpa::PolicyKind::BM, kpa::PolicyKind::BM_TH};
    auto eval = kpa::run_matching_eval(pairs, folds, provider, kinds);
    std::size_t cells = 0;
    for (const auto& f : eval.folds) {
        for (const auto& p : f.policies) {
            ++cells;
            if (p.metrics.precision != 1.0 || p.metrics.recall != 1.0 || p.metrics.f1 != 1.0)
                out.fail(fmt::format("fold {} {}: P={} R={} F1={}", f.fold, kpa::to_string(p.kind), p.metrics.precision,
                                     p.metrics.recall, p.metrics.f1));
        }
    }
    if (cells != 12) out.fail(fmt::format("{} fold/policy cells, expected 12", cells));
    const auto& f0 = folds.folds[0];
    if (out.pass)
        out.detail = fmt::format("4 folds ({}/{}/{} topics) x 3 policies at P=R=F1=1", f0.train.size(), f0.dev.size(),
                                 f0.test.size());
    return out;
}

// --- 9 ---------------------------------------------------------------------

Outcome lexical_smoke() {
    Outcome out;
    fs::path data = KPA_DATA_DIR;
    fs::path tmp = fs::temp_directory_path() / fmt::format("kpa-smoke-{}.json", ::getpid());
    auto cmd = fmt::format("\"{}\" analyze --input \"{}\" --config \"{}\" --scorer lexical --out \"{}\"", KPA_BIN,
                           (data / "smoke" / "comments.jsonl").string(), (data / "smoke" / "config.conf").string(),
                           tmp.string());
    auto start = Clock::now();
    if (int rc = std::system(cmd.c_str()); rc != 0) {
        out.fail(fmt::format("kpa analyze exited with {}", rc));
        return out;
    }
    double secs = seconds_since(start);
    auto doc = nlohmann::json::parse(read_all(tmp));
    fs::remove(tmp);
    std::size_t kps = 0, groups = 0;
    for (const auto& g : doc["groups"]) {
        ++groups;
        kps += g["key_points"].size();
    }
    if (doc["input_comments"].get<std::size_t>() != 100) out.fail("smoke corpus does not hold 100 comments");
    if (kps == 0) out.fail("no key points extracted");
    if (out.pass)
        out.detail = fmt::format("{} key points over {} topics in {:.2f}s (model metrics not reproducible offline)", kps,
                                 groups, secs);
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"selection matches the independent oracle", oracle_equivalence},
        {"F1 identity for the reported P/R pairs", metric_identity},
        {"precision at coverage", coverage_curve},
        {"policy semantics by enumeration", policy_semantics},
        {"filter conformance", filter_conformance},
        {"agreement statistics", agreement_statistics},
        {"end-to-end determinism", end_to_end_determinism},
        {"oracle-scorer cross-validation", oracle_scorer_cross_validation},
        {"substituted model results: lexical smoke run", lexical_smoke},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::cout << fmt::format("[{}] {}. {}: {}\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail);
    }
    std::cout << fmt::format("{} of {} criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
