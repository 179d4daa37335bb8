#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kpa/agreement.hpp"
#include "kpa/config.hpp"
#include "kpa/error.hpp"
#include "kpa/metrics.hpp"
#include "kpa/pipeline.hpp"
#include "kpa/report.hpp"
#include "kpa/scoring.hpp"
#include "kpa/service.hpp"
#include "kpa/text.hpp"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitScorer = 3;

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw kpa::DataError("cannot write '" + path + "'");
    out << content;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = kpa::text::trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

struct AnalyzeArgs {
    std::string input, domain, config, scorer, quality, policy, out, format = "structured";
    std::optional<std::size_t> max_kps;
    std::optional<double> threshold, rematch_threshold;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

int run_analyze(const AnalyzeArgs& a) {
    std::optional<kpa::Domain> domain;
    if (!a.domain.empty()) domain = kpa::parse_domain(a.domain);
    kpa::AnalysisConfig cfg = a.config.empty() ? kpa::AnalysisConfig::for_domain(domain.value_or(kpa::Domain::Arguments))
                                               : kpa::load_config(a.config, domain);
    if (!a.scorer.empty()) kpa::apply_setting(cfg, "scorer", a.scorer);
    if (!a.quality.empty()) kpa::apply_setting(cfg, "quality", a.quality);
    if (!a.policy.empty()) kpa::apply_setting(cfg, "policy", a.policy);
    if (a.max_kps) cfg.max_kps = *a.max_kps;
    if (a.threshold) cfg.policy_threshold = *a.threshold;
    if (a.rematch_threshold) cfg.rematch_threshold = *a.rematch_threshold;
    if (a.seed) cfg.seed = *a.seed;
    if (a.workers) cfg.workers = *a.workers;
    cfg.validate();
    auto format = kpa::parse_report_format(a.format);

    auto dataset = kpa::load_dataset(a.input, cfg.domain);
    auto scorers = kpa::make_scorers(cfg, &dataset);
    auto result = kpa::run_analysis(dataset, cfg, *scorers.match, *scorers.quality);
    write_output(a.out, kpa::emit_report(result, format));
    return 0;
}

struct EvalMatchArgs {
    std::string pairs, scorer, policies = "th,bm,bm+th", out, format = "structured";
    std::size_t folds = 4;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

int run_eval_match(const EvalMatchArgs& a) {
    auto pairs = kpa::load_labeled_pairs(a.pairs);
    if (pairs.empty()) throw kpa::DataError("no labeled pairs in '" + a.pairs + "'");
    std::vector<kpa::PolicyKind> kinds;
    for (const auto& p : split_list(a.policies)) kinds.push_back(kpa::parse_policy_kind(p));
    if (kinds.empty()) throw kpa::ConfigError("no policies given");

    std::vector<std::string> topics;
    for (const auto& p : pairs) topics.push_back(p.topic);
    std::sort(topics.begin(), topics.end());
    topics.erase(std::unique(topics.begin(), topics.end()), topics.end());
    auto folds = kpa::FoldSpec::make(topics, a.folds, a.seed);

    kpa::ScorerProvider provider;
    if (!a.scorer.empty()) {
        kpa::AnalysisConfig cfg;
        cfg.scorer = kpa::ScorerSelector::parse(a.scorer);
        cfg.quality = kpa::QualitySelector::parse("constant:1");
        std::shared_ptr<const kpa::MatchScorer> scorer = kpa::make_scorers(cfg).match;
        provider = [scorer](std::size_t, const kpa::Fold&) { return scorer; };
    }
    auto eval = kpa::run_matching_eval(pairs, folds, provider, kinds, a.workers);
    auto format = kpa::parse_report_format(a.format);
    write_output(a.out, format == kpa::ReportFormat::Structured ? kpa::to_json(eval).dump(2) + "\n"
                                                                : kpa::format_matching_table(eval));
    return 0;
}

struct EvalSampleArgs {
    std::string sample, levels = "0.2,0.4,0.6,0.8,1.0", out, format = "structured";
};

int run_eval_sample(const EvalSampleArgs& a) {
    auto records = kpa::best_match_per_comment(kpa::load_labeled_sample(a.sample));
    if (records.empty()) throw kpa::DataError("empty sample '" + a.sample + "'");
    std::vector<double> levels;
    for (const auto& s : split_list(a.levels)) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size() || !(v > 0.0 && v <= 1.0)) throw std::invalid_argument(s);
            levels.push_back(v);
        } catch (const std::logic_error&) {
            throw kpa::ConfigError("coverage level must be in (0,1]: '" + s + "'");
        }
    }
    std::vector<kpa::SamplePoint> points;
    for (const auto& r : records) points.push_back({r.label, r.score});
    auto curve = kpa::precision_at_coverage(points, levels);
    auto format = kpa::parse_report_format(a.format);
    write_output(a.out, format == kpa::ReportFormat::Structured ? kpa::to_json(curve, points.size()).dump(2) + "\n"
                                                                : kpa::format_coverage_table(curve));
    return 0;
}

struct AgreementArgs {
    std::string annotations, out;
    bool annotator_kappa = false, fleiss = false, split = false;
    std::size_t min_shared = 50, min_peers = 5;
    double min_kappa = 0.1;
    std::uint64_t seed = 0;
};

int run_agreement(const AgreementArgs& a) {
    auto set = kpa::AnnotationSet::load(a.annotations);
    if (set.empty()) throw kpa::DataError("no annotations in '" + a.annotations + "'");
    bool all = !a.annotator_kappa && !a.fleiss && !a.split;
    json out = {{"items", set.size()}};
    std::set<std::string> excluded;
    if (all || a.annotator_kappa) {
        auto kappas = kpa::annotator_kappa(set, a.min_shared, a.min_peers);
        excluded = kpa::low_agreement_annotators(kappas, a.min_kappa);
        out["annotator_kappa"] = kappas;
        out["low_agreement"] = excluded;
    }
    auto kept = excluded.empty() ? set : set.without(excluded);
    if (all || a.fleiss) out["fleiss_kappa"] = kpa::fleiss_kappa(kpa::fleiss_table(kept));
    if (all || a.split) {
        out["split_consistency"] = kpa::split_consistency(kept, a.seed);
        out["seed"] = a.seed;
    }
    write_output(a.out, out.dump(2) + "\n");
    return 0;
}

struct ServeArgs {
    std::string store = "kpa-store", host = "127.0.0.1";
    int port = 8080;
    unsigned workers = 2;
};

int run_serve(const ServeArgs& a) {
    kpa::JobService service(a.store, a.workers);
    kpa::HttpServer server(service);
    std::cerr << "listening on " << a.host << ":" << a.port << "\n";
    if (!server.listen(a.host, a.port)) throw kpa::ConfigError("cannot listen on port " + std::to_string(a.port));
    return 0;
}

int exit_code(const kpa::Error& e) {
    switch (e.kind()) {
        case kpa::Error::Kind::Usage:
        case kpa::Error::Kind::Config: return kExitUsage;
        case kpa::Error::Kind::Scorer: return kExitScorer;
        default: return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Key point analysis"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* an = app.add_subcommand("analyze", "extract key points and match comments to them");
    an->add_option("--input", analyze.input, "comments, line-delimited JSON")->required();
    an->add_option("--domain", analyze.domain, "arguments|survey|reviews");
    an->add_option("--config", analyze.config, "key = value config file");
    an->add_option("--scorer", analyze.scorer, "table:<path>|lexical|remote:<url>");
    an->add_option("--quality", analyze.quality, "auto|table:<path>|constant:<q>|field|remote:<url>");
    an->add_option("--max-kps", analyze.max_kps);
    an->add_option("--policy", analyze.policy, "bm|bm+th|th");
    an->add_option("--threshold", analyze.threshold, "final matching threshold");
    an->add_option("--rematch-threshold", analyze.rematch_threshold);
    an->add_option("--seed", analyze.seed);
    an->add_option("--workers", analyze.workers);
    an->add_option("--out", analyze.out, "output file (default stdout)");
    an->add_option("--report-format", analyze.format, "table|structured");

    EvalMatchArgs em;
    auto* emc = app.add_subcommand("eval-match", "cross-validated matching evaluation");
    emc->add_option("--pairs", em.pairs, "labeled pairs CSV")->required();
    emc->add_option("--folds", em.folds);
    emc->add_option("--scorer", em.scorer, "omit to use the score column");
    emc->add_option("--policies", em.policies);
    emc->add_option("--seed", em.seed);
    emc->add_option("--workers", em.workers);
    emc->add_option("--out", em.out);
    emc->add_option("--report-format", em.format);

    EvalSampleArgs es;
    auto* esc = app.add_subcommand("eval-sample", "precision at coverage of a labeled sample");
    esc->add_option("--sample", es.sample)->required();
    esc->add_option("--coverage-levels", es.levels);
    esc->add_option("--out", es.out);
    esc->add_option("--report-format", es.format);

    AgreementArgs ag;
    auto* agc = app.add_subcommand("agreement", "annotator agreement statistics");
    agc->add_option("--annotations", ag.annotations)->required();
    agc->add_flag("--annotator-kappa", ag.annotator_kappa);
    agc->add_option("--min-shared", ag.min_shared);
    agc->add_option("--min-peers", ag.min_peers);
    agc->add_option("--min-kappa", ag.min_kappa);
    agc->add_flag("--fleiss", ag.fleiss);
    agc->add_flag("--split-consistency", ag.split);
    agc->add_option("--seed", ag.seed);
    agc->add_option("--out", ag.out);

    ServeArgs sv;
    auto* svc = app.add_subcommand("serve", "run the HTTP job service");
    svc->add_option("--store", sv.store, "job store directory");
    svc->add_option("--host", sv.host);
    svc->add_option("--port", sv.port);
    svc->add_option("--workers", sv.workers);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*an) return run_analyze(analyze);
        if (*emc) return run_eval_match(em);
        if (*esc) return run_eval_sample(es);
        if (*agc) return run_agreement(ag);
        if (*svc) return run_serve(sv);
    } catch (const kpa::Error& e) {
        std::cerr << "kpa: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "kpa: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
