#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "kpa/config.hpp"
#include "kpa/error.hpp"

using namespace kpa;

TEST_SUITE("config") {
    TEST_CASE("domain profiles") {
        auto a = AnalysisConfig::for_domain(Domain::Arguments);
        CHECK(a.selection_threshold == 0.856);
        CHECK(a.max_kps == 10);
        CHECK(a.per_stance);
        CHECK(a.filter.low_quality_fraction == 0.1);
        CHECK(a.policy == PolicyKind::BM);
        auto s = AnalysisConfig::for_domain(Domain::Survey);
        CHECK(s.selection_threshold == 0.856);
        CHECK(s.max_kps == 20);
        CHECK(s.filter.first_sentence_only);
        auto r = AnalysisConfig::for_domain(Domain::Reviews);
        CHECK(r.selection_threshold == 0.999);
        CHECK(r.max_kps == 2);
    }

    TEST_CASE("parse config") {
        std::istringstream in(R"(# comment
profile = survey
selection_threshold = 0.7
policy = bm+th
threshold = "0.6"
filter.min_tokens = 3
candidates.pronouns = it, they
scorer = lexical
)");
        auto cfg = parse_config(in);
        CHECK(cfg.domain == Domain::Survey);
        CHECK(cfg.max_kps == 20);
        CHECK(cfg.selection_threshold == 0.7);
        CHECK(cfg.final_policy() == Policy::bm_th(0.6));
        CHECK(cfg.filter.min_tokens == 3);
        CHECK(cfg.candidates.pronoun_blocklist == std::set<std::string>{"it", "they"});
        CHECK(cfg.scorer.kind == ScorerSelector::Kind::Lexical);

        std::istringstream plain("policy = th\n");
        CHECK(parse_config(plain).final_policy() == Policy::th(0.856));
        std::istringstream override_in("profile = survey\n");
        CHECK(parse_config(override_in, Domain::Reviews).max_kps == 2);
    }

    TEST_CASE("invalid settings") {
        AnalysisConfig cfg;
        CHECK_THROWS_AS(apply_setting(cfg, "threshold", "1.5"), ConfigError);
        CHECK_THROWS_AS(apply_setting(cfg, "max_kps", "0"), ConfigError);
        CHECK_THROWS_AS(apply_setting(cfg, "colour", "red"), ConfigError);
        CHECK_THROWS_AS(apply_setting(cfg, "selection_threshold", "high"), ConfigError);
        CHECK_THROWS_AS(apply_setting(cfg, "scorer", "magic"), ConfigError);
        std::istringstream broken("just words\n");
        CHECK_THROWS_AS(parse_config(broken), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent.conf"), ConfigError);
    }

    TEST_CASE("selectors") {
        auto t = ScorerSelector::parse("table:/x/y.jsonl");
        CHECK(t.kind == ScorerSelector::Kind::Table);
        CHECK(t.target == "/x/y.jsonl");
        CHECK(ScorerSelector::parse(t.str()) == t);
        CHECK(ScorerSelector::parse("remote:http://h:1").kind == ScorerSelector::Kind::Remote);
        CHECK(QualitySelector::parse("constant:0.5").kind == QualitySelector::Kind::Constant);
        CHECK(QualitySelector::parse("field").kind == QualitySelector::Kind::Field);
    }

    TEST_CASE("json round trip") {
        auto cfg = AnalysisConfig::for_domain(Domain::Survey);
        cfg.rematch_threshold = 0.1 + 0.2;
        cfg.policy = PolicyKind::TH;
        cfg.policy_threshold = 0.123456789012345678;
        cfg.seed = 99;
        cfg.candidates.pronoun_blocklist = {"we"};
        CHECK(config_from_json(to_json(cfg)) == cfg);
    }

    TEST_CASE("config file paths resolve against the file") {
        auto cfg = load_config((fixtures::data_dir() / "mini" / "config.conf").string());
        CHECK(cfg.scorer.kind == ScorerSelector::Kind::Table);
        CHECK(std::filesystem::exists(cfg.scorer.target));
        CHECK(cfg.selection_threshold == 0.5);
    }

    TEST_CASE("scorer construction") {
        auto cfg = load_config((fixtures::data_dir() / "mini" / "config.conf").string());
        auto s = make_scorers(cfg);
        CHECK(s.match->score("Public transport reduces traffic congestion in the city.",
                             "Public transport reduces traffic congestion in the city.",
                             "We should subsidize public transport") == 0.9);
        CHECK(s.quality->quality("Public transport reduces traffic congestion in the city.",
                                 "We should subsidize public transport") == 0.9);
        AnalysisConfig lex;
        lex.quality = QualitySelector::parse("field");
        Dataset ds = make_dataset({{"a", "T", Stance::Pro, "x y z w", "x y z w", 0.25}}, Domain::Arguments);
        CHECK(make_scorers(lex, &ds).quality->quality("x y z w", "T") == 0.25);
        CHECK_THROWS_AS(make_scorers(lex), ConfigError);
    }
}
