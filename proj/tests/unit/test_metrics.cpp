#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "kpa/error.hpp"
#include "kpa/metrics.hpp"
#include "kpa/pipeline.hpp"

using namespace kpa;

namespace {

LabeledPair pair(const std::string& c, const std::string& k, const std::string& topic, bool label, double score) {
    return {c, k, topic, Stance::Pro, label, score};
}

// Two topics, two comments each, two key points per comment.
std::vector<LabeledPair> two_topic_fixture() {
    return {
        pair("x1", "P", "X", true, .9), pair("x1", "Q", "X", false, .3),
        pair("x2", "P", "X", false, .6), pair("x2", "Q", "X", true, .7),
        pair("y1", "P", "Y", true, .8), pair("y1", "Q", "Y", false, .4),
        pair("y2", "P", "Y", true, .55), pair("y2", "Q", "Y", false, .5),
    };
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("confusion metrics") {
        auto m = confusion_metrics(3, 1, 0, 1);
        CHECK(m.accuracy == doctest::Approx(0.8));
        CHECK(m.precision == doctest::Approx(0.75));
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == doctest::Approx(6.0 / 7.0));
        auto perfect = confusion_metrics(5, 0, 0, 0);
        CHECK(perfect.precision == 1.0);
        CHECK(perfect.f1 == 1.0);
        auto none = confusion_metrics(0, 0, 0, 4);
        CHECK(none.precision == 0.0);
        CHECK(none.recall == 0.0);
        CHECK(none.f1 == 0.0);
        CHECK_THROWS_AS(confusion_metrics(0, 0, 0, 0), DataError);
    }

    TEST_CASE("f1 is the harmonic mean") {
        std::mt19937 rng(1);
        std::uniform_int_distribution<int> d(0, 50);
        for (int i = 0; i < 500; ++i) {
            auto m = confusion_metrics(d(rng) + 1, d(rng), d(rng), d(rng));
            CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
        }
    }

    TEST_CASE("tune threshold") {
        std::vector<LabeledPair> dev = {pair("a", "k", "T", true, .9), pair("b", "k", "T", false, .7),
                                        pair("c", "k", "T", true, .6), pair("d", "k", "T", false, .3)};
        auto tuned = tune_threshold(dev, PolicyKind::TH);
        CHECK(tuned.threshold == doctest::Approx(0.45));
        CHECK(tuned.f1 == doctest::Approx(0.8));
        CHECK(threshold_grid({.9, .7, .6, .3, .7}).size() == 5);

        for (auto& p : dev) p.label = true;
        CHECK(tune_threshold(dev, PolicyKind::TH).threshold == 0.0);
        CHECK(tune_threshold(dev, PolicyKind::TH).f1 == 1.0);
        for (auto& p : dev) p.label = false;
        CHECK(tune_threshold(dev, PolicyKind::TH).threshold == 0.0);
        CHECK(tune_threshold(dev, PolicyKind::TH).f1 == 0.0);
        CHECK_THROWS_AS(tune_threshold(dev, PolicyKind::BM), ConfigError);
        dev[0].score.reset();
        CHECK_THROWS_AS(tune_threshold(dev, PolicyKind::TH), DataError);
    }

    TEST_CASE("tuned F1 is maximal over the grid") {
        std::mt19937 rng(2);
        for (int run = 0; run < 200; ++run) {
            std::vector<LabeledPair> dev;
            for (int i = 0; i < 12; ++i)
                dev.push_back(pair("c" + std::to_string(i / 3), "k" + std::to_string(i % 3), "T",
                                   std::bernoulli_distribution(0.4)(rng),
                                   std::uniform_int_distribution<int>(0, 20)(rng) / 20.0));
            for (auto kind : {PolicyKind::TH, PolicyKind::BM_TH}) {
                auto tuned = tune_threshold(dev, kind);
                std::vector<double> scores;
                for (const auto& p : dev) scores.push_back(*p.score);
                for (double t : threshold_grid(scores))
                    CHECK(tuned.f1 >= confusion_metrics(evaluate_policy(dev, Policy{kind, t})).f1);
            }
        }
    }

    TEST_CASE("policy evaluation groups by comment") {
        auto pairs = two_topic_fixture();
        auto bm = evaluate_policy(pairs, Policy::bm());
        CHECK(bm.tp == 4);
        CHECK(bm.tn == 4);
        auto th = evaluate_policy(pairs, Policy::th(0.65));
        CHECK(th.tp == 3);
        CHECK(th.fn == 1);
        CHECK(th.tn == 4);
        auto bmth = evaluate_policy(pairs, Policy::bm_th(0.6));
        CHECK(bmth.tp == 3);
        CHECK(bmth.fn == 1);
    }

    TEST_CASE("two-topic cross validation by hand") {
        auto pairs = two_topic_fixture();
        auto folds = FoldSpec::make({"X", "Y"}, 2, 3);
        std::vector<PolicyKind> kinds = {PolicyKind::TH, PolicyKind::BM, PolicyKind::BM_TH};
        auto eval = run_matching_eval(pairs, folds, nullptr, kinds);
        REQUIRE(eval.folds.size() == 2);
        for (std::size_t f = 0; f < 2; ++f) {
            const auto& test = folds.folds[f].test;
            REQUIRE(test.size() == 1);
            const auto& th = eval.folds[f].policies[0];
            if (test[0] == "Y") {
                // tuned on X: 0.65; on Y one positive falls below it
                CHECK(*th.threshold == doctest::Approx(0.65));
                CHECK(th.metrics.f1 == doctest::Approx(2.0 / 3.0));
            } else {
                CHECK(*th.threshold == doctest::Approx(0.525));
                CHECK(th.metrics.f1 == doctest::Approx(0.8));
            }
            CHECK(eval.folds[f].policies[1].metrics.f1 == 1.0);
            CHECK(eval.folds[f].policies[2].metrics.f1 == 1.0);
            CHECK(*eval.folds[f].policies[2].threshold == 0.0);
        }
        CHECK(eval.average[0].second.f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
        CHECK(eval.average[1].second.f1 == 1.0);
    }

    TEST_CASE("constant scorer still yields a full table") {
        auto pairs = two_topic_fixture();
        for (auto& p : pairs) p.score = 0.5;
        auto folds = FoldSpec::make({"X", "Y"}, 2, 1);
        std::vector<PolicyKind> kinds = {PolicyKind::TH, PolicyKind::BM, PolicyKind::BM_TH};
        auto eval = run_matching_eval(pairs, folds, nullptr, kinds);
        CHECK(eval.average.size() == 3);
        for (const auto& f : eval.folds) CHECK(f.policies.size() == 3);
    }

    TEST_CASE("precision at coverage") {
        std::vector<SamplePoint> s = {{true, .9}, {true, .8}, {false, .7}, {true, .6}, {false, .5}};
        auto levels = default_coverage_levels();
        auto c = precision_at_coverage(s, levels);
        CHECK(c.precision_at == std::vector<double>{1.0, 1.0, 0.75, 0.75, 0.6});
        REQUIRE(c.thresholds_at.size() == 5);
        CHECK_FALSE(c.thresholds_at[4].has_value());
        for (auto& p : s) p.label = true;
        CHECK(precision_at_coverage(s, levels).precision_at == std::vector<double>(5, 1.0));
        for (auto& p : s) p.label = false;
        CHECK(precision_at_coverage(s, levels).precision_at == std::vector<double>(5, 0.0));
        CHECK_THROWS_AS(precision_at_coverage({}, levels), DataError);
        std::vector<double> bad = {0.5, 0.2};
        CHECK_THROWS_AS(precision_at_coverage(s, bad), ConfigError);
    }

    TEST_CASE("tied scores form one operating point") {
        std::vector<SamplePoint> s = {{true, .9}, {false, .9}, {true, .5}};
        std::vector<double> levels = {0.3, 0.7};
        auto c = precision_at_coverage(s, levels);
        // covering only the .9 pair gives 1/2; covering all gives 2/3
        CHECK(c.precision_at[0] == doctest::Approx(2.0 / 3.0));
        CHECK(c.precision_at[1] == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("labeled sample file") {
        auto path = std::filesystem::temp_directory_path() / "kpa-sample-test.jsonl";
        {
            std::ofstream out(path);
            out << R"({"comment_id":"c1","key_point_id":"k2","score":0.4,"label":0})" << "\n"
                << R"({"comment_id":"c1","key_point_id":"k1","score":0.8,"label":true})" << "\n"
                << R"({"comment_id":"c0","key_point_id":"k1","score":0.3,"label":1})" << "\n";
        }
        auto records = load_labeled_sample(path.string());
        CHECK(records.size() == 3);
        auto best = best_match_per_comment(records);
        REQUIRE(best.size() == 2);
        CHECK(best[0].comment_id == "c0");
        CHECK(best[1].key_point_id == "k1");
        CHECK(best[1].label);
        std::filesystem::remove(path);
    }

    TEST_CASE("uniform sampling over topics") {
        std::vector<Comment> cs;
        for (int t = 0; t < 3; ++t)
            for (int i = 0; i < 2; ++i) {
                auto id = "c" + std::to_string(t) + std::to_string(i);
                cs.push_back({id, "T" + std::to_string(t), Stance::None, "x y z w", "x y z w", std::nullopt});
            }
        auto ds = make_dataset(cs, Domain::Survey);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto s = sample_uniform(ds, 3, seed);
            REQUIRE(s.size() == 3);
            CHECK(s[0].topic_id == "T0");
            CHECK(s[1].topic_id == "T1");
            CHECK(s[2].topic_id == "T2");
        }
        CHECK(sample_uniform(ds, 6, 1).size() == 6);
        CHECK_THROWS_AS(sample_uniform(ds, 7, 1), DataError);

        // uneven topics: 1, 10, 10 comments, n = 12 -> 1 + 6 + 5 or 1 + 5 + 6
        std::vector<Comment> uneven;
        for (int i = 0; i < 21; ++i) {
            std::string topic = i == 0 ? "A" : (i <= 10 ? "B" : "C");
            uneven.push_back({"u" + std::to_string(100 + i), topic, Stance::None, "x y z w", "x y z w", std::nullopt});
        }
        auto uds = make_dataset(uneven, Domain::Survey);
        auto s1 = sample_uniform(uds, 12, 4);
        CHECK(s1 == sample_uniform(uds, 12, 4));
        std::map<std::string, int> per;
        for (const auto& c : s1) per[c.topic_id]++;
        CHECK(per["A"] == 1);
        CHECK(std::abs(per["B"] - per["C"]) <= 1);
        CHECK(per["B"] + per["C"] == 11);
    }
}
