#include <doctest.h>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "kpa/config.hpp"
#include "kpa/error.hpp"
#include "kpa/report.hpp"

using namespace kpa;

namespace {

AnalysisResult mini_result(AnalysisConfig* out_cfg = nullptr) {
    auto cfg = load_config((fixtures::data_dir() / "mini" / "config.conf").string());
    auto ds = load_dataset((fixtures::data_dir() / "mini" / "comments.jsonl").string(), Domain::Arguments);
    auto scorers = make_scorers(cfg, &ds);
    if (out_cfg) *out_cfg = cfg;
    return run_analysis(ds, cfg, *scorers.match, *scorers.quality);
}

}  // namespace

TEST_SUITE("report") {
    TEST_CASE("whole percentages") {
        CHECK(whole_percent(4.0 / 6) == 67);
        CHECK(whole_percent(2.0 / 6) == 33);
        CHECK(whole_percent(0.0) == 0);
        CHECK(whole_percent(1.0) == 100);
    }

    TEST_CASE("table lists key points by rank") {
        auto text = emit_report(mini_result(), ReportFormat::Table);
        CHECK(text.find("selection") != std::string::npos);
        auto first = text.find("Public transport reduces traffic congestion in the city.");
        auto second = text.find("Affordable tickets help families with low incomes.");
        REQUIRE(first != std::string::npos);
        REQUIRE(second != std::string::npos);
        CHECK(first < second);
        CHECK(text.find("67%") != std::string::npos);
        CHECK(text.find("33%") != std::string::npos);
    }

    TEST_CASE("empty group") {
        auto r = mini_result();
        r.groups[0].key_points.clear();
        auto text = emit_report(r, ReportFormat::Table);
        CHECK(text.find("no key points extracted") != std::string::npos);
    }

    TEST_CASE("structured output round-trips") {
        auto r = mini_result();
        auto text = emit_report(r, ReportFormat::Structured);
        auto back = analysis_from_json(nlohmann::json::parse(text));
        CHECK(back == r);
        CHECK(emit_report(back, ReportFormat::Structured) == text);
    }

    TEST_CASE("format names") {
        CHECK(parse_report_format("structured") == ReportFormat::Structured);
        CHECK(parse_report_format("table") == ReportFormat::Table);
        CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
    }
}
