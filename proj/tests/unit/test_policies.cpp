#include <doctest.h>

#include "kpa/error.hpp"
#include "kpa/policies.hpp"

using namespace kpa;

TEST_SUITE("policies") {
    TEST_CASE("examples") {
        std::map<std::string, double> s = {{"A", 0.9}, {"B", 0.6}, {"C", 0.2}};
        CHECK(apply_policy(s, Policy::th(0.5)) == std::set<std::string>{"A", "B"});
        CHECK(apply_policy(s, Policy::bm()) == std::set<std::string>{"A"});
        CHECK(apply_policy(s, Policy::bm_th(0.95)).empty());
        std::map<std::string, double> tie = {{"B", 0.7}, {"A", 0.7}};
        CHECK(apply_policy(tie, Policy::bm()) == std::set<std::string>{"A"});
        std::map<std::string, double> at = {{"A", 0.5}};
        CHECK(apply_policy(at, Policy::th(0.5)).empty());
        CHECK(apply_policy(at, Policy::bm_th(0.5)).empty());
        CHECK(apply_policy({}, Policy::th(0.5)).empty());
        CHECK_THROWS_AS(apply_policy({}, Policy::bm()), DataError);
    }

    TEST_CASE("validation and names") {
        CHECK_THROWS_AS(Policy({PolicyKind::TH, std::nullopt}).validate(), ConfigError);
        CHECK_THROWS_AS(Policy({PolicyKind::BM, 0.5}).validate(), ConfigError);
        CHECK_THROWS_AS(Policy::th(1.5).validate(), ConfigError);
        CHECK_NOTHROW(Policy::bm_th(0.856).validate());
        CHECK(parse_policy_kind("bm+th") == PolicyKind::BM_TH);
        CHECK(parse_policy_kind("TH") == PolicyKind::TH);
        CHECK(to_string(PolicyKind::BM_TH) == "bm+th");
        CHECK_THROWS_AS(parse_policy_kind("best"), ConfigError);
    }
}
