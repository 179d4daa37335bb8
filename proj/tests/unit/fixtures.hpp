#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "kpa/extraction.hpp"
#include "kpa/ingest.hpp"
#include "kpa/scoring.hpp"
#include "kpa/selection.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return KPA_DATA_DIR; }

// Comments c1..c6 and candidates A, B, C of the selection walkthrough.
// Rows are Score(item, candidate); candidate pairs give sym(A,B) = .7,
// sym(A,C) = .2, sym(B,C) = .3.
struct HandTrace {
    std::vector<kpa::Comment> comments;
    std::vector<kpa::KeyPointCandidate> candidates;
    std::shared_ptr<kpa::ScoreTable> table = std::make_shared<kpa::ScoreTable>();
    std::shared_ptr<kpa::TableMatchScorer> scorer;

    HandTrace() {
        const char* ids[] = {"c1", "c2", "c3", "c4", "c5", "c6"};
        const double rows[6][3] = {{.9, .2, .1}, {.8, .1, .1}, {.7, .2, .2}, {.6, .9, .1}, {.4, .8, .45}, {.1, .2, .9}};
        for (int i = 0; i < 6; ++i) {
            std::string text = std::string("comment ") + ids[i];
            comments.push_back({ids[i], "T", kpa::Stance::Pro, text, text, std::nullopt});
            table->set(text, "A", "T", rows[i][0]);
            table->set(text, "B", "T", rows[i][1]);
            table->set(text, "C", "T", rows[i][2]);
        }
        candidates = {{"A", "c1", "A", 1, 0.9}, {"B", "c4", "B", 1, 0.9}, {"C", "c6", "C", 1, 0.9}};
        table->set("A", "B", "T", .6);
        table->set("B", "A", "T", .8);
        table->set("A", "C", "T", .2);
        table->set("C", "A", "T", .2);
        table->set("B", "C", "T", .3);
        table->set("C", "B", "T", .3);
        scorer = std::make_shared<kpa::TableMatchScorer>(table, true);
    }

    std::vector<kpa::MatchItem> items() const { return kpa::to_items(comments); }
};

inline std::vector<std::string> ids_of(const std::vector<kpa::Match>& matches) {
    std::vector<std::string> out;
    for (const auto& m : matches) out.push_back(m.item_id);
    return out;
}

}  // namespace fixtures
