#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kpa {

class QualityScorer;

enum class Stance { None, Pro, Con };
enum class Domain { Arguments, Survey, Reviews };

std::string_view to_string(Stance stance);
std::string_view to_string(Domain domain);
Stance parse_stance(std::string_view text);
Domain parse_domain(std::string_view text);

struct Comment {
    std::string id;
    std::string topic_id;
    Stance stance = Stance::None;
    std::string raw_text;
    std::string analysis_text;
    std::optional<double> quality;

    bool operator==(const Comment&) const = default;
};

struct Dataset {
    std::string name;
    Domain domain = Domain::Arguments;
    std::vector<std::string> topics;  // sorted, unique
    std::vector<Comment> comments;

    bool operator==(const Dataset&) const = default;
};

struct FilterConfig {
    int min_chars = 10;
    int min_tokens = 4;
    int max_tokens = 30;
    bool ascii_only = true;
    bool first_sentence_only = false;
    double low_quality_fraction = 0.0;
    // Decile removal over each topic separately instead of the whole dataset.
    bool per_topic_quality = false;

    static FilterConfig for_domain(Domain domain);
    void validate() const;

    bool operator==(const FilterConfig&) const = default;
};

/// Corpus-level filters: non-ascii raw text, too few characters, token count
/// outside [min_tokens, max_tokens], then the lowest-quality fraction of the
/// survivors. Survivor order is preserved; survivors removed by the quality
/// rule are picked by (quality, id) ascending.
std::vector<Comment> filter_comments(const std::vector<Comment>& comments, const FilterConfig& cfg,
                                     const QualityScorer* quality = nullptr);

/// Line-delimited JSON records {"id", "topic", "stance"?, "text", "quality"?}.
/// The survey domain derives analysis_text from the first sentence.
Dataset load_dataset(const std::string& path, Domain domain);
Dataset parse_dataset(std::istream& in, Domain domain, std::string name = {});
Dataset make_dataset(std::vector<Comment> comments, Domain domain, std::string name = {});
void write_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::string& path, const Dataset& dataset);

struct LabeledPair {
    std::string comment_text;
    std::string key_point_text;
    std::string topic;
    Stance stance = Stance::None;
    bool label = false;
    std::optional<double> score;

    bool operator==(const LabeledPair&) const = default;
};

/// CSV with header `topic,stance,comment_text,key_point_text,label[,score]`,
/// label in {1,0}. The result is stably ordered by topic.
std::vector<LabeledPair> load_labeled_pairs(const std::string& path);
std::vector<LabeledPair> parse_labeled_pairs(std::istream& in);

std::map<std::string, std::vector<LabeledPair>> group_by_topic(const std::vector<LabeledPair>& pairs);

}  // namespace kpa
