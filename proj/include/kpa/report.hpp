#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "kpa/metrics.hpp"
#include "kpa/pipeline.hpp"

namespace kpa {

enum class ReportFormat { Structured, Table };

ReportFormat parse_report_format(std::string_view text);

nlohmann::json to_json(const KeyPointResult& kp, std::size_t comment_count);
nlohmann::json to_json(const AnalysisResult& result);
AnalysisResult analysis_from_json(const nlohmann::json& j);

/// Structured: the full result as indented JSON (re-loadable with
/// analysis_from_json). Table: per group, key points ranked with their whole
/// percentage of comments and the two best-scoring matched comments.
std::string emit_report(const AnalysisResult& result, ReportFormat format);

/// Percentage of comments rounded to a whole number.
long whole_percent(double prevalence);

nlohmann::json to_json(const MatchingEvaluation& eval);
std::string format_matching_table(const MatchingEvaluation& eval);

nlohmann::json to_json(const CoverageCurve& curve, std::size_t sample_size);
std::string format_coverage_table(const CoverageCurve& curve);

}  // namespace kpa
