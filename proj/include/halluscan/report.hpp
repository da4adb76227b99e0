#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "halluscan/detect.hpp"
#include "halluscan/kg.hpp"
#include "halluscan/score.hpp"

namespace halluscan {

inline constexpr int kReportVersion = 1;

struct ClusterSection {
    int cluster_id = 0;
    int keyframe_index = 0;
    std::vector<int> detail_indices;
    double timestamp_s = 0.0;
    double duration_weight = 0.0;
    std::vector<StaticKG> static_kgs;  // empty under static-KG ablation
    std::vector<Finding> static_findings;
    std::optional<DynamicKG> dynamic_kg;
    std::vector<Finding> local_findings;
};

struct LedgerDigest {
    std::size_t total_calls = 0;
    double total_cost_usd = 0.0;
    std::map<std::string, std::size_t> calls_by_step;
};

struct QualityReport {
    std::string video_id;
    std::string prompt;
    std::string ablation = "full";
    std::optional<PremiseResult> premise;
    ConsistencyResult consistency;
    std::optional<Finding> consistency_finding;
    std::vector<ClusterSection> clusters;
    std::optional<DynamicKG> group_kg;
    std::vector<Finding> global_findings;
    AggregationMode aggregation_mode = AggregationMode::max;
    AggregationWeights aggregation_weights;
    std::vector<AggregatedHallucination> aggregated;
    QualityScore score;
    LedgerDigest ledger;
    std::vector<std::string> warnings;

    std::vector<Finding> all_findings() const;
    DurationWeights duration_weights() const;
};

/// Recomputes the score and aggregation from the embedded findings and
/// weights; throws ValidationError on any disagreement beyond 1e-9.
void validate(const QualityReport& report);

json to_json(const QualityReport& report);
QualityReport report_from_json(const json& j);

/// Canonical sorted-key JSON, trailing newline.
std::string render_structured(const QualityReport& report);
/// Markdown: summary block, then the per-step breakdown.
std::string render_prose(const QualityReport& report);

struct RenderFormats {
    bool structured = true;
    bool prose = true;
};

/// Validates, then writes `<video_id>.report.json` and/or `<video_id>.report.md`.
std::vector<std::filesystem::path> render(const QualityReport& report, const std::filesystem::path& out_dir,
                                          RenderFormats formats = {});

}  // namespace halluscan
