#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halluscan/detect.hpp"
#include "halluscan/frames.hpp"
#include "halluscan/keyframe.hpp"

namespace halluscan {

struct SeverityTriple {
    double s_c = 0.0;
    double s_s = 0.0;
    double s_d = 0.0;
};

enum class AggregationMode { max, weighted };

AggregationMode parse_aggregation_mode(std::string_view text);
std::string_view to_string(AggregationMode mode);

struct AggregationWeights {
    double consistency = 1.0 / 3.0;
    double static_ = 1.0 / 3.0;
    double dynamic = 1.0 / 3.0;
};

/// s_h = max(s_c, s_s, s_d), or the weighted sum (weights >= 0, summing to 1).
double combine(const SeverityTriple& s, AggregationMode mode, const AggregationWeights& weights = {});

struct AggregatedHallucination {
    std::string scope;
    std::vector<int> frames;       // union of member frame refs
    std::vector<Finding> members;  // canonical order
    SeverityTriple severities;     // per-kind max over non-informational members
    double s_h = 0.0;
    AggregationMode mode = AggregationMode::max;
};

/// Groups findings by scope and by overlapping frame references, then
/// combines each group's per-kind maxima. Output order does not depend on
/// input order.
std::vector<AggregatedHallucination> aggregate(std::span<const Finding> findings,
                                               AggregationMode mode = AggregationMode::max,
                                               const AggregationWeights& weights = {});

struct DurationWeights {
    std::vector<double> T;  // one per keyframe, sums to 1
};

/// Keyframe i owns the span between the midpoints to its neighbours,
/// clipped to [0, total_duration].
DurationWeights duration_weights(std::span<const double> keyframe_timestamps, double total_duration_s);
DurationWeights duration_weights(const KeyframeSet& keyframes, const FrameSet& fs);

struct ScoreParams {
    double alpha = 2.0;
    double beta = 4.0;
    double gamma = 4.0;
};

struct QualityScore {
    double value = 100.0;  // [0, 100]
    ScoreParams params;
    double consistency_penalty = 0.0;
    double static_penalty = 0.0;
    double dynamic_penalty = 0.0;
};

/// 100 - alpha*s_c - beta*sum_i T_i*sum_j static_ij - gamma*sum_i T_i*sum_j dynamic_ij,
/// clamped to [0, 100].
QualityScore video_quality_score(double s_c, const std::vector<std::vector<double>>& static_by_keyframe,
                                 const std::vector<std::vector<double>>& dynamic_by_keyframe,
                                 const DurationWeights& weights, const ScoreParams& params = {});

/// Severity inputs derived from findings: static and local dynamic findings
/// go to their cluster's keyframe, each global dynamic finding adds
/// severity/m to every keyframe, s_c is the largest non-informational
/// consistency severity.
struct ScoreInputs {
    double s_c = 0.0;
    std::vector<std::vector<double>> static_by_keyframe;
    std::vector<std::vector<double>> dynamic_by_keyframe;
};

ScoreInputs score_inputs(std::span<const Finding> findings, std::size_t keyframe_count);

QualityScore score_findings(std::span<const Finding> findings, const DurationWeights& weights,
                            const ScoreParams& params = {});

/// Cluster id of a "cluster:<id>" scope, -1 otherwise.
int scope_cluster_id(std::string_view scope);

}  // namespace halluscan
