#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halluscan/frames.hpp"
#include "halluscan/keyframe.hpp"
#include "halluscan/kg.hpp"
#include "halluscan/taxonomy.hpp"

namespace halluscan {

class Gateway;

enum class Ablation { full, no_kg, no_static_kg, no_dynamic_kg };

Ablation parse_ablation(std::string_view text);
std::string_view to_string(Ablation ablation);

/// Which graph blocks reach the model.
struct AblationFlags {
    bool static_kg = true;
    bool dynamic_kg = true;

    static AblationFlags from(Ablation ablation);
};

enum class SourceStage { consistency, static_, local_dynamic, global_dynamic };

std::string_view to_string(SourceStage stage);
SourceStage parse_source_stage(std::string_view text);

inline constexpr std::string_view kVideoScope = "video";

struct Finding {
    HallucinationCategory category;
    double severity = 0.0;  // [0, 10]
    std::vector<int> frame_refs;
    std::string scope;  // "video", "cluster:<id>" or "group"
    std::string description;
    SourceStage source_stage = SourceStage::static_;
    /// Set on consistency findings when the prompt premise is invalid; such
    /// findings carry no score weight.
    bool informational = false;

    friend bool operator==(const Finding&, const Finding&) = default;
};

struct PremiseResult {
    bool valid = true;
    std::string reason;
};

/// Optional pre-stage. Throws ContractError for an empty prompt before any call.
PremiseResult check_premise(std::string_view prompt, Gateway& gw);

struct ConsistencyResult {
    std::string summary;
    double similarity = 1.0;
    double tau_c = 0.5;
    bool hallucinated = false;
    double consistency_severity = 0.0;
    std::string rationale;

    /// Summary used by later stages: the prompt itself when consistent.
    std::string downstream_summary(std::string_view prompt) const {
        return hallucinated ? summary : std::string(prompt);
    }
};

/// One call over every cluster frame. `graphs` holds a graph per cluster
/// frame in frame order, or is empty when static KGs are ablated.
ConsistencyResult summarize_and_check_consistency(std::string_view prompt, const ClusterSet& clusters,
                                                  const FrameSet& fs, std::span<const StaticKG> graphs, Gateway& gw,
                                                  double tau_c, AblationFlags flags);

/// PCH finding for a hallucinated result, nothing otherwise.
std::optional<Finding> consistency_finding(const ConsistencyResult& result, const ClusterSet& clusters,
                                           bool premise_valid);

/// One batched call for every frame of the cluster. `graphs` parallels the
/// cluster frames, or is empty when static KGs are ablated.
std::vector<Finding> detect_static(const KeyframeCluster& cluster, const FrameSet& fs,
                                   std::span<const StaticKG> graphs, std::string_view summary, Gateway& gw,
                                   AblationFlags flags);

/// `dkg` is null when dynamic KGs are ablated. Static findings of the
/// cluster are passed as context for prioritization.
std::vector<Finding> detect_dynamic_local(const KeyframeCluster& cluster, const FrameSet& fs, const DynamicKG* dkg,
                                          std::span<const Finding> static_findings, std::string_view summary,
                                          Gateway& gw, AblationFlags flags);

struct GlobalDynamicResult {
    std::optional<DynamicKG> group_kg;  // absent when dynamic KGs are ablated
    std::vector<Finding> findings;
};

/// Combined group dynamic-KG construction and global detection (one call).
/// `keyframe_graphs` parallels the keyframes, or is empty when ablated.
GlobalDynamicResult detect_dynamic_global(const KeyframeSet& keyframes, const FrameSet& fs,
                                          std::span<const StaticKG> keyframe_graphs, std::string_view summary,
                                          Gateway& gw, AblationFlags flags, std::vector<std::string>& warnings);

json to_json(const Finding& f);
Finding finding_from_json(const json& j);

}  // namespace halluscan
