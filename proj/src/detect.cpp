#include "halluscan/detect.hpp"

#include <algorithm>
#include <set>

#include "halluscan/error.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/prompts.hpp"

namespace halluscan {

Ablation parse_ablation(std::string_view text) {
    if (text == "full") return Ablation::full;
    if (text == "no_kg") return Ablation::no_kg;
    if (text == "no_static_kg") return Ablation::no_static_kg;
    if (text == "no_dynamic_kg") return Ablation::no_dynamic_kg;
    throw ContractError("unknown ablation mode: " + std::string(text));
}

std::string_view to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::full: return "full";
        case Ablation::no_kg: return "no_kg";
        case Ablation::no_static_kg: return "no_static_kg";
        case Ablation::no_dynamic_kg: return "no_dynamic_kg";
    }
    return "full";
}

AblationFlags AblationFlags::from(Ablation ablation) {
    return {ablation == Ablation::full || ablation == Ablation::no_dynamic_kg,
            ablation == Ablation::full || ablation == Ablation::no_static_kg};
}

std::string_view to_string(SourceStage stage) {
    switch (stage) {
        case SourceStage::consistency: return "consistency";
        case SourceStage::static_: return "static";
        case SourceStage::local_dynamic: return "local_dynamic";
        case SourceStage::global_dynamic: return "global_dynamic";
    }
    return "static";
}

SourceStage parse_source_stage(std::string_view text) {
    if (text == "consistency") return SourceStage::consistency;
    if (text == "static") return SourceStage::static_;
    if (text == "local_dynamic") return SourceStage::local_dynamic;
    if (text == "global_dynamic") return SourceStage::global_dynamic;
    throw ValidationError("unknown source stage: " + std::string(text));
}

namespace {

std::vector<ImageRef> images_for(const FrameSet& fs, std::span<const int> frames) {
    std::vector<ImageRef> out;
    for (int f : frames) out.push_back(ImageRef::from_file(fs.frames.at(static_cast<std::size_t>(f)).image_ref));
    return out;
}

void check_graphs(std::span<const StaticKG> graphs, std::span<const int> frames, std::string_view what) {
    if (graphs.empty()) return;
    if (graphs.size() != frames.size()) throw ContractError(std::string(what) + ": graphs do not cover the frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (graphs[i].frame_index != frames[i]) throw ContractError(std::string(what) + ": graph/frame mismatch");
    }
}

std::vector<int> all_cluster_frames(const ClusterSet& clusters) {
    std::vector<int> out;
    for (const auto& c : clusters.clusters) {
        auto f = c.frames();
        out.insert(out.end(), f.begin(), f.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

json relation_context(const DynamicKG& dkg) {
    json tracked = json::array();
    for (const auto& t : dkg.tracked_objects) {
        tracked.push_back({{"id", t.entity.id}, {"label", t.entity.label}, {"frames", t.frames}});
    }
    json relations = json::array();
    for (const auto& r : dkg.temporal_relations) {
        relations.push_back({{"from_frame", r.from_frame},
                             {"to_frame", r.to_frame},
                             {"subject", r.subject},
                             {"change", r.change},
                             {"detail", r.detail}});
    }
    return {{"tracked_objects", tracked}, {"temporal_relations", relations}};
}

std::vector<Finding> dynamic_findings(const json& doc, SourceStage stage, const std::string& scope) {
    std::vector<Finding> out;
    for (const auto& f : doc.at("findings")) {
        Finding finding;
        finding.category = HallucinationCategory::of(*parse_code(f.at("code").get<std::string>()));
        finding.severity = f.at("severity").get<double>();
        finding.frame_refs = f.at("frames").get<std::vector<int>>();
        std::sort(finding.frame_refs.begin(), finding.frame_refs.end());
        finding.frame_refs.erase(std::unique(finding.frame_refs.begin(), finding.frame_refs.end()),
                                 finding.frame_refs.end());
        finding.scope = scope;
        finding.description = f.at("description").get<std::string>();
        finding.source_stage = stage;
        out.push_back(std::move(finding));
    }
    return out;
}

Validator frames_within(std::vector<int> allowed, bool require_frames) {
    return [allowed = std::move(allowed), require_frames](const json& doc) -> std::string {
        for (const auto& f : doc.at("findings")) {
            const auto& frames = f.at("frames");
            if (require_frames && frames.empty()) return "finding without frames";
            for (const auto& fr : frames) {
                if (!std::binary_search(allowed.begin(), allowed.end(), fr.get<int>())) {
                    return "finding references frame " + fr.dump() + " outside the scope";
                }
            }
        }
        return {};
    };
}

}  // namespace

PremiseResult check_premise(std::string_view prompt, Gateway& gw) {
    if (prompt.empty()) throw ContractError("prompt must not be empty");
    auto request = GatewayRequest::make(Step::premise_check, prompts::premise(prompt), {},
                                        std::string(prompts::kPremiseSchema), "premise");
    auto reply = gw.complete(request);
    return {reply.parsed.at("valid").get<bool>(), reply.parsed.at("reason").get<std::string>()};
}

ConsistencyResult summarize_and_check_consistency(std::string_view prompt, const ClusterSet& clusters,
                                                  const FrameSet& fs, std::span<const StaticKG> graphs, Gateway& gw,
                                                  double tau_c, AblationFlags flags) {
    if (prompt.empty()) throw ContractError("prompt must not be empty");
    if (!(tau_c >= 0.0 && tau_c <= 1.0)) throw ContractError("tau_c must lie in [0, 1]");
    const auto frames = all_cluster_frames(clusters);
    if (frames.empty()) throw ContractError("no cluster frames");
    check_graphs(graphs, frames, "consistency");

    json context = {{"prompt", prompt}, {"frames", frames}};
    if (flags.static_kg && !graphs.empty()) {
        json facts = json::array();
        for (const auto& g : graphs) facts.push_back(triples_context(g));
        context["scene_facts"] = facts;
    }
    auto request = GatewayRequest::make(Step::summary_and_consistency, prompts::consistency(context),
                                        images_for(fs, frames), std::string(prompts::kConsistencySchema), "video");
    auto reply = gw.complete(request);

    ConsistencyResult r;
    r.summary = reply.parsed.at("summary").get<std::string>();
    r.similarity = reply.parsed.at("similarity").get<double>();
    r.rationale = reply.parsed.at("rationale").get<std::string>();
    r.tau_c = tau_c;
    r.hallucinated = r.similarity < tau_c;
    r.consistency_severity = r.hallucinated ? reply.parsed.at("severity").get<double>() : 0.0;
    return r;
}

std::optional<Finding> consistency_finding(const ConsistencyResult& result, const ClusterSet& clusters,
                                           bool premise_valid) {
    if (!result.hallucinated) return std::nullopt;
    Finding f;
    f.category = HallucinationCategory::of(CategoryCode::PCH);
    f.severity = result.consistency_severity;
    f.frame_refs = all_cluster_frames(clusters);
    f.scope = std::string(kVideoScope);
    f.description = result.rationale;
    f.source_stage = SourceStage::consistency;
    f.informational = !premise_valid;
    return f;
}

std::vector<Finding> detect_static(const KeyframeCluster& cluster, const FrameSet& fs,
                                   std::span<const StaticKG> graphs, std::string_view summary, Gateway& gw,
                                   AblationFlags flags) {
    const auto frames = cluster.frames();
    check_graphs(graphs, frames, "static detection");

    json frame_ctx = json::array();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (flags.static_kg && !graphs.empty()) frame_ctx.push_back(triples_context(graphs[i]));
        else frame_ctx.push_back({{"frame_index", frames[i]}});
    }
    json context = {{"summary", summary}, {"frames", frame_ctx}};
    const auto scope = cluster_scope(cluster.cluster_id);
    auto request = GatewayRequest::make(Step::static_detect, prompts::static_detect(context), images_for(fs, frames),
                                        std::string(prompts::kStaticDetectSchema), scope);
    auto reply = gw.complete(request, [&](const json& doc) -> std::string {
        for (const auto& f : doc.at("findings")) {
            if (!std::binary_search(frames.begin(), frames.end(), f.at("frame_index").get<int>())) {
                return "finding for frame " + f.at("frame_index").dump() + " outside the cluster";
            }
        }
        return {};
    });

    std::vector<Finding> out;
    for (const auto& f : reply.parsed.at("findings")) {
        Finding finding;
        finding.category = HallucinationCategory::of(*parse_code(f.at("code").get<std::string>()));
        finding.severity = f.at("severity").get<double>();
        finding.frame_refs = {f.at("frame_index").get<int>()};
        finding.scope = scope;
        finding.description = f.at("description").get<std::string>();
        finding.source_stage = SourceStage::static_;
        out.push_back(std::move(finding));
    }
    return out;
}

std::vector<Finding> detect_dynamic_local(const KeyframeCluster& cluster, const FrameSet& fs, const DynamicKG* dkg,
                                          std::span<const Finding> static_findings, std::string_view summary,
                                          Gateway& gw, AblationFlags flags) {
    const auto frames = cluster.frames();
    const auto scope = cluster_scope(cluster.cluster_id);
    if (dkg != nullptr && dkg->scope != scope) throw ContractError("dynamic KG scope " + dkg->scope + " != " + scope);

    json prior = json::array();
    for (const auto& f : static_findings) {
        prior.push_back({{"code", to_string(f.category.code)},
                         {"severity", f.severity},
                         {"description", f.description},
                         {"frames", f.frame_refs}});
    }
    json context = {{"summary", summary}, {"frames", frames}, {"static_findings", prior}};
    if (flags.dynamic_kg && dkg != nullptr) context.update(relation_context(*dkg));

    auto request = GatewayRequest::make(Step::cluster_dynamic,
                                        prompts::local_detect(context), images_for(fs, frames),
                                        std::string(prompts::kDynamicDetectSchema), scope);
    auto reply = gw.complete(request, frames_within(frames, true));
    return dynamic_findings(reply.parsed, SourceStage::local_dynamic, scope);
}

GlobalDynamicResult detect_dynamic_global(const KeyframeSet& keyframes, const FrameSet& fs,
                                          std::span<const StaticKG> keyframe_graphs, std::string_view summary,
                                          Gateway& gw, AblationFlags flags, std::vector<std::string>& warnings) {
    const auto& frames = keyframes.indices;
    if (frames.empty()) throw ContractError("no keyframes");
    check_graphs(keyframe_graphs, frames, "global detection");

    const auto tracked = track_objects(keyframe_graphs);
    json context = {{"summary", summary}, {"keyframes", frames}};
    if (flags.static_kg && !keyframe_graphs.empty()) {
        json facts = json::array();
        for (const auto& g : keyframe_graphs) facts.push_back(triples_context(g));
        context["scene_facts"] = facts;
    }
    if (flags.dynamic_kg) {
        json tracked_ctx = json::array();
        for (const auto& t : tracked) {
            tracked_ctx.push_back({{"id", t.entity.id}, {"label", t.entity.label}, {"attributes", t.entity.attributes},
                                   {"frames", t.frames}});
        }
        context["tracked_objects"] = tracked_ctx;
    }

    const auto schema = flags.dynamic_kg ? prompts::kGroupDynamicSchema : prompts::kDynamicDetectSchema;
    auto request = GatewayRequest::make(Step::global_dynamic, prompts::group_dynamic(context, flags.dynamic_kg),
                                        images_for(fs, frames), std::string(schema), std::string(kGroupScope));
    auto reply = gw.complete(request, frames_within(frames, false));

    GlobalDynamicResult out;
    if (flags.dynamic_kg) {
        out.group_kg = assemble_dynamic_kg(std::string(kGroupScope), frames, tracked,
                                           reply.parsed.at("temporal_relations"), warnings, keyframe_graphs.empty());
    }
    out.findings = dynamic_findings(reply.parsed, SourceStage::global_dynamic, std::string(kGroupScope));
    return out;
}

json to_json(const Finding& f) {
    return {{"code", to_string(f.category.code)},
            {"kind", to_string(f.category.kind)},
            {"severity", f.severity},
            {"frame_refs", f.frame_refs},
            {"scope", f.scope},
            {"description", f.description},
            {"source_stage", to_string(f.source_stage)},
            {"informational", f.informational}};
}

Finding finding_from_json(const json& j) {
    Finding f;
    const auto code = parse_code(j.at("code").get<std::string>());
    if (!code) throw ValidationError("unknown category code " + j.at("code").dump());
    f.category = HallucinationCategory::of(*code);
    if (j.at("kind").get<std::string>() != to_string(f.category.kind)) {
        throw ValidationError("kind does not match code " + j.at("code").dump());
    }
    f.severity = j.at("severity").get<double>();
    if (!(f.severity >= 0.0 && f.severity <= 10.0)) throw ValidationError("severity outside [0, 10]");
    f.frame_refs = j.at("frame_refs").get<std::vector<int>>();
    f.scope = j.at("scope").get<std::string>();
    f.description = j.at("description").get<std::string>();
    f.source_stage = parse_source_stage(j.at("source_stage").get<std::string>());
    f.informational = j.at("informational").get<bool>();
    return f;
}

}  // namespace halluscan
