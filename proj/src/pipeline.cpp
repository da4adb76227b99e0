#include "halluscan/pipeline.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "halluscan/detect.hpp"
#include "halluscan/error.hpp"
#include "halluscan/features.hpp"
#include "halluscan/kg.hpp"
#include "halluscan/parallel.hpp"

namespace halluscan {

std::string default_video_id(const std::filesystem::path& source) {
    auto p = source;
    while (!p.empty() && p.filename().empty()) p = p.parent_path();
    return std::filesystem::is_directory(p) ? p.filename().string() : p.stem().string();
}

namespace {

// Graphs for `frames`, looked up from every cluster's graphs.
std::vector<StaticKG> gather(const std::map<int, const StaticKG*>& by_frame, const std::vector<int>& frames) {
    std::vector<StaticKG> out;
    for (int f : frames) out.push_back(*by_frame.at(f));
    return out;
}

}  // namespace

DetectionRun run_detection(const std::filesystem::path& source, std::string_view prompt,
                           const PipelineConfig& config, Gateway& gw, std::string video_id) {
    config.validate();
    if (prompt.empty()) throw ContractError("prompt must not be empty");
    const auto flags = AblationFlags::from(config.ablation);

    DetectionRun run;
    auto& report = run.report;
    report.video_id = video_id.empty() ? default_video_id(source) : std::move(video_id);
    report.prompt = std::string(prompt);
    report.ablation = std::string(to_string(config.ablation));
    report.aggregation_mode = config.agg_mode;
    report.aggregation_weights = config.agg_weights;

    if (config.premise_check) report.premise = check_premise(prompt, gw);

    // Frames and keyframe clusters.
    const auto extractor = make_extractor(config.extractor);
    run.frames = extract_features(ingest(source, config.ingest_options()), *extractor, config.workers);
    const auto& fs = run.frames;
    if (!config.m_auto && config.m > fs.size()) {
        report.warnings.push_back("requested " + std::to_string(config.m) + " keyframes but only " +
                                  std::to_string(fs.size()) + " frames were sampled");
    }
    run.analysis = analyze_keyframes(fs, config.keyframe_options());
    const auto& clusters = run.analysis.clusters;
    const std::size_t m = clusters.size();
    spdlog::info("{}: {} frames, {} keyframes, {} detail frames", report.video_id, fs.size(), m,
                 run.analysis.details.size());

    // Static KGs per cluster.
    std::vector<std::vector<StaticKG>> graphs(m);
    if (flags.static_kg) {
        parallel_for(m, config.workers, [&](std::size_t i) {
            const auto frames = clusters.clusters[i].frames();
            graphs[i] = build_static_kgs(fs, frames, gw, cluster_scope(clusters.clusters[i].cluster_id));
        });
    }
    std::map<int, const StaticKG*> by_frame;
    for (const auto& gs : graphs) {
        for (const auto& g : gs) by_frame[g.frame_index] = &g;
    }

    // Summary and prompt consistency.
    std::vector<int> all_frames;
    for (const auto& c : clusters.clusters) {
        const auto f = c.frames();
        all_frames.insert(all_frames.end(), f.begin(), f.end());
    }
    std::sort(all_frames.begin(), all_frames.end());
    const auto all_graphs = flags.static_kg ? gather(by_frame, all_frames) : std::vector<StaticKG>{};
    report.consistency =
        summarize_and_check_consistency(prompt, clusters, fs, all_graphs, gw, config.tau_c, flags);
    report.consistency_finding =
        consistency_finding(report.consistency, clusters, !report.premise || report.premise->valid);
    const auto summary = report.consistency.downstream_summary(prompt);

    // Per-cluster static detection, dynamic KG and local dynamic detection.
    const auto weights = duration_weights(run.analysis.keyframes, fs);
    report.clusters.resize(m);
    std::vector<std::vector<std::string>> cluster_warnings(m);
    parallel_for(m, config.workers, [&](std::size_t i) {
        const auto& cluster = clusters.clusters[i];
        auto& section = report.clusters[i];
        section.cluster_id = cluster.cluster_id;
        section.keyframe_index = cluster.keyframe_index;
        section.detail_indices = cluster.detail_indices;
        section.timestamp_s = fs.frames[static_cast<std::size_t>(cluster.keyframe_index)].timestamp_s;
        section.duration_weight = weights.T[i];
        section.static_kgs = graphs[i];

        section.static_findings = detect_static(cluster, fs, graphs[i], summary, gw, flags);
        if (flags.dynamic_kg) {
            section.dynamic_kg = build_dynamic_kg(cluster, fs, graphs[i], gw, cluster_warnings[i]);
        }
        section.local_findings =
            detect_dynamic_local(cluster, fs, section.dynamic_kg ? &*section.dynamic_kg : nullptr,
                                 section.static_findings, summary, gw, flags);
    });
    for (auto& w : cluster_warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());

    // Keyframe group.
    const auto keyframe_graphs =
        flags.static_kg ? gather(by_frame, run.analysis.keyframes.indices) : std::vector<StaticKG>{};
    auto global = detect_dynamic_global(run.analysis.keyframes, fs, keyframe_graphs, summary, gw, flags,
                                        report.warnings);
    report.group_kg = std::move(global.group_kg);
    report.global_findings = std::move(global.findings);

    // Aggregation and score.
    const auto findings = report.all_findings();
    report.aggregated = aggregate(findings, config.agg_mode, config.agg_weights);
    report.score = score_findings(findings, weights, config.score);

    const auto& ledger = gw.ledger();
    report.ledger.total_calls = ledger.total_calls();
    report.ledger.total_cost_usd = ledger.total_cost_usd();
    report.ledger.calls_by_step = ledger.calls_by_step();
    return run;
}

}  // namespace halluscan
