#include "halluscan/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"

namespace halluscan {

std::vector<Finding> QualityReport::all_findings() const {
    std::vector<Finding> out;
    if (consistency_finding) out.push_back(*consistency_finding);
    for (const auto& c : clusters) {
        out.insert(out.end(), c.static_findings.begin(), c.static_findings.end());
        out.insert(out.end(), c.local_findings.begin(), c.local_findings.end());
    }
    out.insert(out.end(), global_findings.begin(), global_findings.end());
    return out;
}

DurationWeights QualityReport::duration_weights() const {
    DurationWeights w;
    for (const auto& c : clusters) w.T.push_back(c.duration_weight);
    return w;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }

json findings_json(const std::vector<Finding>& findings) {
    json out = json::array();
    for (const auto& f : findings) out.push_back(to_json(f));
    return out;
}

std::vector<Finding> findings_from(const json& j) {
    std::vector<Finding> out;
    for (const auto& f : j) out.push_back(finding_from_json(f));
    return out;
}

json aggregated_json(const AggregatedHallucination& a) {
    return {{"scope", a.scope},
            {"frames", a.frames},
            {"s_c", a.severities.s_c},
            {"s_s", a.severities.s_s},
            {"s_d", a.severities.s_d},
            {"s_h", a.s_h},
            {"mode", to_string(a.mode)},
            {"members", findings_json(a.members)}};
}

AggregatedHallucination aggregated_from(const json& j) {
    AggregatedHallucination a;
    a.scope = j.at("scope").get<std::string>();
    a.frames = j.at("frames").get<std::vector<int>>();
    a.severities = {j.at("s_c").get<double>(), j.at("s_s").get<double>(), j.at("s_d").get<double>()};
    a.s_h = j.at("s_h").get<double>();
    a.mode = parse_aggregation_mode(j.at("mode").get<std::string>());
    a.members = findings_from(j.at("members"));
    return a;
}

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string frames_text(const std::vector<int>& frames) {
    if (frames.empty()) return "all keyframes";
    std::string out;
    for (std::size_t i = 0; i < frames.size(); ++i) out += (i ? ", " : "") + std::to_string(frames[i]);
    return out;
}

void finding_lines(std::ostringstream& md, const std::vector<Finding>& findings) {
    if (findings.empty()) {
        md << "- none\n";
        return;
    }
    for (const auto& f : findings) {
        md << "- **" << to_string(f.category.code) << " " << category_name(f.category.code) << "** (severity "
           << fmt(f.severity, 1) << "; frames " << frames_text(f.frame_refs) << ")";
        if (f.informational) md << " [informational]";
        md << ": " << f.description << "\n";
    }
}

}  // namespace

void validate(const QualityReport& report) {
    const auto findings = report.all_findings();
    for (const auto& f : findings) {
        if (!(f.severity >= 0.0 && f.severity <= 10.0)) throw ValidationError("finding severity outside [0, 10]");
        if ((f.source_stage == SourceStage::static_ || f.source_stage == SourceStage::local_dynamic) &&
            f.frame_refs.empty()) {
            throw ValidationError("static/local finding without frame references");
        }
    }
    if (report.clusters.empty()) throw ValidationError("report has no keyframe clusters");

    const auto weights = report.duration_weights();
    double t_sum = 0.0;
    for (double t : weights.T) t_sum += t;
    if (!close(t_sum, 1.0)) throw ValidationError("duration weights do not sum to 1");

    const auto expected = score_findings(findings, weights, report.score.params);
    const auto& got = report.score;
    if (!close(expected.value, got.value) || !close(expected.consistency_penalty, got.consistency_penalty) ||
        !close(expected.static_penalty, got.static_penalty) || !close(expected.dynamic_penalty, got.dynamic_penalty)) {
        throw ValidationError("score " + std::to_string(got.value) + " disagrees with recomputation " +
                              std::to_string(expected.value));
    }

    const auto agg = aggregate(findings, report.aggregation_mode, report.aggregation_weights);
    bool same = agg.size() == report.aggregated.size();
    for (std::size_t i = 0; same && i < agg.size(); ++i) {
        same = aggregated_json(agg[i]) == aggregated_json(report.aggregated[i]);
    }
    if (!same) throw ValidationError("aggregated hallucinations disagree with the detailed findings");
}

json to_json(const QualityReport& r) {
    json clusters = json::array();
    for (const auto& c : r.clusters) {
        json kgs = json::array();
        for (const auto& g : c.static_kgs) kgs.push_back(to_json(g));
        clusters.push_back({{"cluster_id", c.cluster_id},
                            {"keyframe_index", c.keyframe_index},
                            {"detail_indices", c.detail_indices},
                            {"timestamp_s", c.timestamp_s},
                            {"duration_weight", c.duration_weight},
                            {"static_kgs", kgs},
                            {"static_findings", findings_json(c.static_findings)},
                            {"dynamic_kg", c.dynamic_kg ? to_json(*c.dynamic_kg) : json(nullptr)},
                            {"local_findings", findings_json(c.local_findings)}});
    }
    json aggregated = json::array();
    for (const auto& a : r.aggregated) aggregated.push_back(aggregated_json(a));

    return {
        {"report_version", kReportVersion},
        {"video_id", r.video_id},
        {"prompt", r.prompt},
        {"ablation", r.ablation},
        {"premise", r.premise ? json{{"valid", r.premise->valid}, {"reason", r.premise->reason}} : json(nullptr)},
        {"consistency",
         {{"summary", r.consistency.summary},
          {"similarity", r.consistency.similarity},
          {"tau_c", r.consistency.tau_c},
          {"hallucinated", r.consistency.hallucinated},
          {"severity", r.consistency.consistency_severity},
          {"rationale", r.consistency.rationale},
          {"finding", r.consistency_finding ? to_json(*r.consistency_finding) : json(nullptr)}}},
        {"clusters", clusters},
        {"global",
         {{"dynamic_kg", r.group_kg ? to_json(*r.group_kg) : json(nullptr)},
          {"findings", findings_json(r.global_findings)}}},
        {"aggregation",
         {{"mode", to_string(r.aggregation_mode)},
          {"weights",
           {{"consistency", r.aggregation_weights.consistency},
            {"static", r.aggregation_weights.static_},
            {"dynamic", r.aggregation_weights.dynamic}}}}},
        {"aggregated", aggregated},
        {"score",
         {{"value", r.score.value},
          {"alpha", r.score.params.alpha},
          {"beta", r.score.params.beta},
          {"gamma", r.score.params.gamma},
          {"consistency_penalty", r.score.consistency_penalty},
          {"static_penalty", r.score.static_penalty},
          {"dynamic_penalty", r.score.dynamic_penalty}}},
        {"ledger",
         {{"total_calls", r.ledger.total_calls},
          {"total_cost_usd", r.ledger.total_cost_usd},
          {"calls_by_step", r.ledger.calls_by_step}}},
        {"warnings", r.warnings},
    };
}

QualityReport report_from_json(const json& j) {
    try {
        if (j.at("report_version").get<int>() != kReportVersion) {
            throw ValidationError("unsupported report_version " + j.at("report_version").dump());
        }
        QualityReport r;
        r.video_id = j.at("video_id").get<std::string>();
        r.prompt = j.at("prompt").get<std::string>();
        r.ablation = j.at("ablation").get<std::string>();
        if (!j.at("premise").is_null()) {
            r.premise = PremiseResult{j["premise"].at("valid").get<bool>(), j["premise"].at("reason").get<std::string>()};
        }
        const auto& c = j.at("consistency");
        r.consistency.summary = c.at("summary").get<std::string>();
        r.consistency.similarity = c.at("similarity").get<double>();
        r.consistency.tau_c = c.at("tau_c").get<double>();
        r.consistency.hallucinated = c.at("hallucinated").get<bool>();
        r.consistency.consistency_severity = c.at("severity").get<double>();
        r.consistency.rationale = c.at("rationale").get<std::string>();
        if (!c.at("finding").is_null()) r.consistency_finding = finding_from_json(c["finding"]);

        for (const auto& cj : j.at("clusters")) {
            ClusterSection s;
            s.cluster_id = cj.at("cluster_id").get<int>();
            s.keyframe_index = cj.at("keyframe_index").get<int>();
            s.detail_indices = cj.at("detail_indices").get<std::vector<int>>();
            s.timestamp_s = cj.at("timestamp_s").get<double>();
            s.duration_weight = cj.at("duration_weight").get<double>();
            for (const auto& g : cj.at("static_kgs")) s.static_kgs.push_back(static_kg_from_json(g));
            s.static_findings = findings_from(cj.at("static_findings"));
            if (!cj.at("dynamic_kg").is_null()) s.dynamic_kg = dynamic_kg_from_json(cj["dynamic_kg"]);
            s.local_findings = findings_from(cj.at("local_findings"));
            r.clusters.push_back(std::move(s));
        }
        const auto& g = j.at("global");
        if (!g.at("dynamic_kg").is_null()) r.group_kg = dynamic_kg_from_json(g["dynamic_kg"]);
        r.global_findings = findings_from(g.at("findings"));

        const auto& a = j.at("aggregation");
        r.aggregation_mode = parse_aggregation_mode(a.at("mode").get<std::string>());
        r.aggregation_weights = {a.at("weights").at("consistency").get<double>(),
                                 a.at("weights").at("static").get<double>(),
                                 a.at("weights").at("dynamic").get<double>()};
        for (const auto& x : j.at("aggregated")) r.aggregated.push_back(aggregated_from(x));

        const auto& s = j.at("score");
        r.score.value = s.at("value").get<double>();
        r.score.params = {s.at("alpha").get<double>(), s.at("beta").get<double>(), s.at("gamma").get<double>()};
        r.score.consistency_penalty = s.at("consistency_penalty").get<double>();
        r.score.static_penalty = s.at("static_penalty").get<double>();
        r.score.dynamic_penalty = s.at("dynamic_penalty").get<double>();

        const auto& l = j.at("ledger");
        r.ledger.total_calls = l.at("total_calls").get<std::size_t>();
        r.ledger.total_cost_usd = l.at("total_cost_usd").get<double>();
        r.ledger.calls_by_step = l.at("calls_by_step").get<std::map<std::string, std::size_t>>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
}

std::string render_structured(const QualityReport& report) { return canonical_dump(to_json(report)); }

std::string render_prose(const QualityReport& r) {
    std::ostringstream md;
    const auto findings = r.all_findings();
    std::size_t n_static = 0, n_dynamic = 0;
    for (const auto& f : findings) {
        if (f.category.kind == HallucinationKind::static_) ++n_static;
        if (f.category.kind == HallucinationKind::dynamic) ++n_dynamic;
    }

    md << "# Video quality report: " << r.video_id << "\n\n";
    md << "## Summary\n\n";
    md << "- Prompt: " << r.prompt << "\n";
    md << "- VideoQualityScore: **" << fmt(r.score.value) << " / 100**\n";
    if (r.premise) {
        md << "- Prompt premise: " << (r.premise->valid ? "valid" : "invalid") << " (" << r.premise->reason << ")\n";
    }
    md << "- Prompt consistency: "
       << (r.consistency.hallucinated ? "hallucination detected" : "consistent with the prompt")
       << " (similarity " << fmt(r.consistency.similarity) << ", threshold " << fmt(r.consistency.tau_c) << ")\n";
    md << "- Static hallucinations: " << n_static << "\n";
    md << "- Dynamic hallucinations: " << n_dynamic << "\n";
    if (findings.empty()) {
        md << "\nNo hallucinations were detected.\n";
    } else {
        md << "\nMain issues (aggregated, " << to_string(r.aggregation_mode) << " severity):\n\n";
        for (const auto& a : r.aggregated) {
            md << "- " << a.scope << " frames [" << frames_text(a.frames) << "]: severity " << fmt(a.s_h, 1) << " (";
            for (std::size_t i = 0; i < a.members.size(); ++i) {
                md << (i ? ", " : "") << to_string(a.members[i].category.code);
            }
            md << ")\n";
        }
    }

    md << "\n## Detailed analysis\n\n";
    md << "### Keyframes\n\n";
    md << "| cluster | keyframe | time (s) | weight | detail frames |\n|---|---|---|---|---|\n";
    for (const auto& c : r.clusters) {
        md << "| " << c.cluster_id << " | " << c.keyframe_index << " | " << fmt(c.timestamp_s, 3) << " | "
           << fmt(c.duration_weight, 4) << " | " << (c.detail_indices.empty() ? "-" : frames_text(c.detail_indices))
           << " |\n";
    }

    md << "\n### Consistency\n\n";
    md << "Video summary: " << r.consistency.summary << "\n\n";
    md << "Assessment: " << r.consistency.rationale << "\n";
    if (r.consistency_finding) {
        md << "\n";
        finding_lines(md, {*r.consistency_finding});
    }

    for (const auto& c : r.clusters) {
        md << "\n### Cluster " << c.cluster_id << " (keyframe " << c.keyframe_index << ")\n\n";
        if (!c.static_kgs.empty()) {
            md << "Scene facts:\n\n";
            for (const auto& g : c.static_kgs) {
                md << "- frame " << g.frame_index << ": ";
                if (g.triples.empty()) md << g.entities.size() << " objects, no relations";
                for (std::size_t i = 0; i < g.triples.size(); ++i) {
                    const auto& t = g.triples[i];
                    md << (i ? "; " : "") << "(" << t.subject << ", " << t.predicate << ", " << t.object << ")";
                }
                md << "\n";
            }
            md << "\n";
        }
        md << "Static hallucinations:\n\n";
        finding_lines(md, c.static_findings);
        if (c.dynamic_kg) {
            md << "\nTemporal changes: " << c.dynamic_kg->temporal_relations.size() << " across "
               << c.dynamic_kg->tracked_objects.size() << " tracked objects\n";
        }
        md << "\nLocal dynamic hallucinations:\n\n";
        finding_lines(md, c.local_findings);
    }

    md << "\n### Global dynamic analysis\n\n";
    if (r.group_kg) {
        md << "Temporal changes across keyframes: " << r.group_kg->temporal_relations.size() << "\n\n";
    }
    finding_lines(md, r.global_findings);

    md << "\n### Score\n\n";
    md << "100 - " << fmt(r.score.consistency_penalty) << " (consistency, alpha=" << fmt(r.score.params.alpha, 1)
       << ") - " << fmt(r.score.static_penalty) << " (static, beta=" << fmt(r.score.params.beta, 1) << ") - "
       << fmt(r.score.dynamic_penalty) << " (dynamic, gamma=" << fmt(r.score.params.gamma, 1)
       << ") = **" << fmt(r.score.value) << "**\n";

    md << "\n### Model calls\n\n";
    md << "- total: " << r.ledger.total_calls << " (cost $" << fmt(r.ledger.total_cost_usd) << ")\n";
    for (const auto& [step, n] : r.ledger.calls_by_step) md << "- " << step << ": " << n << "\n";

    if (!r.warnings.empty()) {
        md << "\n### Warnings\n\n";
        for (const auto& w : r.warnings) md << "- " << w << "\n";
    }
    return md.str();
}

std::vector<std::filesystem::path> render(const QualityReport& report, const std::filesystem::path& out_dir,
                                          RenderFormats formats) {
    validate(report);
    std::vector<std::filesystem::path> written;
    if (formats.structured) {
        auto path = out_dir / (report.video_id + ".report.json");
        write_file_atomic(path, render_structured(report));
        written.push_back(path);
    }
    if (formats.prose) {
        auto path = out_dir / (report.video_id + ".report.md");
        write_file_atomic(path, render_prose(report));
        written.push_back(path);
    }
    return written;
}

}  // namespace halluscan
