#include "halluscan/score.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "halluscan/error.hpp"

namespace halluscan {

AggregationMode parse_aggregation_mode(std::string_view text) {
    if (text == "max") return AggregationMode::max;
    if (text == "weighted") return AggregationMode::weighted;
    throw ContractError("unknown aggregation mode: " + std::string(text));
}

std::string_view to_string(AggregationMode mode) { return mode == AggregationMode::max ? "max" : "weighted"; }

double combine(const SeverityTriple& s, AggregationMode mode, const AggregationWeights& w) {
    if (mode == AggregationMode::max) return std::max({s.s_c, s.s_s, s.s_d});
    if (w.consistency < 0.0 || w.static_ < 0.0 || w.dynamic < 0.0) {
        throw ContractError("aggregation weights must be non-negative");
    }
    if (std::abs(w.consistency + w.static_ + w.dynamic - 1.0) > 1e-9) {
        throw ContractError("aggregation weights must sum to 1");
    }
    return w.consistency * s.s_c + w.static_ * s.s_s + w.dynamic * s.s_d;
}

int scope_cluster_id(std::string_view scope) {
    constexpr std::string_view prefix = "cluster:";
    if (!scope.starts_with(prefix)) return -1;
    int id = -1;
    const auto rest = scope.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), id);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) return -1;
    return id;
}

namespace {

// video < cluster:0 < cluster:1 < ... < group < anything else
std::tuple<int, int, std::string> scope_rank(const std::string& scope) {
    if (scope == kVideoScope) return {0, 0, {}};
    if (int id = scope_cluster_id(scope); id >= 0) return {1, id, {}};
    if (scope == kGroupScope) return {2, 0, {}};
    return {3, 0, scope};
}

auto member_key(const Finding& f) {
    return std::make_tuple(static_cast<int>(f.source_stage), f.frame_refs, static_cast<int>(f.category.code),
                           f.severity, f.description, f.informational);
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

bool overlaps(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty();
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i;
        else ++j;
    }
    return false;
}

}  // namespace

std::vector<AggregatedHallucination> aggregate(std::span<const Finding> findings, AggregationMode mode,
                                               const AggregationWeights& weights) {
    if (mode == AggregationMode::weighted) combine({}, mode, weights);

    std::vector<Finding> sorted(findings.begin(), findings.end());
    for (auto& f : sorted) std::sort(f.frame_refs.begin(), f.frame_refs.end());
    std::sort(sorted.begin(), sorted.end(), [](const Finding& a, const Finding& b) {
        return std::make_tuple(scope_rank(a.scope), member_key(a)) < std::make_tuple(scope_rank(b.scope), member_key(b));
    });

    DisjointSet sets(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        for (std::size_t j = i + 1; j < sorted.size(); ++j) {
            if (sorted[i].scope == sorted[j].scope && overlaps(sorted[i].frame_refs, sorted[j].frame_refs)) {
                sets.unite(i, j);
            }
        }
    }

    // Roots are the smallest member index, so groups come out in sorted order.
    std::map<std::size_t, AggregatedHallucination> groups;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        auto& g = groups[sets.find(i)];
        const auto& f = sorted[i];
        g.scope = f.scope;
        g.mode = mode;
        g.members.push_back(f);
        g.frames.insert(g.frames.end(), f.frame_refs.begin(), f.frame_refs.end());
        if (f.informational) continue;
        switch (f.category.kind) {
            case HallucinationKind::consistency: g.severities.s_c = std::max(g.severities.s_c, f.severity); break;
            case HallucinationKind::static_: g.severities.s_s = std::max(g.severities.s_s, f.severity); break;
            case HallucinationKind::dynamic: g.severities.s_d = std::max(g.severities.s_d, f.severity); break;
        }
    }

    std::vector<AggregatedHallucination> out;
    for (auto& [_, g] : groups) {
        std::sort(g.frames.begin(), g.frames.end());
        g.frames.erase(std::unique(g.frames.begin(), g.frames.end()), g.frames.end());
        g.s_h = combine(g.severities, mode, weights);
        out.push_back(std::move(g));
    }
    return out;
}

DurationWeights duration_weights(std::span<const double> ts, double total) {
    if (ts.empty()) throw ContractError("duration weights need at least one keyframe");
    if (!(total > 0.0)) throw ContractError("total duration must be positive");
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (!(ts[i] > ts[i - 1])) throw ContractError("keyframe timestamps must be strictly increasing");
    }
    const std::size_t m = ts.size();
    std::vector<double> bounds(m + 1);
    bounds.front() = 0.0;
    bounds.back() = total;
    for (std::size_t i = 1; i < m; ++i) bounds[i] = std::clamp(0.5 * (ts[i - 1] + ts[i]), 0.0, total);

    DurationWeights w;
    w.T.resize(m);
    for (std::size_t i = 0; i < m; ++i) w.T[i] = (bounds[i + 1] - bounds[i]) / total;
    return w;
}

DurationWeights duration_weights(const KeyframeSet& keyframes, const FrameSet& fs) {
    std::vector<double> ts;
    for (int k : keyframes.indices) ts.push_back(fs.frames.at(static_cast<std::size_t>(k)).timestamp_s);
    return duration_weights(ts, fs.total_duration_s);
}

QualityScore video_quality_score(double s_c, const std::vector<std::vector<double>>& static_by_keyframe,
                                 const std::vector<std::vector<double>>& dynamic_by_keyframe,
                                 const DurationWeights& weights, const ScoreParams& params) {
    auto check = [](double s) {
        if (!(s >= 0.0 && s <= 10.0)) throw ContractError("severity " + std::to_string(s) + " outside [0, 10]");
    };
    check(s_c);
    const std::size_t m = weights.T.size();
    if (static_by_keyframe.size() != m || dynamic_by_keyframe.size() != m) {
        throw ContractError("per-keyframe severities do not match the duration weights");
    }
    const double t_sum = std::accumulate(weights.T.begin(), weights.T.end(), 0.0);
    if (std::abs(t_sum - 1.0) > 1e-9) throw ContractError("duration weights must sum to 1");

    auto weighted = [&](const std::vector<std::vector<double>>& by_kf) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (double s : by_kf[i]) {
                check(s);
                sum += s;
            }
            total += weights.T[i] * sum;
        }
        return total;
    };

    QualityScore q;
    q.params = params;
    q.consistency_penalty = params.alpha * s_c;
    q.static_penalty = params.beta * weighted(static_by_keyframe);
    q.dynamic_penalty = params.gamma * weighted(dynamic_by_keyframe);
    q.value = std::clamp(100.0 - q.consistency_penalty - q.static_penalty - q.dynamic_penalty, 0.0, 100.0);
    return q;
}

ScoreInputs score_inputs(std::span<const Finding> findings, std::size_t keyframe_count) {
    if (keyframe_count == 0) throw ContractError("no keyframes");
    ScoreInputs in;
    in.static_by_keyframe.resize(keyframe_count);
    in.dynamic_by_keyframe.resize(keyframe_count);
    for (const auto& f : findings) {
        if (f.informational) continue;
        switch (f.source_stage) {
            case SourceStage::consistency: in.s_c = std::max(in.s_c, f.severity); break;
            case SourceStage::static_:
            case SourceStage::local_dynamic: {
                const int id = scope_cluster_id(f.scope);
                if (id < 0 || static_cast<std::size_t>(id) >= keyframe_count) {
                    throw ContractError("finding scope " + f.scope + " does not name a keyframe cluster");
                }
                auto& bucket = f.source_stage == SourceStage::static_ ? in.static_by_keyframe : in.dynamic_by_keyframe;
                bucket[static_cast<std::size_t>(id)].push_back(f.severity);
                break;
            }
            case SourceStage::global_dynamic: {
                const double share = f.severity / static_cast<double>(keyframe_count);
                for (auto& bucket : in.dynamic_by_keyframe) bucket.push_back(share);
                break;
            }
        }
    }
    return in;
}

QualityScore score_findings(std::span<const Finding> findings, const DurationWeights& weights,
                            const ScoreParams& params) {
    const auto in = score_inputs(findings, weights.T.size());
    return video_quality_score(in.s_c, in.static_by_keyframe, in.dynamic_by_keyframe, weights, params);
}

}  // namespace halluscan
