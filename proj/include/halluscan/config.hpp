#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "halluscan/detect.hpp"
#include "halluscan/frames.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/keyframe.hpp"
#include "halluscan/score.hpp"

namespace halluscan {

enum class BackendKind { live, record, replay };

BackendKind parse_backend(std::string_view text);
std::string_view to_string(BackendKind kind);

/// Every tunable of a run. Keys match the config file and CLI flags.
struct PipelineConfig {
    // frames
    int stride = 5;
    std::string extractor = "hist_thumb";
    DistanceMetric metric = DistanceMetric::cosine;
    double synthetic_fps = 30.0;
    std::string decoder_cmd = IngestOptions{}.decoder_cmd;
    std::string probe_cmd;

    // keyframes
    std::size_t m = 4;
    bool m_auto = false;
    double tau_d = 0.3;
    double dc_fraction = 0.02;
    DensityKernel kernel = DensityKernel::gaussian;

    // gateway
    BackendKind backend = BackendKind::live;
    std::string model = LiveOptions{}.model;
    std::string base_url = LiveOptions{}.base_url;
    int max_retries = 2;
    double per_call_usd = 0.08;
    int max_image_edge = 768;
    double timeout_s = 120.0;
    double backoff_base_s = 1.0;
    std::filesystem::path fixtures;

    // detection
    double tau_c = 0.5;
    bool premise_check = false;
    Ablation ablation = Ablation::full;

    // scoring
    ScoreParams score;
    AggregationMode agg_mode = AggregationMode::max;
    AggregationWeights agg_weights;

    // orchestration
    int workers = 4;
    std::filesystem::path output_dir = ".";
    bool fail_fast = false;

    /// Throws ContractError on inconsistent settings.
    void validate() const;

    IngestOptions ingest_options() const;
    KeyframeOptions keyframe_options() const;
    LiveOptions live_options() const;
};

/// Overlays keys present in `doc` onto `config`; unknown keys are errors.
void apply_config(PipelineConfig& config, const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& config);

/// Backend for the configured mode. The live key check happens here, before
/// any call is made.
std::shared_ptr<ChatBackend> make_backend(const PipelineConfig& config);

}  // namespace halluscan
