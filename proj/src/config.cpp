#include "halluscan/config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"

namespace halluscan {

BackendKind parse_backend(std::string_view text) {
    if (text == "live") return BackendKind::live;
    if (text == "record") return BackendKind::record;
    if (text == "replay") return BackendKind::replay;
    throw ContractError("unknown backend: " + std::string(text));
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::live: return "live";
        case BackendKind::record: return "record";
        case BackendKind::replay: return "replay";
    }
    return "live";
}

void PipelineConfig::validate() const {
    if (stride < 1) throw ContractError("stride must be >= 1");
    if (!(synthetic_fps > 0.0)) throw ContractError("synthetic_fps must be positive");
    if (m < 1) throw ContractError("m must be >= 1");
    if (!(tau_d > 0.0)) throw ContractError("tau_d must be positive");
    if (!(dc_fraction > 0.0 && dc_fraction < 1.0)) throw ContractError("dc_fraction must lie in (0, 1)");
    if (max_retries < 0) throw ContractError("max_retries must be >= 0");
    if (!(per_call_usd >= 0.0)) throw ContractError("per_call_usd must be non-negative");
    if (!(tau_c >= 0.0 && tau_c <= 1.0)) throw ContractError("tau_c must lie in [0, 1]");
    if (workers < 1) throw ContractError("workers must be >= 1");
    if ((backend == BackendKind::replay || backend == BackendKind::record) && fixtures.empty()) {
        throw ContractError(std::string(to_string(backend)) + " backend requires a fixtures path");
    }
    if (agg_mode == AggregationMode::weighted) combine({}, agg_mode, agg_weights);
}

IngestOptions PipelineConfig::ingest_options() const {
    IngestOptions o;
    o.stride = stride;
    o.synthetic_fps = synthetic_fps;
    o.decoder_cmd = decoder_cmd;
    o.probe_cmd = probe_cmd;
    return o;
}

KeyframeOptions PipelineConfig::keyframe_options() const {
    KeyframeOptions o;
    o.m = m;
    o.m_auto = m_auto;
    o.tau_d = tau_d;
    o.dc_fraction = dc_fraction;
    o.kernel = kernel;
    o.metric = metric;
    o.workers = workers;
    return o;
}

LiveOptions PipelineConfig::live_options() const {
    LiveOptions o;
    o.model = model;
    o.base_url = base_url;
    o.per_call_usd = per_call_usd;
    o.max_image_edge = max_image_edge;
    o.timeout_s = timeout_s;
    o.backoff_base_s = backoff_base_s;
    return o;
}

namespace {

using Setter = std::function<void(PipelineConfig&, const nlohmann::json&)>;

const std::map<std::string, Setter>& setters() {
    using J = nlohmann::json;
    static const std::map<std::string, Setter> table = {
        {"stride", [](PipelineConfig& c, const J& v) { c.stride = v.get<int>(); }},
        {"extractor", [](PipelineConfig& c, const J& v) { c.extractor = v.get<std::string>(); }},
        {"metric", [](PipelineConfig& c, const J& v) { c.metric = parse_metric(v.get<std::string>()); }},
        {"synthetic_fps", [](PipelineConfig& c, const J& v) { c.synthetic_fps = v.get<double>(); }},
        {"decoder_cmd", [](PipelineConfig& c, const J& v) { c.decoder_cmd = v.get<std::string>(); }},
        {"probe_cmd", [](PipelineConfig& c, const J& v) { c.probe_cmd = v.get<std::string>(); }},
        {"m", [](PipelineConfig& c, const J& v) { c.m = v.get<std::size_t>(); }},
        {"m_auto", [](PipelineConfig& c, const J& v) { c.m_auto = v.get<bool>(); }},
        {"tau_d", [](PipelineConfig& c, const J& v) { c.tau_d = v.get<double>(); }},
        {"dc_fraction", [](PipelineConfig& c, const J& v) { c.dc_fraction = v.get<double>(); }},
        {"kernel", [](PipelineConfig& c, const J& v) { c.kernel = parse_kernel(v.get<std::string>()); }},
        {"backend", [](PipelineConfig& c, const J& v) { c.backend = parse_backend(v.get<std::string>()); }},
        {"model", [](PipelineConfig& c, const J& v) { c.model = v.get<std::string>(); }},
        {"base_url", [](PipelineConfig& c, const J& v) { c.base_url = v.get<std::string>(); }},
        {"max_retries", [](PipelineConfig& c, const J& v) { c.max_retries = v.get<int>(); }},
        {"per_call_usd", [](PipelineConfig& c, const J& v) { c.per_call_usd = v.get<double>(); }},
        {"max_image_edge", [](PipelineConfig& c, const J& v) { c.max_image_edge = v.get<int>(); }},
        {"timeout_s", [](PipelineConfig& c, const J& v) { c.timeout_s = v.get<double>(); }},
        {"backoff_base_s", [](PipelineConfig& c, const J& v) { c.backoff_base_s = v.get<double>(); }},
        {"fixtures", [](PipelineConfig& c, const J& v) { c.fixtures = v.get<std::string>(); }},
        {"tau_c", [](PipelineConfig& c, const J& v) { c.tau_c = v.get<double>(); }},
        {"premise_check", [](PipelineConfig& c, const J& v) { c.premise_check = v.get<bool>(); }},
        {"ablation", [](PipelineConfig& c, const J& v) { c.ablation = parse_ablation(v.get<std::string>()); }},
        {"alpha", [](PipelineConfig& c, const J& v) { c.score.alpha = v.get<double>(); }},
        {"beta", [](PipelineConfig& c, const J& v) { c.score.beta = v.get<double>(); }},
        {"gamma", [](PipelineConfig& c, const J& v) { c.score.gamma = v.get<double>(); }},
        {"agg_mode", [](PipelineConfig& c, const J& v) { c.agg_mode = parse_aggregation_mode(v.get<std::string>()); }},
        {"agg_weights",
         [](PipelineConfig& c, const J& v) {
             const auto w = v.get<std::vector<double>>();
             if (w.size() != 3) throw ContractError("agg_weights needs three values (consistency, static, dynamic)");
             c.agg_weights = {w[0], w[1], w[2]};
         }},
        {"workers", [](PipelineConfig& c, const J& v) { c.workers = v.get<int>(); }},
        {"output_dir", [](PipelineConfig& c, const J& v) { c.output_dir = v.get<std::string>(); }},
        {"fail_fast", [](PipelineConfig& c, const J& v) { c.fail_fast = v.get<bool>(); }},
    };
    return table;
}

}  // namespace

void apply_config(PipelineConfig& config, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ContractError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        auto it = setters().find(key);
        if (it == setters().end()) throw ContractError("unknown config key: " + key);
        try {
            it->second(config, value);
        } catch (const nlohmann::json::exception& e) {
            throw ContractError("config key " + key + ": " + e.what());
        }
    }
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) throw ContractError("config file is not valid JSON: " + path.string());
    // Relative fixture/output paths are relative to the config file.
    for (const char* key : {"fixtures", "output_dir"}) {
        if (doc.contains(key) && doc[key].is_string()) {
            std::filesystem::path p = doc[key].get<std::string>();
            if (p.is_relative()) doc[key] = (path.parent_path() / p).lexically_normal().string();
        }
    }
    apply_config(base, doc);
    return base;
}

nlohmann::json to_json(const PipelineConfig& c) {
    return {
        {"stride", c.stride},
        {"extractor", c.extractor},
        {"metric", to_string(c.metric)},
        {"synthetic_fps", c.synthetic_fps},
        {"decoder_cmd", c.decoder_cmd},
        {"probe_cmd", c.probe_cmd},
        {"m", c.m},
        {"m_auto", c.m_auto},
        {"tau_d", c.tau_d},
        {"dc_fraction", c.dc_fraction},
        {"kernel", to_string(c.kernel)},
        {"backend", to_string(c.backend)},
        {"model", c.model},
        {"base_url", c.base_url},
        {"max_retries", c.max_retries},
        {"per_call_usd", c.per_call_usd},
        {"max_image_edge", c.max_image_edge},
        {"timeout_s", c.timeout_s},
        {"backoff_base_s", c.backoff_base_s},
        {"fixtures", c.fixtures.string()},
        {"tau_c", c.tau_c},
        {"premise_check", c.premise_check},
        {"ablation", to_string(c.ablation)},
        {"alpha", c.score.alpha},
        {"beta", c.score.beta},
        {"gamma", c.score.gamma},
        {"agg_mode", to_string(c.agg_mode)},
        {"agg_weights", {c.agg_weights.consistency, c.agg_weights.static_, c.agg_weights.dynamic}},
        {"workers", c.workers},
        {"output_dir", c.output_dir.string()},
        {"fail_fast", c.fail_fast},
    };
}

std::shared_ptr<ChatBackend> make_backend(const PipelineConfig& config) {
    config.validate();
    switch (config.backend) {
        case BackendKind::replay: return std::make_shared<ReplayBackend>(config.fixtures);
        case BackendKind::record:
            return std::make_shared<RecordBackend>(std::make_shared<LiveBackend>(config.live_options()),
                                                   config.fixtures);
        case BackendKind::live: return std::make_shared<LiveBackend>(config.live_options());
    }
    throw ContractError("unknown backend");
}

}  // namespace halluscan
