#include "halluscan/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <spdlog/spdlog.h>

#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"
#include "halluscan/taxonomy.hpp"

namespace fs = std::filesystem;

namespace halluscan {

namespace {

constexpr std::array<std::pair<Step, std::string_view>, 6> kStepNames = {{
    {Step::summary_and_consistency, "summary_and_consistency"},
    {Step::static_kg, "static_kg"},
    {Step::static_detect, "static_detect"},
    {Step::cluster_dynamic, "cluster_dynamic"},
    {Step::global_dynamic, "global_dynamic"},
    {Step::premise_check, "premise_check"},
}};

}  // namespace

std::string_view to_string(Step step) {
    for (const auto& [s, name] : kStepNames) {
        if (s == step) return name;
    }
    return "unknown";
}

Step parse_step(std::string_view text) {
    for (const auto& [s, name] : kStepNames) {
        if (name == text) return s;
    }
    throw ValidationError("unknown gateway step: " + std::string(text));
}

bool is_vision_step(Step step) { return step != Step::premise_check; }

ImageRef ImageRef::from_file(const fs::path& path) { return {path, sha256_file(path)}; }

std::string compute_request_hash(Step step, std::string_view prompt_text, const std::vector<ImageRef>& images) {
    std::string material;
    material += to_string(step);
    material += '\0';
    material += std::to_string(prompt_text.size());
    material += ':';
    material += prompt_text;
    for (const auto& img : images) {
        material += '\0';
        material += img.digest;
    }
    return sha256_hex(material);
}

GatewayRequest GatewayRequest::make(Step step, std::string prompt_text, std::vector<ImageRef> images,
                                    std::string schema_id, std::string scope) {
    if (is_vision_step(step) && images.empty()) {
        throw ContractError("vision step " + std::string(to_string(step)) + " needs at least one image");
    }
    GatewayRequest r;
    r.step = step;
    r.prompt_text = std::move(prompt_text);
    r.images = std::move(images);
    r.schema_id = std::move(schema_id);
    r.scope = std::move(scope);
    r.request_hash = compute_request_hash(r.step, r.prompt_text, r.images);
    return r;
}

// ---------------------------------------------------------------------------
// Ledger

void CallLedger::append(LedgerEntry entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> CallLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t CallLedger::total_calls() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

double CallLedger::total_cost_usd() const {
    std::lock_guard lock(mutex_);
    double total = 0.0;
    for (const auto& e : entries_) total += e.cost_usd;
    return total;
}

std::map<std::string, std::size_t> CallLedger::calls_by_step() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::size_t> out;
    for (const auto& e : entries_) ++out[std::string(to_string(e.step))];
    return out;
}

// ---------------------------------------------------------------------------
// Fixtures

FixtureStore::FixtureStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path FixtureStore::path_for(std::string_view request_hash) const {
    return dir_ / (std::string(request_hash) + ".response.json");
}

std::optional<FixtureStore::Fixture> FixtureStore::load(std::string_view request_hash) const {
    const auto path = path_for(request_hash);
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    json doc;
    try {
        doc = json::parse(read_file(path));
        Fixture f;
        f.request_hash = doc.at("request_hash").get<std::string>();
        f.step = parse_step(doc.at("step").get<std::string>());
        f.scope = doc.value("scope", "");
        f.responses = doc.at("responses").get<std::vector<std::string>>();
        return f;
    } catch (const json::exception& e) {
        throw GatewayError("corrupt fixture " + path.string() + ": " + e.what());
    }
}

void FixtureStore::save(const Fixture& fixture) {
    json doc = {
        {"request_hash", fixture.request_hash},
        {"step", to_string(fixture.step)},
        {"scope", fixture.scope},
        {"responses", fixture.responses},
    };
    std::lock_guard lock(mutex_);
    write_file_atomic(path_for(fixture.request_hash), doc.dump(2) + "\n");

    const auto manifest_path = dir_ / "manifest.json";
    json manifest = {{"version", 1}, {"fixtures", json::object()}};
    std::error_code ec;
    if (fs::exists(manifest_path, ec)) manifest = json::parse(read_file(manifest_path));
    manifest["fixtures"][fixture.request_hash] = {{"step", to_string(fixture.step)}, {"scope", fixture.scope}};
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

ReplayBackend::ReplayBackend(fs::path fixture_dir) : store_(std::move(fixture_dir)) {
    std::error_code ec;
    if (!fs::is_directory(store_.dir(), ec)) {
        throw GatewayConfigError("replay fixture directory not found: " + store_.dir().string());
    }
}

std::string ReplayBackend::send(const GatewayRequest& request, const std::string&, int attempt) {
    auto fixture = store_.load(request.request_hash);
    if (!fixture) throw FixtureMissingError(request.request_hash);
    if (attempt < 1 || static_cast<std::size_t>(attempt) > fixture->responses.size()) {
        throw FixtureMissingError(request.request_hash + " (attempt " + std::to_string(attempt) + ")");
    }
    return fixture->responses[static_cast<std::size_t>(attempt - 1)];
}

RecordBackend::RecordBackend(std::shared_ptr<ChatBackend> inner, fs::path fixture_dir)
    : inner_(std::move(inner)), store_(std::move(fixture_dir)) {
    fs::create_directories(store_.dir());
}

std::string RecordBackend::send(const GatewayRequest& request, const std::string& prompt_text, int attempt) {
    return inner_->send(request, prompt_text, attempt);
}

void RecordBackend::on_complete(const GatewayRequest& request, const std::vector<std::string>& raw_replies) {
    store_.save({request.request_hash, request.step, request.scope, raw_replies});
}

// ---------------------------------------------------------------------------
// Structured output

std::optional<json> parse_structured(std::string_view raw, std::string& error) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!raw.empty() && is_space(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);

    if (raw.starts_with("```")) {
        const auto first_nl = raw.find('\n');
        if (first_nl == std::string_view::npos || !raw.ends_with("```") || raw.size() < first_nl + 4) {
            error = "unterminated code fence";
            return std::nullopt;
        }
        raw = raw.substr(first_nl + 1, raw.size() - first_nl - 4);
    }

    json doc = json::parse(raw, nullptr, false);
    if (doc.is_discarded()) {
        error = "reply is not a single JSON document";
        return std::nullopt;
    }
    if (!doc.is_object()) {
        error = "reply must be a JSON object";
        return std::nullopt;
    }
    return doc;
}

namespace {

std::string require(const json& doc, std::string_view key, json::value_t type, std::string_view where) {
    auto it = doc.find(key);
    if (it == doc.end()) return std::string(where) + ": missing \"" + std::string(key) + "\"";
    const bool ok = type == json::value_t::number_float ? it->is_number()
                    : type == json::value_t::number_integer ? it->is_number_integer()
                                                            : it->type() == type;
    if (!ok) return std::string(where) + ": \"" + std::string(key) + "\" has the wrong type";
    return {};
}

std::string check_severity(const json& item, std::string_view where) {
    if (auto e = require(item, "severity", json::value_t::number_float, where); !e.empty()) return e;
    const double s = item["severity"].get<double>();
    if (!(s >= 0.0 && s <= 10.0)) return std::string(where) + ": severity " + item["severity"].dump() + " outside [0, 10]";
    return {};
}

std::string check_findings(const json& doc, HallucinationKind kind) {
    if (auto e = require(doc, "findings", json::value_t::array, "reply"); !e.empty()) return e;
    for (std::size_t i = 0; i < doc["findings"].size(); ++i) {
        const auto& f = doc["findings"][i];
        const std::string where = "findings[" + std::to_string(i) + "]";
        if (!f.is_object()) return where + ": not an object";
        if (auto e = require(f, "code", json::value_t::string, where); !e.empty()) return e;
        const auto code = parse_code(f["code"].get<std::string>());
        if (!code) return where + ": unknown category code " + f["code"].dump();
        if (kind_of(*code) != kind) {
            return where + ": code " + f["code"].get<std::string>() + " is not a " + std::string(to_string(kind)) +
                   " category";
        }
        if (auto e = check_severity(f, where); !e.empty()) return e;
        if (auto e = require(f, "description", json::value_t::string, where); !e.empty()) return e;
        if (kind == HallucinationKind::static_) {
            if (auto e = require(f, "frame_index", json::value_t::number_integer, where); !e.empty()) return e;
        } else {
            if (auto e = require(f, "frames", json::value_t::array, where); !e.empty()) return e;
            for (const auto& fr : f["frames"]) {
                if (!fr.is_number_integer()) return where + ": frames must be integers";
            }
        }
    }
    return {};
}

std::string check_relations(const json& doc) {
    if (auto e = require(doc, "temporal_relations", json::value_t::array, "reply"); !e.empty()) return e;
    for (std::size_t i = 0; i < doc["temporal_relations"].size(); ++i) {
        const auto& r = doc["temporal_relations"][i];
        const std::string where = "temporal_relations[" + std::to_string(i) + "]";
        if (!r.is_object()) return where + ": not an object";
        for (const char* key : {"from_frame", "to_frame"}) {
            if (auto e = require(r, key, json::value_t::number_integer, where); !e.empty()) return e;
        }
        for (const char* key : {"subject", "change", "detail"}) {
            if (auto e = require(r, key, json::value_t::string, where); !e.empty()) return e;
        }
        const auto change = r["change"].get<std::string>();
        if (change != "position" && change != "interaction" && change != "attribute") {
            return where + ": change must be position, interaction or attribute";
        }
    }
    return {};
}

std::string check_static_kg(const json& doc) {
    if (auto e = require(doc, "graphs", json::value_t::array, "reply"); !e.empty()) return e;
    for (std::size_t g = 0; g < doc["graphs"].size(); ++g) {
        const auto& graph = doc["graphs"][g];
        const std::string where = "graphs[" + std::to_string(g) + "]";
        if (!graph.is_object()) return where + ": not an object";
        if (auto e = require(graph, "frame_index", json::value_t::number_integer, where); !e.empty()) return e;
        if (auto e = require(graph, "objects", json::value_t::array, where); !e.empty()) return e;
        if (auto e = require(graph, "triples", json::value_t::array, where); !e.empty()) return e;
        for (const auto& o : graph["objects"]) {
            if (!o.is_object()) return where + ": object entries must be objects";
            if (auto e = require(o, "label", json::value_t::string, where + ".objects"); !e.empty()) return e;
            if (o.contains("ref") && !o["ref"].is_string()) return where + ".objects: ref must be a string";
            if (o.contains("attributes")) {
                if (!o["attributes"].is_object()) return where + ".objects: attributes must be an object";
                for (const auto& [k, v] : o["attributes"].items()) {
                    if (!v.is_string()) return where + ".objects: attribute " + k + " must be a string";
                }
            }
        }
        for (const auto& t : graph["triples"]) {
            if (!t.is_object()) return where + ": triple entries must be objects";
            for (const char* key : {"subject", "predicate", "object"}) {
                if (auto e = require(t, key, json::value_t::string, where + ".triples"); !e.empty()) return e;
            }
        }
    }
    return {};
}

}  // namespace

std::string validate_schema(std::string_view schema_id, const json& doc) {
    if (schema_id == "premise.v1") {
        if (auto e = require(doc, "valid", json::value_t::boolean, "reply"); !e.empty()) return e;
        return require(doc, "reason", json::value_t::string, "reply");
    }
    if (schema_id == "consistency.v1") {
        for (const char* key : {"summary", "rationale"}) {
            if (auto e = require(doc, key, json::value_t::string, "reply"); !e.empty()) return e;
        }
        if (auto e = require(doc, "similarity", json::value_t::number_float, "reply"); !e.empty()) return e;
        const double sim = doc["similarity"].get<double>();
        if (!(sim >= 0.0 && sim <= 1.0)) return "reply: similarity " + doc["similarity"].dump() + " outside [0, 1]";
        return check_severity(doc, "reply");
    }
    if (schema_id == "static_kg.v1") return check_static_kg(doc);
    if (schema_id == "static_detect.v1") return check_findings(doc, HallucinationKind::static_);
    if (schema_id == "dynamic_kg.v1") return check_relations(doc);
    if (schema_id == "dynamic_detect.v1") return check_findings(doc, HallucinationKind::dynamic);
    if (schema_id == "group_dynamic.v1") {
        if (auto e = check_relations(doc); !e.empty()) return e;
        return check_findings(doc, HallucinationKind::dynamic);
    }
    return "unknown schema id " + std::string(schema_id);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) throw ContractError("gateway needs a backend");
    if (options_.max_retries < 0) throw ContractError("max_retries must be >= 0");
}

std::vector<GatewayRequest> Gateway::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

GatewayResponse Gateway::complete(const GatewayRequest& request, const Validator& extra) {
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(request);
        if (options_.cache) {
            if (auto it = cache_.find(request.request_hash); it != cache_.end()) {
                ledger_.append({request.request_hash, request.step, 0.0, request.scope});
                GatewayResponse hit = it->second;
                hit.cost_usd = 0.0;
                return hit;
            }
        }
    }

    std::vector<std::string> replies;
    std::string prompt = request.prompt_text;
    std::string last_error;
    const int max_attempts = 1 + options_.max_retries;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        replies.push_back(backend_->send(request, prompt, attempt));
        std::string error;
        auto doc = parse_structured(replies.back(), error);
        if (doc) error = validate_schema(request.schema_id, *doc);
        if (doc && error.empty() && extra) error = extra(*doc);

        if (error.empty()) {
            GatewayResponse resp{replies.back(), std::move(*doc), attempt,
                                 backend_->cost_per_attempt() * attempt};
            backend_->on_complete(request, replies);
            ledger_.append({request.request_hash, request.step, resp.cost_usd, request.scope});
            std::lock_guard lock(mutex_);
            if (options_.cache) cache_.emplace(request.request_hash, resp);
            return resp;
        }
        spdlog::warn("{} [{}] attempt {} rejected: {}", to_string(request.step), request.scope, attempt, error);
        last_error = error;
        prompt = request.prompt_text +
                 "\n\nYour previous reply was rejected: " + error +
                 "\nReply again with exactly one JSON object that satisfies the response format above.";
    }
    backend_->on_complete(request, replies);
    ledger_.append({request.request_hash, request.step, backend_->cost_per_attempt() * max_attempts, request.scope});
    throw GatewayParseError(std::string(to_string(request.step)) + " [" + request.scope + "] request " +
                            request.request_hash + ": no valid reply after " + std::to_string(max_attempts) +
                            " attempts; last error: " + last_error);
}

CostEstimate estimate_cost(double m, double per_call_usd) {
    if (!(m >= 1.0)) throw ContractError("keyframe count must be >= 1");
    if (!(per_call_usd >= 0.0)) throw ContractError("per-call cost must be non-negative");
    CostEstimate est;
    est.calls = std::lround(4.0 * m + 2.0);
    est.cost_usd = static_cast<double>(est.calls) * per_call_usd;
    return est;
}

}  // namespace halluscan
