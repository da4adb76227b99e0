#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace halluscan {

using json = nlohmann::json;

/// Pipeline stages that talk to the multimodal model.
enum class Step {
    summary_and_consistency,
    static_kg,
    static_detect,
    cluster_dynamic,
    global_dynamic,
    premise_check,
};

std::string_view to_string(Step step);
Step parse_step(std::string_view text);
bool is_vision_step(Step step);

struct ImageRef {
    std::filesystem::path path;
    std::string digest;  // sha256 of the file bytes

    static ImageRef from_file(const std::filesystem::path& path);
};

/// request_hash covers step, prompt text and image digests; `scope` is a
/// human label ("cluster:2", "group") that is not hashed.
struct GatewayRequest {
    Step step = Step::premise_check;
    std::string prompt_text;
    std::vector<ImageRef> images;
    std::string schema_id;
    std::string request_hash;
    std::string scope;

    static GatewayRequest make(Step step, std::string prompt_text, std::vector<ImageRef> images,
                               std::string schema_id, std::string scope = {});
};

std::string compute_request_hash(Step step, std::string_view prompt_text, const std::vector<ImageRef>& images);

struct GatewayResponse {
    std::string raw_text;
    json parsed;
    int attempts = 0;
    double cost_usd = 0.0;
};

struct LedgerEntry {
    std::string request_hash;
    Step step = Step::premise_check;
    double cost_usd = 0.0;
    std::string scope;
};

/// Append-only, thread-safe call log.
class CallLedger {
public:
    void append(LedgerEntry entry);

    std::vector<LedgerEntry> entries() const;
    std::size_t total_calls() const;
    double total_cost_usd() const;
    std::map<std::string, std::size_t> calls_by_step() const;

private:
    mutable std::mutex mutex_;
    std::vector<LedgerEntry> entries_;
};

/// One transport attempt. `prompt_text` differs from the request's text on
/// repair attempts; `attempt` is 1-based.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual std::string send(const GatewayRequest& request, const std::string& prompt_text, int attempt) = 0;
    virtual double cost_per_attempt() const { return 0.0; }
    /// Called once per logical request with every raw reply, in order.
    virtual void on_complete(const GatewayRequest& request, const std::vector<std::string>& raw_replies) {
        (void)request;
        (void)raw_replies;
    }
};

/// Fixture directory: `<request_hash>.response.json` per request plus `manifest.json`.
class FixtureStore {
public:
    struct Fixture {
        std::string request_hash;
        Step step = Step::premise_check;
        std::string scope;
        std::vector<std::string> responses;
    };

    explicit FixtureStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path path_for(std::string_view request_hash) const;
    std::optional<Fixture> load(std::string_view request_hash) const;
    void save(const Fixture& fixture);

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
};

class ReplayBackend final : public ChatBackend {
public:
    explicit ReplayBackend(std::filesystem::path fixture_dir);

    std::string send(const GatewayRequest& request, const std::string& prompt_text, int attempt) override;

private:
    FixtureStore store_;
};

struct LiveOptions {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    std::string api_key;  // read from HALLUSCAN_API_KEY when empty
    double timeout_s = 120.0;
    int transport_retries = 3;
    double backoff_base_s = 1.0;
    double backoff_factor = 2.0;
    int max_image_edge = 768;
    double per_call_usd = 0.08;
};

inline constexpr const char* kApiKeyEnv = "HALLUSCAN_API_KEY";

/// Chat-completions over HTTP(S). Throws GatewayConfigError on construction
/// when no API key is available.
class LiveBackend final : public ChatBackend {
public:
    explicit LiveBackend(LiveOptions options);

    std::string send(const GatewayRequest& request, const std::string& prompt_text, int attempt) override;
    double cost_per_attempt() const override { return options_.per_call_usd; }

    /// Request body as sent on the wire.
    json build_body(const GatewayRequest& request, const std::string& prompt_text) const;

private:
    LiveOptions options_;
};

/// Forwards to an inner backend and persists every request's replies as a fixture.
class RecordBackend final : public ChatBackend {
public:
    RecordBackend(std::shared_ptr<ChatBackend> inner, std::filesystem::path fixture_dir);

    std::string send(const GatewayRequest& request, const std::string& prompt_text, int attempt) override;
    double cost_per_attempt() const override { return inner_->cost_per_attempt(); }
    void on_complete(const GatewayRequest& request, const std::vector<std::string>& raw_replies) override;

private:
    std::shared_ptr<ChatBackend> inner_;
    FixtureStore store_;
};

/// In-process responder; used for tests and for authoring fixtures.
class ScriptedBackend final : public ChatBackend {
public:
    using Responder = std::function<std::string(const GatewayRequest&, const std::string& prompt_text, int attempt)>;

    explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

    std::string send(const GatewayRequest& request, const std::string& prompt_text, int attempt) override {
        return responder_(request, prompt_text, attempt);
    }

private:
    Responder responder_;
};

/// Returns an empty string when the document is acceptable, else the reason.
using Validator = std::function<std::string(const json&)>;

/// Parses a reply that must be exactly one JSON object (a single fenced
/// code block is tolerated). Returns nullopt and sets `error` otherwise.
std::optional<json> parse_structured(std::string_view raw, std::string& error);

/// Structural check for a published schema id.
std::string validate_schema(std::string_view schema_id, const json& doc);

struct GatewayOptions {
    int max_retries = 2;
    bool cache = true;
};

/// Validates replies, retries with a repair prompt, caches by request hash
/// and logs every call.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {});

    GatewayResponse complete(const GatewayRequest& request, const Validator& extra = {});

    const CallLedger& ledger() const noexcept { return ledger_; }
    const GatewayOptions& options() const noexcept { return options_; }

    /// Every request issued, in issue order (cache hits included).
    std::vector<GatewayRequest> requests() const;

private:
    std::shared_ptr<ChatBackend> backend_;
    GatewayOptions options_;
    CallLedger ledger_;
    mutable std::mutex mutex_;
    std::map<std::string, GatewayResponse> cache_;
    std::vector<GatewayRequest> requests_;
};

/// Calls 4m + 2 (rounded for fractional average m) and their cost.
struct CostEstimate {
    long calls = 0;
    double cost_usd = 0.0;
};

CostEstimate estimate_cost(double m, double per_call_usd = 0.08);

}  // namespace halluscan
