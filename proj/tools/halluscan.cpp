#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "halluscan/bench.hpp"
#include "halluscan/config.hpp"
#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"
#include "halluscan/pipeline.hpp"
#include "halluscan/report.hpp"

using namespace halluscan;

namespace {

// Command-line overrides for config keys, kept as text until the config
// file (if any) has been applied.
struct Overrides {
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::optional<std::string> config_file;
};

json convert(const std::string& key, const std::string& text, const json& like) {
    try {
        if (key == "agg_weights") {
            json arr = json::array();
            std::stringstream ss(text);
            std::string part;
            while (std::getline(ss, part, ',')) arr.push_back(std::stod(part));
            return arr;
        }
        if (like.is_number_integer() || like.is_number_unsigned()) {
            std::size_t used = 0;
            const long v = std::stol(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        }
        if (like.is_number_float()) {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        }
    } catch (const std::exception&) {
        throw ContractError("invalid value for --" + key + ": " + text);
    }
    return text;
}

void add_config_options(CLI::App& cmd, Overrides& o) {
    const auto defaults = to_json(PipelineConfig{});
    cmd.add_option("--config", o.config_file, "JSON config file; flags override its keys");
    for (const auto& [key, value] : defaults.items()) {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        std::string names = "--" + key;
        if (dashed != key) names += ",--" + dashed;
        if (value.is_boolean()) {
            cmd.add_flag_function(
                names, [&o, key = key](std::int64_t n) { o.flags[key] = n > 0; }, "config key " + key);
        } else {
            auto* opt = cmd.add_option_function<std::string>(
                names, [&o, key = key](const std::string& v) { o.values[key] = v; }, "config key " + key);
            opt->type_name(value.is_string() ? "TEXT" : value.is_array() ? "A,B,C" : "NUM");
        }
    }
}

PipelineConfig resolve(const Overrides& o) {
    PipelineConfig config;
    if (o.config_file) {
        if (!std::filesystem::is_regular_file(*o.config_file)) {
            throw InputError("config file not found: " + *o.config_file);
        }
        config = load_config(*o.config_file);
    }
    const auto defaults = to_json(PipelineConfig{});
    json overlay = json::object();
    for (const auto& [key, text] : o.values) overlay[key] = convert(key, text, defaults[key]);
    for (const auto& [key, on] : o.flags) overlay[key] = on;
    apply_config(config, overlay);
    config.validate();
    return config;
}

void setup_logging(int verbosity, bool quiet) {
    auto logger = spdlog::stderr_color_mt("halluscan");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    if (quiet) spdlog::set_level(spdlog::level::err);
    else if (verbosity >= 2) spdlog::set_level(spdlog::level::trace);
    else if (verbosity == 1) spdlog::set_level(spdlog::level::debug);
    else spdlog::set_level(spdlog::level::info);
}

struct DetectArgs {
    std::string source;
    std::string prompt;
    std::string video_id;
    std::string format = "both";
};

RenderFormats formats_of(const std::string& format) {
    if (format == "json") return {true, false};
    if (format == "md") return {false, true};
    if (format == "both") return {true, true};
    throw ContractError("unknown format: " + format);
}

int detect(const DetectArgs& args, PipelineConfig config) {
    if (args.prompt.empty()) throw ContractError("--prompt is required");
    if (!std::filesystem::exists(args.source)) throw InputError("video source not found: " + args.source);
    const auto formats = formats_of(args.format);
    Gateway gw(make_backend(config), GatewayOptions{config.max_retries, true});
    auto run = run_detection(args.source, args.prompt, config, gw, args.video_id);
    for (const auto& path : render(run.report, config.output_dir, formats)) std::cout << path.string() << "\n";
    std::cout << "score " << run.report.score.value << " calls " << run.report.ledger.total_calls << "\n";
    return 0;
}

int bench(const std::string& dataset, const std::string& matching, PipelineConfig config) {
    if (!std::filesystem::is_directory(dataset)) throw InputError("dataset not found: " + dataset);
    auto run = run_benchmark(dataset, config, make_backend(config), parse_matching(matching));
    const auto label = run.table.label;
    const auto out = config.output_dir;
    write_file_atomic(out / ("metrics." + label + ".json"), canonical_dump(to_json(run.table)));
    write_file_atomic(out / ("metrics." + label + ".txt"), render_table(run.table));
    write_file_atomic(out / ("predictions." + label + ".jsonl"), dump_records(run.predictions));
    for (const auto& report : run.reports) render(report, out / ("reports." + label), RenderFormats{true, false});
    std::cout << render_table(run.table);
    return 0;
}

int cost(double m, long videos, const std::string& dataset, double per_call) {
    if (!dataset.empty()) videos = static_cast<long>(load_annotations(std::filesystem::path(dataset) / "annotations.jsonl").size());
    if (videos < 1) throw ContractError("--videos must be >= 1");
    const auto one = estimate_cost(m, per_call);
    std::printf("m %g\nvideos %ld\ncalls %ld\ncost_usd %.2f\n", m, videos, one.calls * videos,
                one.cost_usd * static_cast<double>(videos));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hallucination detection for generated videos"};
    app.require_subcommand(1);
    int verbosity = 0;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbosity, "More logging (repeatable)");
    app.add_flag("-q,--quiet", quiet, "Errors only");

    Overrides detect_o;
    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "Analyse one video and write its report");
    detect_cmd->add_option("source", detect_args.source, "Video file or frame directory")->required();
    detect_cmd->add_option("-p,--prompt", detect_args.prompt, "Generation prompt");
    detect_cmd->add_option("--video-id", detect_args.video_id, "Report id (default: source name)");
    detect_cmd->add_option("--format", detect_args.format, "json, md or both");
    add_config_options(*detect_cmd, detect_o);

    Overrides record_o;
    DetectArgs record_args;
    auto* record_cmd = app.add_subcommand("record", "Run detect against the live model and store fixtures");
    record_cmd->add_option("source", record_args.source, "Video file or frame directory")->required();
    record_cmd->add_option("-p,--prompt", record_args.prompt, "Generation prompt");
    record_cmd->add_option("--video-id", record_args.video_id, "Report id (default: source name)");
    record_cmd->add_option("--format", record_args.format, "json, md or both");
    add_config_options(*record_cmd, record_o);

    Overrides bench_o;
    std::string dataset;
    std::string matching = "set";
    auto* bench_cmd = app.add_subcommand("bench", "Run the detector over an annotated dataset");
    bench_cmd->add_option("dataset", dataset, "Directory with annotations.jsonl and videos/")->required();
    bench_cmd->add_option("--matching", matching, "set or multiset");
    add_config_options(*bench_cmd, bench_o);

    double m = 4.0;
    long videos = 1;
    double per_call = 0.08;
    std::string cost_dataset;
    auto* cost_cmd = app.add_subcommand("cost", "Estimate model calls and spend");
    cost_cmd->add_option("--m", m, "Average keyframes per video");
    cost_cmd->add_option("--videos", videos, "Number of videos");
    cost_cmd->add_option("--dataset", cost_dataset, "Count videos from a dataset's annotations");
    cost_cmd->add_option("--per-call-usd,--per_call_usd", per_call, "Price of one call");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::usage);
    }
    setup_logging(verbosity, quiet);

    try {
        if (*detect_cmd) return detect(detect_args, resolve(detect_o));
        if (*record_cmd) {
            auto config = resolve(record_o);
            config.backend = BackendKind::record;
            config.validate();
            return detect(record_args, config);
        }
        if (*bench_cmd) return bench(dataset, matching, resolve(bench_o));
        if (*cost_cmd) return cost(m, videos, cost_dataset, per_call);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 1;
    }
    return 0;
}
