#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "halluscan/config.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/report.hpp"
#include "halluscan/taxonomy.hpp"

namespace halluscan {

/// One annotated (or predicted) video. Codes are kept as multisets.
struct AnnotationRecord {
    std::string video_id;
    std::string prompt;
    bool pch = false;
    std::vector<CategoryCode> static_codes;
    std::vector<CategoryCode> dynamic_codes;

    bool has_hallucination() const { return pch || !static_codes.empty() || !dynamic_codes.empty(); }
};

/// Predictions share the annotation shape.
using PredictionRecord = AnnotationRecord;

AnnotationRecord record_from_json(const json& j);
json to_json(const AnnotationRecord& r);

/// One JSON object per line; blank lines are skipped. Throws InputError
/// with the 1-based line number for malformed lines, unknown codes and
/// duplicate ids.
std::vector<AnnotationRecord> parse_annotations(std::string_view text, const std::string& origin = "<input>");
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
std::string dump_records(const std::vector<AnnotationRecord>& records);

struct DatasetStats {
    std::size_t video_count = 0;
    std::size_t hallucinated_count = 0;
    double mean_total = 0.0;
    double mean_static = 0.0;
    double mean_dynamic = 0.0;
};

/// Means are over all videos; the PCH flag is not counted.
DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records);

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    double precision() const;
    double recall() const;
    double f1() const;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const Counts&, const Counts&) = default;
};

enum class Matching { set, multiset };

Matching parse_matching(std::string_view text);
std::string_view to_string(Matching matching);

struct MetricsTable {
    std::string label = "full";
    Matching matching = Matching::set;
    std::map<CategoryCode, Counts> per_category;  // all eighteen codes
    Counts sh_multiple;
    Counts dh_multiple;
    Counts pch;
    Counts sh_binary;
    Counts dh_binary;
    Counts oh;
    std::map<std::string, double> quality_scores;
    std::map<std::string, std::string> failures;
};

/// Micro-averaged comparison. Throws ContractError when a prediction names
/// an unknown video; annotated videos without a prediction count as empty
/// predictions.
MetricsTable evaluate(const std::vector<PredictionRecord>& predictions,
                      const std::vector<AnnotationRecord>& annotations, Matching matching = Matching::set);

json to_json(const MetricsTable& table);
/// Aligned text rendering, metrics scaled to percentages.
std::string render_table(const MetricsTable& table);

/// Category codes of a report's findings.
PredictionRecord prediction_from_report(const QualityReport& report);

struct BenchmarkRun {
    MetricsTable table;
    std::vector<QualityReport> reports;  // sorted by video id, failed videos omitted
    std::vector<PredictionRecord> predictions;
};

/// Dataset layout: `annotations.jsonl` plus `videos/<video_id>` (a frame
/// directory or a container file named `<video_id>.<ext>`).
BenchmarkRun run_benchmark(const std::filesystem::path& dataset, const PipelineConfig& config,
                           std::shared_ptr<ChatBackend> backend, Matching matching = Matching::set);

std::filesystem::path locate_video(const std::filesystem::path& dataset, const std::string& video_id);

}  // namespace halluscan
