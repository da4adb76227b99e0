#include "halluscan/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"
#include "halluscan/pipeline.hpp"

namespace halluscan {

namespace {

std::vector<CategoryCode> parse_codes(const json& arr, HallucinationKind kind, const char* field) {
    if (!arr.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
    std::vector<CategoryCode> out;
    for (const auto& c : arr) {
        if (!c.is_string()) throw std::invalid_argument(std::string(field) + " entries must be strings");
        const auto code = parse_code(c.get<std::string>());
        if (!code || kind_of(*code) != kind) {
            throw std::invalid_argument("unknown " + std::string(field) + " code " + c.get<std::string>());
        }
        out.push_back(*code);
    }
    return out;
}

json codes_json(const std::vector<CategoryCode>& codes) {
    json arr = json::array();
    for (auto c : codes) arr.push_back(std::string(to_string(c)));
    return arr;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

AnnotationRecord record_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("record must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "video_id" && key != "prompt" && key != "pch" && key != "static" && key != "dynamic") {
            throw std::invalid_argument("unexpected field " + key);
        }
    }
    if (!j.contains("video_id") || !j["video_id"].is_string() || j["video_id"].get<std::string>().empty()) {
        throw std::invalid_argument("video_id must be a non-empty string");
    }
    AnnotationRecord r;
    r.video_id = j["video_id"].get<std::string>();
    if (j.contains("prompt")) {
        if (!j["prompt"].is_string()) throw std::invalid_argument("prompt must be a string");
        r.prompt = j["prompt"].get<std::string>();
    }
    if (j.contains("pch")) {
        if (!j["pch"].is_boolean()) throw std::invalid_argument("pch must be a boolean");
        r.pch = j["pch"].get<bool>();
    }
    if (j.contains("static")) r.static_codes = parse_codes(j["static"], HallucinationKind::static_, "static");
    if (j.contains("dynamic")) r.dynamic_codes = parse_codes(j["dynamic"], HallucinationKind::dynamic, "dynamic");
    return r;
}

json to_json(const AnnotationRecord& r) {
    return {{"video_id", r.video_id},
            {"prompt", r.prompt},
            {"pch", r.pch},
            {"static", codes_json(r.static_codes)},
            {"dynamic", codes_json(r.dynamic_codes)}};
}

std::vector<AnnotationRecord> parse_annotations(std::string_view text, const std::string& origin) {
    std::vector<AnnotationRecord> out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        const auto where = origin + ":" + std::to_string(line_no) + ": ";
        auto doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw InputError(where + "malformed JSON");
        AnnotationRecord r;
        try {
            r = record_from_json(doc);
        } catch (const std::invalid_argument& e) {
            throw InputError(where + e.what());
        }
        if (!seen.insert(r.video_id).second) throw InputError(where + "duplicate video_id " + r.video_id);
        out.push_back(std::move(r));
        if (end == text.size()) break;
    }
    return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw InputError("annotation file not found: " + path.string());
    return parse_annotations(read_file(path), path.string());
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) { return load_annotations(path); }

std::string dump_records(const std::vector<AnnotationRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records) {
    DatasetStats s;
    s.video_count = records.size();
    if (records.empty()) return s;
    std::size_t n_static = 0;
    std::size_t n_dynamic = 0;
    for (const auto& r : records) {
        if (r.has_hallucination()) ++s.hallucinated_count;
        n_static += r.static_codes.size();
        n_dynamic += r.dynamic_codes.size();
    }
    const auto n = static_cast<double>(records.size());
    s.mean_static = static_cast<double>(n_static) / n;
    s.mean_dynamic = static_cast<double>(n_dynamic) / n;
    s.mean_total = static_cast<double>(n_static + n_dynamic) / n;
    return s;
}

double Counts::precision() const { return ratio(tp, tp + fp); }
double Counts::recall() const { return ratio(tp, tp + fn); }
double Counts::f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Matching parse_matching(std::string_view text) {
    if (text == "set") return Matching::set;
    if (text == "multiset") return Matching::multiset;
    throw ContractError("unknown matching mode: " + std::string(text));
}

std::string_view to_string(Matching matching) { return matching == Matching::set ? "set" : "multiset"; }

namespace {

std::map<CategoryCode, std::size_t> tally(const std::vector<CategoryCode>& codes, Matching matching) {
    std::map<CategoryCode, std::size_t> out;
    for (auto c : codes) {
        auto& n = out[c];
        n = matching == Matching::set ? 1 : n + 1;
    }
    return out;
}

void count_codes(const std::vector<CategoryCode>& pred, const std::vector<CategoryCode>& ann, Matching matching,
                 std::map<CategoryCode, Counts>& per_category) {
    const auto p = tally(pred, matching);
    const auto a = tally(ann, matching);
    for (auto& [code, counts] : per_category) {
        const auto pi = p.count(code) ? p.at(code) : 0;
        const auto ai = a.count(code) ? a.at(code) : 0;
        const auto hit = std::min(pi, ai);
        counts.tp += hit;
        counts.fp += pi - hit;
        counts.fn += ai - hit;
    }
}

void count_binary(bool pred, bool ann, Counts& c) {
    if (pred && ann) ++c.tp;
    else if (pred) ++c.fp;
    else if (ann) ++c.fn;
}

}  // namespace

MetricsTable evaluate(const std::vector<PredictionRecord>& predictions,
                      const std::vector<AnnotationRecord>& annotations, Matching matching) {
    std::map<std::string, const AnnotationRecord*> ann;
    for (const auto& a : annotations) {
        if (!ann.emplace(a.video_id, &a).second) throw ContractError("duplicate annotation id " + a.video_id);
    }
    std::map<std::string, const PredictionRecord*> pred;
    for (const auto& p : predictions) {
        if (!ann.count(p.video_id)) throw ContractError("prediction for unknown video " + p.video_id);
        if (!pred.emplace(p.video_id, &p).second) throw ContractError("duplicate prediction id " + p.video_id);
    }

    MetricsTable t;
    t.matching = matching;
    for (auto c : kStaticCodes) t.per_category[c] = {};
    for (auto c : kDynamicCodes) t.per_category[c] = {};

    const PredictionRecord empty;
    for (const auto& [id, a] : ann) {
        const auto* p = pred.count(id) ? pred.at(id) : &empty;
        count_codes(p->static_codes, a->static_codes, matching, t.per_category);
        count_codes(p->dynamic_codes, a->dynamic_codes, matching, t.per_category);
        count_binary(p->pch, a->pch, t.pch);
        count_binary(!p->static_codes.empty(), !a->static_codes.empty(), t.sh_binary);
        count_binary(!p->dynamic_codes.empty(), !a->dynamic_codes.empty(), t.dh_binary);
        count_binary(p->has_hallucination(), a->has_hallucination(), t.oh);
    }
    for (const auto& [code, counts] : t.per_category) {
        (kind_of(code) == HallucinationKind::static_ ? t.sh_multiple : t.dh_multiple) += counts;
    }
    return t;
}

namespace {

json counts_json(const Counts& c) {
    return {{"tp", c.tp},
            {"fp", c.fp},
            {"fn", c.fn},
            {"precision", c.precision()},
            {"recall", c.recall()},
            {"f1", c.f1()}};
}

}  // namespace

json to_json(const MetricsTable& t) {
    json cats = json::object();
    for (const auto& [code, c] : t.per_category) cats[std::string(to_string(code))] = counts_json(c);
    return {{"label", t.label},
            {"matching", to_string(t.matching)},
            {"averaging", "micro"},
            {"categories", cats},
            {"sh_multiple", counts_json(t.sh_multiple)},
            {"dh_multiple", counts_json(t.dh_multiple)},
            {"binary",
             {{"pch", counts_json(t.pch)},
              {"sh_binary", counts_json(t.sh_binary)},
              {"dh_binary", counts_json(t.dh_binary)},
              {"oh", counts_json(t.oh)}}},
            {"quality_scores", t.quality_scores},
            {"failures", t.failures}};
}

std::string render_table(const MetricsTable& t) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "run: " << t.label << " (matching " << to_string(t.matching) << ", micro-averaged)\n";
    os << std::left << std::setw(14) << "metric" << std::right << std::setw(6) << "TP" << std::setw(6) << "FP"
       << std::setw(6) << "FN" << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10) << "F1" << "\n";
    auto row = [&](std::string_view name, const Counts& c) {
        os << std::left << std::setw(14) << name << std::right << std::setw(6) << c.tp << std::setw(6) << c.fp
           << std::setw(6) << c.fn << std::setw(10) << 100.0 * c.precision() << std::setw(10) << 100.0 * c.recall()
           << std::setw(10) << 100.0 * c.f1() << "\n";
    };
    for (const auto& [code, c] : t.per_category) row(to_string(code), c);
    row("SH-multiple", t.sh_multiple);
    row("DH-multiple", t.dh_multiple);
    row("PCH", t.pch);
    row("SH-binary", t.sh_binary);
    row("DH-binary", t.dh_binary);
    row("OH", t.oh);
    if (!t.quality_scores.empty()) {
        os << "\nvideo quality scores\n";
        for (const auto& [id, s] : t.quality_scores) os << "  " << std::left << std::setw(24) << id << s << "\n";
    }
    if (!t.failures.empty()) {
        os << "\nfailed videos\n";
        for (const auto& [id, msg] : t.failures) os << "  " << id << ": " << msg << "\n";
    }
    return os.str();
}

PredictionRecord prediction_from_report(const QualityReport& report) {
    PredictionRecord p;
    p.video_id = report.video_id;
    p.prompt = report.prompt;
    p.pch = report.consistency_finding.has_value() && !report.consistency_finding->informational;
    for (const auto& f : report.all_findings()) {
        if (f.category.kind == HallucinationKind::static_) p.static_codes.push_back(f.category.code);
        if (f.category.kind == HallucinationKind::dynamic) p.dynamic_codes.push_back(f.category.code);
    }
    std::sort(p.static_codes.begin(), p.static_codes.end());
    std::sort(p.dynamic_codes.begin(), p.dynamic_codes.end());
    return p;
}

std::filesystem::path locate_video(const std::filesystem::path& dataset, const std::string& video_id) {
    const auto videos = dataset / "videos";
    if (std::filesystem::is_directory(videos / video_id)) return videos / video_id;
    if (std::filesystem::is_directory(videos)) {
        std::vector<std::filesystem::path> hits;
        for (const auto& e : std::filesystem::directory_iterator(videos)) {
            if (e.is_regular_file() && e.path().stem() == video_id) hits.push_back(e.path());
        }
        std::sort(hits.begin(), hits.end());
        if (!hits.empty()) return hits.front();
    }
    throw InputError("no video found for " + video_id + " under " + videos.string());
}

BenchmarkRun run_benchmark(const std::filesystem::path& dataset, const PipelineConfig& config,
                           std::shared_ptr<ChatBackend> backend, Matching matching) {
    if (!std::filesystem::is_directory(dataset)) throw InputError("dataset not found: " + dataset.string());
    auto annotations = load_annotations(dataset / "annotations.jsonl");
    std::sort(annotations.begin(), annotations.end(),
              [](const auto& a, const auto& b) { return a.video_id < b.video_id; });

    BenchmarkRun run;
    std::map<std::string, std::string> failures;
    std::map<std::string, double> scores;
    for (const auto& a : annotations) {
        try {
            Gateway gw(backend, GatewayOptions{config.max_retries, true});
            auto det = run_detection(locate_video(dataset, a.video_id), a.prompt, config, gw, a.video_id);
            scores[a.video_id] = det.report.score.value;
            run.predictions.push_back(prediction_from_report(det.report));
            run.reports.push_back(std::move(det.report));
        } catch (const Error& e) {
            if (config.fail_fast) throw;
            spdlog::warn("{}: {}", a.video_id, e.what());
            failures[a.video_id] = e.what();
        }
    }
    run.table = evaluate(run.predictions, annotations, matching);
    run.table.label = std::string(to_string(config.ablation));
    run.table.quality_scores = std::move(scores);
    run.table.failures = std::move(failures);
    return run;
}

}  // namespace halluscan
