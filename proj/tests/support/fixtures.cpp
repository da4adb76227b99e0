#include "fixtures.hpp"

namespace halluscan::testing {

std::filesystem::path data_dir() { return HALLUSCAN_TEST_DATA; }

std::vector<Rgb> golden_colors() {
    return {{{200, 40, 40}}, {{40, 180, 60}}, {{50, 60, 210}}, {{20, 20, 90}}, {{230, 220, 60}}};
}

std::vector<int> golden_counts() { return {10, 10, 8, 1, 10}; }

Plan golden_plan() {
    Plan p;
    p.prompt = "A woman in a red coat walks a small dog past a park bench at sunset.";
    p.summary = "A person walks a dog past a bench while the light jumps between day and night.";
    p.similarity = 0.3;
    p.consistency_severity = 1.0;
    p.static_per_cluster = {{"S1", 3.0, false}, {"S4", 2.0, true}};
    p.local_per_cluster = {{"D1", 2.0, false}};
    p.global = {{"D3", 4.0, false}};
    p.flaky_scope = "cluster:1";
    return p;
}

json golden_config_doc() {
    return {{"stride", 1}, {"backend", "replay"}, {"fixtures", "fixtures"}, {"workers", 2}};
}

std::vector<std::string> minibench_ids() { return {"v1", "v2", "v3", "v4", "v5"}; }

std::vector<std::vector<Rgb>> minibench_colors() {
    return {
        {{{220, 30, 30}}, {{30, 30, 220}}},
        {{{30, 200, 30}}, {{200, 200, 30}}},
        {{{120, 120, 120}}, {{240, 240, 240}}},
        {{{200, 100, 20}}, {{20, 100, 200}}},
        {{{150, 30, 150}}, {{30, 150, 150}}},
    };
}

std::vector<Plan> minibench_plans() {
    std::vector<Plan> plans(5);
    plans[0].prompt = "A red kite rises over a blue lake.";
    plans[0].static_per_cluster = {{"S1", 3.0, false, true}};
    plans[0].local_per_cluster = {{"D2", 2.0, false, true}};

    plans[1].prompt = "A green tractor crosses a yellow field.";
    plans[1].similarity = 0.2;
    plans[1].consistency_severity = 6.0;
    plans[1].static_per_cluster = {{"S2", 4.0}};
    plans[1].global = {{"D5", 5.0, false, true}};

    plans[2].prompt = "Grey clouds drift across a pale sky.";

    plans[3].prompt = "An orange ball bounces on a blue court.";
    plans[3].static_per_cluster = {{"S1", 2.0}, {"S6", 3.0, true, true}};
    plans[3].local_per_cluster = {{"D1", 3.0}};

    plans[4].prompt = "A purple lantern sways beside a teal door.";
    plans[4].global = {{"D9", 2.0}};

    for (auto& p : plans) p.summary = "Observed: " + p.prompt;
    return plans;
}

AnnotationRecord make_record(std::string id, bool pch, std::vector<std::string> static_codes,
                             std::vector<std::string> dynamic_codes) {
    AnnotationRecord r;
    r.video_id = std::move(id);
    r.pch = pch;
    for (const auto& c : static_codes) r.static_codes.push_back(*parse_code(c));
    for (const auto& c : dynamic_codes) r.dynamic_codes.push_back(*parse_code(c));
    return r;
}

std::vector<AnnotationRecord> minibench_annotations() {
    std::vector<AnnotationRecord> out = {
        make_record("v1", false, {"S1"}, {"D2"}),
        make_record("v2", true, {"S2", "S3"}, {"D5"}),
        make_record("v3", false, {}, {}),
        make_record("v4", false, {"S6"}, {"D1", "D4"}),
        make_record("v5", false, {}, {}),
    };
    const auto plans = minibench_plans();
    for (std::size_t i = 0; i < out.size(); ++i) out[i].prompt = plans[i].prompt;
    return out;
}

json minibench_config_doc() {
    return {{"stride", 1}, {"m", 2}, {"backend", "replay"}, {"fixtures", "fixtures"}, {"workers", 2}};
}

std::vector<AnnotationRecord> bench50_annotations() {
    std::vector<AnnotationRecord> out;
    int s = 0;
    int d = 0;
    for (int i = 0; i < 50; ++i) {
        AnnotationRecord r;
        char id[16];
        std::snprintf(id, sizeof id, "t2v_%02d", i);
        r.video_id = id;
        r.prompt = "benchmark prompt " + std::to_string(i);
        if (i < 46) {
            const int n_static = i < 8 ? 2 : 1;
            const int n_dynamic = i < 5 ? 3 : 2;
            for (int k = 0; k < n_static; ++k) r.static_codes.push_back(kStaticCodes[static_cast<std::size_t>(s++ % 9)]);
            for (int k = 0; k < n_dynamic; ++k) {
                r.dynamic_codes.push_back(kDynamicCodes[static_cast<std::size_t>(d++ % 9)]);
            }
            r.pch = i % 5 == 0;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<AnnotationRecord> hand3_annotations() {
    return {make_record("A", false, {"S1"}, {}), make_record("B", false, {"S2"}, {}), make_record("C", false, {}, {})};
}

std::vector<PredictionRecord> hand3_predictions() {
    return {make_record("A", false, {"S1", "S2"}, {}), make_record("B", false, {"S2"}, {}),
            make_record("C", false, {}, {})};
}

}  // namespace halluscan::testing
