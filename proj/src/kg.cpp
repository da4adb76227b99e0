#include "halluscan/kg.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "halluscan/error.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/prompts.hpp"

namespace halluscan {

const Entity* StaticKG::find(std::string_view id) const {
    for (const auto& e : entities) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const TrackedObject* DynamicKG::find(std::string_view id) const {
    for (const auto& t : tracked_objects) {
        if (t.entity.id == id) return &t;
    }
    return nullptr;
}

std::string cluster_scope(int cluster_id) { return "cluster:" + std::to_string(cluster_id); }

std::string normalize_label(std::string_view label) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : label) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::string slugify(std::string_view text) {
    std::string out;
    bool pending = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (pending && !out.empty()) out += '_';
            pending = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending = true;
        }
    }
    return out;
}

std::string tracking_key(std::string_view entity_id) {
    std::string key;
    for (unsigned char c : entity_id) key += static_cast<char>(std::tolower(c));
    if (key.find('#') == std::string::npos) key += "#1";
    return key;
}

StaticKG static_kg_from_reply(const json& graph) {
    StaticKG g;
    g.frame_index = graph.at("frame_index").get<int>();

    const auto& objects = graph.at("objects");
    std::map<std::string, int> label_counts;
    for (const auto& o : objects) {
        const auto slug = slugify(o.at("label").get<std::string>());
        if (slug.empty()) throw ValidationError("frame " + std::to_string(g.frame_index) + ": empty object label");
        ++label_counts[slug];
    }

    std::map<std::string, std::string> ref_to_id;
    std::map<std::string, int> seen;
    for (const auto& o : objects) {
        const auto raw_label = o.at("label").get<std::string>();
        const auto slug = slugify(raw_label);
        Entity e;
        e.label = normalize_label(raw_label);
        e.id = label_counts[slug] > 1 ? slug + "#" + std::to_string(++seen[slug]) : slug;
        if (o.contains("attributes")) {
            for (const auto& [k, v] : o["attributes"].items()) e.attributes[normalize_label(k)] = v.get<std::string>();
        }
        const std::string ref = o.value("ref", raw_label);
        if (!ref_to_id.emplace(ref, e.id).second) {
            throw ValidationError("frame " + std::to_string(g.frame_index) + ": duplicate object ref " + ref);
        }
        g.entities.push_back(std::move(e));
    }

    auto resolve = [&](const std::string& ref) -> std::string {
        if (auto it = ref_to_id.find(ref); it != ref_to_id.end()) return it->second;
        if (g.find(ref) != nullptr) return ref;
        throw ValidationError("frame " + std::to_string(g.frame_index) + ": triple references unknown object " + ref);
    };
    for (const auto& t : graph.at("triples")) {
        Triple triple;
        triple.subject = resolve(t.at("subject").get<std::string>());
        triple.object = resolve(t.at("object").get<std::string>());
        triple.predicate = slugify(t.at("predicate").get<std::string>());
        triple.frame_index = g.frame_index;
        if (triple.predicate.empty()) {
            throw ValidationError("frame " + std::to_string(g.frame_index) + ": empty predicate");
        }
        g.triples.push_back(std::move(triple));
    }
    return g;
}

std::string check_static_kg_reply(const json& doc, std::span<const int> frames) {
    const auto& graphs = doc.at("graphs");
    std::set<int> expected(frames.begin(), frames.end());
    std::set<int> got;
    for (const auto& g : graphs) {
        const int idx = g.at("frame_index").get<int>();
        if (!expected.contains(idx)) return "graph for unexpected frame " + std::to_string(idx);
        if (!got.insert(idx).second) return "duplicate graph for frame " + std::to_string(idx);
        try {
            static_kg_from_reply(g);
        } catch (const ValidationError& e) {
            return e.what();
        }
    }
    for (int f : expected) {
        if (!got.contains(f)) return "missing graph for frame " + std::to_string(f);
    }
    return {};
}

std::vector<StaticKG> static_kgs_from_reply(const json& doc, std::span<const int> frames) {
    if (auto err = check_static_kg_reply(doc, frames); !err.empty()) throw ValidationError(err);
    std::map<int, StaticKG> by_frame;
    for (const auto& g : doc.at("graphs")) {
        auto kg = static_kg_from_reply(g);
        by_frame.emplace(kg.frame_index, std::move(kg));
    }
    std::vector<StaticKG> out;
    for (int f : frames) out.push_back(std::move(by_frame.at(f)));
    return out;
}

std::vector<TrackedObject> track_objects(std::span<const StaticKG> graphs) {
    std::vector<TrackedObject> out;
    std::map<std::string, std::size_t> by_key;
    for (const auto& g : graphs) {
        for (const auto& e : g.entities) {
            const auto key = tracking_key(e.id);
            auto [it, inserted] = by_key.emplace(key, out.size());
            if (inserted) out.push_back({e, {}});
            auto& frames = out[it->second].frames;
            if (frames.empty() || frames.back() != g.frame_index) frames.push_back(g.frame_index);
        }
    }
    for (auto& t : out) {
        std::sort(t.frames.begin(), t.frames.end());
        t.frames.erase(std::unique(t.frames.begin(), t.frames.end()), t.frames.end());
    }
    return out;
}

DynamicKG assemble_dynamic_kg(std::string scope, std::span<const int> frames, std::vector<TrackedObject> tracked,
                              const json& relations, std::vector<std::string>& warnings, bool adopt_subjects) {
    DynamicKG kg;
    kg.scope = std::move(scope);
    kg.tracked_objects = std::move(tracked);
    const bool adopt = adopt_subjects && kg.tracked_objects.empty();

    std::vector<int> order(frames.begin(), frames.end());
    std::sort(order.begin(), order.end());
    std::set<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) pairs.emplace(order[k], order[k + 1]);

    for (const auto& r : relations) {
        TemporalRelation rel{r.at("from_frame").get<int>(), r.at("to_frame").get<int>(),
                             r.at("subject").get<std::string>(), r.at("change").get<std::string>(),
                             r.at("detail").get<std::string>()};
        const std::string label = kg.scope + ": dropped relation " + std::to_string(rel.from_frame) + "->" +
                                  std::to_string(rel.to_frame) + " on '" + rel.subject + "': ";
        if (!pairs.contains({rel.from_frame, rel.to_frame})) {
            warnings.push_back(label + "frames are not a consecutive pair in scope");
            continue;
        }

        const auto hash = rel.subject.find('#');
        const auto key = tracking_key(slugify(rel.subject.substr(0, hash)) +
                                      (hash == std::string::npos ? "" : rel.subject.substr(hash)));
        auto it = std::find_if(kg.tracked_objects.begin(), kg.tracked_objects.end(),
                               [&](const TrackedObject& t) { return tracking_key(t.entity.id) == key; });
        if (adopt) {
            if (it == kg.tracked_objects.end()) {
                const auto slug = slugify(rel.subject);
                if (slug.empty()) {
                    warnings.push_back(label + "empty subject");
                    continue;
                }
                kg.tracked_objects.push_back({Entity{slug, normalize_label(rel.subject), {}}, {}});
                it = kg.tracked_objects.end() - 1;
            }
            for (int f : {rel.from_frame, rel.to_frame}) {
                auto& fr = it->frames;
                if (!std::binary_search(fr.begin(), fr.end(), f)) fr.insert(std::upper_bound(fr.begin(), fr.end(), f), f);
            }
        } else {
            if (it == kg.tracked_objects.end()) {
                warnings.push_back(label + "unknown object");
                continue;
            }
            const auto& fr = it->frames;
            if (!std::binary_search(fr.begin(), fr.end(), rel.from_frame) &&
                !std::binary_search(fr.begin(), fr.end(), rel.to_frame)) {
                warnings.push_back(label + "object absent from both frames");
                continue;
            }
        }
        rel.subject = it->entity.id;
        kg.temporal_relations.push_back(std::move(rel));
    }
    return kg;
}

json to_json(const Entity& e) {
    return {{"id", e.id}, {"label", e.label}, {"attributes", e.attributes}};
}

namespace {

json triple_json(const Triple& t) {
    return {{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}, {"frame_index", t.frame_index}};
}

json relation_json(const TemporalRelation& r) {
    return {{"from_frame", r.from_frame},
            {"to_frame", r.to_frame},
            {"subject", r.subject},
            {"change", r.change},
            {"detail", r.detail}};
}

json tracked_json(const TrackedObject& t) {
    json j = to_json(t.entity);
    j["frames"] = t.frames;
    return j;
}

Entity entity_from_json(const json& j) {
    return {j.at("id").get<std::string>(), j.at("label").get<std::string>(),
            j.at("attributes").get<std::map<std::string, std::string>>()};
}

}  // namespace

json to_json(const StaticKG& g) {
    json entities = json::array();
    for (const auto& e : g.entities) entities.push_back(to_json(e));
    json triples = json::array();
    for (const auto& t : g.triples) triples.push_back(triple_json(t));
    return {{"frame_index", g.frame_index},
            {"entities", entities},
            {"triples", triples},
            {"temporal_relations", json::array()}};
}

json to_json(const DynamicKG& g) {
    json entities = json::array();
    for (const auto& t : g.tracked_objects) entities.push_back(tracked_json(t));
    json relations = json::array();
    for (const auto& r : g.temporal_relations) relations.push_back(relation_json(r));
    return {{"scope", g.scope}, {"entities", entities}, {"triples", json::array()}, {"temporal_relations", relations}};
}

StaticKG static_kg_from_json(const json& j) {
    StaticKG g;
    g.frame_index = j.at("frame_index").get<int>();
    for (const auto& e : j.at("entities")) g.entities.push_back(entity_from_json(e));
    for (const auto& t : j.at("triples")) {
        g.triples.push_back({t.at("subject").get<std::string>(), t.at("predicate").get<std::string>(),
                             t.at("object").get<std::string>(), t.at("frame_index").get<int>()});
    }
    return g;
}

DynamicKG dynamic_kg_from_json(const json& j) {
    DynamicKG g;
    g.scope = j.at("scope").get<std::string>();
    for (const auto& e : j.at("entities")) {
        g.tracked_objects.push_back({entity_from_json(e), e.at("frames").get<std::vector<int>>()});
    }
    for (const auto& r : j.at("temporal_relations")) {
        g.temporal_relations.push_back({r.at("from_frame").get<int>(), r.at("to_frame").get<int>(),
                                        r.at("subject").get<std::string>(), r.at("change").get<std::string>(),
                                        r.at("detail").get<std::string>()});
    }
    return g;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

json triples_context(const StaticKG& g) {
    json objects = json::array();
    for (const auto& e : g.entities) objects.push_back(to_json(e));
    json triples = json::array();
    for (const auto& t : g.triples) {
        triples.push_back({{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}});
    }
    return {{"frame_index", g.frame_index}, {"objects", objects}, {"triples", triples}};
}

namespace {

std::vector<ImageRef> images_for(const FrameSet& fs, std::span<const int> frames) {
    std::vector<ImageRef> out;
    for (int f : frames) out.push_back(ImageRef::from_file(fs.frames.at(static_cast<std::size_t>(f)).image_ref));
    return out;
}

json tracked_context(const std::vector<TrackedObject>& tracked) {
    json out = json::array();
    for (const auto& t : tracked) out.push_back(tracked_json(t));
    return out;
}

DynamicKG dynamic_from_call(Step step, std::string scope, std::vector<int> frames, const FrameSet& fs,
                            std::span<const StaticKG> graphs, Gateway& gw, std::vector<std::string>& warnings) {
    if (!graphs.empty()) {
        if (graphs.size() != frames.size()) throw ContractError(scope + ": graphs do not cover the scope frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (graphs[i].frame_index != frames[i]) throw ContractError(scope + ": graphs out of frame order");
        }
    }
    auto tracked = track_objects(graphs);
    json context = {{"frames", frames}, {"tracked_objects", tracked_context(tracked)}};
    const auto prompt = step == Step::global_dynamic ? prompts::group_dynamic_kg(context) : prompts::cluster_dynamic(context);
    auto request = GatewayRequest::make(step, prompt, images_for(fs, frames), std::string(prompts::kDynamicKgSchema), scope);
    auto reply = gw.complete(request);
    return assemble_dynamic_kg(std::move(scope), frames, std::move(tracked), reply.parsed.at("temporal_relations"),
                               warnings, graphs.empty());
}

}  // namespace

std::vector<StaticKG> build_static_kgs(const FrameSet& fs, std::span<const int> frames, Gateway& gw,
                                       const std::string& scope) {
    if (frames.empty()) throw ContractError("static KG extraction needs at least one frame");
    const std::vector<int> frame_list(frames.begin(), frames.end());
    json context = {{"frames", frame_list}};
    auto request = GatewayRequest::make(Step::static_kg, prompts::static_kg(context), images_for(fs, frames),
                                        std::string(prompts::kStaticKgSchema), scope);
    try {
        auto reply = gw.complete(request, [&](const json& doc) { return check_static_kg_reply(doc, frame_list); });
        return static_kgs_from_reply(reply.parsed, frame_list);
    } catch (const GatewayParseError& e) {
        throw KgExtractionError(frame_list.front(), e.what());
    }
}

StaticKG build_static_kg(const Frame& frame, Gateway& gw) {
    FrameSet single;
    single.frames.resize(static_cast<std::size_t>(frame.index) + 1);
    single.frames.back() = frame;
    const int idx[] = {frame.index};
    return build_static_kgs(single, idx, gw, "frame:" + std::to_string(frame.index)).front();
}

DynamicKG build_dynamic_kg(const KeyframeCluster& cluster, const FrameSet& fs, std::span<const StaticKG> graphs,
                           Gateway& gw, std::vector<std::string>& warnings) {
    return dynamic_from_call(Step::cluster_dynamic, cluster_scope(cluster.cluster_id), cluster.frames(), fs, graphs, gw,
                             warnings);
}

DynamicKG build_group_dynamic_kg(const KeyframeSet& keyframes, const FrameSet& fs, std::span<const StaticKG> graphs,
                                 Gateway& gw, std::vector<std::string>& warnings) {
    return dynamic_from_call(Step::global_dynamic, std::string(kGroupScope), keyframes.indices, fs, graphs, gw,
                             warnings);
}

}  // namespace halluscan
