#include <gtest/gtest.h>

#include <random>

#include "halluscan/error.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/kg.hpp"
#include "support/scenario.hpp"
#include "support/tempdir.hpp"

using namespace halluscan;
using halluscan::testing::TempDir;

namespace {

std::shared_ptr<ScriptedBackend> fixed_reply(std::string reply, int* attempts = nullptr) {
    return std::make_shared<ScriptedBackend>([reply = std::move(reply), attempts](const GatewayRequest&, const std::string&, int) {
        if (attempts) ++*attempts;
        return reply;
    });
}

FrameSet small_video(const TempDir& tmp, int frames = 6) {
    halluscan::testing::write_segment_video(tmp.path() / "v", {{200, 40, 40}, {40, 40, 200}}, {frames / 2, frames - frames / 2});
    IngestOptions opts;
    opts.stride = 1;
    return ingest(tmp.path() / "v", opts);
}

StaticKG graph(int frame, std::vector<std::string> ids) {
    StaticKG g;
    g.frame_index = frame;
    for (auto& id : ids) {
        auto label = id.substr(0, id.find('#'));
        g.entities.push_back({id, label, {}});
    }
    return g;
}

}  // namespace

TEST(Labels, Normalize) {
    EXPECT_EQ(normalize_label("  Red   Car "), "red car");
    EXPECT_EQ(normalize_label("Dog"), "dog");
    EXPECT_EQ(normalize_label(""), "");
}

TEST(Labels, Slugify) {
    EXPECT_EQ(slugify("Sitting on"), "sitting_on");
    EXPECT_EQ(slugify("  person--2 "), "person_2");
    EXPECT_EQ(slugify("!!"), "");
}

TEST(Labels, TrackingKeyTreatsBareSlugAsFirstInstance) {
    EXPECT_EQ(tracking_key("dog"), "dog#1");
    EXPECT_EQ(tracking_key("Dog#1"), "dog#1");
    EXPECT_EQ(tracking_key("dog#2"), "dog#2");
}

TEST(StaticKgReply, PersonSittingOnChair) {
    const json reply = json::parse(R"({"frame_index": 3,
        "objects": [{"label": "Person"}, {"label": "chair"}],
        "triples": [{"subject": "Person", "predicate": "sitting on", "object": "chair"}]})");
    const auto g = static_kg_from_reply(reply);
    EXPECT_EQ(g.frame_index, 3);
    ASSERT_EQ(g.entities.size(), 2u);
    EXPECT_EQ(g.entities[0].id, "person");
    EXPECT_EQ(g.entities[0].label, "person");
    ASSERT_EQ(g.triples.size(), 1u);
    EXPECT_EQ(g.triples[0], (Triple{"person", "sitting_on", "chair", 3}));
}

TEST(StaticKgReply, PersonReadingBook) {
    const json reply = json::parse(R"({"frame_index": 0,
        "objects": [{"label": "person", "attributes": {"Coat": "blue"}}, {"label": "book"}],
        "triples": [{"subject": "person", "predicate": "reading", "object": "book"}]})");
    const auto g = static_kg_from_reply(reply);
    EXPECT_EQ(g.triples.at(0), (Triple{"person", "reading", "book", 0}));
    EXPECT_EQ(g.entities[0].attributes.at("coat"), "blue");
}

TEST(StaticKgReply, RepeatedLabelsGetNumericSuffix) {
    const json reply = json::parse(R"({"frame_index": 1,
        "objects": [{"label": "dog", "ref": "a"}, {"label": "Dog", "ref": "b"}, {"label": "cat"}],
        "triples": [{"subject": "a", "predicate": "chases", "object": "b"}]})");
    const auto g = static_kg_from_reply(reply);
    EXPECT_EQ(g.entities[0].id, "dog#1");
    EXPECT_EQ(g.entities[1].id, "dog#2");
    EXPECT_EQ(g.entities[2].id, "cat");
    EXPECT_EQ(g.triples[0].subject, "dog#1");
    EXPECT_EQ(g.triples[0].object, "dog#2");
}

TEST(StaticKgReply, EmptyGraph) {
    const auto g = static_kg_from_reply(json::parse(R"({"frame_index": 2, "objects": [], "triples": []})"));
    EXPECT_TRUE(g.empty());
}

TEST(StaticKgReply, DanglingReferenceRejected) {
    const json reply = json::parse(R"({"frame_index": 1, "objects": [{"label": "dog"}],
        "triples": [{"subject": "dog", "predicate": "bites", "object": "ghost"}]})");
    EXPECT_THROW(static_kg_from_reply(reply), ValidationError);
}

TEST(StaticKgReply, EmptyLabelAndPredicateRejected) {
    EXPECT_THROW(static_kg_from_reply(json::parse(R"({"frame_index": 1, "objects": [{"label": " "}], "triples": []})")),
                 ValidationError);
    EXPECT_THROW(static_kg_from_reply(json::parse(
                     R"({"frame_index": 1, "objects": [{"label": "a"}, {"label": "b"}],
                         "triples": [{"subject": "a", "predicate": "-", "object": "b"}]})")),
                 ValidationError);
}

TEST(StaticKgReply, WholeReplyChecksFrameCoverage) {
    const std::vector<int> frames{4, 5};
    const auto one = [](int f) {
        return json{{"frame_index", f}, {"objects", json::array()}, {"triples", json::array()}};
    };
    EXPECT_EQ(check_static_kg_reply({{"graphs", {one(4), one(5)}}}, frames), "");
    EXPECT_NE(check_static_kg_reply({{"graphs", {one(4)}}}, frames), "");
    EXPECT_NE(check_static_kg_reply({{"graphs", {one(4), one(5), one(5)}}}, frames), "");
    EXPECT_NE(check_static_kg_reply({{"graphs", {one(4), one(9)}}}, frames), "");

    const auto graphs = static_kgs_from_reply({{"graphs", {one(5), one(4)}}}, frames);
    EXPECT_EQ(graphs[0].frame_index, 4);
    EXPECT_EQ(graphs[1].frame_index, 5);
}

TEST(TrackObjects, SameLabelAcrossFramesMerges) {
    const std::vector<StaticKG> graphs{graph(3, {"dog"}), graph(5, {"cat"}), graph(7, {"dog"})};
    const auto tracked = track_objects(graphs);
    ASSERT_EQ(tracked.size(), 2u);
    EXPECT_EQ(tracked[0].entity.id, "dog");
    EXPECT_EQ(tracked[0].frames, (std::vector<int>{3, 7}));
    EXPECT_EQ(tracked[1].frames, (std::vector<int>{5}));
}

TEST(TrackObjects, CaseInsensitive) {
    const std::vector<StaticKG> graphs{graph(0, {"dog"}), graph(1, {"Dog"})};
    const auto tracked = track_objects(graphs);
    ASSERT_EQ(tracked.size(), 1u);
    EXPECT_EQ(tracked[0].frames, (std::vector<int>{0, 1}));
}

TEST(TrackObjects, DistinctInstancesStayDistinct) {
    const std::vector<StaticKG> graphs{graph(0, {"dog#1", "dog#2"}), graph(1, {"dog"})};
    const auto tracked = track_objects(graphs);
    ASSERT_EQ(tracked.size(), 2u);
    EXPECT_EQ(tracked[0].entity.id, "dog#1");
    EXPECT_EQ(tracked[0].frames, (std::vector<int>{0, 1}));
    EXPECT_EQ(tracked[1].frames, (std::vector<int>{0}));
}

TEST(TrackObjects, PropertyNodesAreSubsetOfStaticNodes) {
    std::mt19937 rng(7);
    const std::vector<std::string> pool{"dog", "cat", "dog#1", "dog#2", "tree", "Car"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<StaticKG> graphs;
        std::set<std::string> keys;
        for (int f = 0; f < 5; ++f) {
            std::vector<std::string> ids;
            for (const auto& p : pool) {
                if (rng() % 2) ids.push_back(p);
            }
            // avoid a bare and a suffixed id of the same label within one frame
            if (std::count(ids.begin(), ids.end(), "dog") && std::count(ids.begin(), ids.end(), "dog#1")) ids.erase(ids.begin());
            for (auto& id : ids) keys.insert(tracking_key(id));
            graphs.push_back(graph(f, ids));
        }
        const auto tracked = track_objects(graphs);
        std::set<std::string> seen;
        for (const auto& t : tracked) {
            EXPECT_TRUE(keys.contains(tracking_key(t.entity.id)));
            EXPECT_TRUE(seen.insert(tracking_key(t.entity.id)).second);
            EXPECT_TRUE(std::is_sorted(t.frames.begin(), t.frames.end()));
            for (int f : t.frames) {
                const auto& g = graphs[static_cast<std::size_t>(f)];
                EXPECT_TRUE(std::any_of(g.entities.begin(), g.entities.end(), [&](const Entity& e) {
                    return tracking_key(e.id) == tracking_key(t.entity.id);
                }));
            }
        }
        EXPECT_EQ(seen.size(), keys.size());
    }
}

TEST(AssembleDynamicKg, KeepsValidRelation) {
    const std::vector<StaticKG> graphs{graph(4, {"cup"}), graph(5, {"cup"})};
    const std::vector<int> frames{4, 5};
    std::vector<std::string> warnings;
    const auto kg = assemble_dynamic_kg("cluster:0", frames, track_objects(graphs),
                                        json::parse(R"([{"from_frame": 4, "to_frame": 5, "subject": "cup",
                                                         "change": "position", "detail": "shift"}])"),
                                        warnings);
    EXPECT_TRUE(warnings.empty());
    ASSERT_EQ(kg.temporal_relations.size(), 1u);
    EXPECT_EQ(kg.temporal_relations[0], (TemporalRelation{4, 5, "cup", "position", "shift"}));
}

TEST(AssembleDynamicKg, DropsInvalidRelationsWithWarnings) {
    const std::vector<StaticKG> graphs{graph(1, {"cup"}), graph(2, {"cup", "plate"}), graph(3, {"plate"})};
    const std::vector<int> frames{1, 2, 3};
    std::vector<std::string> warnings;
    const auto kg = assemble_dynamic_kg("cluster:2", frames, track_objects(graphs), json::parse(R"([
        {"from_frame": 1, "to_frame": 2, "subject": "ghost", "change": "position", "detail": ""},
        {"from_frame": 1, "to_frame": 3, "subject": "cup", "change": "position", "detail": ""},
        {"from_frame": 3, "to_frame": 2, "subject": "cup", "change": "position", "detail": ""},
        {"from_frame": 1, "to_frame": 2, "subject": "plate", "change": "attribute", "detail": "kept"},
        {"from_frame": 2, "to_frame": 3, "subject": "Cup", "change": "interaction", "detail": "kept"}])"),
                                        warnings);
    EXPECT_EQ(warnings.size(), 3u);
    ASSERT_EQ(kg.temporal_relations.size(), 2u);
    EXPECT_EQ(kg.temporal_relations[1].subject, "cup");
    for (const auto& w : warnings) EXPECT_EQ(w.rfind("cluster:2: dropped relation", 0), 0u) << w;
}

TEST(AssembleDynamicKg, EntityAbsentFromBothFramesDropped) {
    const std::vector<StaticKG> graphs{graph(1, {"cup"}), graph(2, {}), graph(3, {})};
    const std::vector<int> frames{1, 2, 3};
    std::vector<std::string> warnings;
    const auto kg = assemble_dynamic_kg(
        "cluster:0", frames, track_objects(graphs),
        json::parse(R"([{"from_frame": 2, "to_frame": 3, "subject": "cup", "change": "position", "detail": ""}])"),
        warnings);
    EXPECT_TRUE(kg.temporal_relations.empty());
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("absent"), std::string::npos);
}

TEST(AssembleDynamicKg, AdoptsSubjectsWithoutStaticGraphs) {
    const std::vector<int> frames{0, 1, 2};
    std::vector<std::string> warnings;
    const auto kg = assemble_dynamic_kg(
        "group", frames, {},
        json::parse(R"([{"from_frame": 0, "to_frame": 1, "subject": "Jacket", "change": "attribute", "detail": "blue->red"},
                        {"from_frame": 1, "to_frame": 2, "subject": "jacket", "change": "attribute", "detail": "red->blue"}])"),
        warnings, true);
    EXPECT_TRUE(warnings.empty());
    ASSERT_EQ(kg.tracked_objects.size(), 1u);
    EXPECT_EQ(kg.tracked_objects[0].frames, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(kg.temporal_relations.size(), 2u);
}

TEST(AssembleDynamicKg, PropertyEverySubjectResolves) {
    std::mt19937 rng(11);
    const std::vector<std::string> labels{"cup", "dog", "ghost", "Cup", "dog#2"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<StaticKG> graphs;
        std::vector<int> frames;
        for (int f = 0; f < 4; ++f) {
            frames.push_back(f * 2);
            std::vector<std::string> ids;
            if (rng() % 2) ids.push_back("cup");
            if (rng() % 2) ids.push_back("dog");
            graphs.push_back(graph(f * 2, ids));
        }
        json rels = json::array();
        for (int r = 0; r < 6; ++r) {
            const int a = static_cast<int>(rng() % 8);
            const int b = static_cast<int>(rng() % 8);
            rels.push_back({{"from_frame", a}, {"to_frame", b}, {"subject", labels[rng() % labels.size()]},
                            {"change", "position"}, {"detail", ""}});
        }
        std::vector<std::string> warnings;
        const auto kg = assemble_dynamic_kg("cluster:0", frames, track_objects(graphs), rels, warnings);
        EXPECT_EQ(kg.temporal_relations.size() + warnings.size(), rels.size());
        for (const auto& rel : kg.temporal_relations) {
            EXPECT_LT(rel.from_frame, rel.to_frame);
            const auto* t = kg.find(rel.subject);
            ASSERT_NE(t, nullptr);
        }
    }
}

TEST(KgJson, RoundTripAndCanonicalForm) {
    StaticKG g = graph(2, {"dog", "bench"});
    g.entities[0].attributes = {{"colour", "brown"}, {"age", "young"}};
    g.triples.push_back({"dog", "on", "bench", 2});
    EXPECT_EQ(static_kg_from_json(to_json(g)), g);

    DynamicKG d;
    d.scope = "cluster:1";
    d.tracked_objects = {{{"dog", "dog", {}}, {2, 3}}};
    d.temporal_relations = {{2, 3, "dog", "position", "left"}};
    EXPECT_EQ(dynamic_kg_from_json(to_json(d)), d);

    const auto text = canonical_dump(to_json(g));
    EXPECT_EQ(text.back(), '\n');
    EXPECT_LT(text.find("\"entities\""), text.find("\"frame_index\""));
    EXPECT_LT(text.find("\"age\""), text.find("\"colour\""));
    EXPECT_EQ(text, canonical_dump(json::parse(text)));
}

TEST(BuildStaticKg, OneCallPerBatch) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    Gateway gw(fixed_reply(R"({"graphs": [
        {"frame_index": 1, "objects": [{"label": "person"}, {"label": "chair"}],
         "triples": [{"subject": "person", "predicate": "sitting_on", "object": "chair"}]},
        {"frame_index": 2, "objects": [], "triples": []}]})"));
    const std::vector<int> frames{1, 2};
    const auto graphs = build_static_kgs(fs, frames, gw, "cluster:0");
    ASSERT_EQ(graphs.size(), 2u);
    EXPECT_EQ(graphs[0].triples.at(0).predicate, "sitting_on");
    EXPECT_TRUE(graphs[1].empty());
    EXPECT_EQ(gw.ledger().total_calls(), 1u);
    EXPECT_EQ(gw.requests().at(0).images.size(), 2u);
}

TEST(BuildStaticKg, SingleFrame) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    Gateway gw(fixed_reply(R"({"graphs": [{"frame_index": 3, "objects": [], "triples": []}]})"));
    EXPECT_TRUE(build_static_kg(fs.frames[3], gw).empty());
}

TEST(BuildStaticKg, UnparseableReplyCarriesFrameIndex) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    int attempts = 0;
    Gateway gw(fixed_reply(R"({"graphs": [{"frame_index": 4, "objects": [{"label": "a"}],
        "triples": [{"subject": "a", "predicate": "x", "object": "nobody"}]}]})", &attempts));
    const std::vector<int> frames{4};
    try {
        build_static_kgs(fs, frames, gw, "frame:4");
        FAIL() << "expected KgExtractionError";
    } catch (const KgExtractionError& e) {
        EXPECT_EQ(e.frame_index(), 4);
    }
    EXPECT_EQ(attempts, 3);
}

TEST(BuildDynamicKg, SingleFrameClusterHasNoRelations) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    Gateway gw(fixed_reply(R"({"temporal_relations": []})"));
    KeyframeCluster cluster{0, 2, {}};
    const std::vector<StaticKG> graphs{graph(2, {"cup"})};
    std::vector<std::string> warnings;
    const auto kg = build_dynamic_kg(cluster, fs, graphs, gw, warnings);
    EXPECT_EQ(kg.scope, "cluster:0");
    EXPECT_EQ(kg.tracked_objects.size(), 1u);
    EXPECT_TRUE(kg.temporal_relations.empty());
}

TEST(BuildDynamicKg, ReplayedRelationAndDroppedWarning) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    Gateway gw(fixed_reply(R"({"temporal_relations": [
        {"from_frame": 4, "to_frame": 5, "subject": "cup", "change": "position", "detail": "shift"},
        {"from_frame": 4, "to_frame": 5, "subject": "saucer", "change": "position", "detail": "shift"}]})"));
    KeyframeCluster cluster{1, 4, {5}};
    const std::vector<StaticKG> graphs{graph(4, {"cup"}), graph(5, {"cup"})};
    std::vector<std::string> warnings;
    const auto kg = build_dynamic_kg(cluster, fs, graphs, gw, warnings);
    ASSERT_EQ(kg.temporal_relations.size(), 1u);
    EXPECT_EQ(kg.temporal_relations[0], (TemporalRelation{4, 5, "cup", "position", "shift"}));
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("saucer"), std::string::npos);
}

TEST(BuildDynamicKg, GraphsMustMatchClusterFrames) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    Gateway gw(fixed_reply(R"({"temporal_relations": []})"));
    KeyframeCluster cluster{1, 4, {5}};
    const std::vector<StaticKG> graphs{graph(4, {})};
    std::vector<std::string> warnings;
    EXPECT_THROW(build_dynamic_kg(cluster, fs, graphs, gw, warnings), ContractError);
    EXPECT_EQ(gw.ledger().total_calls(), 0u);
}

TEST(BuildGroupDynamicKg, SharedLabelsAndAttributeChange) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    KeyframeSet keys;
    keys.indices = {1, 4};
    std::vector<std::string> warnings;

    Gateway none(fixed_reply(R"({"temporal_relations": []})"));
    const std::vector<StaticKG> disjoint{graph(1, {"dog"}), graph(4, {"cat"})};
    const auto a = build_group_dynamic_kg(keys, fs, disjoint, none, warnings);
    EXPECT_EQ(a.scope, "group");
    for (const auto& t : a.tracked_objects) EXPECT_EQ(t.frames.size(), 1u);

    Gateway jacket(fixed_reply(R"({"temporal_relations": [
        {"from_frame": 1, "to_frame": 4, "subject": "jacket", "change": "attribute", "detail": "blue->red"}]})"));
    const std::vector<StaticKG> shared{graph(1, {"jacket"}), graph(4, {"jacket"})};
    const auto b = build_group_dynamic_kg(keys, fs, shared, jacket, warnings);
    ASSERT_EQ(b.temporal_relations.size(), 1u);
    EXPECT_EQ(b.temporal_relations[0].change, "attribute");
    EXPECT_TRUE(warnings.empty());
}

TEST(BuildGroupDynamicKg, SingleKeyframe) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    KeyframeSet keys;
    keys.indices = {2};
    Gateway gw(fixed_reply(R"({"temporal_relations": []})"));
    const std::vector<StaticKG> graphs{graph(2, {"dog"})};
    std::vector<std::string> warnings;
    EXPECT_TRUE(build_group_dynamic_kg(keys, fs, graphs, gw, warnings).temporal_relations.empty());
}

TEST(BuildStaticKg, DeterministicSerialization) {
    TempDir tmp;
    const auto fs = small_video(tmp);
    const std::string reply = R"({"graphs": [{"frame_index": 0, "objects": [{"label": "Dog", "attributes": {"b": "1", "a": "2"}}, {"label": "ball"}],
        "triples": [{"subject": "Dog", "predicate": "Chases", "object": "ball"}]}]})";
    const std::vector<int> frames{0};
    Gateway g1(fixed_reply(reply));
    Gateway g2(fixed_reply(reply));
    EXPECT_EQ(canonical_dump(to_json(build_static_kgs(fs, frames, g1, "x").at(0))),
              canonical_dump(to_json(build_static_kgs(fs, frames, g2, "x").at(0))));
}
