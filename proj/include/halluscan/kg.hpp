#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "halluscan/frames.hpp"
#include "halluscan/keyframe.hpp"

namespace halluscan {

class Gateway;
using json = nlohmann::json;

struct Entity {
    std::string id;     // unique within its graph
    std::string label;  // normalized noun phrase
    std::map<std::string, std::string> attributes;

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Triple {
    std::string subject;  // entity id
    std::string predicate;
    std::string object;  // entity id
    int frame_index = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct StaticKG {
    int frame_index = 0;
    std::vector<Entity> entities;
    std::vector<Triple> triples;

    const Entity* find(std::string_view id) const;
    bool empty() const noexcept { return entities.empty() && triples.empty(); }

    friend bool operator==(const StaticKG&, const StaticKG&) = default;
};

struct TemporalRelation {
    int from_frame = 0;
    int to_frame = 0;
    std::string subject;  // tracked-object id
    std::string change;   // position | interaction | attribute
    std::string detail;

    friend bool operator==(const TemporalRelation&, const TemporalRelation&) = default;
};

struct TrackedObject {
    Entity entity;
    std::vector<int> frames;  // presence, ascending

    friend bool operator==(const TrackedObject&, const TrackedObject&) = default;
};

inline constexpr std::string_view kGroupScope = "group";

struct DynamicKG {
    std::string scope;  // "cluster:<id>" or "group"
    std::vector<TrackedObject> tracked_objects;
    std::vector<TemporalRelation> temporal_relations;

    const TrackedObject* find(std::string_view id) const;

    friend bool operator==(const DynamicKG&, const DynamicKG&) = default;
};

std::string cluster_scope(int cluster_id);

/// Lowercase, trimmed, inner whitespace collapsed to one space.
std::string normalize_label(std::string_view label);
/// Lowercase alphanumerics joined by '_' ("Sitting on" -> "sitting_on").
std::string slugify(std::string_view text);
/// Cross-frame identity key: lowercase id, bare slug equivalent to slug#1.
std::string tracking_key(std::string_view entity_id);

/// Builds one graph from a `static_kg.v1` graph entry. Object ids are the
/// label slug, suffixed #1..#k when a label occurs k > 1 times. Triples name
/// objects by `ref` (defaulting to the label). Throws ValidationError on
/// dangling references.
StaticKG static_kg_from_reply(const json& graph);

/// Checks a whole `static_kg.v1` reply against the expected frames; empty
/// string when acceptable.
std::string check_static_kg_reply(const json& doc, std::span<const int> frames);

/// One graph per requested frame, in the order of `frames`.
std::vector<StaticKG> static_kgs_from_reply(const json& doc, std::span<const int> frames);

/// Merges entities across graphs by tracking key, preserving first-seen order.
std::vector<TrackedObject> track_objects(std::span<const StaticKG> graphs);

/// Validates proposed relations against the scope. A relation must connect a
/// consecutive pair of `frames` (or, for the group, of the keyframes) and its
/// subject must be a tracked object present in one of the two frames.
/// Violations are dropped and described in `warnings`. When `tracked` is
/// empty and `adopt_subjects` is set, subjects become the tracked objects.
DynamicKG assemble_dynamic_kg(std::string scope, std::span<const int> frames, std::vector<TrackedObject> tracked,
                              const json& relations, std::vector<std::string>& warnings, bool adopt_subjects = false);

json to_json(const Entity& e);
json to_json(const StaticKG& g);
json to_json(const DynamicKG& g);
StaticKG static_kg_from_json(const json& j);
DynamicKG dynamic_kg_from_json(const json& j);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const json& j);

/// Graph context block placed in prompts.
json triples_context(const StaticKG& g);

/// One gateway call covering every frame in `frames`.
std::vector<StaticKG> build_static_kgs(const FrameSet& fs, std::span<const int> frames, Gateway& gw,
                                       const std::string& scope);
StaticKG build_static_kg(const Frame& frame, Gateway& gw);

/// Tracked objects from the cluster's graphs plus one call proposing
/// relations for each consecutive frame pair.
DynamicKG build_dynamic_kg(const KeyframeCluster& cluster, const FrameSet& fs, std::span<const StaticKG> graphs,
                           Gateway& gw, std::vector<std::string>& warnings);

/// Same over the keyframe group.
DynamicKG build_group_dynamic_kg(const KeyframeSet& keyframes, const FrameSet& fs, std::span<const StaticKG> graphs,
                                 Gateway& gw, std::vector<std::string>& warnings);

}  // namespace halluscan
