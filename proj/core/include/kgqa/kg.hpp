#pragma once

#include "kgqa/errors.hpp"
#include "kgqa/ids.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kgqa {

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    auto operator<=>(const Triple&) const = default;
};

enum class LabelKind { Entity, Relation };

struct LoadStats {
    std::size_t triples_loaded = 0;   // distinct facts kept
    std::size_t duplicates_skipped = 0;
    std::size_t comments_skipped = 0;
    std::size_t labels_loaded = 0;
};

/// In-memory knowledge graph: fact set, forward/reverse join indexes and
/// the label dictionaries that feed entity/relation linking. Immutable
/// once loaded; safe for concurrent reads.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Building (single-threaded ingestion).
    void add_triple(const EntityId& h, const RelationId& r, const EntityId& t);
    void set_canonical_label(const EntityId& id, const std::string& label);
    void set_canonical_label(const RelationId& id, const std::string& label);
    void add_alias(const EntityId& id, const std::string& label);
    void add_alias(const RelationId& id, const std::string& label);

    // Lookups. Unknown ids yield empty sets, never errors: calibrated
    // expressions may legitimately reference pruned candidates.
    const std::set<EntityId>& objects_of(const EntityId& head, const RelationId& r) const;
    const std::set<EntityId>& subjects_of(const RelationId& r, const EntityId& tail) const;
    bool has_triple(const EntityId& s, const RelationId& p, const EntityId& o) const;

    bool has_entity(const EntityId& id) const { return entity_labels_.count(id) > 0; }
    bool has_relation(const RelationId& id) const { return relation_labels_.count(id) > 0; }

    /// One row per canonical label plus one per alias.
    std::vector<std::pair<std::string, std::string>> all_labels(LabelKind kind) const;

    const std::set<Triple>& facts() const { return facts_; }
    std::size_t entity_count() const { return entity_labels_.size(); }
    std::size_t relation_count() const { return relation_labels_.size(); }
    std::vector<EntityId> entities() const;
    std::vector<RelationId> relations() const;

    const std::string& canonical_label(const EntityId& id) const;
    const std::string& canonical_label(const RelationId& id) const;

    const LoadStats& stats() const { return stats_; }
    LoadStats& stats() { return stats_; }

    bool operator==(const KnowledgeGraph& other) const;

private:
    struct Labels {
        std::string canonical;
        std::vector<std::string> aliases;
        bool canonical_explicit = false;
        auto operator<=>(const Labels&) const = default;
    };

    std::set<Triple> facts_;
    std::map<EntityId, Labels> entity_labels_;
    std::map<RelationId, Labels> relation_labels_;
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> forward_;
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> reverse_;
    LoadStats stats_;
};

/// Loads a graph from a tab-separated triples file (`head<TAB>relation<TAB>tail`,
/// `#` comment lines ignored) and an optional labels file
/// (`id<TAB>kind<TAB>label`, kind in {entity, relation}; the first row for an
/// id sets its canonical label, later rows add aliases).
///
/// Throws LoadError with the line number on malformed lines, on label rows
/// whose id never occurs in the triples, and on tokens used as both entity
/// and relation.
KnowledgeGraph load_graph(const std::string& triples_path,
                          const std::string& labels_path = "");

/// Same as load_graph but over in-memory text; path-based loading wraps this.
KnowledgeGraph load_graph_from_text(const std::string& triples_text,
                                    const std::string& labels_text = "");

} // namespace kgqa
