#include "kgqa/kg.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kgqa {

namespace {

const std::set<EntityId> kEmptySet;

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

void KnowledgeGraph::add_triple(const EntityId& h, const RelationId& r, const EntityId& t) {
    auto [it, inserted] = facts_.insert(Triple{h, r, t});
    if (!inserted) {
        ++stats_.duplicates_skipped;
        return;
    }
    ++stats_.triples_loaded;
    // Default canonical label is the id token itself until a labels row
    // overrides it.
    entity_labels_.try_emplace(h, Labels{h.value, {}, false});
    entity_labels_.try_emplace(t, Labels{t.value, {}, false});
    relation_labels_.try_emplace(r, Labels{r.value, {}, false});
    forward_[{h, r}].insert(t);
    reverse_[{t, r}].insert(h);
}

void KnowledgeGraph::set_canonical_label(const EntityId& id, const std::string& label) {
    auto& l = entity_labels_.at(id);
    l.canonical = label;
    l.canonical_explicit = true;
}

void KnowledgeGraph::set_canonical_label(const RelationId& id, const std::string& label) {
    auto& l = relation_labels_.at(id);
    l.canonical = label;
    l.canonical_explicit = true;
}

void KnowledgeGraph::add_alias(const EntityId& id, const std::string& label) {
    entity_labels_.at(id).aliases.push_back(label);
}

void KnowledgeGraph::add_alias(const RelationId& id, const std::string& label) {
    relation_labels_.at(id).aliases.push_back(label);
}

const std::set<EntityId>& KnowledgeGraph::objects_of(const EntityId& head,
                                                     const RelationId& r) const {
    auto it = forward_.find({head, r});
    return it == forward_.end() ? kEmptySet : it->second;
}

const std::set<EntityId>& KnowledgeGraph::subjects_of(const RelationId& r,
                                                      const EntityId& tail) const {
    auto it = reverse_.find({tail, r});
    return it == reverse_.end() ? kEmptySet : it->second;
}

bool KnowledgeGraph::has_triple(const EntityId& s, const RelationId& p,
                                const EntityId& o) const {
    return facts_.count(Triple{s, p, o}) > 0;
}

std::vector<std::pair<std::string, std::string>> KnowledgeGraph::all_labels(LabelKind kind) const {
    std::vector<std::pair<std::string, std::string>> rows;
    if (kind == LabelKind::Entity) {
        for (const auto& [id, labels] : entity_labels_) {
            rows.emplace_back(id.value, labels.canonical);
            for (const auto& a : labels.aliases) rows.emplace_back(id.value, a);
        }
    } else {
        for (const auto& [id, labels] : relation_labels_) {
            rows.emplace_back(id.value, labels.canonical);
            for (const auto& a : labels.aliases) rows.emplace_back(id.value, a);
        }
    }
    return rows;
}

std::vector<EntityId> KnowledgeGraph::entities() const {
    std::vector<EntityId> out;
    out.reserve(entity_labels_.size());
    for (const auto& [id, _] : entity_labels_) out.push_back(id);
    return out;
}

std::vector<RelationId> KnowledgeGraph::relations() const {
    std::vector<RelationId> out;
    out.reserve(relation_labels_.size());
    for (const auto& [id, _] : relation_labels_) out.push_back(id);
    return out;
}

const std::string& KnowledgeGraph::canonical_label(const EntityId& id) const {
    static const std::string empty;
    auto it = entity_labels_.find(id);
    return it == entity_labels_.end() ? empty : it->second.canonical;
}

const std::string& KnowledgeGraph::canonical_label(const RelationId& id) const {
    static const std::string empty;
    auto it = relation_labels_.find(id);
    return it == relation_labels_.end() ? empty : it->second.canonical;
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& other) const {
    return facts_ == other.facts_ && entity_labels_ == other.entity_labels_ &&
           relation_labels_ == other.relation_labels_;
}

KnowledgeGraph load_graph_from_text(const std::string& triples_text,
                                    const std::string& labels_text) {
    KnowledgeGraph g;
    std::istringstream in(triples_text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_cr(raw);
        if (line.empty()) continue;
        if (line[0] == '#') {
            ++g.stats().comments_skipped;
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw LoadError("triple line must have exactly 3 non-empty tab-separated fields", lineno);
        // A token names either an entity or a relation, never both.
        if (g.has_relation(RelationId{fields[0]}) || g.has_relation(RelationId{fields[2]}))
            throw LoadError("token '" + fields[0] + "'/'" + fields[2] +
                                "' already used as a relation", lineno);
        if (g.has_entity(EntityId{fields[1]}))
            throw LoadError("token '" + fields[1] + "' already used as an entity", lineno);
        g.add_triple(EntityId{fields[0]}, RelationId{fields[1]}, EntityId{fields[2]});
    }

    if (!labels_text.empty()) {
        std::istringstream lin(labels_text);
        lineno = 0;
        // Track whether an id has already received its canonical row.
        std::set<std::string> seen;
        while (std::getline(lin, raw)) {
            ++lineno;
            std::string line = strip_cr(raw);
            if (line.empty()) continue;
            if (line[0] == '#') continue;
            auto fields = split_tabs(line);
            if (fields.size() != 3)
                throw LoadError("label line must have exactly 3 tab-separated fields", lineno);
            const std::string& id = fields[0];
            const std::string& kind = fields[1];
            const std::string& label = fields[2];
            if (kind == "entity") {
                if (!g.has_entity(EntityId{id}))
                    throw LoadError("label references unknown entity '" + id + "'", lineno);
                if (seen.insert("e/" + id).second)
                    g.set_canonical_label(EntityId{id}, label);
                else
                    g.add_alias(EntityId{id}, label);
            } else if (kind == "relation") {
                if (!g.has_relation(RelationId{id}))
                    throw LoadError("label references unknown relation '" + id + "'", lineno);
                if (seen.insert("r/" + id).second)
                    g.set_canonical_label(RelationId{id}, label);
                else
                    g.add_alias(RelationId{id}, label);
            } else {
                throw LoadError("label kind must be 'entity' or 'relation', got '" + kind + "'",
                                lineno);
            }
            ++g.stats().labels_loaded;
        }
    }
    return g;
}

KnowledgeGraph load_graph(const std::string& triples_path, const std::string& labels_path) {
    std::ifstream tf(triples_path);
    if (!tf) throw Error("cannot open triples file: " + triples_path);
    std::stringstream tbuf;
    tbuf << tf.rdbuf();

    std::string labels_text;
    if (!labels_path.empty()) {
        std::ifstream lf(labels_path);
        if (!lf) throw Error("cannot open labels file: " + labels_path);
        std::stringstream lbuf;
        lbuf << lf.rdbuf();
        labels_text = lbuf.str();
    }
    return load_graph_from_text(tbuf.str(), labels_text);
}

} // namespace kgqa
