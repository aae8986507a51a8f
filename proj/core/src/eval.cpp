#include "kgqa/eval.hpp"

#include <algorithm>
#include <functional>

namespace kgqa {

namespace {

void require_resolved(const SExpr& leaf) {
    if (!leaf.resolved)
        throw EvalError("unresolved surface form '" + leaf.token + "'");
}

std::int64_t compare_apply(Func f, std::int64_t lhs, std::int64_t rhs) {
    switch (f) {
        case Func::Lt: return lhs < rhs;
        case Func::Le: return lhs <= rhs;
        case Func::Gt: return lhs > rhs;
        case Func::Ge: return lhs >= rhs;
        case Func::Eq: return lhs == rhs;
        default: throw EvalError("not a comparison function");
    }
}

using BindingSets = std::map<EntityId, std::set<EntityId>>;

// ---------------------------------------------------------------------------
// Indexed evaluator

class Evaluator {
public:
    explicit Evaluator(const KnowledgeGraph& g) : g_(g) {}

    EvalResult run(const SExpr& e) {
        switch (e.kind) {
            case SExpr::Kind::Entity: {
                require_resolved(e);
                return EvalResult::entities({EntityId{e.token}});
            }
            case SExpr::Kind::Number:
                return EvalResult::integer(e.number);
            case SExpr::Kind::Relation:
                throw EvalError("relation reference cannot be evaluated as a set");
            case SExpr::Kind::Placeholder:
                throw EvalError("placeholder '" + e.token + "' cannot be evaluated");
            case SExpr::Kind::Call:
                break;
        }
        auto f = e.func();
        if (!f) throw EvalError("placeholder head '" + e.token + "' cannot be evaluated");
        switch (*f) {
            case Func::Join:
                return EvalResult::entities(eval_join(e));
            case Func::Reverse: {
                require_resolved(e.args[0]);
                RelationId r{e.args[0].token};
                std::set<EvalResult::Pair> pairs;
                for (const auto& t : g_.facts())
                    if (t.relation == r) pairs.insert({t.tail, t.head});
                return EvalResult::pairs(std::move(pairs));
            }
            case Func::And: {
                std::set<EntityId> acc = set_of(e.args[0]);
                for (std::size_t i = 1; i < e.args.size(); ++i) {
                    std::set<EntityId> next = set_of(e.args[i]);
                    std::set<EntityId> inter;
                    std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(),
                                          std::inserter(inter, inter.begin()));
                    acc = std::move(inter);
                }
                return EvalResult::entities(std::move(acc));
            }
            case Func::Or: {
                std::set<EntityId> acc;
                for (const auto& a : e.args) {
                    auto s = set_of(a);
                    acc.insert(s.begin(), s.end());
                }
                return EvalResult::entities(std::move(acc));
            }
            case Func::Diff: {
                std::set<EntityId> lhs = set_of(e.args[0]);
                std::set<EntityId> rhs = set_of(e.args[1]);
                std::set<EntityId> out;
                std::set_difference(lhs.begin(), lhs.end(), rhs.begin(), rhs.end(),
                                    std::inserter(out, out.begin()));
                return EvalResult::entities(std::move(out));
            }
            case Func::Values: {
                if (e.args[0].kind == SExpr::Kind::Number) {
                    std::set<std::int64_t> vals;
                    for (const auto& a : e.args) vals.insert(a.number);
                    return EvalResult::values(std::move(vals));
                }
                std::set<EntityId> vals;
                for (const auto& a : e.args) {
                    require_resolved(a);
                    vals.insert(EntityId{a.token});
                }
                return EvalResult::entities(std::move(vals));
            }
            case Func::IsTrue: {
                require_resolved(e.args[0]);
                require_resolved(e.args[1]);
                require_resolved(e.args[2]);
                return EvalResult::boolean(g_.has_triple(
                    EntityId{e.args[0].token}, RelationId{e.args[1].token},
                    EntityId{e.args[2].token}));
            }
            case Func::All: {
                bool all = true;
                for (const auto& a : e.args) all = run(a).boolean_value() && all;
                return EvalResult::boolean(all);
            }
            case Func::Count: {
                EvalResult r = run(e.args[0]);
                if (r.is_entities()) return EvalResult::integer((std::int64_t)r.entity_set().size());
                if (r.is_grouped())
                    return EvalResult::integer((std::int64_t)r.grouped_counts().size());
                return EvalResult::integer(
                    (std::int64_t)std::get<std::set<std::int64_t>>(r.value).size());
            }
            case Func::Distinct:
                return run(e.args[0]); // sets are already deduplicated
            case Func::GroupCount:
                return EvalResult::grouped(eval_grouped(e.args[0], g_));
            case Func::GroupSum: {
                GroupedCounts lhs = run(e.args[0]).grouped_counts();
                GroupedCounts rhs = run(e.args[1]).grouped_counts();
                // Union of key domains; a key missing on one side counts 0 there.
                for (const auto& [k, v] : rhs) lhs[k] += v;
                return EvalResult::grouped(std::move(lhs));
            }
            case Func::ArgMax:
            case Func::ArgMin: {
                GroupedCounts gc = run(e.args[0]).grouped_counts();
                std::set<EntityId> out;
                if (gc.empty()) return EvalResult::entities(std::move(out));
                std::int64_t best = gc.begin()->second;
                for (const auto& [k, v] : gc)
                    best = (*f == Func::ArgMax) ? std::max(best, v) : std::min(best, v);
                for (const auto& [k, v] : gc)
                    if (v == best) out.insert(k);
                return EvalResult::entities(std::move(out));
            }
            case Func::Lt:
            case Func::Le:
            case Func::Gt:
            case Func::Ge:
            case Func::Eq: {
                GroupedCounts lhs = run(e.args[0]).grouped_counts();
                std::set<EntityId> out;
                if (e.args[1].kind == SExpr::Kind::Number) {
                    for (const auto& [k, v] : lhs)
                        if (compare_apply(*f, v, e.args[1].number)) out.insert(k);
                    return EvalResult::entities(std::move(out));
                }
                // Entity-set right side: compare keywise against the grouped
                // counts of the right side's own primary joins. Keys must
                // appear on both sides (inner-join domain).
                BindingSets rhs = grouped_bindings(e.args[1]);
                for (const auto& [k, v] : lhs) {
                    auto it = rhs.find(k);
                    if (it == rhs.end()) continue;
                    if (compare_apply(*f, v, (std::int64_t)it->second.size())) out.insert(k);
                }
                return EvalResult::entities(std::move(out));
            }
            default:
                throw EvalError("unhandled function");
        }
    }

    std::set<EntityId> eval_join(const SExpr& e) {
        std::set<EntityId> inner = set_of(e.args[1]);
        std::set<EntityId> out;
        const SExpr& rel_slot = e.args[0];
        if (rel_slot.kind == SExpr::Kind::Relation) {
            require_resolved(rel_slot);
            RelationId r{rel_slot.token};
            for (const auto& o : inner) {
                const auto& subs = g_.subjects_of(r, o);
                out.insert(subs.begin(), subs.end());
            }
        } else {
            require_resolved(rel_slot.args[0]);
            RelationId r{rel_slot.args[0].token};
            for (const auto& s : inner) {
                const auto& objs = g_.objects_of(s, r);
                out.insert(objs.begin(), objs.end());
            }
        }
        return out;
    }

    /// (key, witness-set) bindings for a core or an OR of cores.
    BindingSets grouped_bindings(const SExpr& e) {
        if (e.is_call() && e.func() == Func::Or) {
            BindingSets acc;
            for (const auto& branch : e.args) {
                BindingSets b = grouped_bindings(branch);
                for (auto& [k, ws] : b) acc[k].insert(ws.begin(), ws.end());
            }
            return acc;
        }
        return core_bindings(e);
    }

    BindingSets core_bindings(const SExpr& core) {
        if (!is_core(core))
            throw EvalError("grouped aggregation requires a core argument, got '" +
                            print(core, true) + "'");
        const SExpr* primary = &core;
        std::vector<const SExpr*> constraints;
        if (core.is_call() && core.func() == Func::And) {
            primary = &core.args[0];
            for (std::size_t i = 1; i < core.args.size(); ++i)
                constraints.push_back(&core.args[i]);
        }
        if (!(primary->is_call() && primary->func() == Func::Join))
            throw EvalError("grouped aggregation requires a JOIN primary conjunct");

        std::set<EntityId> witnesses = set_of(primary->args[1]);
        BindingSets bindings;
        const SExpr& rel_slot = primary->args[0];
        if (rel_slot.kind == SExpr::Kind::Relation) {
            require_resolved(rel_slot);
            RelationId r{rel_slot.token};
            for (const auto& w : witnesses)
                for (const auto& k : g_.subjects_of(r, w)) bindings[k].insert(w);
        } else { // (R rel): witnesses are heads, keys are tails
            require_resolved(rel_slot.args[0]);
            RelationId r{rel_slot.args[0].token};
            for (const auto& w : witnesses)
                for (const auto& k : g_.objects_of(w, r)) bindings[k].insert(w);
        }
        for (const SExpr* c : constraints) {
            std::set<EntityId> keep = set_of(*c);
            for (auto it = bindings.begin(); it != bindings.end();)
                it = keep.count(it->first) ? std::next(it) : bindings.erase(it);
        }
        return bindings;
    }

private:
    std::set<EntityId> set_of(const SExpr& e) { return run(e).entity_set(); }

    const KnowledgeGraph& g_;
};

// ---------------------------------------------------------------------------
// Brute-force oracle: no index lookups, only passes over the raw fact list.

class BruteForce {
public:
    explicit BruteForce(const KnowledgeGraph& g) {
        facts_.assign(g.facts().begin(), g.facts().end());
    }

    EvalResult run(const SExpr& e) {
        switch (e.kind) {
            case SExpr::Kind::Entity:
                require_resolved(e);
                return EvalResult::entities({EntityId{e.token}});
            case SExpr::Kind::Number:
                return EvalResult::integer(e.number);
            case SExpr::Kind::Relation:
                throw EvalError("relation reference cannot be evaluated as a set");
            case SExpr::Kind::Placeholder:
                throw EvalError("placeholder cannot be evaluated");
            case SExpr::Kind::Call:
                break;
        }
        Func f = *e.func();
        switch (f) {
            case Func::Join: {
                bool reversed = e.args[0].is_call();
                const SExpr& rel_leaf = reversed ? e.args[0].args[0] : e.args[0];
                require_resolved(rel_leaf);
                RelationId r{rel_leaf.token};
                std::set<EntityId> inner = entity_set(e.args[1]);
                std::set<EntityId> out;
                for (const Triple& t : facts_) {
                    if (t.relation != r) continue;
                    if (!reversed && inner.count(t.tail)) out.insert(t.head);
                    if (reversed && inner.count(t.head)) out.insert(t.tail);
                }
                return EvalResult::entities(std::move(out));
            }
            case Func::Reverse: {
                require_resolved(e.args[0]);
                RelationId r{e.args[0].token};
                std::set<EvalResult::Pair> pairs;
                for (const Triple& t : facts_)
                    if (t.relation == r) pairs.insert({t.tail, t.head});
                return EvalResult::pairs(std::move(pairs));
            }
            case Func::And: {
                std::set<EntityId> acc = entity_set(e.args[0]);
                for (std::size_t i = 1; i < e.args.size(); ++i) {
                    std::set<EntityId> keep = entity_set(e.args[i]);
                    std::set<EntityId> next;
                    for (const auto& x : acc)
                        if (keep.count(x)) next.insert(x);
                    acc = std::move(next);
                }
                return EvalResult::entities(std::move(acc));
            }
            case Func::Or: {
                std::set<EntityId> acc;
                for (const auto& a : e.args)
                    for (const auto& x : entity_set(a)) acc.insert(x);
                return EvalResult::entities(std::move(acc));
            }
            case Func::Diff: {
                std::set<EntityId> keep = entity_set(e.args[0]);
                std::set<EntityId> drop = entity_set(e.args[1]);
                std::set<EntityId> out;
                for (const auto& x : keep)
                    if (!drop.count(x)) out.insert(x);
                return EvalResult::entities(std::move(out));
            }
            case Func::Values: {
                if (e.args[0].kind == SExpr::Kind::Number) {
                    std::set<std::int64_t> vals;
                    for (const auto& a : e.args) vals.insert(a.number);
                    return EvalResult::values(std::move(vals));
                }
                std::set<EntityId> vals;
                for (const auto& a : e.args) {
                    require_resolved(a);
                    vals.insert(EntityId{a.token});
                }
                return EvalResult::entities(std::move(vals));
            }
            case Func::IsTrue: {
                for (const auto& a : e.args) require_resolved(a);
                Triple probe{EntityId{e.args[0].token}, RelationId{e.args[1].token},
                             EntityId{e.args[2].token}};
                bool found = false;
                for (const Triple& t : facts_)
                    if (t == probe) found = true;
                return EvalResult::boolean(found);
            }
            case Func::All: {
                bool all = true;
                for (const auto& a : e.args)
                    if (!run(a).boolean_value()) all = false;
                return EvalResult::boolean(all);
            }
            case Func::Count: {
                EvalResult r = run(e.args[0]);
                if (r.is_entities()) return EvalResult::integer((std::int64_t)r.entity_set().size());
                if (r.is_grouped())
                    return EvalResult::integer((std::int64_t)r.grouped_counts().size());
                return EvalResult::integer(
                    (std::int64_t)std::get<std::set<std::int64_t>>(r.value).size());
            }
            case Func::Distinct:
                return run(e.args[0]);
            case Func::GroupCount: {
                GroupedCounts gc;
                for (const auto& [k, ws] : bindings(e.args[0])) gc[k] = (std::int64_t)ws.size();
                return EvalResult::grouped(std::move(gc));
            }
            case Func::GroupSum: {
                GroupedCounts lhs = run(e.args[0]).grouped_counts();
                GroupedCounts rhs = run(e.args[1]).grouped_counts();
                GroupedCounts out;
                for (const auto& [k, v] : lhs) out[k] += v;
                for (const auto& [k, v] : rhs) out[k] += v;
                return EvalResult::grouped(std::move(out));
            }
            case Func::ArgMax:
            case Func::ArgMin: {
                GroupedCounts gc = run(e.args[0]).grouped_counts();
                std::set<EntityId> out;
                for (const auto& [k, v] : gc) {
                    bool best = true;
                    for (const auto& [k2, v2] : gc)
                        if (f == Func::ArgMax ? v2 > v : v2 < v) best = false;
                    if (best) out.insert(k);
                }
                return EvalResult::entities(std::move(out));
            }
            case Func::Lt:
            case Func::Le:
            case Func::Gt:
            case Func::Ge:
            case Func::Eq: {
                GroupedCounts lhs = run(e.args[0]).grouped_counts();
                std::set<EntityId> out;
                if (e.args[1].kind == SExpr::Kind::Number) {
                    for (const auto& [k, v] : lhs)
                        if (compare_apply(f, v, e.args[1].number)) out.insert(k);
                } else {
                    BindingSets rhs;
                    collect_bindings(e.args[1], rhs);
                    for (const auto& [k, v] : lhs) {
                        auto it = rhs.find(k);
                        if (it != rhs.end() &&
                            compare_apply(f, v, (std::int64_t)it->second.size()))
                            out.insert(k);
                    }
                }
                return EvalResult::entities(std::move(out));
            }
            default:
                throw EvalError("unhandled function");
        }
    }

private:
    std::set<EntityId> entity_set(const SExpr& e) { return run(e).entity_set(); }

    void collect_bindings(const SExpr& e, BindingSets& acc) {
        if (e.is_call() && e.func() == Func::Or) {
            for (const auto& b : e.args) collect_bindings(b, acc);
            return;
        }
        for (const auto& [k, ws] : bindings(e)) acc[k].insert(ws.begin(), ws.end());
    }

    BindingSets bindings(const SExpr& core) {
        if (!is_core(core))
            throw EvalError("grouped aggregation requires a core argument");
        const SExpr* primary = &core;
        std::vector<const SExpr*> constraints;
        if (core.is_call() && core.func() == Func::And) {
            primary = &core.args[0];
            for (std::size_t i = 1; i < core.args.size(); ++i)
                constraints.push_back(&core.args[i]);
        }
        if (!(primary->is_call() && primary->func() == Func::Join))
            throw EvalError("grouped aggregation requires a JOIN primary conjunct");

        bool reversed = primary->args[0].is_call();
        const SExpr& rel_leaf = reversed ? primary->args[0].args[0] : primary->args[0];
        require_resolved(rel_leaf);
        RelationId r{rel_leaf.token};
        std::set<EntityId> witnesses = entity_set(primary->args[1]);

        BindingSets out;
        for (const Triple& t : facts_) {
            if (t.relation != r) continue;
            if (!reversed && witnesses.count(t.tail)) out[t.head].insert(t.tail);
            if (reversed && witnesses.count(t.head)) out[t.tail].insert(t.head);
        }
        for (const SExpr* c : constraints) {
            std::set<EntityId> keep = entity_set(*c);
            BindingSets kept;
            for (const auto& [k, ws] : out)
                if (keep.count(k)) kept[k] = ws;
            out = std::move(kept);
        }
        return out;
    }

    std::vector<Triple> facts_;
};

} // namespace

bool EvalResult::empty() const {
    if (is_entities()) return entity_set().empty();
    if (is_grouped()) return grouped_counts().empty();
    if (std::holds_alternative<std::set<std::int64_t>>(value))
        return std::get<std::set<std::int64_t>>(value).empty();
    if (std::holds_alternative<std::set<Pair>>(value))
        return std::get<std::set<Pair>>(value).empty();
    return false; // booleans and integers always carry an answer
}

std::string render(const EvalResult& r) {
    if (r.is_boolean()) return r.boolean_value() ? "true" : "false";
    if (r.is_integer()) return std::to_string(r.integer_value());
    if (r.is_entities()) {
        std::string out;
        for (const auto& e : r.entity_set()) {
            if (!out.empty()) out += ", ";
            out += e.value;
        }
        return out;
    }
    if (r.is_grouped()) {
        std::string out;
        for (const auto& [k, v] : r.grouped_counts()) {
            if (!out.empty()) out += ", ";
            out += k.value + ":" + std::to_string(v);
        }
        return out;
    }
    if (std::holds_alternative<std::set<std::int64_t>>(r.value)) {
        std::string out;
        for (auto v : std::get<std::set<std::int64_t>>(r.value)) {
            if (!out.empty()) out += ", ";
            out += std::to_string(v);
        }
        return out;
    }
    std::string out;
    for (const auto& [a, b] : std::get<std::set<EvalResult::Pair>>(r.value)) {
        if (!out.empty()) out += ", ";
        out += "(" + a.value + ", " + b.value + ")";
    }
    return out;
}

EvalResult eval(const SExpr& e, const KnowledgeGraph& g) {
    Evaluator ev(g);
    return ev.run(e);
}

GroupedCounts eval_grouped(const SExpr& core, const KnowledgeGraph& g) {
    Evaluator ev(g);
    GroupedCounts gc;
    for (const auto& [k, ws] : ev.core_bindings(core)) gc[k] = (std::int64_t)ws.size();
    return gc;
}

EvalResult brute_force_eval(const SExpr& e, const KnowledgeGraph& g) {
    if (g.entity_count() > 200)
        throw EvalError("brute-force oracle guard: graph has more than 200 entities");
    BruteForce bf(g);
    return bf.run(e);
}

} // namespace kgqa
