#include "testgen.hpp"

namespace kgqa::testgen {

namespace {

SExpr wildcard_leaf(Rng& rng, const KnowledgeGraph& g, bool relation_slot) {
    if (relation_slot) return SExpr::relation(rng.pick(g.relations()).value, true);
    return SExpr::entity(rng.pick(g.entities()).value, true);
}

SExpr instantiate_skeleton(Rng& rng, const KnowledgeGraph& g, const SExpr& skel) {
    if (skel.is_call()) {
        if (skel.func() == Func::Values) {
            std::vector<SExpr> items;
            std::size_t n = 1 + rng.below(3);
            for (std::size_t i = 0; i < n; ++i)
                items.push_back(SExpr::entity(rng.pick(g.entities()).value, true));
            return SExpr::call(Func::Values, std::move(items));
        }
        std::vector<SExpr> args;
        for (const auto& a : skel.args) args.push_back(instantiate_skeleton(rng, g, a));
        return SExpr::call(skel.token, std::move(args));
    }
    return wildcard_leaf(rng, g, skel.kind == SExpr::Kind::Relation);
}

SExpr group_count_of(Rng& rng, const KnowledgeGraph& g) {
    return SExpr::call(Func::GroupCount, {random_core(rng, g, true)});
}

SExpr grouped_expr(Rng& rng, const KnowledgeGraph& g) {
    if (rng.chance(50)) return group_count_of(rng, g);
    return SExpr::call(Func::GroupSum, {group_count_of(rng, g), group_count_of(rng, g)});
}

SExpr set_expr(Rng& rng, const KnowledgeGraph& g, int depth) {
    if (depth <= 0 || rng.chance(45)) {
        switch (rng.below(4)) {
            case 0: return SExpr::entity(rng.pick(g.entities()).value, true);
            case 1: {
                std::vector<SExpr> items;
                std::size_t n = 1 + rng.below(3);
                for (std::size_t i = 0; i < n; ++i)
                    items.push_back(SExpr::entity(rng.pick(g.entities()).value, true));
                return SExpr::call(Func::Values, std::move(items));
            }
            default: return random_core(rng, g, true);
        }
    }
    switch (rng.below(4)) {
        case 0:
            return SExpr::call(Func::Or, {set_expr(rng, g, depth - 1), set_expr(rng, g, depth - 1)});
        case 1:
            return SExpr::call(Func::And,
                               {set_expr(rng, g, depth - 1), set_expr(rng, g, depth - 1)});
        case 2:
            return SExpr::call(Func::Diff,
                               {set_expr(rng, g, depth - 1), set_expr(rng, g, depth - 1)});
        default:
            return SExpr::call(Func::Distinct, {set_expr(rng, g, depth - 1)});
    }
}

SExpr comparison(Rng& rng, const KnowledgeGraph& g) {
    static const std::vector<Func> cmps = {Func::Lt, Func::Le, Func::Gt, Func::Ge, Func::Eq};
    Func cmp = rng.pick(cmps);
    SExpr lhs = grouped_expr(rng, g);
    if (rng.chance(55))
        return SExpr::call(cmp, {std::move(lhs), SExpr::number_lit(rng.range(0, 4))});
    if (rng.chance(50))
        return SExpr::call(cmp, {std::move(lhs), random_core(rng, g, true)});
    return SExpr::call(cmp, {std::move(lhs), SExpr::call(Func::Or, {random_core(rng, g, true),
                                                                    random_core(rng, g, true)})});
}

SExpr truth_probe(Rng& rng, const KnowledgeGraph& g) {
    auto one = [&rng, &g]() {
        // Half the probes are real facts so ASK answers vary.
        if (!g.facts().empty() && rng.chance(50)) {
            auto it = g.facts().begin();
            std::advance(it, rng.below(g.facts().size()));
            return SExpr::call(Func::IsTrue, {SExpr::entity(it->head.value, true),
                                              SExpr::relation(it->relation.value, true),
                                              SExpr::entity(it->tail.value, true)});
        }
        return SExpr::call(Func::IsTrue,
                           {SExpr::entity(rng.pick(g.entities()).value, true),
                            SExpr::relation(rng.pick(g.relations()).value, true),
                            SExpr::entity(rng.pick(g.entities()).value, true)});
    };
    if (rng.chance(50)) return one();
    std::vector<SExpr> probes;
    std::size_t n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) probes.push_back(one());
    return SExpr::call(Func::All, std::move(probes));
}

} // namespace

KnowledgeGraph random_graph(Rng& rng, const GraphSpec& spec) {
    KnowledgeGraph g;
    std::vector<EntityId> ents;
    std::vector<RelationId> rels;
    for (std::size_t i = 0; i < spec.entities; ++i) ents.emplace_back("e" + std::to_string(i));
    for (std::size_t i = 0; i < spec.relations; ++i) rels.emplace_back("r" + std::to_string(i));
    for (std::size_t i = 0; i < spec.facts; ++i) {
        const auto& h = ents[rng.below(ents.size())];
        const auto& r = rels[rng.below(rels.size())];
        const auto& t = ents[rng.below(ents.size())];
        g.add_triple(h, r, t);
    }
    // Make sure every declared entity exists in the graph dictionary: tie
    // stragglers in with a self-descriptive relation.
    for (const auto& e : ents)
        if (!g.has_entity(e)) g.add_triple(e, rels[0], ents[rng.below(ents.size())]);
    return g;
}

SExpr random_core(Rng& rng, const KnowledgeGraph& g, bool entity_set_only) {
    const auto& patterns = core_patterns();
    std::size_t lo = entity_set_only ? 1 : 0; // pattern 1 is the boolean probe
    const CorePattern& p = patterns[lo + rng.below(patterns.size() - lo)];
    return instantiate_skeleton(rng, g, p.skeleton);
}

SExpr instantiate_pattern(Rng& rng, const KnowledgeGraph& g, const CorePattern& pattern) {
    return instantiate_skeleton(rng, g, pattern.skeleton);
}

SExpr random_expression(Rng& rng, const KnowledgeGraph& g) {
    switch (rng.below(10)) {
        case 0: return truth_probe(rng, g);
        case 1: return set_expr(rng, g, 2);
        case 2: return SExpr::call(Func::Count, {set_expr(rng, g, 2)});
        case 3: return SExpr::call(Func::Count, {grouped_expr(rng, g)});
        case 4: return comparison(rng, g);
        case 5: return SExpr::call(Func::Count, {comparison(rng, g)});
        case 6:
            return SExpr::call(rng.chance(50) ? Func::ArgMax : Func::ArgMin,
                               {grouped_expr(rng, g)});
        case 7: return grouped_expr(rng, g);
        case 8: return random_core(rng, g, true);
        default: {
            if (rng.chance(30)) {
                std::vector<SExpr> nums;
                std::size_t n = 1 + rng.below(3);
                for (std::size_t i = 0; i < n; ++i)
                    nums.push_back(SExpr::number_lit(rng.range(0, 9)));
                return SExpr::call(Func::Values, std::move(nums));
            }
            return SExpr::call(Func::Distinct, {set_expr(rng, g, 1)});
        }
    }
}

} // namespace kgqa::testgen
