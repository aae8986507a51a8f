#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kgqa/eval.hpp"
#include "testgen.hpp"

using namespace kgqa;

namespace {
SExpr rexpr(const std::string& s) { return mark_resolved(parse(s)); }

std::set<EntityId> ids(std::initializer_list<const char*> xs) {
    std::set<EntityId> out;
    for (const char* x : xs) out.insert(EntityId{x});
    return out;
}
} // namespace

TEST_CASE("reverse join finds heads from the tail") {
    auto g = load_graph_from_text("a\tfather\tL\n");
    CHECK(eval(rexpr("(JOIN (R father) a)"), g) == EvalResult::entities(ids({"L"})));
    CHECK(eval(rexpr("(JOIN father L)"), g) == EvalResult::entities(ids({"a"})));
}

TEST_CASE("COUNT collapses duplicate VALUES") {
    auto g = load_graph_from_text("");
    CHECK(eval(rexpr("(COUNT (VALUES e1 e2 e2))"), g) == EvalResult::integer(2));
}

TEST_CASE("ALL is a conjunction") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK(eval(rexpr("(ALL (IS_TRUE a p b) (IS_TRUE b p c))"), g) == EvalResult::boolean(false));
    CHECK(eval(rexpr("(ALL (IS_TRUE a p b))"), g) == EvalResult::boolean(true));
}

TEST_CASE("set algebra basics") {
    auto g = load_graph_from_text("");
    CHECK(eval(rexpr("(AND (VALUES a b c) (VALUES b c d))"), g) ==
          EvalResult::entities(ids({"b", "c"})));
    CHECK(eval(rexpr("(OR (VALUES a) (VALUES b))"), g) == EvalResult::entities(ids({"a", "b"})));
    CHECK(eval(rexpr("(DIFF (VALUES a b) (VALUES b))"), g) == EvalResult::entities(ids({"a"})));
    CHECK(eval(rexpr("(DIFF (VALUES a b) (VALUES a b))"), g) == EvalResult::entities({}));
    CHECK(eval(rexpr("(DISTINCT (VALUES a a b))"), g) == EvalResult::entities(ids({"a", "b"})));
}

TEST_CASE("unresolved leaves are an eval error") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK_THROWS_AS(eval(parse("(JOIN p b)"), g), EvalError);
    CHECK_NOTHROW(eval(rexpr("(JOIN p b)"), g));
}

TEST_CASE("unknown ids evaluate to empty sets, not errors") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK(eval(rexpr("(JOIN p ghost)"), g) == EvalResult::entities({}));
    CHECK(eval(rexpr("(JOIN phantom b)"), g) == EvalResult::entities({}));
}

TEST_CASE("grouped counts on a hand-built six-triple graph") {
    // Territory t hosts three applications; u hosts one; both are territories.
    auto g = load_graph_from_text(
        "w1\tinstance_of\tapplication\n"
        "w2\tinstance_of\tapplication\n"
        "w3\tinstance_of\tapplication\n"
        "w1\tnarrative_location\tt\n"
        "w2\tnarrative_location\tt\n"
        "w3\tnarrative_location\tt\n"
        "w1\tnarrative_location\tu\n"
        "t\tinstance_of\tterritory\n"
        "u\tinstance_of\tterritory\n");
    auto core = rexpr("(AND (JOIN (R narrative_location) (JOIN instance_of application)) "
                      "(JOIN instance_of territory))");
    GroupedCounts gc = eval_grouped(core, g);
    REQUIRE(gc.size() == 2);
    CHECK(gc[EntityId{"t"}] == 3);
    CHECK(gc[EntityId{"u"}] == 1);

    // keys of the grouping are exactly the core's denotation
    auto keys = eval(rexpr("(GROUP_COUNT (AND (JOIN (R narrative_location) (JOIN instance_of "
                           "application)) (JOIN instance_of territory)))"),
                     g)
                    .grouped_counts();
    auto denot = eval(core, g).entity_set();
    std::set<EntityId> key_set;
    for (const auto& [k, v] : keys) key_set.insert(k);
    CHECK(key_set == denot);
}

TEST_CASE("eval_grouped on an empty graph is an empty mapping") {
    auto g = load_graph_from_text("");
    CHECK(eval_grouped(rexpr("(JOIN p (VALUES a b))"), g).empty());
}

TEST_CASE("grouped aggregation rejects non-core and non-JOIN primaries") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK_THROWS_AS(eval_grouped(rexpr("(VALUES a b)"), g), EvalError);
    CHECK_THROWS_AS(eval(rexpr("(GROUP_COUNT (VALUES a b))"), g), EvalError);
}

TEST_CASE("GROUP_SUM takes the union of key domains") {
    auto g = load_graph_from_text(
        "a\tp\tk1\n"
        "b\tp\tk1\n"
        "c\tq\tk2\n");
    auto e = rexpr("(GROUP_SUM (GROUP_COUNT (JOIN (R p) (VALUES a b))) "
                   "(GROUP_COUNT (JOIN (R q) (VALUES c))))");
    GroupedCounts gc = eval(e, g).grouped_counts();
    REQUIRE(gc.size() == 2);
    CHECK(gc[EntityId{"k1"}] == 2);
    CHECK(gc[EntityId{"k2"}] == 1);
}

TEST_CASE("comparison and extremum semantics over grouped counts") {
    auto g = load_graph_from_text(
        "a\tp\tk1\n"
        "b\tp\tk1\n"
        "c\tp\tk2\n");
    auto gc = "(GROUP_COUNT (JOIN (R p) (VALUES a b c)))";
    CHECK(eval(rexpr("(ARGMAX " + std::string(gc) + ")"), g) ==
          EvalResult::entities(ids({"k1"})));
    CHECK(eval(rexpr("(ARGMIN " + std::string(gc) + ")"), g) ==
          EvalResult::entities(ids({"k2"})));
    CHECK(eval(rexpr("(GE " + std::string(gc) + " 2)"), g) == EvalResult::entities(ids({"k1"})));
    CHECK(eval(rexpr("(LT " + std::string(gc) + " 2)"), g) == EvalResult::entities(ids({"k2"})));
    CHECK(eval(rexpr("(EQ " + std::string(gc) + " 1)"), g) == EvalResult::entities(ids({"k2"})));
}

TEST_CASE("appendix-style sum-compare shape evaluates") {
    auto g = load_graph_from_text(
        "w1\tloc\tt\nw2\tloc\tt\nw1\tinstance_of\tapp\nw2\tinstance_of\tart\n"
        "t\tinstance_of\tterr\n");
    auto e = rexpr(
        "(COUNT (GE (GROUP_SUM (GROUP_COUNT (AND (JOIN (R loc) (JOIN instance_of app)) (JOIN "
        "instance_of terr))) (GROUP_COUNT (AND (JOIN (R loc) (JOIN instance_of art)) (JOIN "
        "instance_of terr)))) 2))");
    CHECK(eval(e, g) == EvalResult::integer(1));
}

TEST_CASE("oracle equivalence on random expression/graph pairs") {
    testgen::Rng rng(42);
    for (int round = 0; round < 60; ++round) {
        auto g = testgen::random_graph(
            rng, {10 + rng.below(60), 2 + rng.below(5), 20 + rng.below(150)});
        for (int i = 0; i < 25; ++i) {
            SExpr e = testgen::random_expression(rng, g);
            CAPTURE(print(e));
            CHECK(eval(e, g) == brute_force_eval(e, g));
        }
    }
}

TEST_CASE("monotonicity: adding a fact never shrinks JOIN/OR/VALUES results") {
    testgen::Rng rng(17);
    for (int round = 0; round < 40; ++round) {
        auto g = testgen::random_graph(rng, {15, 3, 30});
        SExpr core = testgen::random_core(rng, g, true);
        // restrict to monotone operators
        if (print(core).find("AND") != std::string::npos) continue;
        auto before = eval(core, g).entity_set();
        auto ents = g.entities();
        auto rels = g.relations();
        g.add_triple(ents[rng.below(ents.size())], rels[rng.below(rels.size())],
                     ents[rng.below(ents.size())]);
        auto after = eval(core, g).entity_set();
        for (const auto& x : before) CHECK(after.count(x) == 1);
    }
}

TEST_CASE("algebraic identities") {
    testgen::Rng rng(23);
    auto g = testgen::random_graph(rng, {25, 4, 70});
    for (int i = 0; i < 200; ++i) {
        SExpr a = testgen::random_core(rng, g, true);
        SExpr b = testgen::random_core(rng, g, true);
        auto and_ab = eval(SExpr::call(Func::And, {a, b}), g);
        auto and_ba = eval(SExpr::call(Func::And, {b, a}), g);
        CHECK(and_ab == and_ba);
        auto or_ab = eval(SExpr::call(Func::Or, {a, b}), g);
        auto or_ba = eval(SExpr::call(Func::Or, {b, a}), g);
        CHECK(or_ab == or_ba);
        CHECK(eval(SExpr::call(Func::Diff, {a, a}), g) == EvalResult::entities({}));

        auto gc = SExpr::call(Func::GroupCount, {a});
        auto keys = eval(gc, g).grouped_counts();
        auto amax = eval(SExpr::call(Func::ArgMax, {gc}), g).entity_set();
        auto amin = eval(SExpr::call(Func::ArgMin, {gc}), g).entity_set();
        for (const auto& k : amax) CHECK(keys.count(k) == 1);
        for (const auto& k : amin) CHECK(keys.count(k) == 1);

        std::int64_t n = rng.range(0, 3);
        auto eq = eval(SExpr::call(Func::Eq, {gc, SExpr::number_lit(n)}), g).entity_set();
        auto ge = eval(SExpr::call(Func::Ge, {gc, SExpr::number_lit(n)}), g).entity_set();
        auto le = eval(SExpr::call(Func::Le, {gc, SExpr::number_lit(n)}), g).entity_set();
        std::set<EntityId> inter;
        std::set_intersection(ge.begin(), ge.end(), le.begin(), le.end(),
                              std::inserter(inter, inter.begin()));
        CHECK(eq == inter);

        auto cd = eval(SExpr::call(Func::Count, {SExpr::call(Func::Distinct, {a})}), g);
        auto c = eval(SExpr::call(Func::Count, {a}), g);
        CHECK(cd == c);
    }
}

TEST_CASE("brute force refuses oversized graphs") {
    testgen::Rng rng(1);
    auto g = testgen::random_graph(rng, {201, 2, 10});
    CHECK_THROWS_AS(brute_force_eval(rexpr("(JOIN r0 e0)"), g), EvalError);
}
