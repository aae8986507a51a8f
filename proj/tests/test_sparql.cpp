#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kgqa/sparql.hpp"
#include "testgen.hpp"

using namespace kgqa;

namespace {
SExpr rexpr(const std::string& s) { return mark_resolved(parse(s)); }
} // namespace

TEST_CASE("IS_TRUE maps to ASK over one pattern") {
    auto q = to_sparql(rexpr("(IS_TRUE a p b)"));
    CHECK(q.form == SparqlQuery::Form::Ask);
    CHECK(render_sparql(q) == "ASK { <a> <p> <b> . }");
}

TEST_CASE("ASK with two triples parses to a two-pattern query") {
    auto q = parse_sparql_subset("ASK { <a> <p> <b> . <b> <p> <c> . }");
    CHECK(q.form == SparqlQuery::Form::Ask);
    CHECK(q.where.triples.size() == 2);
}

TEST_CASE("entity set roots render as SELECT DISTINCT") {
    auto q = to_sparql(rexpr("(JOIN father L)"));
    CHECK(render_sparql(q) == "SELECT DISTINCT ?x WHERE { ?x <father> <L> . }");
    auto q2 = to_sparql(rexpr("(JOIN (R father) L)"));
    CHECK(render_sparql(q2) == "SELECT DISTINCT ?x WHERE { <L> <father> ?x . }");
}

TEST_CASE("count roots render the canonical aggregate") {
    auto q = to_sparql(rexpr("(COUNT (JOIN p e))"));
    CHECK(render_sparql(q) == "SELECT (COUNT(DISTINCT ?x) AS ?c) WHERE { ?x <p> <e> . }");
}

TEST_CASE("unresolved leaves are a conversion error") {
    CHECK_THROWS_AS(to_sparql(parse("(JOIN p e)")), SparqlError);
}

TEST_CASE("pair-set roots are outside the subset") {
    CHECK_THROWS_AS(to_sparql(rexpr("(R p)")), SparqlError);
}

TEST_CASE("appendix-style sum-compare renders GROUP BY with HAVING >= 840") {
    auto e = rexpr(
        "(COUNT (GE (GROUP_SUM (GROUP_COUNT (AND (JOIN (R narrative_location) (JOIN instance_of "
        "application)) (JOIN instance_of administrative_territorial_entity))) (GROUP_COUNT (AND "
        "(JOIN (R narrative_location) (JOIN instance_of work_of_art)) (JOIN instance_of "
        "administrative_territorial_entity)))) 840))");
    auto q = to_sparql(e);
    std::string text = render_sparql(q);
    CHECK(text.find("GROUP BY ?x") != std::string::npos);
    CHECK(text.find(">= 840") != std::string::npos);
    CHECK(text.find("UNION") != std::string::npos);
    CHECK(parse_sparql_subset(text) == q);
}

TEST_CASE("repaired-EQ property: every EQ comparison renders an equality clause") {
    testgen::Rng rng(31);
    auto g = testgen::random_graph(rng, {20, 4, 60});
    for (int i = 0; i < 200; ++i) {
        SExpr gc = SExpr::call(Func::GroupCount, {testgen::random_core(rng, g, true)});
        SExpr e = SExpr::call(Func::Eq, {gc, SExpr::number_lit(rng.range(0, 5))});
        std::string text = render_sparql(to_sparql(e));
        CHECK(text.find("HAVING ( COUNT(DISTINCT ?w1) = ") != std::string::npos);
    }
}

TEST_CASE("SELECT * is an unsupported-form error") {
    CHECK_THROWS_AS(parse_sparql_subset("SELECT * WHERE { ?x <p> <o> . }"), SparqlError);
}

TEST_CASE("render/parse round trip on generated queries") {
    testgen::Rng rng(77);
    for (int round = 0; round < 30; ++round) {
        auto g = testgen::random_graph(rng, {15 + rng.below(30), 3 + rng.below(4), 40 + rng.below(80)});
        for (int i = 0; i < 40; ++i) {
            SExpr e = testgen::random_expression(rng, g);
            SparqlQuery q = to_sparql(e);
            CAPTURE(print(e));
            CAPTURE(render_sparql(q));
            CHECK(parse_sparql_subset(render_sparql(q)) == q);
        }
    }
}

TEST_CASE("execution parity with the evaluator on random cases") {
    testgen::Rng rng(123);
    for (int round = 0; round < 50; ++round) {
        auto g = testgen::random_graph(
            rng, {10 + rng.below(50), 2 + rng.below(5), 20 + rng.below(130)});
        for (int i = 0; i < 20; ++i) {
            SExpr e = testgen::random_expression(rng, g);
            CAPTURE(print(e));
            CHECK(execute_sparql(to_sparql(e), g) == eval(e, g));
        }
    }
}

TEST_CASE("SELECT DISTINCT over UNION equals branch-set union") {
    testgen::Rng rng(9);
    auto g = testgen::random_graph(rng, {25, 4, 70});
    for (int i = 0; i < 100; ++i) {
        SExpr a = testgen::random_core(rng, g, true);
        SExpr b = testgen::random_core(rng, g, true);
        auto both = execute_sparql(to_sparql(SExpr::call(Func::Or, {a, b})), g);
        auto ra = execute_sparql(to_sparql(a), g).entity_set();
        auto rb = execute_sparql(to_sparql(b), g).entity_set();
        std::set<EntityId> uni = ra;
        uni.insert(rb.begin(), rb.end());
        CHECK(both == EvalResult::entities(uni));
    }
}

TEST_CASE("from_where reconstructs the dialog example core") {
    WherePattern w;
    using sparql::Term;
    w.triples.push_back({Term::var("x"), Term::iri("father"), Term::iri("L")});
    w.triples.push_back({Term::var("x"), Term::iri("instance_of"), Term::iri("common_name")});
    SExpr core = from_where(w);
    CHECK(print(core) == "(AND (JOIN father L) (JOIN instance_of common_name))");
    CHECK(match_core_pattern(core) == 4);
}

TEST_CASE("from_where on a single pattern gives a bare join") {
    WherePattern w;
    using sparql::Term;
    w.triples.push_back({Term::var("x"), Term::iri("p"), Term::iri("o")});
    CHECK(print(from_where(w)) == "(JOIN p o)");
}

TEST_CASE("from_where rejects unsupported shapes with an explicit error") {
    using sparql::Term;
    WherePattern cyclic;
    cyclic.triples.push_back({Term::var("x"), Term::iri("p"), Term::var("y")});
    cyclic.triples.push_back({Term::var("y"), Term::iri("q"), Term::var("y")});
    CHECK_THROWS_WITH_AS(from_where(cyclic), doctest::Contains("unsupported"), SparqlError);

    WherePattern unbound;
    unbound.triples.push_back({Term::var("y"), Term::iri("p"), Term::iri("o")});
    CHECK_THROWS_AS(from_where(unbound), SparqlError);
}

TEST_CASE("from_where inverts to_sparql on all twelve instantiated patterns") {
    testgen::Rng rng(55);
    for (int round = 0; round < 20; ++round) {
        auto g = testgen::random_graph(rng, {20, 4, 60});
        for (const auto& p : core_patterns()) {
            SExpr core = testgen::instantiate_pattern(rng, g, p);
            REQUIRE(match_core_pattern(core) == p.id);
            SparqlQuery q = to_sparql(core);
            CAPTURE(print(core));
            CHECK(from_where(q.where) == core);
        }
    }
}

TEST_CASE("boolean where-blocks reconstruct truth probes") {
    auto q = to_sparql(rexpr("(IS_TRUE a p b)"));
    CHECK(print(from_where(q.where)) == "(IS_TRUE a p b)");
}

TEST_CASE("execute flags never-bound variables") {
    auto q = parse_sparql_subset("SELECT DISTINCT ?x WHERE { <a> <p> <b> . }");
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK_THROWS_AS(execute_sparql(q, g), SparqlError);
}
