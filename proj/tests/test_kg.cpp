#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kgqa/kg.hpp"
#include "testgen.hpp"

using namespace kgqa;

TEST_CASE("duplicate triple lines collapse to one fact") {
    auto g = load_graph_from_text("e1\tr1\te2\ne1\tr1\te2\n");
    CHECK(g.facts().size() == 1);
    CHECK(g.stats().triples_loaded == 1);
    CHECK(g.stats().duplicates_skipped == 1);
}

TEST_CASE("empty file loads an empty graph") {
    auto g = load_graph_from_text("");
    CHECK(g.entity_count() == 0);
    CHECK(g.facts().empty());
}

TEST_CASE("comment lines are skipped") {
    auto g = load_graph_from_text("# header\na\tp\tb\n");
    CHECK(g.facts().size() == 1);
    CHECK(g.stats().comments_skipped == 1);
}

TEST_CASE("forward index built by hand") {
    auto g = load_graph_from_text("a\tp\tb\nb\tp\tc\na\tq\tc\n");
    std::set<EntityId> expect = {EntityId{"b"}};
    CHECK(g.objects_of(EntityId{"a"}, RelationId{"p"}) == expect);
}

TEST_CASE("objects_of over known and unknown ids") {
    auto g = load_graph_from_text("h\tp\tt1\nh\tp\tt2\n");
    CHECK(g.objects_of(EntityId{"h"}, RelationId{"p"}).size() == 2);
    CHECK(g.objects_of(EntityId{"nope"}, RelationId{"p"}).empty());
    CHECK(g.objects_of(EntityId{"t1"}, RelationId{"p"}).empty());
}

TEST_CASE("subjects_of mirrors the forward direction") {
    auto g = load_graph_from_text("a\tp\tb\n");
    std::set<EntityId> expect = {EntityId{"a"}};
    CHECK(g.subjects_of(RelationId{"p"}, EntityId{"b"}) == expect);
    CHECK(g.subjects_of(RelationId{"q"}, EntityId{"b"}).empty());
}

TEST_CASE("has_triple is direction sensitive") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK(g.has_triple(EntityId{"a"}, RelationId{"p"}, EntityId{"b"}));
    CHECK_FALSE(g.has_triple(EntityId{"b"}, RelationId{"p"}, EntityId{"a"}));
}

TEST_CASE("index lookups agree with a full fact scan on random graphs") {
    testgen::Rng rng(7);
    auto g = testgen::random_graph(rng, {30, 4, 90});
    auto ents = g.entities();
    auto rels = g.relations();
    for (int i = 0; i < 1000; ++i) {
        EntityId s = ents[rng.below(ents.size())];
        RelationId p = rels[rng.below(rels.size())];
        EntityId o = ents[rng.below(ents.size())];
        bool scan = false;
        for (const auto& t : g.facts())
            if (t.head == s && t.relation == p && t.tail == o) scan = true;
        CHECK(g.has_triple(s, p, o) == scan);
    }
    // reverse index agrees with scan
    for (const auto& r : rels) {
        for (const auto& e : ents) {
            std::set<EntityId> scan;
            for (const auto& t : g.facts())
                if (t.relation == r && t.tail == e) scan.insert(t.head);
            CHECK(g.subjects_of(r, e) == scan);
        }
    }
}

TEST_CASE("triple membership equivalences hold for every fact") {
    testgen::Rng rng(11);
    auto g = testgen::random_graph(rng, {25, 3, 60});
    for (const auto& t : g.facts()) {
        CHECK(g.objects_of(t.head, t.relation).count(t.tail) == 1);
        CHECK(g.subjects_of(t.relation, t.tail).count(t.head) == 1);
        CHECK(g.has_triple(t.head, t.relation, t.tail));
    }
}

TEST_CASE("all_labels rows = dictionary size + alias count") {
    std::string triples = "a\tp\tb\n";
    std::string labels = "a\tentity\tAlpha\na\tentity\tThe Alpha\nb\tentity\tBeta\n";
    auto g = load_graph_from_text(triples, labels);
    auto rows = g.all_labels(LabelKind::Entity);
    CHECK(rows.size() == 3); // 2 canonical + 1 alias
    CHECK(g.canonical_label(EntityId{"a"}) == "Alpha");

    auto rel_rows = load_graph_from_text("").all_labels(LabelKind::Relation);
    CHECK(rel_rows.empty());
}

TEST_CASE("unlabeled ids fall back to the id token as label") {
    auto g = load_graph_from_text("a\tp\tb\n");
    CHECK(g.canonical_label(EntityId{"a"}) == "a");
    CHECK(g.canonical_label(RelationId{"p"}) == "p");
    CHECK(g.all_labels(LabelKind::Entity).size() == 2);
    CHECK(g.all_labels(LabelKind::Relation).size() == 1);
}

TEST_CASE("malformed triple line reports its line number") {
    CHECK_THROWS_WITH_AS(load_graph_from_text("a\tp\tb\nbad line\n"),
                         doctest::Contains("line 2"), LoadError);
}

TEST_CASE("label for unknown id is an ingestion error") {
    CHECK_THROWS_AS(load_graph_from_text("a\tp\tb\n", "ghost\tentity\tGhost\n"), LoadError);
}

TEST_CASE("a token may not be both entity and relation") {
    CHECK_THROWS_AS(load_graph_from_text("a\tp\tb\np\tq\tc\n"), LoadError);
}

TEST_CASE("loading the same text twice yields equal graphs") {
    std::string triples = "a\tp\tb\nb\tp\tc\nc\tq\ta\n";
    std::string labels = "a\tentity\tAye\np\trelation\tpee\n";
    CHECK(load_graph_from_text(triples, labels) == load_graph_from_text(triples, labels));
}
