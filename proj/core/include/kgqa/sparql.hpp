#pragma once

#include "kgqa/eval.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/sexpr.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

namespace sparql {

/// A pattern term: variable, entity/relation id, or integer literal.
struct Term {
    enum class Kind { Var, Iri, Int };
    Kind kind = Kind::Iri;
    std::string text;      // variable name (without '?') or id token
    std::int64_t num = 0;

    static Term var(std::string name) { return {Kind::Var, std::move(name), 0}; }
    static Term iri(std::string id) { return {Kind::Iri, std::move(id), 0}; }
    static Term integer(std::int64_t n) { return {Kind::Int, {}, n}; }

    bool operator==(const Term&) const = default;
};

struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;
    bool operator==(const TriplePattern&) const = default;
};

struct ValuesClause {
    std::string var;
    std::vector<Term> values;
    bool operator==(const ValuesClause&) const = default;
};

struct Block;

struct UnionGroup {
    std::vector<Block> branches;
    bool operator==(const UnionGroup&) const = default;
};

struct MinusGroup {
    std::vector<Block> block; // single element; vector sidesteps incomplete type
    bool operator==(const MinusGroup&) const = default;
};

/// One group graph pattern. Canonical order: VALUES, triples, UNIONs, MINUSes.
struct Block {
    std::vector<ValuesClause> values;
    std::vector<TriplePattern> triples;
    std::vector<UnionGroup> unions;
    std::vector<MinusGroup> minuses;

    bool empty() const {
        return values.empty() && triples.empty() && unions.empty() && minuses.empty();
    }
    bool operator==(const Block&) const = default;
};

/// Sum of COUNT(DISTINCT ?w) terms over the group.
struct AggExpr {
    std::vector<std::string> count_vars;
    bool operator==(const AggExpr&) const = default;
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq };

struct Having {
    AggExpr lhs;
    CmpOp op = CmpOp::Eq;
    std::optional<std::int64_t> rhs_number;
    std::optional<AggExpr> rhs_agg;
    bool operator==(const Having&) const = default;
};

struct Query {
    enum class Form {
        SelectDistinct, // SELECT DISTINCT ?x
        Ask,
        SelectCount,    // SELECT (COUNT(DISTINCT ?x) AS ?c)
        SelectGroup,    // SELECT ?x (agg AS ?c) ... GROUP BY ?x
        SelectExtremum, // argmax/argmin over the group aggregate
    };
    enum class Extremum { Max, Min };

    Form form = Form::SelectDistinct;
    std::string answer_var = "x";
    Block where;
    bool group_by = false;
    std::optional<Having> having;
    std::optional<AggExpr> group_agg; // SelectGroup / SelectExtremum
    std::optional<Extremum> extremum;

    bool operator==(const Query&) const = default;
};

} // namespace sparql

using SparqlQuery = sparql::Query;
using WherePattern = sparql::Block;

/// Converts a fully resolved, well-typed expression to a subset query.
/// Throws SparqlError on unresolved leaves and on shapes outside the subset
/// (pair-set roots, aggregates nested under set operators).
SparqlQuery to_sparql(const SExpr& e);

/// Canonical single-space rendering; the wire and golden format.
std::string render_sparql(const SparqlQuery& q);

/// Accepts exactly the subset render_sparql emits (plus whitespace
/// variation); parse_sparql_subset(render_sparql(q)) == q.
SparqlQuery parse_sparql_subset(const std::string& text);

/// Naive executor for the subset. Results are tagged by query form.
EvalResult execute_sparql(const SparqlQuery& q, const KnowledgeGraph& g);

/// Reconstructs the S-expression core of a WHERE pattern block. The block
/// must use answer variable ?x (one all-constant triple means IS_TRUE) and
/// reduce to one of the twelve core skeletons.
SExpr from_where(const WherePattern& w);

} // namespace kgqa
