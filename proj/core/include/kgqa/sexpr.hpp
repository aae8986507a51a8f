#pragma once

#include "kgqa/errors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

/// The closed function set of the query language.
enum class Func {
    Join,
    Reverse, // R
    And,
    Or,
    Values,
    IsTrue,
    Count,
    Distinct,
    GroupCount,
    GroupSum,
    All,
    ArgMax,
    ArgMin,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Diff,
};

std::optional<Func> func_from_name(const std::string& name);
const std::string& func_name(Func f);

/// Result type of a well-typed expression.
enum class ValueType {
    EntitySet,
    ValueSet,
    PairSet,
    GroupedCounts,
    Boolean,
    Integer,
};

const std::string& value_type_name(ValueType t);

/// A node of the S-expression tree.
///
/// `Call` nodes carry the head token in `token`: either a concrete function
/// name (JOIN, AND, ...) or, inside template bodies, a function-valued
/// placeholder (`compare`, `optimize`). Leaf `token`s hold the surface form
/// before linking and the graph id after; `resolved` flips when linking
/// pins the leaf to a graph id. Structural equality ignores `resolved`.
struct SExpr {
    enum class Kind { Call, Entity, Relation, Number, Placeholder };

    Kind kind = Kind::Entity;
    std::string token;
    std::int64_t number = 0;
    std::vector<SExpr> args;
    bool resolved = false;

    static SExpr call(const std::string& head, std::vector<SExpr> args);
    static SExpr call(Func f, std::vector<SExpr> args);
    static SExpr entity(std::string token, bool resolved = false);
    static SExpr relation(std::string token, bool resolved = false);
    static SExpr number_lit(std::int64_t n);
    static SExpr placeholder(std::string name);

    bool is_call() const { return kind == Kind::Call; }
    bool is_leaf() const { return kind != Kind::Call; }
    /// Concrete function head, if any. Placeholder-headed calls return nullopt.
    std::optional<Func> func() const;

    bool operator==(const SExpr& other) const;
};

/// Parses executable text: placeholders are rejected. Errors carry byte offsets.
SExpr parse(const std::string& text);

/// Parses a template body: tokens x1..x99, `number`, `compare`, `optimize`
/// become Placeholder nodes (the latter two also in head position).
SExpr parse_template(const std::string& text);

/// Canonical single-space rendering; parse(print(e)) == e structurally.
/// Placeholder nodes require allow_placeholders.
std::string print(const SExpr& e, bool allow_placeholders = false);

/// Returns the result type per the function signature table, or throws
/// TypeError with a dotted path to the offending subtree. Placeholders are
/// ill-typed here; type-check templates after substitution.
ValueType type_check(const SExpr& e);

/// Non-throwing variant; error text on failure.
std::optional<ValueType> try_type_check(const SExpr& e, std::string* error = nullptr);

/// True iff every function node is drawn from {JOIN, R, AND, VALUES, IS_TRUE}.
bool is_core(const SExpr& e);

/// The twelve core skeletons, 1-based. Wildcard slots are leaves; VALUES
/// tails are variadic.
struct CorePattern {
    int id = 0;
    SExpr skeleton;
};

const std::vector<CorePattern>& core_patterns();

/// Lowest-numbered core skeleton matching `e`, with wildcards bound to
/// single leaves (VALUES wildcard tails bind one-or-more leaves).
std::optional<int> match_core_pattern(const SExpr& e);

/// All distinct placeholder names in a template body, in first-occurrence order.
std::vector<std::string> placeholder_names(const SExpr& e);

/// Returns a copy with every Entity/Relation leaf flagged as resolved.
/// Test and fixture helper for expressions written directly over graph ids.
SExpr mark_resolved(SExpr e);

namespace detail {
/// Structure-only parse for syntax repair: known heads, arity unchecked.
SExpr parse_lenient(const std::string& text);
} // namespace detail

} // namespace kgqa
