#pragma once

#include "kgqa/kg.hpp"
#include "kgqa/sexpr.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>

namespace kgqa {

/// Group key -> number of distinct witnesses. Zero-count keys are omitted,
/// matching SPARQL GROUP BY behaviour: a key only appears when at least one
/// witness row exists.
using GroupedCounts = std::map<EntityId, std::int64_t>;

/// Tagged evaluation result. The tag always matches type_check of the
/// evaluated expression.
struct EvalResult {
    using Pair = std::pair<EntityId, EntityId>;
    std::variant<std::set<EntityId>,   // EntitySet
                 std::set<std::int64_t>, // ValueSet
                 std::set<Pair>,       // PairSet
                 GroupedCounts,        // GroupedCounts
                 bool,                 // Boolean
                 std::int64_t>         // Integer
        value;

    static EvalResult entities(std::set<EntityId> s) { return {std::move(s)}; }
    static EvalResult values(std::set<std::int64_t> s) { return {std::move(s)}; }
    static EvalResult pairs(std::set<Pair> s) { return {std::move(s)}; }
    static EvalResult grouped(GroupedCounts g) { return {std::move(g)}; }
    static EvalResult boolean(bool b) { return {b}; }
    static EvalResult integer(std::int64_t n) { return {n}; }

    bool is_entities() const { return std::holds_alternative<std::set<EntityId>>(value); }
    bool is_boolean() const { return std::holds_alternative<bool>(value); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(value); }
    bool is_grouped() const { return std::holds_alternative<GroupedCounts>(value); }

    const std::set<EntityId>& entity_set() const { return std::get<std::set<EntityId>>(value); }
    const GroupedCounts& grouped_counts() const { return std::get<GroupedCounts>(value); }
    bool boolean_value() const { return std::get<bool>(value); }
    std::int64_t integer_value() const { return std::get<std::int64_t>(value); }

    /// Empty means: empty set / empty grouping. Booleans and integers are
    /// never empty (a count of 0 and `false` are real answers).
    bool empty() const;

    bool operator==(const EvalResult&) const = default;
};

/// Renders a result deterministically (entity sets sorted by id).
std::string render(const EvalResult& r);

/// Reference denotational semantics over the indexed graph.
/// Pre: e type-checks and every leaf is resolved. Throws EvalError on
/// unresolved leaves and on grouped aggregation over a non-core argument.
EvalResult eval(const SExpr& e, const KnowledgeGraph& g);

/// Grouped-counting semantics: decomposes `core` as AND(primary,
/// constraints...), requires the primary conjunct to be a JOIN, and maps
/// every key satisfying the remaining conjuncts to its count of distinct
/// primary witnesses. Keys with zero witnesses are omitted.
GroupedCounts eval_grouped(const SExpr& core, const KnowledgeGraph& g);

/// Index-free oracle: identical semantics computed by exhaustive
/// enumeration over entities and linear scans of the fact list. Guarded to
/// graphs with at most 200 entities; test use only.
EvalResult brute_force_eval(const SExpr& e, const KnowledgeGraph& g);

} // namespace kgqa
