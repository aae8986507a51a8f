#pragma once

#include "kgqa/eval.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/sexpr.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kgqa::testgen {

/// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
/// standard; the distribution helpers avoid std::uniform_int_distribution,
/// whose mapping is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : next() % n; }
    std::int64_t range(std::int64_t lo, std::int64_t hi) { // inclusive
        return lo + (std::int64_t)below((std::size_t)(hi - lo + 1));
    }
    bool chance(unsigned percent) { return below(100) < percent; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

private:
    std::mt19937_64 eng_;
};

struct GraphSpec {
    std::size_t entities = 40;
    std::size_t relations = 6;
    std::size_t facts = 120;
};

KnowledgeGraph random_graph(Rng& rng, const GraphSpec& spec = {});

/// Random instantiation of a core skeleton (all leaves resolved graph ids).
/// `entity_set_only` excludes the boolean IS_TRUE pattern.
SExpr random_core(Rng& rng, const KnowledgeGraph& g, bool entity_set_only = false);

/// Instantiates one specific skeleton with random resolved leaves.
SExpr instantiate_pattern(Rng& rng, const KnowledgeGraph& g, const CorePattern& pattern);

/// Random well-typed expression within the transpilable shape family:
/// template-style roots (set algebra, COUNT, comparisons, extrema, grouped
/// counts, truth probes) over random cores.
SExpr random_expression(Rng& rng, const KnowledgeGraph& g);

} // namespace kgqa::testgen
