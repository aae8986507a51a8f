#pragma once

#include "kgqa/embedder.hpp"
#include "kgqa/eval.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/sexpr.hpp"

#include <string>
#include <vector>

namespace kgqa {

struct LinkCandidate {
    std::string surface;
    std::string resolved; // entity or relation id
    LabelKind kind = LabelKind::Entity;
    float score = 0.0f; // cosine in [-1, 1]; exact label matches pin to 1.0
};

struct CalibratedCore {
    SExpr expr; // fully resolved, type-checks, is_core
    std::vector<LinkCandidate> provenance;
    bool nonempty = false; // execution check verdict
};

struct CalibrationConfig {
    int link_k = 1;        // 1 or 3
    int keep_variants = 1; // 1 or 3
};

struct CalibrationOutcome {
    std::vector<CalibratedCore> variants;
    std::size_t probes = 0; // SPARQL executions spent on non-emptiness checks
    std::vector<std::string> repair_log;
};

/// Rule-based syntax repair for LLM-drafted cores. Repairs are tried in
/// order: parenthesis balancing (end/start insertion, then a single-insertion
/// position scan), arity fixes against the signature table, and finally a
/// snap onto the nearest core skeleton that keeps at least half of the
/// draft's leaves. Throws CalibrationError when nothing fits.
SExpr correct_syntax(const std::string& draft, std::vector<std::string>* repair_log = nullptr);

/// Top-k dictionary labels of the requested kind by embedding similarity.
/// Candidates are deduplicated per id (best label wins) and sorted by
/// (exact-match, score, id). Throws LinkError on an empty dictionary.
std::vector<LinkCandidate> link_leaf(const std::string& surface, LabelKind kind,
                                     const KnowledgeGraph& g, const Embedder& emb, int k);

/// Full calibration of one draft: syntax repair, per-leaf linking,
/// substitution variants enumerated in descending joint-score order, each
/// probed for execution non-emptiness. Returns up to cfg.keep_variants
/// non-empty variants; if every combination executes empty, the best-scoring
/// variant is returned flagged nonempty=false.
CalibrationOutcome calibrate(const std::string& draft, const KnowledgeGraph& g,
                             const Embedder& emb, const CalibrationConfig& cfg);

} // namespace kgqa
