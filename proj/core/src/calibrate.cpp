#include "kgqa/calibrate.hpp"

#include "kgqa/sparql.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace kgqa {

namespace {

bool parses_as_core(const std::string& text, SExpr* out) {
    try {
        SExpr e = parse(text);
        if (!is_core(e)) return false;
        if (!try_type_check(e)) return false;
        if (out) *out = std::move(e);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

struct DraftTokens {
    std::vector<std::string> atoms;     // everything that is not a paren
    std::vector<std::string> functions; // atoms that are function names
    std::vector<std::string> leaves;    // atoms that are not function names
};

DraftTokens tokenize_draft(const std::string& text) {
    DraftTokens out;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '(' && text[i] != ')')
            ++i;
        std::string atom = text.substr(start, i - start);
        if (func_from_name(atom)) out.functions.push_back(atom);
        else out.leaves.push_back(atom);
        out.atoms.push_back(std::move(atom));
    }
    return out;
}

// --- stage 1: parenthesis balancing -----------------------------------------

std::string balance_ends(const std::string& text, int* inserted) {
    int depth = 0, prepend = 0;
    for (char c : text) {
        if (c == '(') ++depth;
        else if (c == ')') {
            if (depth == 0) ++prepend;
            else --depth;
        }
    }
    std::string out = std::string(prepend, '(') + text + std::string(depth, ')');
    *inserted = prepend + depth;
    return out;
}

// All single-insertion repairs of one missing paren, scanned left to right.
bool scan_single_insertion(const std::string& text, char missing, SExpr* out,
                           std::vector<std::string>* log) {
    for (std::size_t pos = 0; pos <= text.size(); ++pos) {
        std::string candidate = text.substr(0, pos) + missing + text.substr(pos);
        if (parses_as_core(candidate, out)) {
            if (log)
                log->push_back(std::string("inserted '") + missing + "' at byte " +
                               std::to_string(pos));
            return true;
        }
    }
    return false;
}

// --- stage 2: arity repair ---------------------------------------------------

struct ArityLimits {
    std::size_t min, max;
};

ArityLimits limits_of(Func f) {
    switch (f) {
        case Func::Join: return {2, 2};
        case Func::Reverse: return {1, 1};
        case Func::And: return {2, SIZE_MAX};
        case Func::Or: return {2, SIZE_MAX};
        case Func::Values: return {1, SIZE_MAX};
        case Func::IsTrue: return {3, 3};
        case Func::GroupSum: return {2, 2};
        case Func::Lt:
        case Func::Le:
        case Func::Gt:
        case Func::Ge:
        case Func::Eq:
        case Func::Diff: return {2, 2};
        default: return {1, 1};
    }
}

bool repair_arity(SExpr& node, std::vector<std::string>* log) {
    for (auto& a : node.args)
        if (!repair_arity(a, log)) return false;
    if (!node.is_call()) return true;
    auto f = node.func();
    if (!f) return false;
    ArityLimits lim = limits_of(*f);
    if (node.args.size() > lim.max) {
        std::size_t extra = node.args.size() - lim.max;
        node.args.resize(lim.max);
        if (log)
            log->push_back("dropped " + std::to_string(extra) + " extra argument(s) of " +
                           node.token);
    }
    if (node.args.size() < lim.min) {
        if ((*f == Func::And || *f == Func::Or) && node.args.size() == 1) {
            SExpr only = std::move(node.args[0]);
            if (log) log->push_back("unwrapped single-argument " + node.token);
            node = std::move(only);
            return true;
        }
        return false;
    }
    return true;
}

// --- stage 3: skeleton snap --------------------------------------------------

struct SnapFit {
    std::size_t leaves_used = 0;
    std::size_t function_overlap = 0;
    int pattern_id = 0;
    SExpr result;
};

std::size_t count_wildcards(const SExpr& skel) {
    if (skel.is_leaf()) return 1;
    std::size_t n = 0;
    for (const auto& a : skel.args) n += count_wildcards(a);
    return n;
}

bool skeleton_has_values(const SExpr& skel) {
    if (skel.func() == Func::Values) return true;
    for (const auto& a : skel.args)
        if (skeleton_has_values(a)) return true;
    return false;
}

/// Fills skeleton wildcards with draft leaves in order; a VALUES slot absorbs
/// the surplus so later wildcards still receive a leaf each.
SExpr fill_skeleton(const SExpr& skel, const std::vector<std::string>& leaves, std::size_t& next,
                    std::size_t values_extra, bool relation_slot) {
    if (skel.is_leaf()) {
        SExpr leaf = relation_slot ? SExpr::relation(leaves[next]) : SExpr::entity(leaves[next]);
        ++next;
        return leaf;
    }
    if (skel.func() == Func::Values) {
        std::vector<SExpr> items;
        for (std::size_t i = 0; i < 1 + values_extra; ++i)
            items.push_back(SExpr::entity(leaves[next++]));
        return SExpr::call(Func::Values, std::move(items));
    }
    auto f = skel.func();
    std::vector<SExpr> args;
    for (std::size_t i = 0; i < skel.args.size(); ++i) {
        bool rel = f && ((*f == Func::Join && i == 0) || (*f == Func::Reverse && i == 0) ||
                         (*f == Func::IsTrue && i == 1));
        args.push_back(fill_skeleton(skel.args[i], leaves, next, values_extra, rel));
    }
    return SExpr::call(skel.token, std::move(args));
}

std::size_t multiset_overlap(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return common.size();
}

std::vector<std::string> skeleton_functions(const SExpr& skel) {
    std::vector<std::string> out;
    if (skel.is_call()) {
        out.push_back(skel.token);
        for (const auto& a : skel.args) {
            auto sub = skeleton_functions(a);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    }
    return out;
}

bool snap_to_skeleton(const DraftTokens& toks, SExpr* out, std::vector<std::string>* log) {
    if (toks.leaves.empty()) return false;
    std::vector<SnapFit> fits;
    for (const auto& p : core_patterns()) {
        std::size_t wild = count_wildcards(p.skeleton);
        bool has_values = skeleton_has_values(p.skeleton);
        std::size_t avail = toks.leaves.size();
        std::size_t used, values_extra = 0;
        if (has_values) {
            if (avail < wild) continue;
            values_extra = avail - wild; // VALUES absorbs everything left over
            used = avail;
        } else {
            if (avail < wild) continue;
            used = wild;
        }
        if (used * 2 < avail) continue; // < 50% leaf retention
        std::size_t next = 0;
        SExpr candidate = fill_skeleton(p.skeleton, toks.leaves, next, values_extra, false);
        if (!try_type_check(candidate)) continue;
        fits.push_back({used, multiset_overlap(skeleton_functions(p.skeleton), toks.functions),
                        p.id, std::move(candidate)});
    }
    if (fits.empty()) return false;
    auto best = std::max_element(fits.begin(), fits.end(), [](const SnapFit& a, const SnapFit& b) {
        if (a.leaves_used != b.leaves_used) return a.leaves_used < b.leaves_used;
        if (a.function_overlap != b.function_overlap) return a.function_overlap < b.function_overlap;
        return a.pattern_id > b.pattern_id; // prefer the lowest id
    });
    if (log)
        log->push_back("snapped to core skeleton " + std::to_string(best->pattern_id) + " keeping " +
                       std::to_string(best->leaves_used) + "/" + std::to_string(toks.leaves.size()) +
                       " leaves");
    *out = std::move(best->result);
    return true;
}

// --- linking -----------------------------------------------------------------

struct LabelIndex {
    struct Row {
        std::string id;
        std::string label;
        std::vector<float> vec;
    };
    std::vector<Row> rows;
};

LabelIndex build_index(const KnowledgeGraph& g, LabelKind kind, const Embedder& emb) {
    LabelIndex idx;
    for (const auto& [id, label] : g.all_labels(kind)) idx.rows.push_back({id, label, emb.embed(label)});
    return idx;
}

std::vector<LinkCandidate> rank_candidates(const std::string& surface, LabelKind kind,
                                           const LabelIndex& idx, const Embedder& emb, int k) {
    if (idx.rows.empty())
        throw LinkError("cannot link '" + surface + "': empty label dictionary");
    std::vector<float> svec = emb.embed(surface);
    struct Scored {
        bool exact;
        float score;
        std::string id;
    };
    std::map<std::string, Scored> best_per_id;
    for (const auto& row : idx.rows) {
        bool exact = row.label == surface;
        float score = exact ? 1.0f : cosine(svec, row.vec);
        auto it = best_per_id.find(row.id);
        if (it == best_per_id.end() ||
            std::make_pair(exact, score) > std::make_pair(it->second.exact, it->second.score))
            best_per_id[row.id] = {exact, score, row.id};
    }
    std::vector<Scored> ranked;
    ranked.reserve(best_per_id.size());
    for (auto& [id, s] : best_per_id) ranked.push_back(s);
    std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
        if (a.exact != b.exact) return a.exact;
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    std::vector<LinkCandidate> out;
    for (const auto& s : ranked) {
        if ((int)out.size() >= k) break;
        out.push_back({surface, s.id, kind, s.exact ? 1.0f : s.score});
    }
    return out;
}

// --- variant enumeration -----------------------------------------------------

struct LeafKey {
    std::string surface;
    LabelKind kind;
    bool operator<(const LeafKey& o) const {
        return std::tie(surface, kind) < std::tie(o.surface, o.kind);
    }
};

void collect_leaf_keys(const SExpr& e, std::vector<LeafKey>& order, std::set<LeafKey>& seen) {
    if (e.kind == SExpr::Kind::Entity || e.kind == SExpr::Kind::Relation) {
        LeafKey key{e.token, e.kind == SExpr::Kind::Entity ? LabelKind::Entity : LabelKind::Relation};
        if (seen.insert(key).second) order.push_back(key);
        return;
    }
    for (const auto& a : e.args) collect_leaf_keys(a, order, seen);
}

SExpr substitute(const SExpr& e, const std::map<LeafKey, std::string>& assignment) {
    SExpr out = e;
    if (e.kind == SExpr::Kind::Entity || e.kind == SExpr::Kind::Relation) {
        LeafKey key{e.token, e.kind == SExpr::Kind::Entity ? LabelKind::Entity : LabelKind::Relation};
        out.token = assignment.at(key);
        out.resolved = true;
        return out;
    }
    for (std::size_t i = 0; i < e.args.size(); ++i) out.args[i] = substitute(e.args[i], assignment);
    return out;
}

} // namespace

SExpr correct_syntax(const std::string& draft, std::vector<std::string>* repair_log) {
    SExpr out;
    if (parses_as_core(draft, &out)) return out; // fixpoint: no repairs logged

    std::vector<std::string> local_log;
    auto* log = repair_log ? repair_log : &local_log;

    // 1: balance parentheses.
    int inserted = 0;
    std::string balanced = balance_ends(draft, &inserted);
    if (inserted > 0) {
        if (parses_as_core(balanced, &out)) {
            log->push_back("balanced parentheses with " + std::to_string(inserted) +
                           " end/start insertion(s)");
            return out;
        }
        if (inserted == 1) {
            int depth = 0, orphans = 0;
            for (char c : draft) {
                if (c == '(') ++depth;
                else if (c == ')') depth == 0 ? ++orphans : --depth;
            }
            char missing = depth > 0 ? ')' : '(';
            if (scan_single_insertion(draft, missing, &out, log)) return out;
        }
    }

    // 2: arity repair over the balanced text.
    try {
        SExpr lenient = detail::parse_lenient(balanced);
        std::vector<std::string> arity_log;
        if (repair_arity(lenient, &arity_log)) {
            std::string repaired = print(lenient);
            if (parses_as_core(repaired, &out)) {
                if (inserted > 0)
                    log->push_back("balanced parentheses with " + std::to_string(inserted) +
                                   " end/start insertion(s)");
                log->insert(log->end(), arity_log.begin(), arity_log.end());
                return out;
            }
        }
    } catch (const ParseError&) {
        // fall through to the skeleton snap
    }

    // 3: snap onto the nearest core skeleton.
    DraftTokens toks = tokenize_draft(draft);
    if (snap_to_skeleton(toks, &out, log)) return out;

    std::string joined;
    for (const auto& line : *log) joined += line + "; ";
    throw CalibrationError("unrepairable draft: no core skeleton retains at least half of " +
                               std::to_string(toks.leaves.size()) + " leaves",
                           joined);
}

std::vector<LinkCandidate> link_leaf(const std::string& surface, LabelKind kind,
                                     const KnowledgeGraph& g, const Embedder& emb, int k) {
    LabelIndex idx = build_index(g, kind, emb);
    return rank_candidates(surface, kind, idx, emb, k);
}

CalibrationOutcome calibrate(const std::string& draft, const KnowledgeGraph& g,
                             const Embedder& emb, const CalibrationConfig& cfg) {
    CalibrationOutcome outcome;
    SExpr shape = correct_syntax(draft, &outcome.repair_log);

    std::vector<LeafKey> keys;
    std::set<LeafKey> seen;
    collect_leaf_keys(shape, keys, seen);

    LabelIndex entity_idx = build_index(g, LabelKind::Entity, emb);
    LabelIndex relation_idx = build_index(g, LabelKind::Relation, emb);

    std::vector<std::vector<LinkCandidate>> options;
    for (const auto& key : keys)
        options.push_back(rank_candidates(
            key.surface, key.kind, key.kind == LabelKind::Entity ? entity_idx : relation_idx, emb,
            cfg.link_k));

    // Every substitution combination, ranked by the product of shifted
    // scores, ties broken lexicographically by resolved ids.
    struct Combo {
        double joint;
        std::vector<std::size_t> pick;
        std::vector<std::string> ids;
    };
    std::vector<Combo> combos;
    std::vector<std::size_t> pick(options.size(), 0);
    while (true) {
        Combo c;
        c.joint = 1.0;
        c.pick = pick;
        for (std::size_t i = 0; i < options.size(); ++i) {
            const auto& cand = options[i][pick[i]];
            c.joint *= (cand.score + 1.0) / 2.0;
            c.ids.push_back(cand.resolved);
        }
        combos.push_back(std::move(c));
        std::size_t i = 0;
        for (; i < pick.size(); ++i) {
            if (++pick[i] < options[i].size()) break;
            pick[i] = 0;
        }
        if (i == pick.size()) break;
        if (options.empty()) break;
    }
    std::sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) {
        if (a.joint != b.joint) return a.joint > b.joint;
        return a.ids < b.ids;
    });

    std::vector<CalibratedCore> fallbacks;
    for (const auto& combo : combos) {
        std::map<LeafKey, std::string> assignment;
        std::vector<LinkCandidate> provenance;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            assignment[keys[i]] = options[i][combo.pick[i]].resolved;
            provenance.push_back(options[i][combo.pick[i]]);
        }
        CalibratedCore variant{substitute(shape, assignment), std::move(provenance), false};

        ++outcome.probes;
        EvalResult result = execute_sparql(to_sparql(variant.expr), g);
        bool nonempty = result.is_boolean() ? result.boolean_value() : !result.empty();
        variant.nonempty = nonempty;
        if (nonempty) {
            outcome.variants.push_back(std::move(variant));
            if ((int)outcome.variants.size() >= cfg.keep_variants) break;
        } else if (fallbacks.empty()) {
            fallbacks.push_back(std::move(variant)); // best-scoring empty variant
        }
    }
    if (outcome.variants.empty() && !fallbacks.empty())
        outcome.variants.push_back(std::move(fallbacks.front()));
    if (outcome.variants.empty())
        throw CalibrationError("calibration produced no executable variant", "");
    return outcome;
}

} // namespace kgqa
