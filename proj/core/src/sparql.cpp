#include "kgqa/sparql.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace kgqa {

using sparql::AggExpr;
using sparql::Block;
using sparql::CmpOp;
using sparql::Having;
using sparql::MinusGroup;
using sparql::Query;
using sparql::Term;
using sparql::TriplePattern;
using sparql::UnionGroup;
using sparql::ValuesClause;

namespace {

CmpOp cmp_of(Func f) {
    switch (f) {
        case Func::Lt: return CmpOp::Lt;
        case Func::Le: return CmpOp::Le;
        case Func::Gt: return CmpOp::Gt;
        case Func::Ge: return CmpOp::Ge;
        case Func::Eq: return CmpOp::Eq;
        default: throw SparqlError("not a comparison function");
    }
}

bool is_comparison(const SExpr& e) {
    auto f = e.func();
    return f && (*f == Func::Lt || *f == Func::Le || *f == Func::Gt || *f == Func::Ge ||
                 *f == Func::Eq);
}

// ---------------------------------------------------------------------------
// Compilation: S-expression -> subset query

class Compiler {
public:
    Query compile(const SExpr& e) {
        ValueType vt = type_check(e);
        Query q;
        switch (vt) {
            case ValueType::Boolean: {
                q.form = Query::Form::Ask;
                flatten_ask(e, q.where);
                return q;
            }
            case ValueType::Integer: {
                if (!(e.is_call() && e.func() == Func::Count))
                    throw SparqlError("integer roots other than COUNT are outside the subset");
                return compile_count(e.args[0]);
            }
            case ValueType::EntitySet:
            case ValueType::ValueSet: {
                const SExpr& body = strip_distinct(e);
                if (is_comparison(body)) {
                    q = compile_comparison(body);
                    q.form = Query::Form::SelectDistinct;
                    return q;
                }
                if (body.func() == Func::ArgMax || body.func() == Func::ArgMin) {
                    q.form = Query::Form::SelectExtremum;
                    q.extremum = body.func() == Func::ArgMax ? Query::Extremum::Max
                                                             : Query::Extremum::Min;
                    q.group_by = true;
                    q.group_agg = compile_gc(body.args[0], q.where);
                    return q;
                }
                q.form = Query::Form::SelectDistinct;
                compile_into(body, "x", q.where);
                return q;
            }
            case ValueType::GroupedCounts: {
                q.form = Query::Form::SelectGroup;
                q.group_by = true;
                q.group_agg = compile_gc(e, q.where);
                return q;
            }
            case ValueType::PairSet:
                throw SparqlError("pair-set roots are outside the subset");
        }
        throw SparqlError("unreachable");
    }

private:
    int next_var_ = 0;

    std::string fresh_var() { return "w" + std::to_string(++next_var_); }

    static const SExpr& strip_distinct(const SExpr& e) {
        const SExpr* p = &e;
        while (p->is_call() && p->func() == Func::Distinct) p = &p->args[0];
        return *p;
    }

    static Term leaf_term(const SExpr& leaf) {
        if (leaf.kind == SExpr::Kind::Number) return Term::integer(leaf.number);
        if (!leaf.resolved)
            throw SparqlError("conversion error: unresolved leaf '" + leaf.token + "'");
        return Term::iri(leaf.token);
    }

    void flatten_ask(const SExpr& e, Block& out) {
        if (e.func() == Func::All) {
            for (const auto& a : e.args) flatten_ask(a, out);
            return;
        }
        if (e.func() == Func::IsTrue) {
            out.triples.push_back(
                {leaf_term(e.args[0]), leaf_term(e.args[1]), leaf_term(e.args[2])});
            return;
        }
        throw SparqlError("boolean subset covers only IS_TRUE and ALL");
    }

    Query compile_count(const SExpr& arg) {
        Query q;
        q.form = Query::Form::SelectCount;
        const SExpr& body = strip_distinct(arg);
        ValueType vt = type_check(body);
        if (vt == ValueType::GroupedCounts) {
            // Counting group keys needs no aggregation: keys are exactly the
            // distinct answer-variable bindings of the grouped patterns.
            compile_gc(body, q.where);
            return q;
        }
        if (is_comparison(body)) {
            Query inner = compile_comparison(body);
            q.where = std::move(inner.where);
            q.group_by = true;
            q.having = std::move(inner.having);
            return q;
        }
        compile_into(body, "x", q.where);
        return q;
    }

    Query compile_comparison(const SExpr& e) {
        Query q;
        q.group_by = true;
        Having h;
        h.op = cmp_of(*e.func());
        h.lhs = compile_gc(e.args[0], q.where);
        const SExpr& rhs = e.args[1];
        if (rhs.kind == SExpr::Kind::Number) {
            h.rhs_number = rhs.number;
        } else {
            std::string wvar = fresh_var();
            compile_grouped_shared(rhs, "x", wvar, q.where);
            h.rhs_agg = AggExpr{{wvar}};
        }
        q.having = std::move(h);
        return q;
    }

    /// GROUP_COUNT / GROUP_SUM expression -> patterns + aggregate.
    AggExpr compile_gc(const SExpr& e, Block& out) {
        std::vector<const SExpr*> cores;
        collect_gc_cores(e, cores);
        AggExpr agg;
        if (cores.size() == 1) {
            agg.count_vars.push_back(compile_grouped(*cores[0], "x", out));
            return agg;
        }
        UnionGroup u;
        for (const SExpr* core : cores) {
            Block branch;
            agg.count_vars.push_back(compile_grouped(*core, "x", branch));
            u.branches.push_back(std::move(branch));
        }
        out.unions.push_back(std::move(u));
        return agg;
    }

    static void collect_gc_cores(const SExpr& e, std::vector<const SExpr*>& out) {
        if (e.func() == Func::GroupCount) {
            out.push_back(&e.args[0]);
            return;
        }
        if (e.func() == Func::GroupSum) {
            collect_gc_cores(e.args[0], out);
            collect_gc_cores(e.args[1], out);
            return;
        }
        throw SparqlError("grouped expression must be GROUP_COUNT or GROUP_SUM");
    }

    /// Compiles a core's patterns for grouped counting; the primary join's
    /// inner operand is forced onto a fresh witness variable so the group
    /// aggregate can count it. Returns the witness variable.
    std::string compile_grouped(const SExpr& core, const std::string& key_var, Block& out) {
        std::string wvar = fresh_var();
        compile_grouped_with_witness(core, key_var, wvar, out);
        return wvar;
    }

    /// As compile_grouped but with a caller-chosen witness variable; an OR
    /// becomes a UNION whose branches share that witness variable, so the
    /// aggregate counts the union of witnesses.
    void compile_grouped_shared(const SExpr& e, const std::string& key_var,
                                const std::string& wvar, Block& out) {
        if (e.func() == Func::Or) {
            UnionGroup u;
            std::vector<const SExpr*> branches;
            flatten_or(e, branches);
            for (const SExpr* b : branches) {
                Block branch;
                compile_grouped_with_witness(*b, key_var, wvar, branch);
                u.branches.push_back(std::move(branch));
            }
            out.unions.push_back(std::move(u));
            return;
        }
        compile_grouped_with_witness(e, key_var, wvar, out);
    }

    static void flatten_or(const SExpr& e, std::vector<const SExpr*>& out) {
        if (e.func() == Func::Or) {
            for (const auto& a : e.args) flatten_or(a, out);
            return;
        }
        out.push_back(&e);
    }

    void compile_grouped_with_witness(const SExpr& core, const std::string& key_var,
                                      const std::string& wvar, Block& out) {
        if (!is_core(core))
            throw SparqlError("grouped aggregation requires a core argument, got '" +
                              print(core, true) + "'");
        const SExpr* primary = &core;
        std::vector<const SExpr*> constraints;
        if (core.func() == Func::And) {
            primary = &core.args[0];
            for (std::size_t i = 1; i < core.args.size(); ++i)
                constraints.push_back(&core.args[i]);
        }
        if (primary->func() != Func::Join)
            throw SparqlError("grouped aggregation requires a JOIN primary conjunct");

        // Witness operand must bind the witness variable (leaves go through
        // a VALUES clause rather than inlining, so the aggregate can count).
        compile_into(primary->args[1], wvar, out);
        const SExpr& rel = primary->args[0];
        if (rel.kind == SExpr::Kind::Relation) {
            out.triples.push_back({Term::var(key_var), leaf_term(rel), Term::var(wvar)});
        } else {
            out.triples.push_back({Term::var(wvar), leaf_term(rel.args[0]), Term::var(key_var)});
        }
        for (const SExpr* c : constraints) compile_into(*c, key_var, out);
    }

    /// Constrains `var` to the denotation of a set expression.
    void compile_into(const SExpr& e, const std::string& var, Block& out) {
        switch (e.kind) {
            case SExpr::Kind::Entity:
            case SExpr::Kind::Number:
                out.values.push_back({var, {leaf_term(e)}});
                return;
            case SExpr::Kind::Relation:
            case SExpr::Kind::Placeholder:
                throw SparqlError("cannot compile leaf '" + e.token + "' as a set");
            case SExpr::Kind::Call:
                break;
        }
        auto f = e.func();
        if (!f) throw SparqlError("placeholder head outside template context");
        switch (*f) {
            case Func::Join: {
                Term inner = compile_operand(e.args[1], out);
                const SExpr& rel = e.args[0];
                if (rel.kind == SExpr::Kind::Relation)
                    out.triples.push_back({Term::var(var), leaf_term(rel), inner});
                else
                    out.triples.push_back({inner, leaf_term(rel.args[0]), Term::var(var)});
                return;
            }
            case Func::And:
                for (const auto& a : e.args) compile_into(a, var, out);
                return;
            case Func::Or: {
                UnionGroup u;
                for (const auto& a : e.args) {
                    Block branch;
                    compile_into(a, var, branch);
                    u.branches.push_back(std::move(branch));
                }
                out.unions.push_back(std::move(u));
                return;
            }
            case Func::Diff: {
                compile_into(e.args[0], var, out);
                MinusGroup m;
                Block inner;
                compile_into(e.args[1], var, inner);
                m.block.push_back(std::move(inner));
                out.minuses.push_back(std::move(m));
                return;
            }
            case Func::Values: {
                ValuesClause vc{var, {}};
                for (const auto& a : e.args) vc.values.push_back(leaf_term(a));
                out.values.push_back(std::move(vc));
                return;
            }
            case Func::Distinct:
                compile_into(e.args[0], var, out);
                return;
            default:
                throw SparqlError("'" + e.token +
                                  "' may not appear under set operators in the subset");
        }
    }

    /// Inner operand of a join: leaves inline as constants, anything else
    /// binds a fresh variable.
    Term compile_operand(const SExpr& e, Block& out) {
        if (e.is_leaf()) return leaf_term(e);
        std::string v = fresh_var();
        compile_into(e, v, out);
        return Term::var(v);
    }
};

// ---------------------------------------------------------------------------
// Rendering (canonical wire format)

std::string render_term(const Term& t) {
    switch (t.kind) {
        case Term::Kind::Var: return "?" + t.text;
        case Term::Kind::Iri: return "<" + t.text + ">";
        case Term::Kind::Int: return std::to_string(t.num);
    }
    return {};
}

std::string render_cmp(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "=";
    }
    return {};
}

std::string render_agg(const AggExpr& a) {
    std::string out;
    for (const auto& v : a.count_vars) {
        if (!out.empty()) out += " + ";
        out += "COUNT(DISTINCT ?" + v + ")";
    }
    return out;
}

std::string render_block(const Block& b) {
    std::vector<std::string> parts;
    for (const auto& vc : b.values) {
        std::string s = "VALUES ?" + vc.var + " {";
        for (const auto& t : vc.values) s += " " + render_term(t);
        s += " }";
        parts.push_back(std::move(s));
    }
    for (const auto& t : b.triples)
        parts.push_back(render_term(t.subject) + " " + render_term(t.predicate) + " " +
                        render_term(t.object) + " .");
    for (const auto& u : b.unions) {
        std::string s;
        for (std::size_t i = 0; i < u.branches.size(); ++i) {
            if (i) s += " UNION ";
            s += "{ " + render_block(u.branches[i]) + " }";
        }
        parts.push_back(std::move(s));
    }
    for (const auto& m : b.minuses)
        parts.push_back("MINUS { " + render_block(m.block.front()) + " }");

    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

std::string render_having(const Having& h) {
    std::string out = "HAVING ( " + render_agg(h.lhs) + " " + render_cmp(h.op) + " ";
    out += h.rhs_number ? std::to_string(*h.rhs_number) : render_agg(*h.rhs_agg);
    out += " )";
    return out;
}

} // namespace

std::string render_sparql(const SparqlQuery& q) {
    const std::string x = "?" + q.answer_var;
    switch (q.form) {
        case Query::Form::Ask:
            return "ASK { " + render_block(q.where) + " }";
        case Query::Form::SelectDistinct: {
            std::string out = "SELECT DISTINCT " + x + " WHERE { " + render_block(q.where) + " }";
            if (q.group_by) out += " GROUP BY " + x;
            if (q.having) out += " " + render_having(*q.having);
            return out;
        }
        case Query::Form::SelectCount: {
            if (!q.group_by)
                return "SELECT (COUNT(DISTINCT " + x + ") AS ?c) WHERE { " +
                       render_block(q.where) + " }";
            // Counting qualifying groups needs the inner projection.
            std::string out = "SELECT (COUNT(DISTINCT " + x + ") AS ?c) WHERE { { SELECT " + x +
                              " WHERE { " + render_block(q.where) + " } GROUP BY " + x;
            if (q.having) out += " " + render_having(*q.having);
            out += " } }";
            return out;
        }
        case Query::Form::SelectGroup:
            return "SELECT " + x + " (" + render_agg(*q.group_agg) + " AS ?c) WHERE { " +
                   render_block(q.where) + " } GROUP BY " + x;
        case Query::Form::SelectExtremum: {
            const std::string mm = q.extremum == Query::Extremum::Max ? "MAX" : "MIN";
            const std::string inner = "SELECT " + x + " (" + render_agg(*q.group_agg) +
                                      " AS ?c) WHERE { " + render_block(q.where) + " } GROUP BY " +
                                      x;
            return "SELECT DISTINCT " + x + " WHERE { " + render_block(q.where) + " { SELECT (" +
                   mm + "(?c) AS ?m) WHERE { { " + inner + " } } } } GROUP BY " + x +
                   " ?m HAVING ( " + render_agg(*q.group_agg) + " = ?m )";
        }
    }
    return {};
}

SparqlQuery to_sparql(const SExpr& e) {
    Compiler c;
    return c.compile(e);
}

// ---------------------------------------------------------------------------
// Subset parser

namespace {

struct PTok {
    enum class Kind { Word, Var, Iri, Int, Punct };
    Kind kind;
    std::string text;
    std::size_t offset;
};

std::vector<PTok> lex_sparql(const std::string& s) {
    std::vector<PTok> out;
    std::size_t i = 0;
    auto is_word = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
    // '<' opens an IRI only when a whitespace-free run ends in '>'.
    auto iri_end = [&s](std::size_t start) -> std::size_t {
        for (std::size_t j = start + 1; j < s.size(); ++j) {
            if (s[j] == '>') return j;
            if (std::isspace(static_cast<unsigned char>(s[j]))) break;
        }
        return std::string::npos;
    };
    while (i < s.size()) {
        unsigned char c = s[i];
        if (std::isspace(c)) {
            ++i;
        } else if (c == '<' && iri_end(i) != std::string::npos) {
            std::size_t end = iri_end(i);
            out.push_back({PTok::Kind::Iri, s.substr(i + 1, end - i - 1), i});
            i = end + 1;
        } else if (c == '?') {
            std::size_t j = i + 1;
            while (j < s.size() && is_word(s[j])) ++j;
            out.push_back({PTok::Kind::Var, s.substr(i + 1, j - i - 1), i});
            i = j;
        } else if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            out.push_back({PTok::Kind::Int, s.substr(i, j - i), i});
            i = j;
        } else if (std::isalpha(c)) {
            std::size_t j = i;
            while (j < s.size() && is_word(s[j])) ++j;
            out.push_back({PTok::Kind::Word, s.substr(i, j - i), i});
            i = j;
        } else if (c == '<' || c == '>') {
            if (i + 1 < s.size() && s[i + 1] == '=') {
                out.push_back({PTok::Kind::Punct, s.substr(i, 2), i});
                i += 2;
            } else {
                out.push_back({PTok::Kind::Punct, std::string(1, c), i});
                ++i;
            }
        } else {
            out.push_back({PTok::Kind::Punct, std::string(1, c), i});
            ++i;
        }
    }
    return out;
}

class SubsetParser {
    struct ExtremumSub {
        bool maximizing = true;
        Query inner_query;
    };

    // Block plus an optional extremum subselect encountered inline.
    struct ParsedBlock {
        Block block;
        std::optional<ExtremumSub> extremum_sub;
    };

public:
    explicit SubsetParser(const std::string& text) : toks_(lex_sparql(text)) {}

    Query parse() {
        Query q;
        if (accept_word("ASK")) {
            q.form = Query::Form::Ask;
            q.where = plain_block(parse_braced_block());
            expect_end();
            return q;
        }
        expect_word("SELECT");
        if (accept_word("DISTINCT")) {
            q.answer_var = expect_var();
            expect_word("WHERE");
            ParsedBlock pb = parse_braced_block();
            if (!pb.extremum_sub) {
                q.form = Query::Form::SelectDistinct;
                q.where = std::move(pb.block);
                if (accept_word("GROUP")) {
                    expect_word("BY");
                    if (expect_var() != q.answer_var)
                        throw SparqlError("GROUP BY must use the answer variable");
                    q.group_by = true;
                    if (accept_word("HAVING")) q.having = parse_having();
                }
                expect_end();
                return q;
            }
            // Extremum: SELECT DISTINCT ?x WHERE { B { SELECT (MAX(?c) AS ?m)
            // ... } } GROUP BY ?x ?m HAVING ( agg = ?m )
            q.form = Query::Form::SelectExtremum;
            q.where = std::move(pb.block);
            const ExtremumSub& sub = *pb.extremum_sub;
            q.extremum = sub.maximizing ? Query::Extremum::Max : Query::Extremum::Min;
            if (sub.inner_query.answer_var != q.answer_var ||
                !(sub.inner_query.where == q.where))
                throw SparqlError("extremum subquery must mirror the outer pattern block");
            q.group_agg = sub.inner_query.group_agg;
            expect_word("GROUP");
            expect_word("BY");
            if (expect_var() != q.answer_var)
                throw SparqlError("GROUP BY must use the answer variable");
            if (expect_var() != "m") throw SparqlError("extremum GROUP BY must include ?m");
            q.group_by = true;
            expect_word("HAVING");
            expect_punct("(");
            AggExpr agg = parse_agg();
            expect_punct("=");
            if (expect_var() != "m") throw SparqlError("extremum HAVING must compare against ?m");
            expect_punct(")");
            if (!(agg == *q.group_agg))
                throw SparqlError("extremum HAVING aggregate must match the subquery aggregate");
            expect_end();
            return q;
        }
        if (peek_punct("(")) {
            expect_punct("(");
            if (accept_word("COUNT")) {
                expect_punct("(");
                expect_word("DISTINCT");
                q.answer_var = expect_var();
                expect_punct(")");
                expect_word("AS");
                if (expect_var() != "c") throw SparqlError("count alias must be ?c");
                expect_punct(")");
                expect_word("WHERE");
                q.form = Query::Form::SelectCount;
                // Either a plain block or { { SELECT ?x WHERE {...} GROUP BY
                // ?x HAVING (...) } }
                expect_punct("{");
                if (peek_punct("{") && peek_word_at(1, "SELECT")) {
                    expect_punct("{");
                    expect_word("SELECT");
                    if (expect_var() != q.answer_var)
                        throw SparqlError("inner projection must use the answer variable");
                    expect_word("WHERE");
                    q.where = plain_block(parse_braced_block());
                    expect_word("GROUP");
                    expect_word("BY");
                    if (expect_var() != q.answer_var)
                        throw SparqlError("GROUP BY must use the answer variable");
                    q.group_by = true;
                    if (accept_word("HAVING")) q.having = parse_having();
                    expect_punct("}");
                    expect_punct("}");
                } else {
                    q.where = plain_block(parse_block_until_close());
                    expect_punct("}");
                }
                expect_end();
                return q;
            }
            throw SparqlError("unsupported SELECT expression");
        }
        if (done() || peek().kind != PTok::Kind::Var)
            throw SparqlError("unsupported query form");
        // SELECT ?x (agg AS ?c) WHERE { ... } GROUP BY ?x
        q.answer_var = expect_var();
        expect_punct("(");
        q.group_agg = parse_agg();
        expect_word("AS");
        if (expect_var() != "c") throw SparqlError("aggregate alias must be ?c");
        expect_punct(")");
        expect_word("WHERE");
        q.form = Query::Form::SelectGroup;
        q.where = plain_block(parse_braced_block());
        expect_word("GROUP");
        expect_word("BY");
        if (expect_var() != q.answer_var)
            throw SparqlError("GROUP BY must use the answer variable");
        q.group_by = true;
        expect_end();
        return q;
    }

private:
    std::vector<PTok> toks_;
    std::size_t pos_ = 0;

    static Block plain_block(ParsedBlock pb) {
        if (pb.extremum_sub)
            throw SparqlError("subselect is only valid in the extremum scaffold");
        return std::move(pb.block);
    }

    bool done() const { return pos_ >= toks_.size(); }
    const PTok& peek() const {
        if (done()) throw SparqlError("unexpected end of query");
        return toks_[pos_];
    }

    bool peek_punct(const std::string& p) const {
        return !done() && toks_[pos_].kind == PTok::Kind::Punct && toks_[pos_].text == p;
    }

    bool peek_word_at(std::size_t ahead, const std::string& w) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() && toks_[i].kind == PTok::Kind::Word && toks_[i].text == w;
    }

    bool accept_word(const std::string& w) {
        if (!done() && toks_[pos_].kind == PTok::Kind::Word && toks_[pos_].text == w) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_word(const std::string& w) {
        if (!accept_word(w))
            throw SparqlError("expected '" + w + "'" +
                              (done() ? " at end of query" : " near '" + peek().text + "'"));
    }

    void expect_punct(const std::string& p) {
        if (!peek_punct(p))
            throw SparqlError("expected '" + p + "'" +
                              (done() ? " at end of query" : " near '" + peek().text + "'"));
        ++pos_;
    }

    std::string expect_var() {
        if (done() || peek().kind != PTok::Kind::Var) throw SparqlError("expected a variable");
        return toks_[pos_++].text;
    }

    Term parse_term() {
        const PTok& t = peek();
        ++pos_;
        switch (t.kind) {
            case PTok::Kind::Var: return Term::var(t.text);
            case PTok::Kind::Iri: return Term::iri(t.text);
            case PTok::Kind::Int: return Term::integer(std::stoll(t.text));
            default: throw SparqlError("expected a term, got '" + t.text + "'");
        }
    }

    AggExpr parse_agg() {
        AggExpr agg;
        while (true) {
            expect_word("COUNT");
            expect_punct("(");
            expect_word("DISTINCT");
            agg.count_vars.push_back(expect_var());
            expect_punct(")");
            if (peek_punct("+")) {
                ++pos_;
                continue;
            }
            break;
        }
        return agg;
    }

    Having parse_having() {
        expect_punct("(");
        Having h;
        h.lhs = parse_agg();
        const PTok& opt = peek();
        if (opt.kind != PTok::Kind::Punct) throw SparqlError("expected comparison operator");
        ++pos_;
        if (opt.text == "<") h.op = CmpOp::Lt;
        else if (opt.text == "<=") h.op = CmpOp::Le;
        else if (opt.text == ">") h.op = CmpOp::Gt;
        else if (opt.text == ">=") h.op = CmpOp::Ge;
        else if (opt.text == "=") h.op = CmpOp::Eq;
        else throw SparqlError("unknown comparison operator '" + opt.text + "'");
        if (!done() && peek().kind == PTok::Kind::Int) {
            h.rhs_number = std::stoll(peek().text);
            ++pos_;
        } else {
            h.rhs_agg = parse_agg();
        }
        expect_punct(")");
        return h;
    }

    ParsedBlock parse_braced_block() {
        expect_punct("{");
        ParsedBlock b = parse_block_until_close();
        expect_punct("}");
        return b;
    }

    ParsedBlock parse_block_until_close() {
        ParsedBlock b;
        while (!done() && !peek_punct("}")) {
            if (accept_word("VALUES")) {
                ValuesClause vc;
                vc.var = expect_var();
                expect_punct("{");
                while (!peek_punct("}")) vc.values.push_back(parse_term());
                expect_punct("}");
                b.block.values.push_back(std::move(vc));
            } else if (accept_word("MINUS")) {
                MinusGroup m;
                m.block.push_back(plain_block(parse_braced_block()));
                b.block.minuses.push_back(std::move(m));
            } else if (peek_punct("{")) {
                // union group or extremum subselect
                std::size_t save = pos_;
                expect_punct("{");
                if (accept_word("SELECT")) {
                    pos_ = save;
                    b.extremum_sub = parse_extremum_sub();
                    continue;
                }
                pos_ = save;
                UnionGroup u;
                u.branches.push_back(plain_block(parse_braced_block()));
                while (accept_word("UNION"))
                    u.branches.push_back(plain_block(parse_braced_block()));
                b.block.unions.push_back(std::move(u));
            } else {
                TriplePattern t;
                t.subject = parse_term();
                t.predicate = parse_term();
                t.object = parse_term();
                expect_punct(".");
                b.block.triples.push_back(t);
            }
        }
        return b;
    }

    ExtremumSub parse_extremum_sub() {
        // { SELECT (MAX(?c) AS ?m) WHERE { { SELECT ?x (agg AS ?c) WHERE
        // { ... } GROUP BY ?x } } }
        ExtremumSub sub;
        expect_punct("{");
        expect_word("SELECT");
        expect_punct("(");
        if (accept_word("MAX")) sub.maximizing = true;
        else if (accept_word("MIN")) sub.maximizing = false;
        else throw SparqlError("expected MAX or MIN in extremum subquery");
        expect_punct("(");
        if (expect_var() != "c") throw SparqlError("extremum subquery must aggregate ?c");
        expect_punct(")");
        expect_word("AS");
        if (expect_var() != "m") throw SparqlError("extremum alias must be ?m");
        expect_punct(")");
        expect_word("WHERE");
        expect_punct("{");
        expect_punct("{");
        expect_word("SELECT");
        Query& iq = sub.inner_query;
        iq.form = Query::Form::SelectGroup;
        iq.answer_var = expect_var();
        expect_punct("(");
        iq.group_agg = parse_agg();
        expect_word("AS");
        if (expect_var() != "c") throw SparqlError("aggregate alias must be ?c");
        expect_punct(")");
        expect_word("WHERE");
        iq.where = plain_block(parse_braced_block());
        expect_word("GROUP");
        expect_word("BY");
        if (expect_var() != iq.answer_var)
            throw SparqlError("GROUP BY must use the answer variable");
        iq.group_by = true;
        expect_punct("}");
        expect_punct("}");
        expect_punct("}");
        return sub;
    }

    void expect_end() {
        if (!done())
            throw SparqlError("trailing content after query: '" + peek().text + "'");
    }
};

} // namespace

SparqlQuery parse_sparql_subset(const std::string& text) {
    SubsetParser p(text);
    return p.parse();
}

// ---------------------------------------------------------------------------
// Executor

namespace {

using Value = std::variant<std::string, std::int64_t>; // iri token or integer
using Row = std::map<std::string, Value>;

std::optional<Value> term_value(const Term& t, const Row& row) {
    switch (t.kind) {
        case Term::Kind::Iri: return Value{t.text};
        case Term::Kind::Int: return Value{t.num};
        case Term::Kind::Var: {
            auto it = row.find(t.text);
            if (it == row.end()) return std::nullopt;
            return it->second;
        }
    }
    return std::nullopt;
}

bool compatible(const Row& a, const Row& b, bool* overlap = nullptr) {
    bool any = false;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (it != b.end()) {
            any = true;
            if (!(it->second == v)) return false;
        }
    }
    if (overlap) *overlap = any;
    return true;
}

Row merge_rows(const Row& a, const Row& b) {
    Row out = a;
    for (const auto& [k, v] : b) out.emplace(k, v);
    return out;
}

class Engine {
public:
    explicit Engine(const KnowledgeGraph& g) : g_(g) {}

    std::vector<Row> eval_block(const Block& b) {
        std::vector<Row> rows = {Row{}};
        for (const auto& vc : b.values) {
            std::vector<Row> next;
            for (const auto& row : rows) {
                for (const auto& t : vc.values) {
                    Value v = t.kind == Term::Kind::Int ? Value{t.num} : Value{t.text};
                    auto it = row.find(vc.var);
                    if (it != row.end()) {
                        if (it->second == v) next.push_back(row);
                    } else {
                        Row r = row;
                        r[vc.var] = v;
                        next.push_back(std::move(r));
                    }
                }
            }
            rows = std::move(next);
        }
        for (const auto& t : b.triples) rows = join_triple(rows, t);
        for (const auto& u : b.unions) {
            std::vector<Row> branch_rows;
            for (const auto& br : u.branches) {
                auto rs = eval_block(br);
                branch_rows.insert(branch_rows.end(), rs.begin(), rs.end());
            }
            rows = join_rows(rows, branch_rows);
        }
        for (const auto& m : b.minuses) {
            std::vector<Row> minus_rows = eval_block(m.block.front());
            std::vector<Row> kept;
            for (const auto& row : rows) {
                bool removed = false;
                for (const auto& mr : minus_rows) {
                    bool overlap = false;
                    if (compatible(row, mr, &overlap) && overlap) {
                        removed = true;
                        break;
                    }
                }
                if (!removed) kept.push_back(row);
            }
            rows = std::move(kept);
        }
        return rows;
    }

    std::vector<Row> join_triple(const std::vector<Row>& rows, const TriplePattern& t) {
        if (t.predicate.kind != Term::Kind::Iri)
            throw SparqlError("variable predicates are outside the subset");
        RelationId rel{t.predicate.text};
        std::vector<Row> out;
        for (const auto& row : rows) {
            auto s = term_value(t.subject, row);
            auto o = term_value(t.object, row);
            if (s && std::holds_alternative<std::int64_t>(*s)) continue;
            if (o && std::holds_alternative<std::int64_t>(*o)) continue;
            if (s && o) {
                if (g_.has_triple(EntityId{std::get<std::string>(*s)}, rel,
                                  EntityId{std::get<std::string>(*o)}))
                    out.push_back(row);
            } else if (s && !o) {
                for (const auto& tail : g_.objects_of(EntityId{std::get<std::string>(*s)}, rel)) {
                    Row r = row;
                    r[t.object.text] = tail.value;
                    out.push_back(std::move(r));
                }
            } else if (!s && o) {
                for (const auto& head : g_.subjects_of(rel, EntityId{std::get<std::string>(*o)})) {
                    Row r = row;
                    r[t.subject.text] = head.value;
                    out.push_back(std::move(r));
                }
            } else {
                for (const auto& fact : g_.facts()) {
                    if (fact.relation != rel) continue;
                    if (t.subject.text == t.object.text && fact.head != fact.tail) continue;
                    Row r = row;
                    r[t.subject.text] = fact.head.value;
                    r[t.object.text] = fact.tail.value;
                    out.push_back(std::move(r));
                }
            }
        }
        return out;
    }

    static std::vector<Row> join_rows(const std::vector<Row>& a, const std::vector<Row>& b) {
        std::vector<Row> out;
        for (const auto& ra : a)
            for (const auto& rb : b)
                if (compatible(ra, rb)) out.push_back(merge_rows(ra, rb));
        return out;
    }

private:
    const KnowledgeGraph& g_;
};

void collect_block_vars(const Block& b, std::set<std::string>& vars) {
    for (const auto& vc : b.values) vars.insert(vc.var);
    for (const auto& t : b.triples) {
        if (t.subject.kind == Term::Kind::Var) vars.insert(t.subject.text);
        if (t.object.kind == Term::Kind::Var) vars.insert(t.object.text);
    }
    for (const auto& u : b.unions)
        for (const auto& br : u.branches) collect_block_vars(br, vars);
    // MINUS variables do not bind the outer scope.
}

std::int64_t aggregate(const AggExpr& agg, const std::vector<Row>& rows) {
    std::int64_t total = 0;
    for (const auto& v : agg.count_vars) {
        std::set<Value> distinct;
        for (const auto& row : rows) {
            auto it = row.find(v);
            if (it != row.end()) distinct.insert(it->second);
        }
        total += (std::int64_t)distinct.size();
    }
    return total;
}

bool having_passes(const Having& h, const std::vector<Row>& rows) {
    std::int64_t lhs = aggregate(h.lhs, rows);
    std::int64_t rhs = h.rhs_number ? *h.rhs_number : aggregate(*h.rhs_agg, rows);
    switch (h.op) {
        case CmpOp::Lt: return lhs < rhs;
        case CmpOp::Le: return lhs <= rhs;
        case CmpOp::Gt: return lhs > rhs;
        case CmpOp::Ge: return lhs >= rhs;
        case CmpOp::Eq: return lhs == rhs;
    }
    return false;
}

} // namespace

EvalResult execute_sparql(const SparqlQuery& q, const KnowledgeGraph& g) {
    // Static check: every referenced variable must be bindable.
    std::set<std::string> vars;
    collect_block_vars(q.where, vars);
    if (q.form != Query::Form::Ask && !vars.count(q.answer_var))
        throw SparqlError("answer variable ?" + q.answer_var + " is never bound");
    auto check_agg = [&vars](const AggExpr& a) {
        for (const auto& v : a.count_vars)
            if (!vars.count(v))
                throw SparqlError("aggregated variable ?" + v + " is never bound");
    };
    if (q.group_agg) check_agg(*q.group_agg);
    if (q.having) {
        check_agg(q.having->lhs);
        if (q.having->rhs_agg) check_agg(*q.having->rhs_agg);
    }

    Engine engine(g);
    std::vector<Row> rows = engine.eval_block(q.where);

    if (q.form == Query::Form::Ask) return EvalResult::boolean(!rows.empty());

    // Group rows by the answer variable (skipping rows that leave it unbound).
    std::map<Value, std::vector<Row>> groups;
    for (auto& row : rows) {
        auto it = row.find(q.answer_var);
        if (it == row.end()) continue;
        groups[it->second].push_back(std::move(row));
    }

    auto entity_keys = [&]() {
        std::set<EntityId> out;
        for (const auto& [k, _] : groups)
            if (std::holds_alternative<std::string>(k)) out.insert(EntityId{std::get<std::string>(k)});
        return out;
    };

    switch (q.form) {
        case Query::Form::SelectDistinct: {
            if (q.group_by && q.having) {
                std::set<EntityId> out;
                for (const auto& [k, rs] : groups)
                    if (having_passes(*q.having, rs))
                        out.insert(EntityId{std::get<std::string>(k)});
                return EvalResult::entities(std::move(out));
            }
            // Tag by term content: all-integer bindings form a value set.
            bool any = false, all_ints = true;
            for (const auto& [k, _] : groups) {
                any = true;
                if (!std::holds_alternative<std::int64_t>(k)) all_ints = false;
            }
            if (any && all_ints) {
                std::set<std::int64_t> out;
                for (const auto& [k, _] : groups) out.insert(std::get<std::int64_t>(k));
                return EvalResult::values(std::move(out));
            }
            return EvalResult::entities(entity_keys());
        }
        case Query::Form::SelectCount: {
            if (q.group_by) {
                std::int64_t n = 0;
                for (const auto& [k, rs] : groups)
                    if (!q.having || having_passes(*q.having, rs)) ++n;
                return EvalResult::integer(n);
            }
            return EvalResult::integer((std::int64_t)groups.size());
        }
        case Query::Form::SelectGroup: {
            GroupedCounts gc;
            for (const auto& [k, rs] : groups)
                gc[EntityId{std::get<std::string>(k)}] = aggregate(*q.group_agg, rs);
            return EvalResult::grouped(std::move(gc));
        }
        case Query::Form::SelectExtremum: {
            GroupedCounts gc;
            for (const auto& [k, rs] : groups)
                gc[EntityId{std::get<std::string>(k)}] = aggregate(*q.group_agg, rs);
            std::set<EntityId> out;
            if (gc.empty()) return EvalResult::entities(std::move(out));
            std::int64_t best = gc.begin()->second;
            for (const auto& [k, v] : gc)
                best = q.extremum == Query::Extremum::Max ? std::max(best, v) : std::min(best, v);
            for (const auto& [k, v] : gc)
                if (v == best) out.insert(k);
            return EvalResult::entities(std::move(out));
        }
        case Query::Form::Ask:
            break;
    }
    throw SparqlError("unreachable");
}

// ---------------------------------------------------------------------------
// WHERE-pattern -> core reconstruction

namespace {

class WhereDecompiler {
public:
    explicit WhereDecompiler(const Block& b) : block_(b) {}

    SExpr decompile() {
        if (!block_.unions.empty() || !block_.minuses.empty())
            throw SparqlError("WHERE shape unsupported: UNION/MINUS groups do not map to a core");
        // Single all-constant triple: a truth probe.
        if (block_.triples.size() == 1 && block_.values.empty() && all_constant(block_.triples[0])) {
            const auto& t = block_.triples[0];
            return SExpr::call(Func::IsTrue,
                               {SExpr::entity(t.subject.text, true),
                                SExpr::relation(t.predicate.text, true),
                                SExpr::entity(t.object.text, true)});
        }

        index_definitions();

        std::vector<SExpr> conjuncts;
        for (std::size_t i = 0; i < block_.triples.size(); ++i) {
            const auto& t = block_.triples[i];
            bool subj_x = is_answer(t.subject);
            bool obj_x = is_answer(t.object);
            if (subj_x && obj_x)
                throw SparqlError(
                    "WHERE shape unsupported: answer variable on both sides of pattern " +
                    render_pattern(t));
            if (!subj_x && !obj_x) continue; // defining triple for an inner variable
            if (t.predicate.kind != Term::Kind::Iri)
                throw SparqlError("WHERE shape unsupported: variable predicate in pattern " +
                                  render_pattern(t));
            SExpr rel = SExpr::relation(t.predicate.text, true);
            if (subj_x) {
                conjuncts.push_back(
                    SExpr::call(Func::Join, {std::move(rel), build_operand(t.object)}));
            } else {
                conjuncts.push_back(SExpr::call(
                    Func::Join,
                    {SExpr::call(Func::Reverse, {std::move(rel)}), build_operand(t.subject)}));
            }
        }
        if (conjuncts.empty())
            throw SparqlError("WHERE shape unsupported: answer variable ?x never bound");

        for (std::size_t i = 0; i < block_.triples.size(); ++i)
            if (!used_.count(i) && !touches_answer(block_.triples[i]))
                throw SparqlError("WHERE shape unsupported: dangling pattern " +
                                  render_pattern(block_.triples[i]));

        SExpr core = conjuncts.size() == 1
                         ? std::move(conjuncts[0])
                         : SExpr::call(Func::And, std::move(conjuncts));
        if (!match_core_pattern(core))
            throw SparqlError("WHERE shape unsupported: reconstruction '" + print(core) +
                              "' matches no core skeleton");
        return core;
    }

private:
    const Block& block_;
    std::map<std::string, const ValuesClause*> values_by_var_;
    std::map<std::string, std::size_t> def_triple_by_var_; // var -> defining triple
    std::set<std::string> visiting_;
    std::set<std::size_t> used_;

    static bool all_constant(const TriplePattern& t) {
        return t.subject.kind == Term::Kind::Iri && t.predicate.kind == Term::Kind::Iri &&
               t.object.kind == Term::Kind::Iri;
    }

    static bool is_answer(const Term& t) { return t.kind == Term::Kind::Var && t.text == "x"; }

    static bool touches_answer(const TriplePattern& t) {
        return is_answer(t.subject) || is_answer(t.object);
    }

    static std::string render_pattern(const TriplePattern& t) {
        return render_term(t.subject) + " " + render_term(t.predicate) + " " +
               render_term(t.object);
    }

    void index_definitions() {
        for (const auto& vc : block_.values) {
            if (!values_by_var_.emplace(vc.var, &vc).second)
                throw SparqlError("WHERE shape unsupported: variable ?" + vc.var +
                                  " has multiple VALUES definitions");
        }
        for (std::size_t i = 0; i < block_.triples.size(); ++i) {
            const auto& t = block_.triples[i];
            if (touches_answer(t)) continue;
            // One side must be a variable being defined; pick it.
            const Term* var_side = nullptr;
            if (t.subject.kind == Term::Kind::Var) var_side = &t.subject;
            if (t.object.kind == Term::Kind::Var) {
                if (var_side)
                    throw SparqlError(
                        "WHERE shape unsupported: pattern with two inner variables " +
                        render_pattern(t));
                var_side = &t.object;
            }
            if (!var_side)
                throw SparqlError("WHERE shape unsupported: constant pattern " +
                                  render_pattern(t) + " outside a truth probe");
            if (values_by_var_.count(var_side->text) ||
                !def_triple_by_var_.emplace(var_side->text, i).second)
                throw SparqlError("WHERE shape unsupported: variable ?" + var_side->text +
                                  " defined more than once");
        }
    }

    SExpr build_operand(const Term& t) {
        if (t.kind == Term::Kind::Iri) return SExpr::entity(t.text, true);
        if (t.kind == Term::Kind::Int)
            throw SparqlError("WHERE shape unsupported: integer term in graph pattern");
        const std::string& v = t.text;
        if (!visiting_.insert(v).second)
            throw SparqlError("WHERE shape unsupported: cyclic definition of ?" + v);
        SExpr out = build_var(v);
        visiting_.erase(v);
        return out;
    }

    SExpr build_var(const std::string& v) {
        if (auto it = values_by_var_.find(v); it != values_by_var_.end()) {
            std::vector<SExpr> items;
            for (const auto& val : it->second->values) {
                if (val.kind != Term::Kind::Iri)
                    throw SparqlError("WHERE shape unsupported: non-entity VALUES for ?" + v);
                items.push_back(SExpr::entity(val.text, true));
            }
            return SExpr::call(Func::Values, std::move(items));
        }
        auto it = def_triple_by_var_.find(v);
        if (it == def_triple_by_var_.end())
            throw SparqlError("WHERE shape unsupported: variable ?" + v + " is never defined");
        used_.insert(it->second);
        const auto& t = block_.triples[it->second];
        SExpr rel = SExpr::relation(t.predicate.text, true);
        if (t.subject.kind == Term::Kind::Var && t.subject.text == v)
            return SExpr::call(Func::Join, {std::move(rel), build_operand(t.object)});
        return SExpr::call(Func::Join, {SExpr::call(Func::Reverse, {std::move(rel)}),
                                        build_operand(t.subject)});
    }
};

} // namespace

SExpr from_where(const WherePattern& w) {
    WhereDecompiler d(w);
    return d.decompile();
}

} // namespace kgqa
