#include "kgqa/sexpr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <utility>

namespace kgqa {

namespace {

constexpr std::size_t kMaxDepth = 256;

const std::map<std::string, Func> kFuncByName = {
    {"JOIN", Func::Join},        {"R", Func::Reverse},
    {"AND", Func::And},          {"OR", Func::Or},
    {"VALUES", Func::Values},    {"IS_TRUE", Func::IsTrue},
    {"COUNT", Func::Count},      {"DISTINCT", Func::Distinct},
    {"GROUP_COUNT", Func::GroupCount}, {"GROUP_SUM", Func::GroupSum},
    {"ALL", Func::All},          {"ARGMAX", Func::ArgMax},
    {"ARGMIN", Func::ArgMin},    {"LT", Func::Lt},
    {"LE", Func::Le},            {"GT", Func::Gt},
    {"GE", Func::Ge},            {"EQ", Func::Eq},
    {"DIFF", Func::Diff},
};

struct Arity {
    std::size_t min;
    std::size_t max; // SIZE_MAX for variadic
};

Arity arity_of(Func f) {
    switch (f) {
        case Func::Join: return {2, 2};
        case Func::Reverse: return {1, 1};
        case Func::And: return {2, SIZE_MAX};
        case Func::Or: return {2, SIZE_MAX};
        case Func::Values: return {1, SIZE_MAX};
        case Func::IsTrue: return {3, 3};
        case Func::Count: return {1, 1};
        case Func::Distinct: return {1, 1};
        case Func::GroupCount: return {1, 1};
        case Func::GroupSum: return {2, 2};
        case Func::All: return {1, SIZE_MAX};
        case Func::ArgMax: return {1, 1};
        case Func::ArgMin: return {1, 1};
        case Func::Lt:
        case Func::Le:
        case Func::Gt:
        case Func::Ge:
        case Func::Eq: return {2, 2};
        case Func::Diff: return {2, 2};
    }
    return {0, 0};
}

bool is_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_placeholder_token(const std::string& s) {
    if (s == "number" || s == "compare" || s == "optimize") return true;
    if (s.size() >= 2 && s[0] == 'x') {
        return std::all_of(s.begin() + 1, s.end(),
                           [](unsigned char c) { return std::isdigit(c); });
    }
    return false;
}

struct Token {
    enum class Kind { Open, Close, Atom };
    Kind kind;
    std::string text;
    std::size_t offset;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(') {
            out.push_back({Token::Kind::Open, "(", i});
            ++i;
        } else if (c == ')') {
            out.push_back({Token::Kind::Close, ")", i});
            ++i;
        } else {
            std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
                   text[i] != '(' && text[i] != ')')
                ++i;
            out.push_back({Token::Kind::Atom, text.substr(start, i - start), start});
        }
    }
    return out;
}

// Balance pre-scan: reports the first unmatched '(' or the first orphan ')'.
void check_balance(const std::vector<Token>& toks) {
    std::vector<std::size_t> opens;
    for (const auto& t : toks) {
        if (t.kind == Token::Kind::Open) opens.push_back(t.offset);
        else if (t.kind == Token::Kind::Close) {
            if (opens.empty()) throw ParseError("unmatched ')'", t.offset);
            opens.pop_back();
        }
    }
    if (!opens.empty()) throw ParseError("unmatched '('", opens.front());
}

struct Parser {
    const std::vector<Token>& toks;
    std::size_t pos = 0;
    bool template_mode = false;
    bool lenient_arity = false;

    const Token& peek() const { return toks[pos]; }
    bool done() const { return pos >= toks.size(); }

    SExpr parse_node(std::size_t depth) {
        if (depth > kMaxDepth)
            throw ParseError("nesting exceeds maximum depth of 256", peek().offset);
        const Token& t = peek();
        if (t.kind == Token::Kind::Atom) {
            ++pos;
            SExpr leaf;
            leaf.kind = SExpr::Kind::Entity; // reclassified by slot later
            leaf.token = t.text;
            return leaf;
        }
        if (t.kind == Token::Kind::Close)
            throw ParseError("unexpected ')'", t.offset);

        std::size_t open_off = t.offset;
        ++pos; // consume '('
        if (done()) throw ParseError("unterminated expression", open_off);
        const Token& head = peek();
        if (head.kind == Token::Kind::Close)
            throw ParseError("empty expression '()'", head.offset);
        if (head.kind != Token::Kind::Atom)
            throw ParseError("function head must be an atom", head.offset);

        auto f = kFuncByName.find(head.text);
        bool placeholder_head = template_mode && f == kFuncByName.end() &&
                                (head.text == "compare" || head.text == "optimize");
        if (f == kFuncByName.end() && !placeholder_head)
            throw ParseError("unknown function head '" + head.text + "'", head.offset);
        ++pos;

        SExpr node;
        node.kind = SExpr::Kind::Call;
        node.token = head.text;
        while (!done() && peek().kind != Token::Kind::Close)
            node.args.push_back(parse_node(depth + 1));
        if (done()) throw ParseError("unterminated expression", open_off);
        ++pos; // consume ')'

        if (node.args.empty())
            throw ParseError("empty argument list for '" + head.text + "'", open_off);
        if (!lenient_arity && !placeholder_head) {
            Arity a = arity_of(f->second);
            if (node.args.size() < a.min || node.args.size() > a.max)
                throw ParseError("'" + head.text + "' expects " +
                                     (a.max == SIZE_MAX
                                          ? "at least " + std::to_string(a.min)
                                          : (a.min == a.max
                                                 ? "exactly " + std::to_string(a.min)
                                                 : std::to_string(a.min) + ".." +
                                                       std::to_string(a.max))) +
                                     " arguments, got " + std::to_string(node.args.size()),
                                 open_off);
        }
        return node;
    }
};

// Leaf role assignment. Relation slots: JOIN arg0, R arg0, IS_TRUE arg1.
// Digit tokens are numbers everywhere; placeholder tokens (template mode)
// beat both rules.
void classify(SExpr& node, bool relation_slot, bool template_mode) {
    if (node.kind != SExpr::Kind::Call) {
        if (template_mode && is_placeholder_token(node.token)) {
            node.kind = SExpr::Kind::Placeholder;
            return;
        }
        if (is_digits(node.token)) {
            node.kind = SExpr::Kind::Number;
            node.number = std::stoll(node.token);
            return;
        }
        node.kind = relation_slot ? SExpr::Kind::Relation : SExpr::Kind::Entity;
        return;
    }
    auto f = node.func();
    for (std::size_t i = 0; i < node.args.size(); ++i) {
        bool rel = f && ((*f == Func::Join && i == 0) || (*f == Func::Reverse && i == 0) ||
                         (*f == Func::IsTrue && i == 1));
        classify(node.args[i], rel, template_mode);
    }
}

SExpr parse_impl(const std::string& text, bool template_mode, bool lenient) {
    auto toks = tokenize(text);
    if (toks.empty()) throw ParseError("empty input", 0);
    check_balance(toks);
    Parser p{toks, 0, template_mode, lenient};
    SExpr root = p.parse_node(0);
    if (!p.done())
        throw ParseError("trailing content after expression", p.peek().offset);
    classify(root, false, template_mode);
    return root;
}

struct PathedTypeError {
    static TypeError at(const std::string& msg, const std::vector<std::size_t>& path) {
        std::string p;
        for (std::size_t i : path) {
            if (!p.empty()) p += '.';
            p += std::to_string(i);
        }
        return TypeError(msg, p);
    }
};

class TypeChecker {
public:
    ValueType check(const SExpr& e) {
        path_.clear();
        return check_set(e);
    }

private:
    std::vector<std::size_t> path_;

    [[noreturn]] void fail(const std::string& msg) { throw PathedTypeError::at(msg, path_); }

    ValueType check_arg(const SExpr& e, std::size_t i) {
        path_.push_back(i);
        ValueType t = check_set(e);
        path_.pop_back();
        return t;
    }

    void require_leaf(const SExpr& e, std::size_t i, SExpr::Kind kind, const char* what) {
        if (e.args[i].kind != kind) {
            path_.push_back(i);
            fail(std::string("expected ") + what);
        }
    }

    ValueType check_set(const SExpr& e) {
        switch (e.kind) {
            case SExpr::Kind::Entity:
                return ValueType::EntitySet; // singleton denotation
            case SExpr::Kind::Number:
                return ValueType::Integer;
            case SExpr::Kind::Relation:
                fail("relation reference outside a relation slot");
            case SExpr::Kind::Placeholder:
                fail("placeholder '" + e.token + "' in executable expression");
            case SExpr::Kind::Call:
                break;
        }
        auto f = e.func();
        if (!f) fail("placeholder head '" + e.token + "' in executable expression");
        Arity a = arity_of(*f);
        if (e.args.size() < a.min || e.args.size() > a.max)
            fail("'" + e.token + "' has wrong argument count " + std::to_string(e.args.size()));

        switch (*f) {
            case Func::Join: {
                const SExpr& r = e.args[0];
                if (r.kind == SExpr::Kind::Relation) {
                    // forward join
                } else if (r.is_call() && r.func() == Func::Reverse) {
                    check_arg(r, 0);
                } else {
                    path_.push_back(0);
                    fail("JOIN first argument must be a relation or (R relation)");
                }
                if (check_arg(e.args[1], 1) != ValueType::EntitySet) {
                    path_.push_back(1);
                    fail("JOIN second argument must be an entity set");
                }
                return ValueType::EntitySet;
            }
            case Func::Reverse:
                require_leaf(e, 0, SExpr::Kind::Relation, "a relation token");
                return ValueType::PairSet;
            case Func::And:
            case Func::Or:
            case Func::Diff: {
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (check_arg(e.args[i], i) != ValueType::EntitySet) {
                        path_.push_back(i);
                        fail("'" + e.token + "' arguments must be entity sets");
                    }
                }
                return ValueType::EntitySet;
            }
            case Func::Values: {
                bool all_entities = true, all_numbers = true;
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    const SExpr& v = e.args[i];
                    if (v.kind == SExpr::Kind::Entity) all_numbers = false;
                    else if (v.kind == SExpr::Kind::Number) all_entities = false;
                    else {
                        path_.push_back(i);
                        fail("VALUES arguments must be entity or number literals");
                    }
                }
                if (all_entities) return ValueType::EntitySet;
                if (all_numbers) return ValueType::ValueSet;
                fail("VALUES arguments must be homogeneous");
            }
            case Func::IsTrue:
                require_leaf(e, 0, SExpr::Kind::Entity, "an entity token");
                require_leaf(e, 1, SExpr::Kind::Relation, "a relation token");
                require_leaf(e, 2, SExpr::Kind::Entity, "an entity token");
                return ValueType::Boolean;
            case Func::All: {
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (check_arg(e.args[i], i) != ValueType::Boolean) {
                        path_.push_back(i);
                        fail("ALL arguments must be booleans");
                    }
                }
                return ValueType::Boolean;
            }
            case Func::Count: {
                ValueType t = check_arg(e.args[0], 0);
                if (t != ValueType::EntitySet && t != ValueType::ValueSet &&
                    t != ValueType::GroupedCounts) {
                    path_.push_back(0);
                    fail("COUNT argument must be a set or grouped counts");
                }
                return ValueType::Integer;
            }
            case Func::Distinct: {
                ValueType t = check_arg(e.args[0], 0);
                if (t != ValueType::EntitySet && t != ValueType::ValueSet) {
                    path_.push_back(0);
                    fail("DISTINCT argument must be a set");
                }
                return t;
            }
            case Func::GroupCount: {
                if (check_arg(e.args[0], 0) != ValueType::EntitySet) {
                    path_.push_back(0);
                    fail("GROUP_COUNT argument must be an entity set");
                }
                return ValueType::GroupedCounts;
            }
            case Func::GroupSum: {
                for (std::size_t i = 0; i < 2; ++i) {
                    if (check_arg(e.args[i], i) != ValueType::GroupedCounts) {
                        path_.push_back(i);
                        fail("GROUP_SUM arguments must be grouped counts");
                    }
                }
                return ValueType::GroupedCounts;
            }
            case Func::ArgMax:
            case Func::ArgMin: {
                if (check_arg(e.args[0], 0) != ValueType::GroupedCounts) {
                    path_.push_back(0);
                    fail("'" + e.token + "' argument must be grouped counts");
                }
                return ValueType::EntitySet;
            }
            case Func::Lt:
            case Func::Le:
            case Func::Gt:
            case Func::Ge:
            case Func::Eq: {
                if (check_arg(e.args[0], 0) != ValueType::GroupedCounts) {
                    path_.push_back(0);
                    fail("'" + e.token + "' first argument must be grouped counts");
                }
                // Right side: integer literal or an entity-set expression
                // (compared keywise against its grouped counts).
                const SExpr& rhs = e.args[1];
                if (rhs.kind == SExpr::Kind::Number) return ValueType::EntitySet;
                if (check_arg(rhs, 1) == ValueType::EntitySet) return ValueType::EntitySet;
                path_.push_back(1);
                fail("'" + e.token +
                     "' second argument must be an integer literal or an entity set");
            }
        }
        fail("unreachable");
    }
};

void collect_placeholders(const SExpr& e, std::vector<std::string>& out) {
    auto add = [&out](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    if (e.kind == SExpr::Kind::Placeholder) {
        add(e.token);
        return;
    }
    if (e.is_call()) {
        if (!e.func()) add(e.token); // placeholder-headed call
        for (const auto& a : e.args) collect_placeholders(a, out);
    }
}

bool match_skeleton(const SExpr& skel, const SExpr& node) {
    if (skel.is_call()) {
        if (!node.is_call() || node.token != skel.token) return false;
        if (skel.func() == Func::Values) {
            // variadic: one-or-more leaf arguments
            if (node.args.empty()) return false;
            return std::all_of(node.args.begin(), node.args.end(),
                               [](const SExpr& a) { return a.is_leaf(); });
        }
        if (node.args.size() != skel.args.size()) return false;
        for (std::size_t i = 0; i < skel.args.size(); ++i)
            if (!match_skeleton(skel.args[i], node.args[i])) return false;
        return true;
    }
    // wildcard: binds a single leaf
    return node.is_leaf();
}

} // namespace

std::optional<Func> func_from_name(const std::string& name) {
    auto it = kFuncByName.find(name);
    if (it == kFuncByName.end()) return std::nullopt;
    return it->second;
}

const std::string& func_name(Func f) {
    static const std::map<Func, std::string> names = [] {
        std::map<Func, std::string> m;
        for (const auto& [name, fn] : kFuncByName) m[fn] = name;
        return m;
    }();
    return names.at(f);
}

const std::string& value_type_name(ValueType t) {
    static const std::array<std::string, 6> names = {
        "EntitySet", "ValueSet", "PairSet", "GroupedCounts", "Boolean", "Integer"};
    return names[static_cast<std::size_t>(t)];
}

SExpr SExpr::call(const std::string& head, std::vector<SExpr> args) {
    SExpr e;
    e.kind = Kind::Call;
    e.token = head;
    e.args = std::move(args);
    return e;
}

SExpr SExpr::call(Func f, std::vector<SExpr> args) { return call(func_name(f), std::move(args)); }

SExpr SExpr::entity(std::string token, bool resolved) {
    SExpr e;
    e.kind = Kind::Entity;
    e.token = std::move(token);
    e.resolved = resolved;
    return e;
}

SExpr SExpr::relation(std::string token, bool resolved) {
    SExpr e;
    e.kind = Kind::Relation;
    e.token = std::move(token);
    e.resolved = resolved;
    return e;
}

SExpr SExpr::number_lit(std::int64_t n) {
    SExpr e;
    e.kind = Kind::Number;
    e.number = n;
    e.token = std::to_string(n);
    return e;
}

SExpr SExpr::placeholder(std::string name) {
    SExpr e;
    e.kind = Kind::Placeholder;
    e.token = std::move(name);
    return e;
}

std::optional<Func> SExpr::func() const {
    if (kind != Kind::Call) return std::nullopt;
    return func_from_name(token);
}

bool SExpr::operator==(const SExpr& other) const {
    if (kind != other.kind || token != other.token) return false;
    if (kind == Kind::Number && number != other.number) return false;
    return args == other.args;
}

SExpr parse(const std::string& text) { return parse_impl(text, false, false); }

SExpr parse_template(const std::string& text) { return parse_impl(text, true, false); }

namespace detail {
// Structure-only parse used by syntax repair: known heads, any arity.
SExpr parse_lenient(const std::string& text) { return parse_impl(text, false, true); }
} // namespace detail

std::string print(const SExpr& e, bool allow_placeholders) {
    switch (e.kind) {
        case SExpr::Kind::Entity:
        case SExpr::Kind::Relation:
            return e.token;
        case SExpr::Kind::Number:
            return std::to_string(e.number);
        case SExpr::Kind::Placeholder:
            if (!allow_placeholders)
                throw Error("cannot print placeholder '" + e.token + "' in executable rendering");
            return e.token;
        case SExpr::Kind::Call: {
            if (!e.func() && !allow_placeholders)
                throw Error("cannot print placeholder head '" + e.token +
                            "' in executable rendering");
            std::string out = "(" + e.token;
            for (const auto& a : e.args) {
                out += ' ';
                out += print(a, allow_placeholders);
            }
            out += ')';
            return out;
        }
    }
    return {};
}

ValueType type_check(const SExpr& e) {
    TypeChecker tc;
    return tc.check(e);
}

std::optional<ValueType> try_type_check(const SExpr& e, std::string* error) {
    try {
        return type_check(e);
    } catch (const TypeError& err) {
        if (error) *error = err.what();
        return std::nullopt;
    }
}

bool is_core(const SExpr& e) {
    if (e.kind == SExpr::Kind::Placeholder) return false;
    if (!e.is_call()) return true;
    auto f = e.func();
    if (!f) return false;
    switch (*f) {
        case Func::Join:
        case Func::Reverse:
        case Func::And:
        case Func::Values:
        case Func::IsTrue:
            break;
        default:
            return false;
    }
    return std::all_of(e.args.begin(), e.args.end(), [](const SExpr& a) { return is_core(a); });
}

const std::vector<CorePattern>& core_patterns() {
    static const std::vector<CorePattern> patterns = [] {
        const std::vector<std::string> texts = {
            "(IS_TRUE x x x)",
            "(JOIN x x)",
            "(JOIN (R x) x)",
            "(AND (JOIN x x) (JOIN x x))",
            "(AND (JOIN x (VALUES x)) (JOIN x x))",
            "(AND (JOIN (R x) x) (JOIN x x))",
            "(AND (JOIN (R x) (VALUES x)) (JOIN x x))",
            "(AND (JOIN x (JOIN x x)) (JOIN x x))",
            "(AND (JOIN (R x) (JOIN x x)) (JOIN x x))",
            "(AND (JOIN x x) (JOIN x x) (JOIN x x))",
            "(AND (JOIN (R x) x) (JOIN (R x) x) (JOIN x x))",
            "(AND (JOIN (R x) x) (JOIN x x) (JOIN (R x) x))",
        };
        std::vector<CorePattern> out;
        for (std::size_t i = 0; i < texts.size(); ++i)
            out.push_back({static_cast<int>(i) + 1, parse(texts[i])});
        return out;
    }();
    return patterns;
}

std::optional<int> match_core_pattern(const SExpr& e) {
    for (const auto& p : core_patterns())
        if (match_skeleton(p.skeleton, e)) return p.id;
    return std::nullopt;
}

std::vector<std::string> placeholder_names(const SExpr& e) {
    std::vector<std::string> out;
    collect_placeholders(e, out);
    return out;
}

SExpr mark_resolved(SExpr e) {
    if (e.kind == SExpr::Kind::Entity || e.kind == SExpr::Kind::Relation) e.resolved = true;
    for (auto& a : e.args) a = mark_resolved(std::move(a));
    return e;
}

} // namespace kgqa
