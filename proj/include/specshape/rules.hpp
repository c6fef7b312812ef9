#pragma once

// Shape-rule language.
//
//   ruleset := rule+
//   rule    := "RULE" ident "{" expr "}"
//   expr    := term ("OR" term)*
//   term    := factor ("AND" factor)*
//   factor  := atom | "(" expr ")"
//   atom    := feature "[" number "]" cmp number
//   feature := "CV" | "CRRV" | "RV"
//   cmp     := "<" | "<=" | ">" | ">="
//
// `#` starts a comment that runs to the end of the line. Keywords are
// upper-case. Class names start with a letter or '_' and may contain
// letters, digits, '_', '-' and '.' (so `PF-black` is one name).

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace specshape::rules {

/// CV: signed curvature, CRRV: continuum-removed value, RV: reflectance.
enum class Feature { cv, crrv, rv };
enum class Comparator { lt, le, gt, ge };

inline const char* to_string(Feature f) {
    switch (f) {
        case Feature::cv: return "CV";
        case Feature::crrv: return "CRRV";
        case Feature::rv: return "RV";
    }
    return "?";
}

inline const char* to_string(Comparator c) {
    switch (c) {
        case Comparator::lt: return "<";
        case Comparator::le: return "<=";
        case Comparator::gt: return ">";
        case Comparator::ge: return ">=";
    }
    return "?";
}

inline bool compare(double value, Comparator c, double threshold) {
    switch (c) {
        case Comparator::lt: return value < threshold;
        case Comparator::le: return value <= threshold;
        case Comparator::gt: return value > threshold;
        case Comparator::ge: return value >= threshold;
    }
    return false;
}

struct SourceLocation {
    std::size_t line = 1;
    std::size_t column = 1;
};

struct Atom {
    Feature feature = Feature::cv;
    double wavelength_nm = 0.0;
    Comparator comparator = Comparator::lt;
    double threshold = 0.0;
    SourceLocation location{};  // not part of equality

    friend bool operator==(const Atom& a, const Atom& b) {
        return a.feature == b.feature && a.wavelength_nm == b.wavelength_nm && a.comparator == b.comparator &&
               a.threshold == b.threshold;
    }
};

/// Boolean expression tree. `all_of` / `any_of` nodes hold >= 2 children.
struct Expr {
    enum class Kind { atom, all_of, any_of };

    Kind kind = Kind::atom;
    Atom atom{};
    std::vector<Expr> children;

    static Expr leaf(Atom a) { return Expr{Kind::atom, a, {}}; }
    static Expr all(std::vector<Expr> c) { return Expr{Kind::all_of, {}, std::move(c)}; }
    static Expr any(std::vector<Expr> c) { return Expr{Kind::any_of, {}, std::move(c)}; }

    std::size_t atom_count() const {
        if (kind == Kind::atom) return 1;
        std::size_t n = 0;
        for (const auto& c : children) n += c.atom_count();
        return n;
    }

    template <class F>
    void for_each_atom(F&& f) const {
        if (kind == Kind::atom) {
            f(atom);
            return;
        }
        for (const auto& c : children) c.for_each_atom(f);
    }

    friend bool operator==(const Expr&, const Expr&) = default;
};

struct Rule {
    std::string class_name;
    Expr expr;
    SourceLocation location{};

    friend bool operator==(const Rule& a, const Rule& b) { return a.class_name == b.class_name && a.expr == b.expr; }
};

struct RuleSet {
    std::vector<Rule> rules;
    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

enum class DiagnosticKind { lexical, syntax, duplicate_class, empty_expression, invalid_wavelength, binding };

inline const char* to_string(DiagnosticKind k) {
    switch (k) {
        case DiagnosticKind::lexical: return "lexical";
        case DiagnosticKind::syntax: return "syntax";
        case DiagnosticKind::duplicate_class: return "duplicate-class";
        case DiagnosticKind::empty_expression: return "empty-expression";
        case DiagnosticKind::invalid_wavelength: return "invalid-wavelength";
        case DiagnosticKind::binding: return "binding";
    }
    return "?";
}

struct Diagnostic {
    DiagnosticKind kind;
    SourceLocation location;
    std::string message;

    std::string to_string() const {
        return std::to_string(location.line) + ":" + std::to_string(location.column) + ": " +
               rules::to_string(kind) + " error: " + message;
    }
};

/// Raised by parse_rules and bind; carries every diagnostic found.
class RuleError : public Error {
public:
    explicit RuleError(std::vector<Diagnostic> diags)
        : Error(summary(diags)), diagnostics_(std::move(diags)) {}

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    static std::string summary(const std::vector<Diagnostic>& d) {
        std::string s;
        for (const auto& x : d) s += (s.empty() ? "" : "\n") + x.to_string();
        return s.empty() ? "rule error" : s;
    }
    std::vector<Diagnostic> diagnostics_;
};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

enum class Tok {
    kw_rule, kw_and, kw_or, feature, ident, number, lbrace, rbrace, lparen, rparen, lbracket, rbracket, cmp, end
};

inline const char* describe(Tok t) {
    switch (t) {
        case Tok::kw_rule: return "'RULE'";
        case Tok::kw_and: return "'AND'";
        case Tok::kw_or: return "'OR'";
        case Tok::feature: return "feature (CV, CRRV, RV)";
        case Tok::ident: return "class name";
        case Tok::number: return "number";
        case Tok::lbrace: return "'{'";
        case Tok::rbrace: return "'}'";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::lbracket: return "'['";
        case Tok::rbracket: return "']'";
        case Tok::cmp: return "comparator";
        case Tok::end: return "end of input";
    }
    return "?";
}

struct Token {
    Tok type;
    std::string text;
    SourceLocation loc;
    double number = 0.0;
    Feature feature = Feature::cv;
    Comparator cmp = Comparator::lt;
};

class Lexer {
public:
    Lexer(std::string_view src, std::vector<Diagnostic>& diags) : src_(src), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space_and_comments();
            const SourceLocation loc{line_, col_};
            if (pos_ >= src_.size()) {
                out.push_back({Tok::end, "", loc});
                return out;
            }
            const char c = src_[pos_];
            auto single = [&](Tok t) {
                advance();
                out.push_back({t, std::string(1, c), loc});
            };
            switch (c) {
                case '{': single(Tok::lbrace); continue;
                case '}': single(Tok::rbrace); continue;
                case '(': single(Tok::lparen); continue;
                case ')': single(Tok::rparen); continue;
                case '[': single(Tok::lbracket); continue;
                case ']': single(Tok::rbracket); continue;
                case '<':
                case '>': {
                    advance();
                    Token t{Tok::cmp, std::string(1, c), loc};
                    if (pos_ < src_.size() && src_[pos_] == '=') {
                        advance();
                        t.text += '=';
                        t.cmp = c == '<' ? Comparator::le : Comparator::ge;
                    } else {
                        t.cmp = c == '<' ? Comparator::lt : Comparator::gt;
                    }
                    out.push_back(t);
                    continue;
                }
                default: break;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.') {
                lex_number(out, loc);
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                lex_word(out, loc);
                continue;
            }
            diags_.push_back({DiagnosticKind::lexical, loc, "unexpected character " + printable(c)});
            advance_codepoint();
        }
    }

private:
    static std::string printable(char c) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
        char buf[8];
        std::snprintf(buf, sizeof buf, "0x%02X", u);
        return buf;
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    // Skips a whole UTF-8 sequence so columns count characters.
    void advance_codepoint() {
        advance();
        while (pos_ < src_.size() && (static_cast<unsigned char>(src_[pos_]) & 0xC0) == 0x80) ++pos_;
    }

    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void lex_number(std::vector<Token>& out, SourceLocation loc) {
        const std::size_t start = pos_;
        if (src_[pos_] == '+' || src_[pos_] == '-') advance();
        bool digits = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance(), digits = true;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance(), digits = true;
        }
        if (digits && pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            SourceLocation save_loc{line_, col_};
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            bool exp_digits = false;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance(), exp_digits = true;
            if (!exp_digits) {
                pos_ = save;
                line_ = save_loc.line;
                col_ = save_loc.column;
            }
        }
        // A literal glued to more dots or letters (`1.2.3`, `5nm`) is one bad token.
        bool trailing = false;
        while (pos_ < src_.size() &&
               (src_[pos_] == '.' || src_[pos_] == '_' || std::isalnum(static_cast<unsigned char>(src_[pos_]))))
            advance(), trailing = true;
        std::string text(src_.substr(start, pos_ - start));
        if (!digits || trailing) {
            diags_.push_back({DiagnosticKind::lexical, loc, "malformed number '" + text + "'"});
            return;
        }
        // from_chars rejects a leading '+'.
        std::string_view body = text;
        if (body.front() == '+') body.remove_prefix(1);
        std::string normalized(body);
        if (normalized.front() == '.' || (normalized.size() > 1 && normalized[0] == '-' && normalized[1] == '.'))
            normalized.insert(normalized.front() == '-' ? 1 : 0, "0");
        double v = 0.0;
        auto [p, ec] = std::from_chars(normalized.data(), normalized.data() + normalized.size(), v);
        if (ec != std::errc() || p != normalized.data() + normalized.size() || !std::isfinite(v)) {
            diags_.push_back({DiagnosticKind::lexical, loc, "malformed number '" + text + "'"});
            return;
        }
        Token t{Tok::number, text, loc};
        t.number = v;
        out.push_back(t);
    }

    void lex_word(std::vector<Token>& out, SourceLocation loc) {
        const std::size_t start = pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') advance();
            else break;
        }
        std::string w(src_.substr(start, pos_ - start));
        Token t{Tok::ident, w, loc};
        if (w == "RULE") t.type = Tok::kw_rule;
        else if (w == "AND") t.type = Tok::kw_and;
        else if (w == "OR") t.type = Tok::kw_or;
        else if (w == "CV") t.type = Tok::feature, t.feature = Feature::cv;
        else if (w == "CRRV") t.type = Tok::feature, t.feature = Feature::crrv;
        else if (w == "RV") t.type = Tok::feature, t.feature = Feature::rv;
        out.push_back(t);
    }

    std::string_view src_;
    std::vector<Diagnostic>& diags_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct SyntaxAbort {};

class Parser {
public:
    Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags, bool allow_empty = false)
        : toks_(std::move(toks)), diags_(diags), allow_empty_(allow_empty) {}

    RuleSet run() {
        RuleSet rs;
        std::set<std::string> names;
        if (peek().type == Tok::end) {
            if (allow_empty_) return rs;
            diags_.push_back({DiagnosticKind::syntax, peek().loc, "rule set is empty, expected 'RULE'"});
            return rs;
        }
        while (peek().type != Tok::end) {
            try {
                Rule r = rule();
                if (!names.insert(r.class_name).second)
                    diags_.push_back({DiagnosticKind::duplicate_class, r.location,
                                      "class '" + r.class_name + "' is already defined"});
                rs.rules.push_back(std::move(r));
            } catch (const SyntaxAbort&) {
                recover();
            }
        }
        return rs;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const Token& at, const std::string& expected) {
        const std::string found = at.type == Tok::end ? "end of input" : "'" + at.text + "'";
        diags_.push_back({DiagnosticKind::syntax, at.loc, "expected " + expected + ", found " + found});
        throw SyntaxAbort{};
    }

    const Token& expect(Tok t) {
        if (peek().type != t) fail(peek(), describe(t));
        return take();
    }

    // Skip to the next RULE keyword.
    void recover() {
        if (peek().type == Tok::kw_rule) take();
        while (peek().type != Tok::kw_rule && peek().type != Tok::end) take();
    }

    Rule rule() {
        const Token& kw = expect(Tok::kw_rule);
        Rule r;
        r.location = kw.loc;
        const Token& name = peek();
        if (name.type != Tok::ident) {
            if (name.type == Tok::kw_and || name.type == Tok::kw_or || name.type == Tok::feature ||
                name.type == Tok::kw_rule)
                fail(name, "class name (keywords are reserved)");
            fail(name, "class name");
        }
        r.class_name = take().text;
        const Token& open = expect(Tok::lbrace);
        if (peek().type == Tok::rbrace) {
            diags_.push_back({DiagnosticKind::empty_expression, open.loc, "rule '" + r.class_name + "' has no conditions"});
            take();
            throw SyntaxAbort{};
        }
        r.expr = expr();
        expect(Tok::rbrace);
        return r;
    }

    Expr expr() {
        std::vector<Expr> terms;
        terms.push_back(term());
        while (peek().type == Tok::kw_or) {
            take();
            terms.push_back(term());
        }
        return terms.size() == 1 ? std::move(terms.front()) : Expr::any(std::move(terms));
    }

    Expr term() {
        std::vector<Expr> factors;
        factors.push_back(factor());
        while (peek().type == Tok::kw_and) {
            take();
            factors.push_back(factor());
        }
        return factors.size() == 1 ? std::move(factors.front()) : Expr::all(std::move(factors));
    }

    Expr factor() {
        if (peek().type == Tok::lparen) {
            const Token& open = take();
            if (peek().type == Tok::rparen) {
                diags_.push_back({DiagnosticKind::empty_expression, open.loc, "empty parentheses"});
                throw SyntaxAbort{};
            }
            Expr e = expr();
            expect(Tok::rparen);
            return e;
        }
        if (peek().type == Tok::feature) return Expr::leaf(atom());
        fail(peek(), "condition or '('");
    }

    Atom atom() {
        const Token& f = take();
        Atom a;
        a.feature = f.feature;
        a.location = f.loc;
        expect(Tok::lbracket);
        const Token& wl = expect(Tok::number);
        expect(Tok::rbracket);
        const Token& cmp = expect(Tok::cmp);
        const Token& thr = expect(Tok::number);
        a.wavelength_nm = wl.number;
        a.comparator = cmp.cmp;
        a.threshold = thr.number;
        if (!(a.wavelength_nm > 0.0))
            diags_.push_back({DiagnosticKind::invalid_wavelength, wl.loc, "wavelength must be positive, got " + wl.text});
        return a;
    }

    std::vector<Token> toks_;
    std::vector<Diagnostic>& diags_;
    bool allow_empty_ = false;
    std::size_t pos_ = 0;
};

}  // namespace detail

struct ParseResult {
    RuleSet rules;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

/// Parses and reports every diagnostic it can find (it resynchronises at the
/// next RULE after a syntax error). `rules` holds what parsed cleanly.
/// A file needs at least one rule unless `allow_empty` is set.
inline ParseResult check_rules(std::string_view text, bool allow_empty = false) {
    ParseResult r;
    auto toks = detail::Lexer(text, r.diagnostics).run();
    if (!r.diagnostics.empty()) return r;
    r.rules = detail::Parser(std::move(toks), r.diagnostics, allow_empty).run();
    return r;
}

inline RuleSet parse_rules(std::string_view text) {
    auto r = check_rules(text);
    if (!r.ok()) throw RuleError(std::move(r.diagnostics));
    return std::move(r.rules);
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

inline std::string format_atom(const Atom& a) {
    return std::string(to_string(a.feature)) + "[" + format_number(a.wavelength_nm) + "] " + to_string(a.comparator) +
           " " + format_number(a.threshold);
}

namespace detail {

inline void print_expr(std::ostream& out, const Expr& e, const char* sep) {
    switch (e.kind) {
        case Expr::Kind::atom: out << format_atom(e.atom); return;
        case Expr::Kind::all_of:
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out << " AND" << sep;
                const auto& c = e.children[i];
                // Any nested junction under AND needs parentheses to survive a re-parse.
                if (c.kind != Expr::Kind::atom) {
                    out << '(';
                    print_expr(out, c, " ");
                    out << ')';
                } else {
                    print_expr(out, c, " ");
                }
            }
            return;
        case Expr::Kind::any_of:
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out << " OR" << sep;
                const auto& c = e.children[i];
                if (c.kind == Expr::Kind::any_of) {
                    out << '(';
                    print_expr(out, c, " ");
                    out << ')';
                } else {
                    print_expr(out, c, " ");
                }
            }
            return;
    }
}

}  // namespace detail

inline std::string print_rule(const Rule& r) {
    std::ostringstream out;
    out << "RULE " << r.class_name << " {\n    ";
    detail::print_expr(out, r.expr, "\n    ");
    out << "\n}\n";
    return out.str();
}

inline std::string print_rules(const RuleSet& rs) {
    std::string out;
    for (std::size_t i = 0; i < rs.rules.size(); ++i) {
        if (i) out += '\n';
        out += print_rule(rs.rules[i]);
    }
    return out;
}

}  // namespace specshape::rules
