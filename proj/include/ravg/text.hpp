// text.hpp - surface syntax for terms, path equations, and formulas.
//
// Variables are x0..xN, atoms are @-prefixed (@A2, @$, @+), attributes are
// bare identifiers.  A path application is written "f g (t)" with the
// attribute applied last written first, i.e. "top rest(x1)" follows rest
// and then top.  Equations are joined with '&'.  '#' starts a line comment.

#pragma once

#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "feature.hpp"

namespace ravg {

struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& msg, int ln, int col)
        : std::runtime_error(msg + " at " + std::to_string(ln) + ":" + std::to_string(col)),
          line(ln),
          column(col) {}
};

namespace detail {

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '+' ||
           c == '\'' || c == '~';
}

struct Token {
    enum Kind { ident, atom, quoted, punct, end } kind = end;
    std::string text;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src, int first_line = 1) : src_(src), line_(first_line) {
        advance();
    }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }
    bool at_end() const { return tok_.kind == Token::end; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.line, tok_.column); }

    Token expect_punct(char c) {
        if (tok_.kind != Token::punct || tok_.text[0] != c)
            fail(std::string("expected '") + c + "', got '" + tok_.text + "'");
        return next();
    }

    bool eat_punct(char c) {
        if (tok_.kind == Token::punct && tok_.text[0] == c) {
            advance();
            return true;
        }
        return false;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_;
    int col_ = 1;
    Token tok_;

    int cur() const { return pos_ < src_.size() ? static_cast<unsigned char>(src_[pos_]) : -1; }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void advance() {
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
            if (pos_ < src_.size() && src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
                continue;
            }
            break;
        }
        tok_.line = line_;
        tok_.column = col_;
        if (pos_ >= src_.size()) {
            tok_ = {Token::end, "", line_, col_};
            return;
        }
        char c = src_[pos_];
        if (c == '@') {
            bump();
            std::string name;
            while (pos_ < src_.size() && ident_char(src_[pos_])) {
                name += src_[pos_];
                bump();
            }
            if (name.empty() && pos_ < src_.size() && src_[pos_] == '$') {
                name = "$";
                bump();
            }
            if (name.empty()) throw ParseError("empty atom name after '@'", tok_.line, tok_.column);
            tok_ = {Token::atom, name, tok_.line, tok_.column};
            return;
        }
        if (c == '"') {
            bump();
            std::string text;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                text += src_[pos_];
                bump();
            }
            if (pos_ >= src_.size()) throw ParseError("unterminated string", tok_.line, tok_.column);
            bump();
            tok_ = {Token::quoted, text, tok_.line, tok_.column};
            return;
        }
        if (ident_char(c)) {
            std::string name;
            while (pos_ < src_.size() && ident_char(src_[pos_])) {
                name += src_[pos_];
                bump();
            }
            tok_ = {Token::ident, name, tok_.line, tok_.column};
            return;
        }
        std::string p(1, c);
        bump();
        tok_ = {Token::punct, p, tok_.line, tok_.column};
    }
};

// "x" followed only by digits names a variable.
inline bool is_var_name(const std::string& s) {
    if (s.size() < 2 || s[0] != 'x') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

inline Var parse_var(const std::string& s) {
    int id = 0;
    std::from_chars(s.data() + 1, s.data() + s.size(), id);
    return Var{id};
}

// side := attr* '(' term ')' | term
inline std::pair<Path, Term> parse_side(Lexer& lx) {
    std::vector<Attribute> surface;  // as written: last-applied first
    for (;;) {
        const Token& t = lx.peek();
        if (t.kind == Token::atom) {
            if (!surface.empty()) lx.fail("a path cannot start at an atom");
            return {Path{}, Atom{lx.next().text}};
        }
        if (t.kind == Token::ident) {
            if (is_var_name(t.text) && surface.empty()) {
                // A lone variable; attributes named like variables are rejected.
                return {Path{}, parse_var(lx.next().text)};
            }
            if (is_var_name(t.text)) lx.fail("'" + t.text + "' is reserved for variables");
            surface.push_back(Attribute{lx.next().text});
            continue;
        }
        if (t.kind == Token::punct && t.text == "(") {
            if (surface.empty()) lx.fail("unexpected '('");
            lx.next();
            const Token& inner = lx.peek();
            Term term;
            if (inner.kind == Token::atom) {
                term = Atom{lx.next().text};
            } else if (inner.kind == Token::ident && is_var_name(inner.text)) {
                term = parse_var(lx.next().text);
            } else {
                lx.fail("expected a variable or atom inside '(...)'");
            }
            lx.expect_punct(')');
            std::vector<Attribute> app(surface.rbegin(), surface.rend());
            if (is_atom(term) && !app.empty()) lx.fail("a path cannot start at an atom");
            return {Path{std::move(app)}, term};
        }
        lx.fail("expected a term or attribute, got '" + t.text + "'");
    }
}

inline PathEquation parse_equation(Lexer& lx) {
    auto [p, s] = parse_side(lx);
    lx.expect_punct('=');
    auto [q, t] = parse_side(lx);
    return PathEquation{std::move(p), s, std::move(q), t};
}

}  // namespace detail

// Parses "side = side & side = side & ...".  An empty source is the empty
// conjunction.
inline ConjFormula parse_formula(std::string_view src, int first_line = 1) {
    detail::Lexer lx(src, first_line);
    ConjFormula f;
    if (lx.at_end()) return f;
    f.eqs.push_back(detail::parse_equation(lx));
    while (lx.eat_punct('&')) f.eqs.push_back(detail::parse_equation(lx));
    if (!lx.at_end()) lx.fail("trailing input after formula");
    return f;
}

inline std::string print_term(const Term& t) {
    if (is_atom(t)) return "@" + as_atom(t).name;
    int id = as_var(t).id;
    if (id >= kAnonVarBase) return "_" + std::to_string(id - kAnonVarBase);
    return "x" + std::to_string(id);
}

inline std::string print_side(const Path& p, const Term& t) {
    if (p.empty()) return print_term(t);
    std::string out;
    for (auto it = p.attrs.rbegin(); it != p.attrs.rend(); ++it) {
        if (!out.empty()) out += ' ';
        out += it->name;
    }
    return out + "(" + print_term(t) + ")";
}

inline std::string print_equation(const PathEquation& e) {
    return print_side(e.p, e.s) + " = " + print_side(e.q, e.t);
}

inline std::string print_formula(const ConjFormula& f) {
    std::string out;
    for (const auto& e : f.eqs) {
        if (!out.empty()) out += " & ";
        out += print_equation(e);
    }
    return out;
}

}  // namespace ravg
