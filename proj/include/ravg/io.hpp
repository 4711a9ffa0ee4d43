// io.hpp - the line-oriented grammar and CFG file formats.
//
// Grammar files:
//     kind ravg|avg
//     start S
//     atoms z $
//     attrs s n bn cn
//     rule S -> "a" A : s n(x1) = @z ;
//     lex "walks" V : f(x0) = @sg ;
//
// CFG files:
//     start S
//     S -> "(" S ")" S | epsilon ;
//
// '#' starts a comment.  Declarations are single lines; rules and
// productions run to the closing ';'.  Categories and lexical forms may be
// declared with `cats`/`lexforms` lines and are otherwise inferred.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gnf.hpp"
#include "grammar.hpp"
#include "text.hpp"

namespace ravg {

namespace detail {

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

}  // namespace detail

// ── Grammar files ───────────────────────────────────────────────────────────

inline Grammar parse_grammar(const std::string& text) {
    Grammar g;
    bool kind_seen = false, start_seen = false;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;

    auto fail = [&](const std::string& msg, int ln) -> void { throw ParseError(msg, ln, 1); };

    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = detail::strip_comment(raw);
        auto words = detail::split_ws(line);
        if (words.empty()) continue;
        const std::string& head = words[0];
        int first_line = lineno;

        if (head == "kind") {
            if (words.size() != 2 || (words[1] != "ravg" && words[1] != "avg"))
                fail("expected 'kind ravg' or 'kind avg'", lineno);
            g.kind = words[1] == "ravg" ? GrammarKind::ravg : GrammarKind::avg;
            kind_seen = true;
        } else if (head == "start") {
            if (words.size() != 2) fail("expected 'start <category>'", lineno);
            g.start = Category{words[1]};
            g.cats.insert(words[1]);
            start_seen = true;
        } else if (head == "atoms" || head == "attrs" || head == "cats" || head == "lexforms") {
            auto& set = head == "atoms"  ? g.atoms
                        : head == "attrs" ? g.attrs
                        : head == "cats"  ? g.cats
                                          : g.lexforms;
            for (std::size_t i = 1; i < words.size(); ++i) set.insert(words[i]);
        } else if (head == "rule" || head == "lex") {
            std::string stmt = line;
            while (stmt.find(';') == std::string::npos && std::getline(is, raw)) {
                ++lineno;
                stmt += "\n" + detail::strip_comment(raw);
            }
            auto semi = stmt.find(';');
            if (semi == std::string::npos) fail("missing ';' after " + head, first_line);
            stmt = stmt.substr(0, semi);

            auto colon = stmt.find(':');
            std::string head_part = colon == std::string::npos ? stmt : stmt.substr(0, colon);
            std::string formula_part = colon == std::string::npos ? "" : stmt.substr(colon + 1);
            ConjFormula formula = parse_formula(formula_part, first_line);

            detail::Lexer lx(head_part, first_line);
            lx.next();  // rule / lex
            if (head == "rule") {
                if (lx.peek().kind != detail::Token::ident) lx.fail("expected lhs category");
                std::string lhs = lx.next().text;
                g.cats.insert(lhs);
                lx.expect_punct('-');
                lx.expect_punct('>');
                std::vector<RhsItem> items;
                while (!lx.at_end()) {
                    auto t = lx.next();
                    if (t.kind == detail::Token::quoted) {
                        items.push_back({true, t.text});
                        g.lexforms.insert(t.text);
                    } else if (t.kind == detail::Token::ident) {
                        items.push_back({false, t.text});
                        g.cats.insert(t.text);
                    } else {
                        fail("unexpected '" + t.text + "' in rule items", first_line);
                    }
                }
                if (items.empty()) fail("rule without right-hand side", first_line);
                if (g.kind == GrammarKind::ravg) {
                    g.ravg_rules.push_back({Category{lhs}, std::move(items), std::move(formula), ""});
                } else {
                    std::vector<Category> ds;
                    for (auto& it : items) {
                        if (it.terminal)
                            fail("terminals in avg rules belong in the lexicon", first_line);
                        ds.push_back(Category{it.name});
                    }
                    g.avg_rules.push_back({Category{lhs}, std::move(ds), std::move(formula), ""});
                }
            } else {
                if (lx.peek().kind != detail::Token::quoted) lx.fail("expected a quoted lexical form");
                std::string form = lx.next().text;
                if (lx.peek().kind != detail::Token::ident) lx.fail("expected a category");
                std::string cat = lx.next().text;
                if (!lx.at_end()) lx.fail("trailing input in lex entry");
                g.lexforms.insert(form);
                g.cats.insert(cat);
                g.lexicon.push_back({LexForm{form}, Category{cat}, std::move(formula)});
            }
        } else {
            fail("unknown directive '" + head + "'", lineno);
        }
    }
    if (!kind_seen) throw ParseError("grammar file lacks a 'kind' line", 1, 1);
    if (!start_seen) throw ParseError("grammar file lacks a 'start' line", 1, 1);
    return g;
}

inline std::string print_grammar(const Grammar& g) {
    std::ostringstream os;
    os << "kind " << (g.kind == GrammarKind::ravg ? "ravg" : "avg") << "\n";
    os << "start " << g.start.name << "\n";
    auto decl = [&](const char* name, const std::set<std::string>& set) {
        if (set.empty()) return;
        os << name;
        for (const auto& s : set) os << " " << s;
        os << "\n";
    };
    decl("atoms", g.atoms);
    decl("attrs", g.attrs);
    decl("cats", g.cats);
    decl("lexforms", g.lexforms);
    for (const auto& r : g.ravg_rules) {
        os << "rule " << r.lhs.name << " ->";
        for (const auto& it : r.rhs)
            os << " " << (it.terminal ? "\"" + it.name + "\"" : it.name);
        if (!r.formula.eqs.empty()) os << " : " << print_formula(r.formula);
        os << " ;\n";
    }
    for (const auto& r : g.avg_rules) {
        os << "rule " << r.lhs.name << " ->";
        for (const auto& d : r.daughters) os << " " << d.name;
        if (!r.formula.eqs.empty()) os << " : " << print_formula(r.formula);
        os << " ;\n";
    }
    for (const auto& e : g.lexicon) {
        os << "lex \"" << e.form.name << "\" " << e.cat.name;
        if (!e.formula.eqs.empty()) os << " : " << print_formula(e.formula);
        os << " ;\n";
    }
    return os.str();
}

// ── CFG files ───────────────────────────────────────────────────────────────

inline Cfg parse_cfg(const std::string& text) {
    Cfg g;
    bool start_seen = false;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = detail::strip_comment(raw);
        auto words = detail::split_ws(line);
        if (words.empty()) continue;
        int first_line = lineno;
        if (words[0] == "start") {
            if (words.size() != 2) throw ParseError("expected 'start <nonterminal>'", lineno, 1);
            g.start = words[1];
            g.nonterminals.insert(words[1]);
            start_seen = true;
            continue;
        }
        std::string stmt = line;
        while (stmt.find(';') == std::string::npos && std::getline(is, raw)) {
            ++lineno;
            stmt += "\n" + detail::strip_comment(raw);
        }
        auto semi = stmt.find(';');
        if (semi == std::string::npos) throw ParseError("missing ';' after production", first_line, 1);
        stmt = stmt.substr(0, semi);

        detail::Lexer lx(stmt, first_line);
        if (lx.peek().kind != detail::Token::ident) lx.fail("expected a nonterminal");
        std::string lhs = lx.next().text;
        g.nonterminals.insert(lhs);
        lx.expect_punct('-');
        lx.expect_punct('>');
        std::vector<CfgSymbol> rhs;
        bool eps = false;
        auto flush = [&]() {
            if (eps && !rhs.empty()) lx.fail("epsilon cannot be combined with symbols");
            g.productions.push_back({lhs, rhs});
            rhs.clear();
            eps = false;
        };
        while (!lx.at_end()) {
            auto t = lx.next();
            if (t.kind == detail::Token::punct && t.text == "|") {
                flush();
            } else if (t.kind == detail::Token::quoted) {
                g.terminals.insert(t.text);
                rhs.push_back({true, t.text});
            } else if (t.kind == detail::Token::ident && t.text == "epsilon") {
                eps = true;
            } else if (t.kind == detail::Token::ident) {
                g.nonterminals.insert(t.text);
                rhs.push_back({false, t.text});
            } else {
                lx.fail("unexpected '" + t.text + "' in production");
            }
        }
        flush();
    }
    if (!start_seen) throw ParseError("cfg file lacks a 'start' line", 1, 1);
    return g;
}

inline std::string print_cfg(const Cfg& g) {
    std::ostringstream os;
    os << "start " << g.start << "\n";
    for (const auto& p : g.productions) {
        os << p.lhs << " ->";
        if (p.rhs.empty()) os << " epsilon";
        for (const auto& s : p.rhs)
            os << " " << (s.terminal ? "\"" + s.name + "\"" : s.name);
        os << " ;\n";
    }
    return os.str();
}

// ── Files ───────────────────────────────────────────────────────────────────

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline Grammar parse_grammar_file(const std::string& path) { return parse_grammar(read_file(path)); }
inline Cfg parse_cfg_file(const std::string& path) { return parse_cfg(read_file(path)); }

}  // namespace ravg
