// gnf.hpp - context-free grammars, Greibach normal form, and the compilation
// of a GNF grammar into a restricted attribute-value grammar whose feature
// graphs encode the pushdown stack.
//
// The compiled grammar uses exactly two attributes, top and rest, one atom
// per nonterminal, and the reserved atom $ for the bottom of the stack.
// Each spine node's variable encodes the stack of nonterminals still to be
// rewritten below it.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "grammar.hpp"

namespace ravg {

struct CfgSymbol {
    bool terminal = false;
    std::string name;
    bool operator==(const CfgSymbol& o) const = default;
    auto operator<=>(const CfgSymbol& o) const = default;
};

struct CfgProduction {
    std::string lhs;
    std::vector<CfgSymbol> rhs;  // empty = epsilon
    bool operator==(const CfgProduction& o) const = default;
    auto operator<=>(const CfgProduction& o) const = default;
};

struct Cfg {
    std::set<std::string> nonterminals;
    std::set<std::string> terminals;
    std::vector<CfgProduction> productions;
    std::string start;

    bool operator==(const Cfg& o) const = default;
};

inline std::vector<std::string> validate_cfg(const Cfg& g) {
    std::vector<std::string> out;
    if (!g.nonterminals.count(g.start)) out.push_back("start symbol " + g.start + " undeclared");
    if (g.nonterminals.count("$") || g.terminals.count("$"))
        out.push_back("the symbol $ is reserved");
    for (const auto& p : g.productions) {
        if (!g.nonterminals.count(p.lhs)) out.push_back("undeclared lhs " + p.lhs);
        for (const auto& s : p.rhs) {
            const auto& tab = s.terminal ? g.terminals : g.nonterminals;
            if (!tab.count(s.name))
                out.push_back("undeclared " + std::string(s.terminal ? "terminal " : "nonterminal ") +
                              s.name + " in a production of " + p.lhs);
        }
    }
    return out;
}

// A → a A1...An with the Ai nonterminals other than the start, A → a, or
// S → ε.
inline bool is_gnf_production(const Cfg& g, const CfgProduction& p) {
    if (p.rhs.empty()) return p.lhs == g.start;
    if (!p.rhs.front().terminal) return false;
    for (std::size_t i = 1; i < p.rhs.size(); ++i)
        if (p.rhs[i].terminal || p.rhs[i].name == g.start) return false;
    return true;
}

inline bool is_gnf(const Cfg& g) {
    for (const auto& p : g.productions)
        if (!is_gnf_production(g, p)) return false;
    return true;
}

// ── Greibach normal form ────────────────────────────────────────────────────

namespace detail {

inline void dedupe(std::vector<CfgProduction>& ps) {
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
}

inline std::string fresh_name(const Cfg& g, std::string base) {
    while (g.nonterminals.count(base) || g.terminals.count(base)) base += "'";
    return base;
}

}  // namespace detail

// Standard pipeline: fresh start when needed, epsilon elimination (keeping
// S → ε when the language contains the empty string), unit elimination,
// useless-symbol removal, left-recursion elimination, and back-substitution
// to terminal-initial form.
inline Cfg to_gnf(const Cfg& input) {
    Cfg g = input;
    {
        auto errs = validate_cfg(g);
        if (!errs.empty()) throw std::invalid_argument("invalid CFG: " + errs.front());
    }

    // Fresh start so no production's tail can mention it.
    bool start_on_rhs = false;
    for (const auto& p : g.productions)
        for (const auto& s : p.rhs)
            if (!s.terminal && s.name == g.start) start_on_rhs = true;
    if (start_on_rhs) {
        std::string s0 = detail::fresh_name(g, g.start + "0");
        g.nonterminals.insert(s0);
        g.productions.push_back({s0, {CfgSymbol{false, g.start}}});
        g.start = s0;
    }

    // Nullable symbols, then all not-quite-epsilon expansions.
    std::set<std::string> nullable;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : g.productions) {
            if (nullable.count(p.lhs)) continue;
            bool all = true;
            for (const auto& s : p.rhs)
                if (s.terminal || !nullable.count(s.name)) all = false;
            if (all) {
                nullable.insert(p.lhs);
                changed = true;
            }
        }
    }
    {
        std::vector<CfgProduction> out;
        for (const auto& p : g.productions) {
            std::vector<std::size_t> opt;
            for (std::size_t i = 0; i < p.rhs.size(); ++i)
                if (!p.rhs[i].terminal && nullable.count(p.rhs[i].name)) opt.push_back(i);
            for (std::size_t mask = 0; mask < (1ull << opt.size()); ++mask) {
                CfgProduction q{p.lhs, {}};
                for (std::size_t i = 0; i < p.rhs.size(); ++i) {
                    auto o = std::find(opt.begin(), opt.end(), i);
                    if (o != opt.end() && (mask >> (o - opt.begin())) & 1) continue;
                    q.rhs.push_back(p.rhs[i]);
                }
                if (!q.rhs.empty()) out.push_back(std::move(q));
            }
        }
        if (nullable.count(g.start)) out.push_back({g.start, {}});
        detail::dedupe(out);
        g.productions = std::move(out);
    }

    // Unit pairs.
    {
        std::map<std::string, std::set<std::string>> unit;  // A -> reachable via unit chains
        for (const auto& n : g.nonterminals) unit[n].insert(n);
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& p : g.productions) {
                if (p.rhs.size() != 1 || p.rhs[0].terminal) continue;
                for (const auto& a : g.nonterminals) {
                    if (!unit[a].count(p.lhs)) continue;
                    if (unit[a].insert(p.rhs[0].name).second) changed = true;
                }
            }
        }
        std::vector<CfgProduction> out;
        for (const auto& [a, bs] : unit) {
            for (const auto& b : bs)
                for (const auto& p : g.productions) {
                    if (p.lhs != b) continue;
                    if (p.rhs.size() == 1 && !p.rhs[0].terminal) continue;
                    out.push_back({a, p.rhs});
                }
        }
        detail::dedupe(out);
        g.productions = std::move(out);
    }

    // Useless symbols: keep generating, then reachable.
    {
        std::set<std::string> gen;
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& p : g.productions) {
                if (gen.count(p.lhs)) continue;
                bool all = true;
                for (const auto& s : p.rhs)
                    if (!s.terminal && !gen.count(s.name)) all = false;
                if (all) {
                    gen.insert(p.lhs);
                    changed = true;
                }
            }
        }
        std::vector<CfgProduction> kept;
        for (const auto& p : g.productions) {
            bool ok = gen.count(p.lhs) != 0;
            for (const auto& s : p.rhs)
                if (!s.terminal && !gen.count(s.name)) ok = false;
            if (ok) kept.push_back(p);
        }
        std::set<std::string> reach{g.start};
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& p : kept) {
                if (!reach.count(p.lhs)) continue;
                for (const auto& s : p.rhs)
                    if (!s.terminal && reach.insert(s.name).second) changed = true;
            }
        }
        std::vector<CfgProduction> out;
        for (auto& p : kept)
            if (reach.count(p.lhs)) out.push_back(std::move(p));
        g.productions = std::move(out);
        std::set<std::string> nts{g.start};
        for (const auto& p : g.productions) {
            nts.insert(p.lhs);
            for (const auto& s : p.rhs)
                if (!s.terminal) nts.insert(s.name);
        }
        g.nonterminals = std::move(nts);
    }

    // Order nonterminals with the start first; make every production of A_i
    // start with a terminal or some A_j, j > i; then back-substitute.
    std::vector<std::string> order{g.start};
    for (const auto& n : g.nonterminals)
        if (n != g.start) order.push_back(n);
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    std::map<std::string, std::vector<std::vector<CfgSymbol>>> prods;
    std::vector<CfgSymbol> eps_marker;
    bool has_eps = false;
    for (const auto& p : g.productions) {
        if (p.rhs.empty()) {
            has_eps = true;
            continue;  // reattached at the end
        }
        prods[p.lhs].push_back(p.rhs);
    }

    std::vector<std::string> b_order;  // fresh tails from left-recursion removal
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::string& ai = order[i];
        // Substitute leading A_j, j < i.
        for (bool changed = true; changed;) {
            changed = false;
            std::vector<std::vector<CfgSymbol>> next;
            for (auto& rhs : prods[ai]) {
                const CfgSymbol& head = rhs.front();
                if (!head.terminal && rank.count(head.name) && rank[head.name] < i) {
                    for (const auto& sub : prods[head.name]) {
                        std::vector<CfgSymbol> nr = sub;
                        nr.insert(nr.end(), rhs.begin() + 1, rhs.end());
                        next.push_back(std::move(nr));
                    }
                    changed = true;
                } else {
                    next.push_back(std::move(rhs));
                }
            }
            prods[ai] = std::move(next);
        }
        // Immediate left recursion: A → Aα | β becomes A → β | βB, B → α | αB.
        std::vector<std::vector<CfgSymbol>> rec, base;
        for (auto& rhs : prods[ai]) {
            if (!rhs.front().terminal && rhs.front().name == ai)
                rec.push_back({rhs.begin() + 1, rhs.end()});
            else
                base.push_back(std::move(rhs));
        }
        if (!rec.empty()) {
            std::string bi = detail::fresh_name(g, ai + "~");
            g.nonterminals.insert(bi);
            b_order.push_back(bi);
            std::vector<std::vector<CfgSymbol>> nb;
            for (const auto& alpha : rec) {
                nb.push_back(alpha);
                auto with_b = alpha;
                with_b.push_back(CfgSymbol{false, bi});
                nb.push_back(std::move(with_b));
            }
            prods[bi] = std::move(nb);
            std::vector<std::vector<CfgSymbol>> na;
            for (const auto& beta : base) {
                na.push_back(beta);
                auto with_b = beta;
                with_b.push_back(CfgSymbol{false, bi});
                na.push_back(std::move(with_b));
            }
            prods[ai] = std::move(na);
        } else {
            prods[ai] = std::move(base);
        }
    }
    // Back-substitute so every production begins with a terminal.
    auto substitute_leading = [&](const std::string& n) {
        for (bool changed = true; changed;) {
            changed = false;
            std::vector<std::vector<CfgSymbol>> next;
            for (auto& rhs : prods[n]) {
                const CfgSymbol& head = rhs.front();
                if (!head.terminal) {
                    for (const auto& sub : prods[head.name]) {
                        std::vector<CfgSymbol> nr = sub;
                        nr.insert(nr.end(), rhs.begin() + 1, rhs.end());
                        next.push_back(std::move(nr));
                    }
                    changed = true;
                } else {
                    next.push_back(std::move(rhs));
                }
            }
            prods[n] = std::move(next);
        }
    };
    for (auto it = order.rbegin(); it != order.rend(); ++it) substitute_leading(*it);
    for (const auto& b : b_order) substitute_leading(b);

    // Terminals may only lead: wrap tail terminals in dedicated nonterminals.
    {
        std::map<std::string, std::string> wrap;
        int k = 0;
        for (const auto& t : g.terminals) {
            std::string name = detail::fresh_name(g, "T" + std::to_string(k++));
            wrap[t] = name;
        }
        std::set<std::string> used;
        for (auto& [lhs, rhss] : prods)
            for (auto& rhs : rhss)
                for (std::size_t i = 1; i < rhs.size(); ++i)
                    if (rhs[i].terminal) {
                        used.insert(rhs[i].name);
                        rhs[i] = CfgSymbol{false, wrap[rhs[i].name]};
                    }
        for (const auto& t : used) {
            g.nonterminals.insert(wrap[t]);
            prods[wrap[t]].push_back({CfgSymbol{true, t}});
        }
    }

    Cfg out;
    out.start = g.start;
    out.terminals = g.terminals;
    out.nonterminals.insert(g.start);
    for (const auto& [lhs, rhss] : prods) {
        for (const auto& rhs : rhss) {
            out.nonterminals.insert(lhs);
            for (const auto& s : rhs)
                if (!s.terminal) out.nonterminals.insert(s.name);
            out.productions.push_back({lhs, rhs});
        }
    }
    if (has_eps) out.productions.push_back({out.start, {}});
    detail::dedupe(out.productions);
    if (!is_gnf(out)) {
        std::string diag;
        for (const auto& p : out.productions)
            if (!is_gnf_production(out, p)) {
                diag += p.lhs + " ->";
                for (const auto& s_ : p.rhs) diag += " " + s_.name;
                diag += ";";
            }
        throw std::logic_error("to_gnf produced a non-GNF grammar: " + diag);
    }
    return out;
}

// ── Stack abbreviations ─────────────────────────────────────────────────────

// push(A0...An): x1 encodes the stack A0...An γ where x0 encodes γ.
// Pushing nothing leaves the stack shared: x1 = x0.
inline ConjFormula expand_push(const std::vector<Atom>& stack_syms) {
    ConjFormula f;
    if (stack_syms.empty()) {
        f &= eq(Path{}, Var{1}, Path{}, Var{0});
        return f;
    }
    for (std::size_t k = 0; k < stack_syms.size(); ++k) {
        Path p;
        for (std::size_t i = 0; i < k; ++i) p.attrs.push_back(Attribute{"rest"});
        p.attrs.push_back(Attribute{"top"});
        f &= eq(std::move(p), Var{1}, Path{}, stack_syms[k]);
    }
    Path tail;
    for (std::size_t i = 0; i < stack_syms.size(); ++i) tail.attrs.push_back(Attribute{"rest"});
    f &= eq(std::move(tail), Var{1}, Path{}, Var{0});
    return f;
}

// pop(A): x0 encodes A γ and x1 encodes γ.
inline ConjFormula expand_pop(const Atom& sym) {
    ConjFormula f;
    f &= eq(path_of({"top"}), Var{0}, Path{}, sym);
    f &= eq(path_of({"rest"}), Var{0}, Path{}, Var{1});
    return f;
}

inline ConjFormula expand_empty_stack() {
    ConjFormula f;
    f &= eq(Path{}, Var{0}, Path{}, Atom{"$"});
    return f;
}

// ── Compilation ─────────────────────────────────────────────────────────────

struct CompileResult {
    Grammar grammar;
    std::vector<std::string> warnings;
};

// One rule per table row: terminal-initial productions push their tail onto
// the daughter's stack; terminal-only productions either continue with a
// popped nonterminal or close the derivation on the empty stack.  The start
// rules additionally pin the root stack to $.  S → ε is dropped with a
// warning; the compiled grammar cannot produce the empty string.
inline CompileResult compile_gnf(const Cfg& g) {
    {
        std::vector<std::string> bad;
        for (const auto& p : g.productions)
            if (!is_gnf_production(g, p)) {
                std::string s = p.lhs + " ->";
                for (const auto& sym : p.rhs) s += " " + sym.name;
                bad.push_back(s);
            }
        if (!bad.empty()) throw std::invalid_argument("not in GNF: " + bad.front());
    }
    CompileResult res;
    Grammar& out = res.grammar;
    out.kind = GrammarKind::ravg;
    out.start = Category{g.start};
    out.cats = g.nonterminals;
    out.lexforms = g.terminals;
    out.attrs = {"top", "rest"};
    out.atoms = g.nonterminals;
    out.atoms.insert("$");

    std::vector<std::string> others;  // N \ {S}, in declaration order
    for (const auto& n : g.nonterminals)
        if (n != g.start) others.push_back(n);

    for (const auto& p : g.productions) {
        if (p.rhs.empty()) {
            res.warnings.push_back("S -> epsilon neglected: the compiled grammar rejects the "
                                   "empty string; callers must special-case it");
            continue;
        }
        bool from_start = p.lhs == g.start;
        std::string terminal = p.rhs.front().name;
        std::string ptag = p.lhs + "->" + terminal;
        for (std::size_t i = 1; i < p.rhs.size(); ++i) ptag += " " + p.rhs[i].name;

        if (p.rhs.size() > 1) {
            RavgRule r;
            r.lhs = Category{p.lhs};
            r.rhs = {RhsItem{true, terminal}, RhsItem{false, p.rhs[1].name}};
            std::vector<Atom> pushed;
            for (std::size_t i = 2; i < p.rhs.size(); ++i) pushed.push_back(Atom{p.rhs[i].name});
            r.formula = expand_push(pushed);
            if (from_start) r.formula &= expand_empty_stack();
            r.tag = "gnf:" + ptag;
            out.ravg_rules.push_back(std::move(r));
        } else {
            for (const auto& b : others) {
                RavgRule r;
                r.lhs = Category{p.lhs};
                r.rhs = {RhsItem{true, terminal}, RhsItem{false, b}};
                r.formula = expand_pop(Atom{b});
                if (from_start) r.formula &= expand_empty_stack();
                r.tag = "gnf:" + ptag + " pop " + b;
                out.ravg_rules.push_back(std::move(r));
            }
            RavgRule r;
            r.lhs = Category{p.lhs};
            r.rhs = {RhsItem{true, terminal}};
            r.formula = expand_empty_stack();
            r.tag = "gnf:" + ptag + " final";
            out.ravg_rules.push_back(std::move(r));
        }
    }
    return res;
}

// Convenience: full pipeline from an arbitrary CFG.
inline CompileResult compile_cfg(const Cfg& g) { return compile_gnf(to_gnf(g)); }

}  // namespace ravg
