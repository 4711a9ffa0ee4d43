// oracles.hpp - brute-force reference implementations used by tests and the
// acceptance suite.  These share data types with the rest of the library but
// no algorithms: the point is an independent route to the same answers.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arith.hpp"
#include "feature.hpp"
#include "gnf.hpp"
#include "grammar.hpp"
#include "recognizer.hpp"

namespace ravg::oracle {

// ── Consistency by saturation ───────────────────────────────────────────────
//
// Builds the finite skeleton of sub-terms mentioned by the formula (every
// prefix of every path), then saturates equality under functionality until
// nothing changes.  Unsat iff two distinct atoms meet, an atom class has an
// outgoing application, or (acyclic mode) the quotient graph has a cycle.

inline bool brute_congruence_closure(const ConjFormula& f, bool acyclic = true) {
    struct Skel {
        Term base;          // meaningful when prefix is empty
        int arg = -1;       // index of the sub-term one attribute shorter
        std::string attr;   // attribute applied last
    };
    std::vector<Skel> terms;
    std::map<std::pair<std::string, int>, int> app_index;  // (attr, arg) -> term
    std::map<std::string, int> var_index, atom_index;

    auto base_term = [&](const Term& t) {
        std::string key = is_var(t) ? "v" + std::to_string(as_var(t).id) : "a" + as_atom(t).name;
        auto& tab = is_var(t) ? var_index : atom_index;
        auto it = tab.find(key);
        if (it != tab.end()) return it->second;
        terms.push_back({t, -1, ""});
        tab[key] = static_cast<int>(terms.size()) - 1;
        return static_cast<int>(terms.size()) - 1;
    };
    auto apply = [&](int arg, const std::string& attr) {
        auto it = app_index.find({attr, arg});
        if (it != app_index.end()) return it->second;
        terms.push_back({Var{-1}, arg, attr});
        app_index[{attr, arg}] = static_cast<int>(terms.size()) - 1;
        return static_cast<int>(terms.size()) - 1;
    };
    auto side = [&](const Term& t, const Path& p) {
        int cur = base_term(t);
        for (const auto& a : p.attrs) cur = apply(cur, a.name);
        return cur;
    };

    std::vector<std::pair<int, int>> goals;
    for (const auto& e : f.eqs) goals.push_back({side(e.s, e.p), side(e.t, e.q)});

    std::vector<int> parent(terms.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    auto unite = [&](int x, int y) {
        x = find(x);
        y = find(y);
        if (x != y) parent[y] = x;
        return x != y;
    };

    for (auto [a, b] : goals) unite(a, b);

    // Saturate: equal arguments force equal applications of the same attribute.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (terms[i].arg < 0) continue;
            for (std::size_t j = i + 1; j < terms.size(); ++j) {
                if (terms[j].arg < 0 || terms[i].attr != terms[j].attr) continue;
                if (find(terms[i].arg) == find(terms[j].arg) &&
                    find(static_cast<int>(i)) != find(static_cast<int>(j))) {
                    unite(static_cast<int>(i), static_cast<int>(j));
                    changed = true;
                }
            }
        }
    }

    // Distinct atoms in one class.
    std::map<int, std::string> class_atom;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].arg >= 0 || !is_atom(terms[i].base)) continue;
        int r = find(static_cast<int>(i));
        auto [it, fresh] = class_atom.emplace(r, as_atom(terms[i].base).name);
        if (!fresh && it->second != as_atom(terms[i].base).name) return false;
    }
    // An application out of an atom class.
    for (const auto& t : terms) {
        if (t.arg >= 0 && class_atom.count(find(t.arg))) return false;
    }
    if (acyclic) {
        std::map<int, std::set<int>> adj;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (terms[i].arg < 0) continue;
            adj[find(terms[i].arg)].insert(find(static_cast<int>(i)));
        }
        std::map<int, int> color;  // 0 white, 1 gray, 2 black
        auto dfs = [&](auto&& self, int u) -> bool {
            color[u] = 1;
            for (int v : adj[u]) {
                if (color[v] == 1) return true;
                if (color[v] == 0 && self(self, v)) return true;
            }
            color[u] = 2;
            return false;
        };
        for (const auto& [u, _] : adj) {
            if (color[u] == 0 && dfs(dfs, u)) return false;
        }
    }
    return true;
}

// ── CYK membership ──────────────────────────────────────────────────────────
//
// Chomsky-normal-form conversion and table parsing, written from the
// textbook.  Deliberately shares nothing with the Greibach pipeline it is
// used to check.

namespace detail {

struct Cnf {
    std::string start;
    bool nullable_start = false;
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> binary;
    std::vector<std::pair<std::string, std::string>> unary;  // A -> terminal
};

inline Cnf to_cnf(const Cfg& g) {
    // Fresh start symbol.
    auto fresh = [used = std::set<std::string>()](const Cfg& gg, std::string base) mutable {
        if (used.empty()) {
            used = gg.nonterminals;
            for (const auto& t : gg.terminals) used.insert(t);
        }
        while (used.count(base)) base += "^";
        used.insert(base);
        return base;
    };
    std::string start = fresh(g, g.start + "^S");

    struct P {
        std::string lhs;
        std::vector<CfgSymbol> rhs;
    };
    std::vector<P> ps{{start, {CfgSymbol{false, g.start}}}};
    for (const auto& p : g.productions) ps.push_back({p.lhs, p.rhs});

    // TERM: wrap terminals appearing in long productions.
    std::map<std::string, std::string> termvar;
    for (auto& p : ps) {
        if (p.rhs.size() < 2) continue;
        for (auto& s : p.rhs) {
            if (!s.terminal) continue;
            auto it = termvar.find(s.name);
            if (it == termvar.end())
                it = termvar.emplace(s.name, fresh(g, "T^" + s.name)).first;
            s = CfgSymbol{false, it->second};
        }
    }
    for (const auto& [t, nt] : termvar) ps.push_back({nt, {CfgSymbol{true, t}}});

    // BIN: binarize long productions.
    std::vector<P> bin;
    for (auto& p : ps) {
        if (p.rhs.size() <= 2) {
            bin.push_back(p);
            continue;
        }
        std::string prev = p.rhs[0].name;
        std::vector<std::string> tail;
        for (std::size_t i = 1; i < p.rhs.size(); ++i) tail.push_back(p.rhs[i].name);
        std::string lhs = p.lhs;
        while (tail.size() > 1) {
            std::string mid = fresh(g, lhs + "^");
            bin.push_back({lhs, {CfgSymbol{false, prev}, CfgSymbol{false, mid}}});
            lhs = mid;
            prev = tail.front();
            tail.erase(tail.begin());
        }
        bin.push_back({lhs, {CfgSymbol{false, prev}, CfgSymbol{false, tail.front()}}});
    }

    // DEL: epsilon elimination.
    std::set<std::string> nullable;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : bin) {
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
    std::vector<P> noeps;
    for (const auto& p : bin) {
        if (p.rhs.empty()) continue;
        if (p.rhs.size() == 1) {
            noeps.push_back(p);
            continue;
        }
        noeps.push_back(p);
        if (!p.rhs[0].terminal && nullable.count(p.rhs[0].name))
            noeps.push_back({p.lhs, {p.rhs[1]}});
        if (!p.rhs[1].terminal && nullable.count(p.rhs[1].name))
            noeps.push_back({p.lhs, {p.rhs[0]}});
    }

    // UNIT: inline unit chains.
    std::map<std::string, std::set<std::string>> unitof;
    std::set<std::string> nts;
    for (const auto& p : noeps) {
        nts.insert(p.lhs);
        for (const auto& s : p.rhs)
            if (!s.terminal) nts.insert(s.name);
    }
    for (const auto& n : nts) unitof[n].insert(n);
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : noeps) {
            if (p.rhs.size() != 1 || p.rhs[0].terminal) continue;
            for (const auto& n : nts)
                if (unitof[n].count(p.lhs) && unitof[n].insert(p.rhs[0].name).second)
                    changed = true;
        }
    }

    Cnf out;
    out.start = start;
    out.nullable_start = nullable.count(start) != 0;
    std::set<std::pair<std::string, std::pair<std::string, std::string>>> bseen;
    std::set<std::pair<std::string, std::string>> useen;
    for (const auto& [a, reach] : unitof) {
        for (const auto& b : reach)
            for (const auto& p : noeps) {
                if (p.lhs != b) continue;
                if (p.rhs.size() == 2) {
                    auto key = std::make_pair(a, std::make_pair(p.rhs[0].name, p.rhs[1].name));
                    if (bseen.insert(key).second) out.binary.push_back(key);
                } else if (p.rhs[0].terminal) {
                    auto key = std::make_pair(a, p.rhs[0].name);
                    if (useen.insert(key).second) out.unary.push_back(key);
                }
            }
    }
    return out;
}

}  // namespace detail

class CykParser {
public:
    explicit CykParser(const Cfg& g) : terminals_(g.terminals), cnf_(detail::to_cnf(g)) {}

    bool accepts(const std::vector<std::string>& w) const {
        if (w.empty()) return cnf_.nullable_start;
        int n = static_cast<int>(w.size());
        // table[i][len] = set of nonterminals deriving w[i, i+len)
        std::vector<std::vector<std::set<std::string>>> table(
            static_cast<std::size_t>(n),
            std::vector<std::set<std::string>>(static_cast<std::size_t>(n) + 1));
        for (int i = 0; i < n; ++i)
            for (const auto& [a, t] : cnf_.unary)
                if (t == w[static_cast<std::size_t>(i)])
                    table[static_cast<std::size_t>(i)][1].insert(a);
        for (int len = 2; len <= n; ++len)
            for (int i = 0; i + len <= n; ++i)
                for (int k = 1; k < len; ++k)
                    for (const auto& [a, bc] : cnf_.binary) {
                        if (table[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].count(
                                bc.first) &&
                            table[static_cast<std::size_t>(i + k)]
                                 [static_cast<std::size_t>(len - k)]
                                     .count(bc.second))
                            table[static_cast<std::size_t>(i)][static_cast<std::size_t>(len)]
                                .insert(a);
                    }
        return table[0][static_cast<std::size_t>(n)].count(cnf_.start) != 0;
    }

    // All members with 1 <= |w| <= max_len, by testing every string over the
    // terminal alphabet.  Meant for small alphabets.
    std::set<std::vector<std::string>> language(int max_len) const {
        std::set<std::vector<std::string>> out;
        std::vector<std::string> sigma(terminals_.begin(), terminals_.end());
        std::vector<std::vector<std::string>> frontier{{}};
        for (int len = 1; len <= max_len; ++len) {
            std::vector<std::vector<std::string>> next;
            for (const auto& w : frontier)
                for (const auto& t : sigma) {
                    auto v = w;
                    v.push_back(t);
                    next.push_back(std::move(v));
                }
            frontier = std::move(next);
            for (const auto& w : frontier)
                if (accepts(w)) out.insert(w);
        }
        return out;
    }

private:
    std::set<std::string> terminals_;
    detail::Cnf cnf_;
};

inline bool cyk_membership(const Cfg& g, const std::vector<std::string>& w) {
    return CykParser(g).accepts(w);
}

inline std::set<std::vector<std::string>> cyk_language(const Cfg& g, int max_len) {
    return CykParser(g).language(max_len);
}

// Direct leftmost-derivation enumeration on the raw productions, after an
// inline epsilon/unit cleanup so every step makes progress.  Independent of
// both the CYK table and the Greibach pipeline.
inline std::set<std::vector<std::string>> cfg_enumerate(const Cfg& g, int max_len) {
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
    // epsilon-free expansions
    std::vector<CfgProduction> prods;
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
            if (!q.rhs.empty()) prods.push_back(std::move(q));
        }
    }
    // unit closure
    std::map<std::string, std::set<std::string>> unitof;
    for (const auto& n : g.nonterminals) unitof[n].insert(n);
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : prods) {
            if (p.rhs.size() != 1 || p.rhs[0].terminal) continue;
            for (const auto& n : g.nonterminals)
                if (unitof[n].count(p.lhs) && unitof[n].insert(p.rhs[0].name).second)
                    changed = true;
        }
    }
    std::map<std::string, std::vector<std::vector<CfgSymbol>>> by_lhs;
    for (const auto& [a, reach] : unitof)
        for (const auto& b : reach)
            for (const auto& p : prods) {
                if (p.lhs != b) continue;
                if (p.rhs.size() == 1 && !p.rhs[0].terminal) continue;
                by_lhs[a].push_back(p.rhs);
            }
    for (auto& [a, v] : by_lhs) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::set<std::vector<std::string>> out;
    auto walk = [&](auto&& self, std::vector<std::string>& done,
                    std::vector<CfgSymbol>& form, std::size_t next) -> void {
        while (next < form.size() && form[next].terminal) done.push_back(form[next++].name);
        if (done.size() + (form.size() - next) > static_cast<std::size_t>(max_len)) return;
        if (next == form.size()) {
            if (!done.empty()) out.insert(done);
            return;
        }
        for (const auto& rhs : by_lhs[form[next].name]) {
            std::vector<CfgSymbol> nf(form.begin(), form.begin() + static_cast<long>(next));
            nf.insert(nf.end(), rhs.begin(), rhs.end());
            nf.insert(nf.end(), form.begin() + static_cast<long>(next) + 1, form.end());
            auto saved = done;
            self(self, done, nf, next);
            done = saved;
        }
    };
    std::vector<std::string> done;
    std::vector<CfgSymbol> form{{false, g.start}};
    walk(walk, done, form, 0);
    return out;
}

// ── Honest-parsability search hints ─────────────────────────────────────────
//
// Given a derivation in the pre-transform grammar, pin every node's
// bookkeeping numbers (size = span length, poly = rule applications in the
// subtree) for the corresponding search in the transformed grammar.  The
// hinted search still proves its own result: the derivation it returns is
// checked against the unmodified grammar.

inline std::vector<SpanHint> hp_hints(const Grammar& source, const Derivation& d) {
    AnnotatedCst cst = build_cst(source, d);
    struct Info {
        std::string cat;
        int lo, hi;
        long poly;
    };
    std::vector<Info> nodes;
    int pos = 0;
    auto walk = [&](auto&& self, int n) -> long {
        const CstNode& nd = cst.at(n);
        int lo = pos;
        if (nd.leaf) {
            ++pos;
            return 0;
        }
        bool preterminal = nd.children.size() == 1 && cst.at(nd.children[0]).leaf;
        long poly = 0;
        for (int c : nd.children) poly += self(self, c);
        if (!preterminal) poly += 1;
        nodes.push_back({nd.label, lo, pos, poly});
        return poly;
    };
    walk(walk, cst.root);

    std::map<std::pair<std::string, std::pair<int, int>>, long> uniq;
    std::set<std::pair<std::string, std::pair<int, int>>> conflicted;
    for (const auto& info : nodes) {
        auto key = std::make_pair(info.cat, std::make_pair(info.lo, info.hi));
        auto [it, fresh] = uniq.emplace(key, info.poly);
        if (!fresh && it->second != info.poly) conflicted.insert(key);
    }
    std::vector<SpanHint> hints;
    for (const auto& [key, poly] : uniq) {
        if (conflicted.count(key)) continue;  // ambiguous span: leave unhinted
        SpanHint h;
        h.cat = key.first;
        h.lo = key.second.first;
        h.hi = key.second.second;
        ConjFormula f = encode_number_at(static_cast<unsigned long>(h.hi - h.lo), Var{0},
                                         path_of({"counter", "size"}));
        f &= encode_number_at(static_cast<unsigned long>(poly), Var{0},
                              path_of({"counter", "poly"}));
        h.formula = std::move(f);
        hints.push_back(std::move(h));
    }
    return hints;
}

// ── Derivation simulator ────────────────────────────────────────────────────
//
// Runs a chain of unary rule applications from an initial node whose
// features are constrained by `init` until a target category is reached,
// recording the rule trace.  Drives the arithmetic schema examples: encode
// the inputs, simulate, decode the outputs, count the steps.

struct SimOptions {
    long max_steps = 200000;
    // Optional veto on candidate rules, e.g. to force a canonical counter run.
    std::function<bool(const AvgRule&, const Solver&, Var)> admit;
};

struct SimResult {
    bool reached = false;
    long steps = 0;
    Var entry;
    Var exit;
    std::vector<int> rule_trace;
    Solver solver;
};

inline SimResult simulate_derivation(const Grammar& g, const Category& start_cat,
                                     const ConjFormula& init, const Category& target,
                                     SimOptions opts = {}) {
    if (g.kind != GrammarKind::avg)
        throw std::invalid_argument("the simulator runs on avg grammars");
    SimResult res;
    std::map<std::string, std::vector<int>> by_lhs;
    for (std::size_t i = 0; i < g.avg_rules.size(); ++i)
        if (g.avg_rules[i].daughters.size() == 1)
            by_lhs[g.avg_rules[i].lhs.name].push_back(static_cast<int>(i));

    Var entry = res.solver.fresh_var();
    res.entry = entry;
    if (res.solver.assert_all(subst(init, {{0, entry}})) == AssertResult::clash)
        return res;

    std::vector<int> trace;
    auto dfs = [&](auto&& self, const std::string& cat, Var var, long steps) -> bool {
        if (cat == target.name) {
            res.reached = true;
            res.steps = steps;
            res.exit = var;
            res.rule_trace = trace;
            return true;
        }
        if (steps >= opts.max_steps) return false;
        for (int ri : by_lhs[cat]) {
            const AvgRule& rule = g.avg_rules[static_cast<std::size_t>(ri)];
            if (opts.admit && !opts.admit(rule, res.solver, var)) continue;
            auto m = res.solver.mark();
            Var d = res.solver.fresh_var();
            if (res.solver.assert_all(instantiate_rule(rule, var, {d})) == AssertResult::ok) {
                trace.push_back(ri);
                if (self(self, rule.daughters[0].name, d, steps + 1)) return true;
                trace.pop_back();
            }
            res.solver.undo_and_drop(m);
        }
        return false;
    };
    dfs(dfs, start_cat.name, entry, 0);
    return res;
}

}  // namespace ravg::oracle
