// grammar.hpp - lexicons, syntactic rules, grammars, annotated constituent
// structure trees, and the licensing relation.
//
// Two grammar kinds share one record.  A restricted grammar (ravg) carries
// its terminals inline in the rules, each rule emitting at least one of them
// and at most one nonterminal daughter; formulas range over {x0, x1}.  A
// general grammar (avg) has category-only daughters, terminals enter through
// the lexicon, and chain rules are permitted; formulas range over {x0..xn}.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "feature.hpp"

namespace ravg {

struct Category {
    std::string name;
    bool operator==(const Category& o) const = default;
    auto operator<=>(const Category& o) const = default;
};

struct LexForm {
    std::string name;
    bool operator==(const LexForm& o) const = default;
    auto operator<=>(const LexForm& o) const = default;
};

struct RhsItem {
    bool terminal = false;
    std::string name;
    bool operator==(const RhsItem& o) const = default;
};

struct RavgRule {
    Category lhs;
    std::vector<RhsItem> rhs;
    ConjFormula formula;  // over {x0, x1}
    std::string tag;      // provenance note, not part of grammar identity

    bool operator==(const RavgRule& o) const {
        return lhs == o.lhs && rhs == o.rhs && formula == o.formula;
    }

    int category_index() const {
        for (std::size_t i = 0; i < rhs.size(); ++i)
            if (!rhs[i].terminal) return static_cast<int>(i);
        return -1;
    }
    int terminal_count() const {
        int n = 0;
        for (const auto& it : rhs) n += it.terminal ? 1 : 0;
        return n;
    }
    int category_count() const { return static_cast<int>(rhs.size()) - terminal_count(); }
};

struct AvgRule {
    Category lhs;
    std::vector<Category> daughters;
    ConjFormula formula;  // over {x0..xn}
    std::string tag;

    bool operator==(const AvgRule& o) const {
        return lhs == o.lhs && daughters == o.daughters && formula == o.formula;
    }
};

struct LexEntry {
    LexForm form;
    Category cat;
    ConjFormula formula;  // over {x0}
    bool operator==(const LexEntry& o) const = default;
};

enum class GrammarKind { ravg, avg };

struct Grammar {
    GrammarKind kind = GrammarKind::ravg;
    std::set<std::string> atoms;
    std::set<std::string> attrs;
    std::set<std::string> cats;
    std::set<std::string> lexforms;
    std::vector<RavgRule> ravg_rules;
    std::vector<AvgRule> avg_rules;
    std::vector<LexEntry> lexicon;
    Category start;

    bool operator==(const Grammar& o) const {
        return kind == o.kind && atoms == o.atoms && attrs == o.attrs && cats == o.cats &&
               lexforms == o.lexforms && ravg_rules == o.ravg_rules && avg_rules == o.avg_rules &&
               lexicon == o.lexicon && start == o.start;
    }

    std::size_t rule_count() const {
        return kind == GrammarKind::ravg ? ravg_rules.size() : avg_rules.size();
    }
};

// ── Validation ──────────────────────────────────────────────────────────────

namespace detail {

inline void check_formula_symbols(const Grammar& g, const ConjFormula& f, int max_var,
                                  const std::string& where, std::vector<std::string>& out) {
    if (!f.well_formed()) out.push_back(where + ": ill-formed path equation (atom with a path)");
    for (const auto& e : f.eqs) {
        for (const Term* t : {&e.s, &e.t}) {
            if (is_var(*t) && as_var(*t).id > max_var)
                out.push_back(where + ": variable x" + std::to_string(as_var(*t).id) +
                              " out of range (max x" + std::to_string(max_var) + ")");
            if (is_atom(*t) && !g.atoms.count(as_atom(*t).name))
                out.push_back(where + ": undeclared atom @" + as_atom(*t).name);
        }
        for (const Path* p : {&e.p, &e.q})
            for (const auto& a : p->attrs)
                if (!g.attrs.count(a.name)) out.push_back(where + ": undeclared attribute " + a.name);
    }
}

}  // namespace detail

// Empty result means the grammar is valid.  For the restricted kind this is
// the off-line parsability gate: at least one terminal and at most one
// nonterminal per rule, conjunctive formulas over {x0, x1} only.
inline std::vector<std::string> validate_grammar(const Grammar& g) {
    std::vector<std::string> out;
    if (!g.cats.count(g.start.name)) out.push_back("start category " + g.start.name + " undeclared");
    if (g.kind == GrammarKind::ravg) {
        if (!g.lexicon.empty()) out.push_back("ravg grammar with a lexicon (terminals live in rules)");
        if (!g.avg_rules.empty()) out.push_back("ravg grammar with avg rules");
        for (std::size_t i = 0; i < g.ravg_rules.size(); ++i) {
            const auto& r = g.ravg_rules[i];
            std::string where = "rule #" + std::to_string(i) + " (" + r.lhs.name + ")";
            if (!g.cats.count(r.lhs.name)) out.push_back(where + ": undeclared lhs");
            for (const auto& it : r.rhs) {
                if (it.terminal && !g.lexforms.count(it.name))
                    out.push_back(where + ": undeclared terminal \"" + it.name + "\"");
                if (!it.terminal && !g.cats.count(it.name))
                    out.push_back(where + ": undeclared category " + it.name);
            }
            if (r.terminal_count() < 1) out.push_back(where + ": chain rule (no terminal item)");
            if (r.category_count() > 1)
                out.push_back(where + ": more than one nonterminal daughter");
            detail::check_formula_symbols(g, r.formula, r.category_count() >= 1 ? 1 : 0, where, out);
        }
    } else {
        if (!g.ravg_rules.empty()) out.push_back("avg grammar with ravg rules");
        for (std::size_t i = 0; i < g.avg_rules.size(); ++i) {
            const auto& r = g.avg_rules[i];
            std::string where = "rule #" + std::to_string(i) + " (" + r.lhs.name + ")";
            if (!g.cats.count(r.lhs.name)) out.push_back(where + ": undeclared lhs");
            for (const auto& d : r.daughters)
                if (!g.cats.count(d.name)) out.push_back(where + ": undeclared category " + d.name);
            if (r.daughters.empty()) out.push_back(where + ": epsilon rule (no daughters)");
            detail::check_formula_symbols(g, r.formula, static_cast<int>(r.daughters.size()), where,
                                          out);
        }
        for (std::size_t i = 0; i < g.lexicon.size(); ++i) {
            const auto& e = g.lexicon[i];
            std::string where = "lexicon #" + std::to_string(i) + " (\"" + e.form.name + "\")";
            if (!g.lexforms.count(e.form.name)) out.push_back(where + ": undeclared lexical form");
            if (!g.cats.count(e.cat.name)) out.push_back(where + ": undeclared category " + e.cat.name);
            detail::check_formula_symbols(g, e.formula, 0, where, out);
        }
    }
    return out;
}

// ── Rule instantiation ──────────────────────────────────────────────────────

inline ConjFormula instantiate_rule(const RavgRule& r, Var mother, std::optional<Var> daughter) {
    bool has_cat = r.category_index() >= 0;
    if (has_cat != daughter.has_value())
        throw std::invalid_argument("rule arity mismatch for " + r.lhs.name);
    std::map<int, Var> sigma{{0, mother}};
    if (daughter) sigma.emplace(1, *daughter);
    return subst(r.formula, sigma);
}

inline ConjFormula instantiate_rule(const AvgRule& r, Var mother, const std::vector<Var>& daughters) {
    if (daughters.size() != r.daughters.size())
        throw std::invalid_argument("rule arity mismatch for " + r.lhs.name);
    std::map<int, Var> sigma{{0, mother}};
    for (std::size_t i = 0; i < daughters.size(); ++i)
        sigma.emplace(static_cast<int>(i) + 1, daughters[i]);
    return subst(r.formula, sigma);
}

inline ConjFormula instantiate_lex(const LexEntry& e, Var node) {
    return subst(e.formula, {{0, node}});
}

// ── Annotated constituent structure trees ───────────────────────────────────

struct CstNode {
    bool leaf = false;
    std::string label;
    std::vector<int> children;
};

struct AnnotatedCst {
    std::vector<CstNode> nodes;
    int root = -1;
    ConjFormula formula;       // union of the instantiated rule formulas
    std::map<int, Var> h;      // internal node -> variable

    const CstNode& at(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
};

inline std::vector<std::string> yield_of(const AnnotatedCst& cst) {
    std::vector<std::string> out;
    if (cst.root < 0) return out;
    auto walk = [&](auto&& self, int n) -> void {
        const CstNode& nd = cst.at(n);
        if (nd.leaf) {
            out.push_back(nd.label);
            return;
        }
        for (int c : nd.children) self(self, c);
    };
    walk(walk, cst.root);
    return out;
}

// ── Derivations ─────────────────────────────────────────────────────────────

// A derivation is the replayable edit script that yields an annotated CST:
// each step expands one open internal node by a rule (or lexicon entry)
// under a fresh-variable assignment.  Node ids count creation order, the
// root being 0.
struct DerivStep {
    enum class Kind { ravg, avg, lex } kind = Kind::ravg;
    int index = -1;  // rule or lexicon index in the grammar
    int node = -1;
    Var mother;
    std::vector<Var> daughters;  // variables of the category daughters, in rhs order
};

struct Derivation {
    std::vector<DerivStep> steps;

    std::size_t size() const { return steps.size(); }
    // Rule applications only; lexicon attachments are free.
    std::size_t step_count() const {
        std::size_t n = 0;
        for (const auto& s : steps) n += s.kind == DerivStep::Kind::lex ? 0 : 1;
        return n;
    }
};

// Replays a derivation into the tree, formula set, and node->variable map.
// Throws on a script that does not fit the grammar.
inline AnnotatedCst build_cst(const Grammar& g, const Derivation& d) {
    AnnotatedCst cst;
    if (d.steps.empty()) throw std::invalid_argument("empty derivation");
    std::map<int, std::string> open;  // node id -> expected category

    auto new_node = [&](bool leaf, const std::string& label) {
        cst.nodes.push_back({leaf, label, {}});
        return static_cast<int>(cst.nodes.size()) - 1;
    };

    cst.root = new_node(false, "");
    open[0] = "";

    for (const auto& step : d.steps) {
        auto it = open.find(step.node);
        if (it == open.end()) throw std::invalid_argument("derivation expands a closed node");
        std::string expected = it->second;
        open.erase(it);

        auto expand = [&](const std::string& lhs) {
            if (!expected.empty() && expected != lhs)
                throw std::invalid_argument("derivation label mismatch: expected " + expected +
                                            ", rule gives " + lhs);
            cst.nodes[static_cast<std::size_t>(step.node)].label = lhs;
            cst.h[step.node] = step.mother;
        };

        if (step.kind == DerivStep::Kind::ravg) {
            const auto& r = g.ravg_rules.at(static_cast<std::size_t>(step.index));
            expand(r.lhs.name);
            std::size_t cat_seen = 0;
            for (const auto& item : r.rhs) {
                int child = new_node(item.terminal, item.name);
                cst.nodes[static_cast<std::size_t>(step.node)].children.push_back(child);
                if (!item.terminal) {
                    open[child] = item.name;
                    ++cat_seen;
                }
            }
            std::optional<Var> daughter;
            if (!step.daughters.empty()) daughter = step.daughters.front();
            if (cat_seen != step.daughters.size())
                throw std::invalid_argument("derivation daughter count mismatch");
            cst.formula &= instantiate_rule(r, step.mother, daughter);
        } else if (step.kind == DerivStep::Kind::avg) {
            const auto& r = g.avg_rules.at(static_cast<std::size_t>(step.index));
            expand(r.lhs.name);
            if (step.daughters.size() != r.daughters.size())
                throw std::invalid_argument("derivation daughter count mismatch");
            for (const auto& dcat : r.daughters) {
                int child = new_node(false, dcat.name);
                cst.nodes[static_cast<std::size_t>(step.node)].children.push_back(child);
                open[child] = dcat.name;
            }
            cst.formula &= instantiate_rule(r, step.mother, step.daughters);
        } else {
            const auto& e = g.lexicon.at(static_cast<std::size_t>(step.index));
            expand(e.cat.name);
            int child = new_node(true, e.form.name);
            cst.nodes[static_cast<std::size_t>(step.node)].children.push_back(child);
            cst.formula &= instantiate_lex(e, step.mother);
        }
    }
    if (!open.empty()) throw std::invalid_argument("derivation leaves open nodes");
    return cst;
}

// ── Licensing ───────────────────────────────────────────────────────────────

namespace detail {

inline bool formula_subset(const std::vector<PathEquation>& inst, const ConjFormula& fs) {
    for (const auto& e : inst) {
        bool found = false;
        for (const auto& f : fs.eqs)
            if (f == e) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

}  // namespace detail

// Does `rule` license internal node `node` of `cst`?  Checks the label, the
// daughters' labels and shape, and that the instantiated formula is
// contained in the tree's formula set.
inline bool licensed(const AnnotatedCst& cst, int node, const RavgRule& rule) {
    const CstNode& nd = cst.at(node);
    if (nd.leaf || nd.label != rule.lhs.name) return false;
    if (nd.children.size() != rule.rhs.size()) return false;
    auto hv = cst.h.find(node);
    if (hv == cst.h.end()) return false;
    std::optional<Var> daughter;
    for (std::size_t i = 0; i < rule.rhs.size(); ++i) {
        const CstNode& c = cst.at(nd.children[i]);
        if (rule.rhs[i].terminal != c.leaf || rule.rhs[i].name != c.label) return false;
        if (!c.leaf) {
            auto dv = cst.h.find(nd.children[i]);
            if (dv == cst.h.end()) return false;
            daughter = dv->second;
        }
    }
    if ((rule.category_index() >= 0) != daughter.has_value()) return false;
    ConjFormula inst = instantiate_rule(rule, hv->second, daughter);
    return detail::formula_subset(inst.eqs, cst.formula);
}

inline bool licensed(const AnnotatedCst& cst, int node, const AvgRule& rule) {
    const CstNode& nd = cst.at(node);
    if (nd.leaf || nd.label != rule.lhs.name) return false;
    if (nd.children.size() != rule.daughters.size()) return false;
    auto hv = cst.h.find(node);
    if (hv == cst.h.end()) return false;
    std::vector<Var> dvars;
    for (std::size_t i = 0; i < rule.daughters.size(); ++i) {
        const CstNode& c = cst.at(nd.children[i]);
        if (c.leaf || c.label != rule.daughters[i].name) return false;
        auto dv = cst.h.find(nd.children[i]);
        if (dv == cst.h.end()) return false;
        dvars.push_back(dv->second);
    }
    ConjFormula inst = instantiate_rule(rule, hv->second, dvars);
    return detail::formula_subset(inst.eqs, cst.formula);
}

inline bool licensed(const AnnotatedCst& cst, int node, const LexEntry& entry) {
    const CstNode& nd = cst.at(node);
    if (nd.leaf || nd.label != entry.cat.name) return false;
    if (nd.children.size() != 1 || !cst.at(nd.children[0]).leaf ||
        cst.at(nd.children[0]).label != entry.form.name)
        return false;
    auto hv = cst.h.find(node);
    if (hv == cst.h.end()) return false;
    return detail::formula_subset(instantiate_lex(entry, hv->second).eqs, cst.formula);
}

inline bool node_licensed(const Grammar& g, const AnnotatedCst& cst, int node) {
    if (g.kind == GrammarKind::ravg) {
        for (const auto& r : g.ravg_rules)
            if (licensed(cst, node, r)) return true;
        return false;
    }
    for (const auto& r : g.avg_rules)
        if (licensed(cst, node, r)) return true;
    for (const auto& e : g.lexicon)
        if (licensed(cst, node, e)) return true;
    return false;
}

// The generation relation: root is the start category, every internal node
// is licensed, and the formula set describes a feature graph.
inline bool generates(const Grammar& g, const AnnotatedCst& cst) {
    if (cst.root < 0 || cst.at(cst.root).leaf) return false;
    if (cst.at(cst.root).label != g.start.name) return false;
    for (int n = 0; n < static_cast<int>(cst.nodes.size()); ++n) {
        if (cst.at(n).leaf) continue;
        if (!node_licensed(g, cst, n)) return false;
    }
    return check_consistency(cst.formula).has_value();
}

// ── Restricted-to-general conversion ────────────────────────────────────────

// Rewrites inline terminals as fresh preterminal categories backed by a
// trivial lexicon, so general-grammar passes (the honest-parsability
// transform in particular) can run on restricted grammars.
inline Grammar to_avg(const Grammar& g) {
    if (g.kind == GrammarKind::avg) return g;
    Grammar out;
    out.kind = GrammarKind::avg;
    out.atoms = g.atoms;
    out.attrs = g.attrs;
    out.cats = g.cats;
    out.lexforms = g.lexforms;
    out.start = g.start;

    std::map<std::string, std::string> pre;  // lexform -> preterminal category
    for (const auto& lf : g.lexforms) {
        std::string name = "T_" + lf;
        while (out.cats.count(name)) name += "'";
        out.cats.insert(name);
        pre[lf] = name;
        out.lexicon.push_back({LexForm{lf}, Category{name}, ConjFormula{}});
    }
    for (const auto& r : g.ravg_rules) {
        AvgRule nr;
        nr.lhs = r.lhs;
        nr.tag = r.tag;
        int cat_pos = -1;
        for (const auto& item : r.rhs) {
            if (item.terminal) {
                nr.daughters.push_back(Category{pre.at(item.name)});
            } else {
                cat_pos = static_cast<int>(nr.daughters.size());
                nr.daughters.push_back(Category{item.name});
            }
        }
        nr.formula = cat_pos < 0 ? r.formula : subst(r.formula, {{1, Var{cat_pos + 1}}});
        out.avg_rules.push_back(std::move(nr));
    }
    return out;
}

}  // namespace ravg
