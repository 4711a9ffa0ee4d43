// hp.hpp - threading the logarithmic counter through a grammar so that every
// generated string has a derivation of polynomially bounded length.
//
// The transformed grammar's nodes split their structure under two top-level
// attributes: the original grammar's features move under `grammar`, the
// bookkeeping numbers live under `counter`.  A derivation first runs the
// counter cycle, nondeterministically fixing counter.size and a poly of
// roughly size^k; the coupling splice then hands over to the original start
// symbol, whose subtree accounts its own size and rule applications upward
// (size = sum of daughter sizes, poly = sum of daughter polys + 1).  The
// coupling pins the root's size to the counter's and requires the root's
// poly not to exceed the counter's: the difference is a guessed slack number
// with poly_root + slack = poly_counter, so oversized derivations are
// inconsistent rather than merely unlikely.

#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"
#include "grammar.hpp"

namespace ravg {

// Every occurrence of a variable is re-rooted through `attr`: the formula
// then speaks about the substructure under that attribute.
inline ConjFormula embed_under(const ConjFormula& f, const Attribute& attr) {
    ConjFormula out;
    out.eqs.reserve(f.eqs.size());
    for (const auto& e : f.eqs) {
        PathEquation ne = e;
        auto reroot = [&](Path& p, const Term& t) {
            if (!is_var(t)) return;
            Path np;
            np.attrs.push_back(attr);
            np.attrs.insert(np.attrs.end(), p.attrs.begin(), p.attrs.end());
            p = std::move(np);
        };
        reroot(ne.p, ne.s);
        reroot(ne.q, ne.t);
        out.eqs.push_back(std::move(ne));
    }
    return out;
}

namespace detail {

inline ProtoRule reroot_proto(ProtoRule r, const Attribute& attr) {
    r.pure = embed_under(r.pure, attr);
    for (auto& m : r.macros) {
        for (PathRef* ref : {&m.a, &m.b, &m.dst}) {
            Path np;
            np.attrs.push_back(attr);
            np.attrs.insert(np.attrs.end(), ref->path.attrs.begin(), ref->path.attrs.end());
            ref->path = std::move(np);
        }
    }
    return r;
}

}  // namespace detail

inline const std::set<std::string> kHpReservedAttrs = {"counter", "grammar", "size", "poly",
                                                       "slist",   "plist",   "sums", "sump"};

// Builds the honestly parsable version of a (conjunctive) general grammar.
// k is the degree of the step polynomial.
inline Grammar transform_hpc(const Grammar& g, int k) {
    if (g.kind != GrammarKind::avg)
        throw std::invalid_argument("transform_hpc wants an avg grammar (convert with to_avg)");
    if (k < 1) throw std::invalid_argument("the polynomial degree k must be positive");
    for (const auto& a : g.attrs)
        if (kHpReservedAttrs.count(a))
            throw std::invalid_argument("attribute '" + a + "' is reserved by the transform");

    std::set<std::string> used = g.cats;
    used.insert(g.lexforms.begin(), g.lexforms.end());
    NameAllocator alloc(used);

    Grammar out;
    out.kind = GrammarKind::avg;
    out.lexforms = g.lexforms;

    Category s_new = alloc.cat("S", "hpc");
    Category a_cycle = alloc.cat("A", "hpc");
    Category b_cycle = alloc.cat("B", "hpc");
    out.start = s_new;

    std::vector<AvgRule> rules;

    // Hand-off from the finished counter to the original start symbol: tie
    // the sizes together and let a guessed slack witness poly_root <= poly_counter.
    // Emitted before the cycle rules so a search tries to leave the cycle
    // before growing it.
    {
        ProtoRule couple;
        couple.lhs = a_cycle;
        couple.daughters = {g.start};
        couple.tag = "hp:couple";
        couple.pure &= eq(path_of({"counter", "size"}), Var{1}, path_of({"counter", "size"}), Var{0});
        couple.macros.push_back({MacroCall::Kind::sum,
                                 {1, path_of({"counter", "poly"})},
                                 {0, path_of({"counter", "slack"})},
                                 {0, path_of({"counter", "poly"})}});
        expand_arith_macros(couple, alloc, rules);
    }

    // The counter itself, embedded under `counter`.
    RuleSchema counter = gen_counter(k, s_new, a_cycle, b_cycle);
    for (const auto& proto : counter.rules)
        expand_arith_macros(detail::reroot_proto(proto, Attribute{"counter"}), alloc, rules);

    // Original rules: features re-rooted under `grammar`, daughters' sizes
    // and polys collected into lists, both summed, the mother one step ahead.
    std::set<std::string> lex_cats;
    for (const auto& e : g.lexicon) lex_cats.insert(e.cat.name);
    for (std::size_t i = 0; i < g.avg_rules.size(); ++i) {
        const AvgRule& r = g.avg_rules[i];
        int n = static_cast<int>(r.daughters.size());
        ProtoRule pr;
        pr.lhs = r.lhs;
        pr.daughters = r.daughters;
        pr.tag = "hp:orig:" + std::to_string(i);
        // Route the bookkeeping chain through a non-preterminal daughter when
        // there is one: the token-bearing daughters are then born with the
        // rule itself and prune wrong rule choices before any arithmetic runs.
        for (int d = n - 1; d >= 0; --d)
            if (!lex_cats.count(r.daughters[static_cast<std::size_t>(d)].name)) {
                pr.route = d;
                break;
            }
        pr.pure = embed_under(r.formula, Attribute{"grammar"});
        Path slist = path_of({"counter", "slist"});
        Path plist = path_of({"counter", "plist"});
        for (int d = 0; d < n; ++d) {
            Path scell = slist, pcell = plist;
            for (int j = 0; j < d; ++j) {
                scell = scell.then(Attribute{"r"});
                pcell = pcell.then(Attribute{"r"});
            }
            pr.pure &= eq(scell.then(Attribute{"f"}), Var{0}, path_of({"counter", "size"}),
                          Var{d + 1});
            pr.pure &= eq(pcell.then(Attribute{"f"}), Var{0}, path_of({"counter", "poly"}),
                          Var{d + 1});
        }
        Path send = slist, pend = plist;
        for (int j = 0; j < n; ++j) {
            send = send.then(Attribute{"r"});
            pend = pend.then(Attribute{"r"});
        }
        pr.pure &= eq(send, Var{0}, Path{}, Atom{kTerminatorAtom});
        pr.pure &= eq(pend, Var{0}, Path{}, Atom{kTerminatorAtom});
        pr.pure &= eq(path_of({"counter", "sums"}), Var{0}, path_of({"counter", "size"}), Var{0});
        // Reversed list sums run against the already-known totals; the succ
        // goes first so it pins sump (= poly - 1) before the plist sum needs it.
        pr.macros.push_back(
            {MacroCall::Kind::list_sum_rev, {0, slist}, {}, {0, path_of({"counter", "sums"})}});
        pr.macros.push_back({MacroCall::Kind::succ,
                             {0, path_of({"counter", "sump"})},
                             {},
                             {0, path_of({"counter", "poly"})}});
        pr.macros.push_back(
            {MacroCall::Kind::list_sum_rev, {0, plist}, {}, {0, path_of({"counter", "sump"})}});
        expand_arith_macros(pr, alloc, rules);
    }

    // Lexicon: size one, no derivation steps spent.  The zero is written in
    // the canonical form the summation produces (the decoder reads the bare
    // terminator as zero too, but aligning the encodings spares the search
    // a structural mismatch at every leaf).
    for (const auto& e : g.lexicon) {
        ConjFormula psi = embed_under(e.formula, Attribute{"grammar"});
        psi &= eq(path_of({"counter", "size", "v"}), Var{0}, Path{}, Atom{"1"});
        psi &= eq(path_of({"counter", "size", "1"}), Var{0}, Path{}, Atom{kTerminatorAtom});
        psi &= eq(path_of({"counter", "poly", "v"}), Var{0}, Path{}, Atom{"0"});
        psi &= eq(path_of({"counter", "poly", "0"}), Var{0}, Path{}, Atom{kTerminatorAtom});
        out.lexicon.push_back({e.form, e.cat, std::move(psi)});
    }

    for (auto& r : rules) {
        out.cats.insert(r.lhs.name);
        for (const auto& d : r.daughters) out.cats.insert(d.name);
        collect_symbols(r.formula, out.atoms, out.attrs);
        out.avg_rules.push_back(std::move(r));
    }
    for (const auto& e : out.lexicon) {
        out.cats.insert(e.cat.name);
        collect_symbols(e.formula, out.atoms, out.attrs);
    }
    out.atoms.insert(g.atoms.begin(), g.atoms.end());
    out.atoms.insert({"0", "1", kTerminatorAtom});
    return out;
}

}  // namespace ravg
