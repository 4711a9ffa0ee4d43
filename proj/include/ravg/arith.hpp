// arith.hpp - rule schemata for binary arithmetic inside feature graphs, and
// the macro expansion that splices them into host rules.
//
// Numbers are encoded least-significant-bit first: each level carries the
// value attribute v (@0 or @1) and a matching bit attribute 0 or 1 leading
// to the next level; the most significant bit's attribute ends at the atom
// +.  A bare + also reads as zero (lexical entries use it for "no steps").
//
// Schemata are built from ProtoRules: plain path equations plus relational
// macro calls (succ / sum / list_sum; equality and doubling are expressible
// as single equations and are inlined at construction).  expand_arith_macros
// lowers a ProtoRule to pure rules by routing the rewrite through a chain of
// fresh categories: the chain's nodes keep a handle on the original mother
// (attribute hm) and on each eventual daughter (hd0, hd1, ...), scratch
// numbers live on attributes t0, t1, ...; since constraints are order-free,
// the bindings may be stated on whichever chain rule is convenient.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "grammar.hpp"

namespace ravg {

// ── Encoding conventions ────────────────────────────────────────────────────

inline const std::string kValueAttr = "v";
inline const std::string kAuxAttr = "aux";
inline const std::string kTerminatorAtom = "+";

inline Path bit_path(const Path& base, int bit) { return base.then(Attribute{bit ? "1" : "0"}); }
inline Path value_path(const Path& base) { return base.then(Attribute{kValueAttr}); }
inline Path aux_path(const std::string& pointer) {
    return Path{{Attribute{kAuxAttr}, Attribute{pointer}}};
}

// Pure path equations pinning the binary encoding of n at `base` under
// `root`; no fresh variables needed, the bit chain is expressed by paths.
inline ConjFormula encode_number_at(unsigned long n, Var root, Path base = {}) {
    ConjFormula f;
    Path prefix = base;
    for (;;) {
        int b = static_cast<int>(n & 1);
        f &= eq(value_path(prefix), root, Path{}, Atom{b ? "1" : "0"});
        if (n <= 1) {
            f &= eq(bit_path(prefix, b), root, Path{}, Atom{kTerminatorAtom});
            break;
        }
        prefix = bit_path(prefix, b);
        n >>= 1;
    }
    return f;
}

inline ConjFormula encode_number(unsigned long n, Var root) { return encode_number_at(n, root); }

struct DecodeResult {
    std::optional<unsigned long> value;
    std::string error;

    bool ok() const { return value.has_value(); }
};

namespace detail {

inline std::optional<Term> probe(const Solver& s, const Term& t, const Path& p) {
    return s.lookup_path(t, p);
}
inline std::optional<Term> probe(const FeatureGraph& g, const Term& t, const Path& p) {
    return g.lookup(t, p);
}

}  // namespace detail

// Reads a number back.  Tolerates a missing v (the bit attribute decides),
// leading zeros, and the bare-terminator zero; rejects structural damage.
template <class Source>
DecodeResult decode_number(const Source& src, Term start) {
    DecodeResult res;
    unsigned long value = 0;
    int pos = 0;
    Term cur = start;
    for (;;) {
        if (is_atom(cur)) {
            if (as_atom(cur).name == kTerminatorAtom && pos == 0) {
                res.value = 0;  // bare terminator counts as zero
                return res;
            }
            res.error = "number chain hits atom @" + as_atom(cur).name;
            return res;
        }
        auto zero = detail::probe(src, cur, path_of({"0"}));
        auto one = detail::probe(src, cur, path_of({"1"}));
        if (zero && one) {
            res.error = "both bit attributes present at position " + std::to_string(pos);
            return res;
        }
        if (!zero && !one) {
            res.error = "no bit attribute at position " + std::to_string(pos);
            return res;
        }
        int bit = one ? 1 : 0;
        auto v = detail::probe(src, cur, Path{{Attribute{kValueAttr}}});
        if (v) {
            if (!is_atom(*v) || as_atom(*v).name != (bit ? "1" : "0")) {
                res.error = "value attribute disagrees with the bit at position " +
                            std::to_string(pos);
                return res;
            }
        }
        if (bit) {
            if (pos >= 62) {
                res.error = "number too wide";
                return res;
            }
            value |= 1ul << pos;
        }
        Term next = bit ? *one : *zero;
        if (is_atom(next)) {
            if (as_atom(next).name != kTerminatorAtom) {
                res.error = "chain ends at atom @" + as_atom(next).name;
                return res;
            }
            res.value = value;
            return res;
        }
        cur = next;
        ++pos;
    }
}

// ── Schema packaging ────────────────────────────────────────────────────────

struct PathRef {
    int var = 0;  // 0 = mother, i >= 1 = i-th daughter
    Path path;
};

struct MacroCall {
    enum class Kind { succ, sum, list_sum, list_sum_rev };
    Kind kind = Kind::succ;
    PathRef a;    // succ: source; sum: first addend; list_sum*: the list
    PathRef b;    // sum: second addend
    PathRef dst;  // where the result must appear
};

struct ProtoRule {
    Category lhs;
    std::vector<Category> daughters;
    ConjFormula pure;
    std::vector<MacroCall> macros;
    std::string tag;
    // Which daughter the macro chain is routed through (see
    // expand_arith_macros); the default is the last one.
    int route = -1;
};

struct RuleSchema {
    Category entry;
    Category exit;
    std::vector<ProtoRule> rules;
};

// Fresh names of the shape <host>$<schema>$<n>, unique against everything
// handed out or reserved before.
class NameAllocator {
public:
    NameAllocator() = default;
    explicit NameAllocator(std::set<std::string> used) : used_(std::move(used)) {}

    void reserve(const std::set<std::string>& names) { used_.insert(names.begin(), names.end()); }

    Category cat(const std::string& host, const std::string& schema) {
        std::string base = host + "$" + schema + "$";
        for (int k = next_[base];; ++k) {
            std::string name = base + std::to_string(k);
            if (used_.insert(name).second) {
                next_[base] = k + 1;
                return Category{name};
            }
        }
    }

private:
    std::set<std::string> used_;
    std::map<std::string, int> next_;
};

inline void collect_symbols(const ConjFormula& f, std::set<std::string>& atoms,
                            std::set<std::string>& attrs) {
    for (const auto& e : f.eqs) {
        for (const Term* t : {&e.s, &e.t})
            if (is_atom(*t)) atoms.insert(as_atom(*t).name);
        for (const Path* p : {&e.p, &e.q})
            for (const auto& a : p->attrs) attrs.insert(a.name);
    }
}

// ── Schemata ────────────────────────────────────────────────────────────────

namespace detail {

inline PathEquation at(Path where, int var, Term what) {
    return eq(std::move(where), Var{var}, Path{}, std::move(what));
}
inline PathEquation link(Path from, int v1, Path to, int v2) {
    return eq(std::move(from), Var{v1}, std::move(to), Var{v2});
}

}  // namespace detail

// One step, one rule: the two numbers are merged outright, so the rewrite
// survives exactly when they denote the same graph.
inline RuleSchema gen_equality_test(Category A, Category B, Path n_path, Path m_path) {
    ProtoRule r;
    r.lhs = A;
    r.daughters = {B};
    r.pure &= detail::link(n_path, 0, m_path, 0);
    r.pure &= detail::link(Path{}, 0, Path{}, 1);
    r.tag = "eq";
    return RuleSchema{A, B, {r}};
}

// One step: the daughter's number is the mother's shifted once.
inline RuleSchema gen_double(Category A, Category B, Path n_path) {
    ProtoRule r;
    r.lhs = A;
    r.daughters = {B};
    r.pure &= detail::at(value_path(n_path), 1, Atom{"0"});
    r.pure &= detail::link(n_path, 0, bit_path(n_path, 0), 1);
    r.tag = "double";
    return RuleSchema{A, B, {r}};
}

// Five rules of carry propagation, driven by the pointers aux.p (next input
// bit) and aux.q (frontier of the result).  Exactly one rule applies in any
// state, so a run takes trailing-ones + 1 steps.  The result number is held
// at aux.res on every node of the chain (the entry included), which lets a
// caller pin the expected result up front; the exit keeps the conventional
// copy at the number path itself.
inline RuleSchema gen_increment(Category A, Category C, Path n, NameAllocator& alloc) {
    Category B = alloc.cat(A.name, "inc");
    Path p = aux_path("p"), q = aux_path("q"), res = aux_path("res");
    RuleSchema s{A, C, {}};

    {  // lsb 0: set it and share the tail
        ProtoRule r{A, {C}, {}, {}, "inc:flip0"};
        r.pure &= detail::at(value_path(n), 0, Atom{"0"});
        r.pure &= detail::link(bit_path(n, 0), 0, bit_path(res, 1), 1);
        r.pure &= detail::at(value_path(res), 1, Atom{"1"});
        r.pure &= detail::link(res, 0, res, 1);
        r.pure &= detail::link(n, 1, res, 1);
        s.rules.push_back(r);
    }
    {  // lsb 1: write 0, start the carry
        ProtoRule r{A, {B}, {}, {}, "inc:carry"};
        r.pure &= detail::at(value_path(n), 0, Atom{"1"});
        r.pure &= detail::link(bit_path(n, 1), 0, p, 1);
        r.pure &= detail::link(bit_path(res, 0), 1, q, 1);
        r.pure &= detail::at(value_path(res), 1, Atom{"0"});
        r.pure &= detail::link(res, 0, res, 1);
        s.rules.push_back(r);
    }
    {  // carry over a 1 bit
        ProtoRule r{B, {B}, {}, {}, "inc:thru1"};
        r.pure &= detail::at(value_path(p), 0, Atom{"1"});
        r.pure &= detail::link(bit_path(p, 1), 0, p, 1);
        r.pure &= detail::link(res, 0, res, 1);
        r.pure &= detail::at(value_path(q), 0, Atom{"0"});
        r.pure &= detail::link(bit_path(q, 0), 0, q, 1);
        s.rules.push_back(r);
    }
    {  // carry meets a 0 bit: write 1, share the rest
        ProtoRule r{B, {C}, {}, {}, "inc:stop0"};
        r.pure &= detail::at(value_path(p), 0, Atom{"0"});
        r.pure &= detail::at(value_path(q), 0, Atom{"1"});
        r.pure &= detail::link(bit_path(p, 0), 0, bit_path(q, 1), 0);
        r.pure &= detail::link(res, 0, res, 1);
        r.pure &= detail::link(n, 1, res, 1);
        s.rules.push_back(r);
    }
    {  // carry past the msb: append the new leading 1
        ProtoRule r{B, {C}, {}, {}, "inc:grow"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(value_path(q), 0, Atom{"1"});
        r.pure &= detail::at(bit_path(q, 1), 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(res, 0, res, 1);
        r.pure &= detail::link(n, 1, res, 1);
        s.rules.push_back(r);
    }
    return s;
}

// The borrow mirror.  There is deliberately no rule for a borrow running
// past the most significant bit, so zero has no decrement derivation; the
// result may keep one leading zero, which decode tolerates.
inline RuleSchema gen_decrement(Category A, Category C, Path n, NameAllocator& alloc) {
    Category B = alloc.cat(A.name, "dec");
    Path p = aux_path("p"), q = aux_path("q");
    RuleSchema s{A, C, {}};

    {
        ProtoRule r{A, {C}, {}, {}, "dec:flip1"};
        r.pure &= detail::at(value_path(n), 0, Atom{"1"});
        r.pure &= detail::link(bit_path(n, 1), 0, bit_path(n, 0), 1);
        r.pure &= detail::at(value_path(n), 1, Atom{"0"});
        s.rules.push_back(r);
    }
    {
        ProtoRule r{A, {B}, {}, {}, "dec:borrow"};
        r.pure &= detail::at(value_path(n), 0, Atom{"0"});
        r.pure &= detail::link(bit_path(n, 0), 0, p, 1);
        r.pure &= detail::link(bit_path(n, 1), 1, q, 1);
        r.pure &= detail::at(value_path(n), 1, Atom{"1"});
        s.rules.push_back(r);
    }
    {
        ProtoRule r{B, {B}, {}, {}, "dec:thru0"};
        r.pure &= detail::at(value_path(p), 0, Atom{"0"});
        r.pure &= detail::link(bit_path(p, 0), 0, p, 1);
        r.pure &= detail::link(n, 0, n, 1);
        r.pure &= detail::at(value_path(q), 0, Atom{"1"});
        r.pure &= detail::link(bit_path(q, 1), 0, q, 1);
        s.rules.push_back(r);
    }
    {
        ProtoRule r{B, {C}, {}, {}, "dec:stop1"};
        r.pure &= detail::at(value_path(p), 0, Atom{"1"});
        r.pure &= detail::at(value_path(q), 0, Atom{"0"});
        r.pure &= detail::link(bit_path(p, 1), 0, bit_path(q, 0), 0);
        r.pure &= detail::link(n, 0, n, 1);
        s.rules.push_back(r);
    }
    return s;
}

// Sixteen rules: two wrappers hiding the pointers, six carry-preserving and
// two carry-flipping bit steps (carry 0 lives on A', carry 1 on B), and six
// stop rules split by which operand ran out and the carry state.  Two stop
// rules need a spliced increment and carry succ macros.  The stop rules are
// emitted before the bit steps: searches trying rules in order then prefer
// termination, which keeps guessed operands short.
inline RuleSchema gen_sum(Category A, Category C, Path n, Path m, NameAllocator& alloc) {
    Category Ap = alloc.cat(A.name, "sum");   // carry clear
    Category Bc = alloc.cat(A.name, "sum");   // carry set
    Category Cp = alloc.cat(A.name, "sum");   // about to exit
    Path p = aux_path("p"), q = aux_path("q"), r_ = aux_path("r"), res = aux_path("res");
    RuleSchema s{A, C, {}};

    {  // wrapper in: p walks n, q walks m, r writes the result held at aux.res
        ProtoRule r{A, {Ap}, {}, {}, "sum:in"};
        r.pure &= detail::link(m, 0, m, 1);
        r.pure &= detail::link(n, 0, p, 1);
        r.pure &= detail::link(m, 1, q, 1);
        r.pure &= detail::link(r_, 1, res, 1);
        r.pure &= detail::link(res, 0, res, 1);
        s.rules.push_back(r);
    }
    {  // wrapper out: the result lands at the number path of the exit
        ProtoRule r{Cp, {C}, {}, {}, "sum:out"};
        r.pure &= detail::link(res, 0, n, 1);
        r.pure &= detail::link(m, 0, m, 1);
        s.rules.push_back(r);
    }

    auto share_all = [&](ProtoRule& r) { r.pure &= detail::link(Path{}, 0, Path{}, 1); };
    {  // carry clear, n spent: the rest of m is the rest of the result
        ProtoRule r{Ap, {Cp}, {}, {}, "sum:stop-n"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(q, 0, r_, 0);
        share_all(r);
        s.rules.push_back(r);
    }
    {  // carry clear, m spent
        ProtoRule r{Ap, {Cp}, {}, {}, "sum:stop-m"};
        r.pure &= detail::at(q, 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(p, 0, r_, 0);
        share_all(r);
        s.rules.push_back(r);
    }
    {  // carry clear, both spent
        ProtoRule r{Ap, {Cp}, {}, {}, "sum:stop-nm"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(q, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(r_, 0, Atom{kTerminatorAtom});
        share_all(r);
        s.rules.push_back(r);
    }
    {  // carry set, n spent: rest of result = rest of m, incremented
        ProtoRule r{Bc, {Cp}, {}, {}, "sum:stopc-n"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        share_all(r);
        r.macros.push_back({MacroCall::Kind::succ, {0, q}, {}, {0, r_}});
        s.rules.push_back(r);
    }
    {  // carry set, m spent
        ProtoRule r{Bc, {Cp}, {}, {}, "sum:stopc-m"};
        r.pure &= detail::at(q, 0, Atom{kTerminatorAtom});
        share_all(r);
        r.macros.push_back({MacroCall::Kind::succ, {0, p}, {}, {0, r_}});
        s.rules.push_back(r);
    }
    {  // carry set, both spent: the carry becomes the new msb
        ProtoRule r{Bc, {Cp}, {}, {}, "sum:stopc-nm"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(q, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(value_path(r_), 0, Atom{"1"});
        r.pure &= detail::at(bit_path(r_, 1), 0, Atom{kTerminatorAtom});
        share_all(r);
        s.rules.push_back(r);
    }
    struct Step {
        int a, b, res;
        Category from, to;
        const char* tag;
    };
    const Step steps[] = {
        {0, 0, 0, Ap, Ap, "sum:00"}, {1, 0, 1, Ap, Ap, "sum:10"}, {0, 1, 1, Ap, Ap, "sum:01"},
        {1, 0, 0, Bc, Bc, "sum:10c"}, {0, 1, 0, Bc, Bc, "sum:01c"}, {1, 1, 1, Bc, Bc, "sum:11c"},
        {1, 1, 0, Ap, Bc, "sum:carry"}, {0, 0, 1, Bc, Ap, "sum:uncarry"},
    };
    for (const auto& st : steps) {
        ProtoRule r{st.from, {st.to}, {}, {}, st.tag};
        r.pure &= detail::at(value_path(p), 0, Atom{st.a ? "1" : "0"});
        r.pure &= detail::at(value_path(q), 0, Atom{st.b ? "1" : "0"});
        r.pure &= detail::at(value_path(r_), 0, Atom{st.res ? "1" : "0"});
        r.pure &= detail::link(bit_path(p, st.a), 0, p, 1);
        r.pure &= detail::link(bit_path(q, st.b), 0, q, 1);
        r.pure &= detail::link(bit_path(r_, st.res), 0, r_, 1);
        r.pure &= detail::link(res, 0, res, 1);
        r.pure &= detail::link(m, 0, m, 1);
        s.rules.push_back(r);
    }

    return s;
}

// Three rules: init the accumulator to zero and point at the list head, add
// the current element (a spliced sum), advance, exit at the list's end.
inline RuleSchema gen_list_sum(Category A, Category B, Path list_path, Path sum_path,
                               NameAllocator& alloc) {
    Category Ap = alloc.cat(A.name, "lsum");
    Path p = aux_path("p");
    RuleSchema s{A, B, {}};
    {
        ProtoRule r{A, {Ap}, {}, {}, "lsum:init"};
        r.pure &= detail::at(value_path(sum_path), 1, Atom{"0"});
        r.pure &= detail::at(bit_path(sum_path, 0), 1, Atom{kTerminatorAtom});
        r.pure &= detail::link(list_path, 0, list_path, 1);
        r.pure &= detail::link(list_path, 0, p, 1);
        s.rules.push_back(r);
    }
    {
        ProtoRule r{Ap, {Ap}, {}, {}, "lsum:add"};
        r.pure &= detail::link(p.then(Attribute{"r"}), 0, p, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        r.macros.push_back(
            {MacroCall::Kind::sum, {0, sum_path}, {0, p.then(Attribute{"f"})}, {1, sum_path}});
        s.rules.push_back(r);
    }
    {
        ProtoRule r{Ap, {B}, {}, {}, "lsum:exit"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(sum_path, 0, sum_path, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        s.rules.push_back(r);
    }
    return s;
}

// The reversed list sum walks a remainder down from the total instead of an
// accumulator up from zero: rem starts at the (shared, early-bindable) total,
// each element is subtracted by a sum constraint directed at the concrete
// remainder, and the exit demands zero.  Same language of derivations as the
// forward schema, but every internal sum runs against a known result, which
// keeps searches over unconstrained operands finite.
inline RuleSchema gen_list_sum_rev(Category A, Category B, Path list_path, Path sum_path,
                                   NameAllocator& alloc) {
    Category Ap = alloc.cat(A.name, "lsumr");
    Path p = aux_path("p"), rem = aux_path("rem");
    RuleSchema s{A, B, {}};
    {
        ProtoRule r{A, {Ap}, {}, {}, "lsumr:init"};
        r.pure &= detail::link(sum_path, 0, sum_path, 1);
        r.pure &= detail::link(rem, 1, sum_path, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        r.pure &= detail::link(list_path, 0, p, 1);
        s.rules.push_back(r);
    }
    {
        ProtoRule r{Ap, {Ap}, {}, {}, "lsumr:take"};
        r.pure &= detail::link(p.then(Attribute{"r"}), 0, p, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        r.pure &= detail::link(sum_path, 0, sum_path, 1);
        r.macros.push_back(
            {MacroCall::Kind::sum, {1, rem}, {0, p.then(Attribute{"f"})}, {0, rem}});
        s.rules.push_back(r);
    }
    // The remainder must be spent; zero comes in two shapes (the bare
    // terminator the take rule's guesses leave behind, or a canonical zero
    // inherited untouched), so there is one exit rule per shape.
    {
        ProtoRule r{Ap, {B}, {}, {}, "lsumr:exit"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(rem, 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(sum_path, 0, sum_path, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        s.rules.push_back(r);
    }
    {
        ProtoRule r{Ap, {B}, {}, {}, "lsumr:exit0"};
        r.pure &= detail::at(p, 0, Atom{kTerminatorAtom});
        r.pure &= detail::at(value_path(rem), 0, Atom{"0"});
        r.pure &= detail::at(bit_path(rem, 0), 0, Atom{kTerminatorAtom});
        r.pure &= detail::link(sum_path, 0, sum_path, 1);
        r.pure &= detail::link(list_path, 0, list_path, 1);
        s.rules.push_back(r);
    }
    return s;
}

// The logarithmic counter: size and n step up together; whenever n reaches
// twice m the poly gains k low zero bits, m doubles, n resets.  The always
// applicable sharing rule lets a derivation decline the extension, after
// which poly never grows again.  The appended poly bits carry explicit v
// values so later arithmetic on poly cannot invent them.
inline RuleSchema gen_counter(int k, Category S, Category A, Category B) {
    if (k < 1) throw std::invalid_argument("counter degree must be positive");
    Path size = path_of({"size"}), n = path_of({"n"}), m = path_of({"m"}), poly = path_of({"poly"});
    RuleSchema s{S, A, {}};
    {
        ProtoRule r{S, {A}, {}, {}, "ctr:init"};
        for (const Path* num : {&size, &n}) {
            r.pure &= detail::at(value_path(*num), 1, Atom{"0"});
            r.pure &= detail::at(bit_path(*num, 0), 1, Atom{kTerminatorAtom});
        }
        for (const Path* num : {&m, &poly}) {
            r.pure &= detail::at(value_path(*num), 1, Atom{"1"});
            r.pure &= detail::at(bit_path(*num, 1), 1, Atom{kTerminatorAtom});
        }
        s.rules.push_back(r);
    }
    {
        ProtoRule r{A, {B}, {}, {}, "ctr:tick"};
        r.pure &= detail::link(m, 0, m, 1);
        r.pure &= detail::link(poly, 0, poly, 1);
        r.macros.push_back({MacroCall::Kind::succ, {0, size}, {}, {1, size}});
        r.macros.push_back({MacroCall::Kind::succ, {0, n}, {}, {1, n}});
        s.rules.push_back(r);
    }
    {
        ProtoRule r{B, {A}, {}, {}, "ctr:extend"};
        r.pure &= detail::link(size, 0, size, 1);
        // n = 2m, via the doubled m of the daughter
        r.pure &= detail::at(value_path(m), 1, Atom{"0"});
        r.pure &= detail::link(m, 0, bit_path(m, 0), 1);
        r.pure &= detail::link(n, 0, m, 1);
        // poly gains k low zero bits
        Path ext = poly;
        for (int i = 0; i < k; ++i) {
            r.pure &= detail::at(value_path(ext), 1, Atom{"0"});
            ext = bit_path(ext, 0);
        }
        r.pure &= detail::link(poly, 0, ext, 1);
        // n resets to zero
        r.pure &= detail::at(value_path(n), 1, Atom{"0"});
        r.pure &= detail::at(bit_path(n, 0), 1, Atom{kTerminatorAtom});
        s.rules.push_back(r);
    }
    {
        ProtoRule r{B, {A}, {}, {}, "ctr:keep"};
        r.pure &= detail::link(Path{}, 0, Path{}, 1);
        s.rules.push_back(r);
    }
    return s;
}

// ── Macro expansion ─────────────────────────────────────────────────────────

namespace detail {

inline Path chain_root(int var, const Path& path) {
    Path out;
    out.attrs.push_back(Attribute{var == 0 ? "hm" : "hd" + std::to_string(var - 1)});
    out.attrs.insert(out.attrs.end(), path.attrs.begin(), path.attrs.end());
    return out;
}

// On the header rule the mother and the non-routed daughters are ordinary
// rule variables; the routed daughter, which is born below the chain, is
// addressed through its hd handle on the chain's entry node.
inline ConjFormula embed_pure_at_header(const ConjFormula& f, int route) {
    ConjFormula out;
    for (const auto& e : f.eqs) {
        PathEquation ne = e;
        auto reroot = [&](Path& p, Term& t) {
            if (!is_var(t) || as_var(t).id != route + 1) return;
            Path np;
            np.attrs.push_back(Attribute{"hd" + std::to_string(route)});
            np.attrs.insert(np.attrs.end(), p.attrs.begin(), p.attrs.end());
            p = std::move(np);
        };
        reroot(ne.p, ne.s);
        reroot(ne.q, ne.t);
        out.eqs.push_back(std::move(ne));
    }
    return out;
}

}  // namespace detail

// Lowers one proto rule to pure AVG rules.  Macro-free rules pass through.
// Otherwise the rewrite keeps its shape except that one daughter (the
// routed one, by default the last) is replaced by the entry of a chain of
// unary rules running the macros' schemata; the chain's tail produces the
// routed daughter.  All other daughters are born immediately, so their
// constraints prune before the chains spend any work.  Chain nodes keep a
// handle on the mother (hm) and the routed daughter (its hd slot); nested
// schemata expand recursively with their own disjoint chains.
inline void expand_arith_macros(const ProtoRule& rule, NameAllocator& alloc,
                                std::vector<AvgRule>& out) {
    if (rule.macros.empty()) {
        out.push_back({rule.lhs, rule.daughters, rule.pure, rule.tag});
        return;
    }

    int n_daughters = static_cast<int>(rule.daughters.size());
    int route = rule.route >= 0 && rule.route < n_daughters ? rule.route : n_daughters - 1;
    auto carries = [&](ConjFormula& f) {
        f &= detail::link(path_of({"hm"}), 0, path_of({"hm"}), 1);
        for (int i = 0; i < n_daughters; ++i) {
            Path hd = path_of({("hd" + std::to_string(i)).c_str()});
            f &= detail::link(hd, 0, hd, 1);
        }
    };

    // Per-macro scratch paths and inner schemata.
    struct Segment {
        RuleSchema schema;
        ConjFormula in_binding;   // stated on the bridge entering the schema (over x1)
        ConjFormula out_binding;  // stated on the bridge leaving it (over x0)
    };
    std::vector<Segment> segs;
    int scratch = 0;
    for (const auto& mc : rule.macros) {
        Path ta = path_of({("t" + std::to_string(scratch++)).c_str()});
        Path tb = path_of({("t" + std::to_string(scratch++)).c_str()});
        Segment seg;
        Category ein = alloc.cat(rule.lhs.name, "m");
        Category eout = alloc.cat(rule.lhs.name, "m");
        switch (mc.kind) {
            case MacroCall::Kind::succ:
                // the result slot is chain-wide, so pin it on the way in
                seg.schema = gen_increment(ein, eout, ta, alloc);
                seg.in_binding &= eq(ta, Var{1}, detail::chain_root(mc.a.var, mc.a.path), Var{1});
                seg.in_binding &=
                    eq(aux_path("res"), Var{1}, detail::chain_root(mc.dst.var, mc.dst.path), Var{1});
                break;
            case MacroCall::Kind::sum:
                seg.schema = gen_sum(ein, eout, ta, tb, alloc);
                seg.in_binding &= eq(ta, Var{1}, detail::chain_root(mc.a.var, mc.a.path), Var{1});
                seg.in_binding &= eq(tb, Var{1}, detail::chain_root(mc.b.var, mc.b.path), Var{1});
                seg.in_binding &=
                    eq(aux_path("res"), Var{1}, detail::chain_root(mc.dst.var, mc.dst.path), Var{1});
                break;
            case MacroCall::Kind::list_sum:
                seg.schema = gen_list_sum(ein, eout, ta, tb, alloc);
                seg.in_binding &= eq(ta, Var{1}, detail::chain_root(mc.a.var, mc.a.path), Var{1});
                seg.out_binding &= eq(tb, Var{0}, detail::chain_root(mc.dst.var, mc.dst.path), Var{0});
                break;
            case MacroCall::Kind::list_sum_rev:
                // the total is shared along the whole chain: pin it up front
                seg.schema = gen_list_sum_rev(ein, eout, ta, tb, alloc);
                seg.in_binding &= eq(ta, Var{1}, detail::chain_root(mc.a.var, mc.a.path), Var{1});
                seg.in_binding &= eq(tb, Var{1}, detail::chain_root(mc.dst.var, mc.dst.path), Var{1});
                break;
        }
        segs.push_back(std::move(seg));
    }

    // Header: the original rule with the routed daughter swapped for the
    // first chain entry.  The rule's own equations are stated here, so
    // everything they pin is concrete before the schema chains run.
    {
        ProtoRule header;
        header.lhs = rule.lhs;
        header.daughters = rule.daughters;
        header.daughters[static_cast<std::size_t>(route)] = segs[0].schema.entry;
        header.tag = rule.tag + ":m0";
        Var entry{route + 1};
        header.pure &= eq(path_of({"hm"}), entry, Path{}, Var{0});
        for (int j = 0; j < n_daughters; ++j) {
            if (j == route) continue;
            header.pure &= eq(path_of({("hd" + std::to_string(j)).c_str()}), entry, Path{},
                              Var{j + 1});
        }
        header.pure &= detail::embed_pure_at_header(rule.pure, route);
        header.pure &= subst(segs[0].in_binding, {{1, entry}});
        expand_arith_macros(header, alloc, out);
    }

    // Chain: schema 1 ... schema k, joined by unary bridges.
    Category cur;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i > 0) {
            ProtoRule bridge;
            bridge.lhs = cur;
            bridge.daughters = {segs[i].schema.entry};
            bridge.tag = rule.tag + ":m" + std::to_string(i);
            carries(bridge.pure);
            bridge.pure &= segs[i - 1].out_binding;
            bridge.pure &= segs[i].in_binding;
            expand_arith_macros(bridge, alloc, out);
        }
        for (ProtoRule inner : segs[i].schema.rules) {
            carries(inner.pure);
            expand_arith_macros(inner, alloc, out);
        }
        cur = segs[i].schema.exit;
    }

    // Tail: the chain bottoms out at the routed daughter.
    ProtoRule tail;
    tail.lhs = cur;
    tail.daughters = {rule.daughters[static_cast<std::size_t>(route)]};
    tail.tag = rule.tag;
    tail.pure &= segs.back().out_binding;
    tail.pure &= detail::link(path_of({("hd" + std::to_string(route)).c_str()}), 0, Path{}, 1);
    expand_arith_macros(tail, alloc, out);
}

inline std::vector<AvgRule> expand_arith_macros(const ProtoRule& rule, NameAllocator& alloc) {
    std::vector<AvgRule> out;
    expand_arith_macros(rule, alloc, out);
    return out;
}

// Packages a schema as a freestanding chain grammar (no terminals): entry is
// the start; a simulator drives it from category to category.
inline Grammar schema_grammar(const RuleSchema& schema, NameAllocator& alloc) {
    Grammar g;
    g.kind = GrammarKind::avg;
    g.start = schema.entry;
    std::vector<AvgRule> rules;
    for (const auto& r : schema.rules) expand_arith_macros(r, alloc, rules);
    for (auto& r : rules) {
        g.cats.insert(r.lhs.name);
        for (const auto& d : r.daughters) g.cats.insert(d.name);
        collect_symbols(r.formula, g.atoms, g.attrs);
        g.avg_rules.push_back(std::move(r));
    }
    g.cats.insert(schema.exit.name);
    g.atoms.insert({"0", "1", kTerminatorAtom});
    g.attrs.insert({"0", "1", kValueAttr});
    return g;
}

}  // namespace ravg
