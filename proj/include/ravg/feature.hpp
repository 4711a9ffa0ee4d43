// feature.hpp - terms, paths, path equations, and the consistency solver.
//
// A conjunction of path equations is decided by congruence closure over a
// union-find whose classes carry an optional atom binding and a functional
// successor table (attribute -> class).  All mutations go through a trail,
// so any earlier state can be restored exactly (mark/undo), which is what
// the backtracking recognizer needs.
//
// Paths are stored in application order (first attribute applied first).
// The customary surface notation writes them reversed; only the parser and
// printer deal with that.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ravg {

// ── Syntax ──────────────────────────────────────────────────────────────────

struct Atom {
    std::string name;
    bool operator==(const Atom& o) const { return name == o.name; }
    auto operator<=>(const Atom& o) const { return name <=> o.name; }
};

struct Var {
    int id = -1;
    bool operator==(const Var& o) const { return id == o.id; }
    auto operator<=>(const Var& o) const { return id <=> o.id; }
};

struct Attribute {
    std::string name;
    bool operator==(const Attribute& o) const { return name == o.name; }
    auto operator<=>(const Attribute& o) const { return name <=> o.name; }
};

using Term = std::variant<Var, Atom>;

inline bool is_var(const Term& t) { return std::holds_alternative<Var>(t); }
inline bool is_atom(const Term& t) { return std::holds_alternative<Atom>(t); }
inline Var as_var(const Term& t) { return std::get<Var>(t); }
inline Atom as_atom(const Term& t) { return std::get<Atom>(t); }

// Attributes in application order: attrs[0] is taken first.
struct Path {
    std::vector<Attribute> attrs;

    Path() = default;
    explicit Path(std::vector<Attribute> a) : attrs(std::move(a)) {}

    bool empty() const { return attrs.empty(); }
    std::size_t size() const { return attrs.size(); }
    bool operator==(const Path& o) const = default;
    auto operator<=>(const Path& o) const = default;

    Path then(const Attribute& a) const {
        Path r = *this;
        r.attrs.push_back(a);
        return r;
    }
    // p.after(q): first q, then p (matches writing "p q(x)" on the surface).
    Path after(const Path& prefix) const {
        Path r = prefix;
        r.attrs.insert(r.attrs.end(), attrs.begin(), attrs.end());
        return r;
    }
};

inline Path path_of(std::initializer_list<const char*> application_order) {
    Path p;
    for (const char* a : application_order) p.attrs.push_back(Attribute{a});
    return p;
}

// ps = qt.  An atom is a sink, so a nonempty path never starts at an atom.
struct PathEquation {
    Path p;
    Term s;
    Path q;
    Term t;

    bool operator==(const PathEquation& o) const = default;
    auto operator<=>(const PathEquation& o) const = default;

    bool well_formed() const {
        if (is_atom(s) && !p.empty()) return false;
        if (is_atom(t) && !q.empty()) return false;
        return true;
    }
};

inline PathEquation eq(Path p, Term s, Path q, Term t) {
    return PathEquation{std::move(p), std::move(s), std::move(q), std::move(t)};
}

struct ConjFormula {
    std::vector<PathEquation> eqs;

    ConjFormula() = default;
    explicit ConjFormula(std::vector<PathEquation> e) : eqs(std::move(e)) {}

    bool operator==(const ConjFormula& o) const = default;
    std::size_t size() const { return eqs.size(); }
    bool well_formed() const {
        for (const auto& e : eqs)
            if (!e.well_formed()) return false;
        return true;
    }
    ConjFormula& operator&=(const ConjFormula& o) {
        eqs.insert(eqs.end(), o.eqs.begin(), o.eqs.end());
        return *this;
    }
    ConjFormula& operator&=(PathEquation e) {
        eqs.push_back(std::move(e));
        return *this;
    }
};

// Substitute variables by variables (used when instantiating rule formulas).
inline Term subst_term(const Term& t, const std::map<int, Var>& sigma) {
    if (is_var(t)) {
        auto it = sigma.find(as_var(t).id);
        if (it != sigma.end()) return it->second;
    }
    return t;
}

inline ConjFormula subst(const ConjFormula& f, const std::map<int, Var>& sigma) {
    ConjFormula out;
    out.eqs.reserve(f.eqs.size());
    for (const auto& e : f.eqs)
        out.eqs.push_back(PathEquation{e.p, subst_term(e.s, sigma), e.q, subst_term(e.t, sigma)});
    return out;
}

// Variables mentioned by a formula, in first-mention order.
inline std::vector<Var> vars_of(const ConjFormula& f) {
    std::vector<Var> out;
    std::set<int> seen;
    auto add = [&](const Term& t) {
        if (is_var(t) && seen.insert(as_var(t).id).second) out.push_back(as_var(t));
    };
    for (const auto& e : f.eqs) {
        add(e.s);
        add(e.t);
    }
    return out;
}

// ── Feature graphs ──────────────────────────────────────────────────────────

// The solved form of a consistent conjunction: a rooted graph with functional
// attribute edges where atoms are sinks.  Only the part reachable from the
// root is kept.
struct FeatureGraph {
    Term root = Var{-1};
    std::map<std::pair<int, std::string>, Term> edges;  // (var id, attr) -> term

    std::optional<Term> lookup(Term start, const Path& p) const {
        Term cur = start;
        for (const auto& a : p.attrs) {
            if (!is_var(cur)) return std::nullopt;
            auto it = edges.find({as_var(cur).id, a.name});
            if (it == edges.end()) return std::nullopt;
            cur = it->second;
        }
        return cur;
    }
};

// Name-independent canonical form: a traversal string where variables are
// renumbered in visit order (attributes visited alphabetically).  Two rooted
// graphs are isomorphic iff their signatures match.
inline std::string canonical_signature(const FeatureGraph& g) {
    std::map<int, int> rename;
    std::string out;
    std::map<int, std::vector<std::pair<std::string, Term>>> adj;
    for (const auto& [key, tgt] : g.edges) adj[key.first].push_back({key.second, tgt});

    auto walk = [&](auto&& self, const Term& t) -> void {
        if (is_atom(t)) {
            out += "@" + as_atom(t).name;
            return;
        }
        int id = as_var(t).id;
        auto [it, fresh] = rename.emplace(id, static_cast<int>(rename.size()));
        out += "#" + std::to_string(it->second);
        if (!fresh) return;
        out += "{";
        for (const auto& [attr, tgt] : adj[id]) {
            out += attr + ":";
            self(self, tgt);
            out += ";";
        }
        out += "}";
    };
    walk(walk, g.root);
    return out;
}

// ── Solver ──────────────────────────────────────────────────────────────────

enum class AssertResult { ok, clash };

// Ids at or above this base name solver-internal nodes (classes materialized
// while walking a path that no client variable points at yet).
inline constexpr int kAnonVarBase = 1 << 28;

class Solver {
public:
    explicit Solver(bool acyclic = true) : acyclic_(acyclic) {}

    bool acyclic_mode() const { return acyclic_; }

    // Fresh variables are allocated monotonically; undo rewinds the counter
    // so that replaying the surviving asserts reproduces the same ids.
    Var fresh_var() {
        trail_.push_back({Op::var_ctr, next_var_, 0});
        Var v{next_var_++};
        ensure_var(v);
        return v;
    }

    void ensure_var(Var v) {
        if (v.id < 0) throw std::invalid_argument("negative variable id");
        if (var_node_.count(v.id)) return;
        if (v.id >= kAnonVarBase) throw std::invalid_argument("variable id reserved for internal nodes");
        int n = new_node(v.id, -1);
        var_node_[v.id] = n;
        trail_.push_back({Op::var_map, v.id, 0});
        if (v.id >= next_var_) next_var_ = v.id + 1;
    }

    bool knows(Var v) const { return var_node_.count(v.id) != 0; }

    // Walks both sides (materializing missing successors), merges the
    // endpoints with congruence propagation, then re-checks acyclicity.
    // On clash the partial effects are rolled back: the state is exactly
    // as before the call.
    AssertResult assert_equation(const PathEquation& e) {
        if (!e.well_formed()) throw std::invalid_argument("ill-formed path equation");
        std::size_t guard = trail_.size();
        ++stats_.asserts;
        affected_.clear();
        int a = walk(e.s, e.p);
        int b = a >= 0 ? walk(e.t, e.q) : -1;
        bool ok = a >= 0 && b >= 0 && merge(a, b);
        if (ok && acyclic_ && creates_cycle()) ok = false;
        if (!ok) {
            undo_to_size(guard);
            return AssertResult::clash;
        }
        return AssertResult::ok;
    }

    AssertResult assert_all(const ConjFormula& f) {
        for (const auto& e : f.eqs)
            if (assert_equation(e) == AssertResult::clash) return AssertResult::clash;
        return AssertResult::ok;
    }

    // ── mark / undo ─────────────────────────────────────────────────────

    struct MarkToken {
        std::size_t index = 0;
        std::uint64_t serial = 0;
    };

    MarkToken mark() {
        marks_.push_back({trail_.size(), ++mark_serial_});
        return {marks_.size() - 1, mark_serial_};
    }

    // Restores the state at the mark.  The mark stays valid (a search may
    // return to the same choice point repeatedly); marks taken after it
    // become stale.  Returns false on a stale token.
    bool undo_to(MarkToken tok) {
        if (tok.index >= marks_.size() || marks_[tok.index].serial != tok.serial) return false;
        undo_to_size(marks_[tok.index].len);
        marks_.resize(tok.index + 1);
        return true;
    }

    // undo_to, then retire the mark itself.
    bool undo_and_drop(MarkToken tok) {
        if (!undo_to(tok)) return false;
        marks_.resize(tok.index);
        return true;
    }

    std::size_t mark_depth() const { return marks_.size(); }

    // ── queries ─────────────────────────────────────────────────────────

    std::optional<Term> lookup_path(const Term& start, const Path& p) const {
        int n = node_of(start);
        if (n < 0) {
            // An unknown atom is its own singleton class.
            if (is_atom(start) && p.empty()) return start;
            return std::nullopt;
        }
        for (const auto& attr : p.attrs) {
            int r = find(n);
            auto ai = attr_ids_.find(attr.name);
            if (ai == attr_ids_.end()) return std::nullopt;
            if (nodes_[r].atom != -1) return std::nullopt;  // atoms are sinks
            auto it = nodes_[r].succ.find(ai->second);
            if (it == nodes_[r].succ.end()) return std::nullopt;
            n = it->second;
        }
        return repr(find(n));
    }

    bool same_class(const Term& a, const Term& b) const {
        int x = node_of(a), y = node_of(b);
        return x >= 0 && y >= 0 && find(x) == find(y);
    }

    // Canonical solved form reachable from `root`.
    FeatureGraph snapshot_graph(const Term& root) const {
        FeatureGraph g;
        int rn = node_of(root);
        if (rn < 0) {
            g.root = root;
            return g;
        }
        g.root = repr(find(rn));
        std::set<int> seen;
        std::vector<int> queue{find(rn)};
        while (!queue.empty()) {
            int r = queue.back();
            queue.pop_back();
            if (!seen.insert(r).second) continue;
            if (nodes_[r].atom != -1) continue;
            for (const auto& [aid, tgt] : nodes_[r].succ) {
                int tr = find(tgt);
                g.edges[{nodes_[r].min_var, attr_names_[aid]}] = repr(tr);
                queue.push_back(tr);
            }
        }
        return g;
    }

    // Observable state, stable across an exact replay of surviving asserts.
    std::string dump() const {
        std::ostringstream os;
        for (const auto& [v, node] : var_node_) {
            int r = find(node);
            os << "x" << v << " => ";
            Term t = repr(r);
            os << (is_atom(t) ? "@" + as_atom(t).name : "x" + std::to_string(as_var(t).id));
            std::map<std::string, std::string> edges;
            for (const auto& [aid, tgt] : nodes_[r].succ) {
                Term u = repr(find(tgt));
                edges[attr_names_[aid]] =
                    is_atom(u) ? "@" + as_atom(u).name : "x" + std::to_string(as_var(u).id);
            }
            for (const auto& [a, u] : edges) os << " " << a << "->" << u;
            os << "\n";
        }
        return os.str();
    }

    struct Stats {
        std::uint64_t asserts = 0;
        std::uint64_t unions = 0;
        std::uint64_t walk_steps = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    struct NodeRec {
        int parent;
        int rank;
        int min_var;  // smallest live variable id in the class, -1 if none
        int atom;     // atom id or -1
        std::map<int, int> succ;  // attr id -> node
    };

    enum class Op : std::uint8_t {
        union_parent,  // a = child root
        rank_bump,     // a = root
        min_var_set,   // a = root, b = previous value
        atom_bind,     // a = root
        succ_add,      // a = root, b = attr id
        node_created,  // no args
        var_map,       // a = var id
        atom_map,      // a = atom id
        var_ctr,       // a = previous next_var_
        anon_ctr,      // a = previous next_anon_ - kAnonVarBase
    };
    struct TrailEnt {
        Op op;
        int a;
        int b;
    };

    bool acyclic_;
    std::vector<NodeRec> nodes_;
    std::map<int, int> var_node_;
    std::unordered_map<std::string, int> atom_ids_;
    std::vector<std::string> atom_names_;
    std::vector<int> atom_node_;
    std::unordered_map<std::string, int> attr_ids_;
    std::vector<std::string> attr_names_;
    std::vector<TrailEnt> trail_;
    struct MarkRec {
        std::size_t len;
        std::uint64_t serial;
    };
    std::vector<MarkRec> marks_;
    std::uint64_t mark_serial_ = 0;
    int next_var_ = 0;
    int next_anon_ = kAnonVarBase;
    std::vector<int> affected_;
    Stats stats_;

    int new_node(int min_var, int atom) {
        nodes_.push_back({static_cast<int>(nodes_.size()), 0, min_var, atom, {}});
        trail_.push_back({Op::node_created, 0, 0});
        return static_cast<int>(nodes_.size()) - 1;
    }

    int intern_attr(const std::string& name) {
        auto [it, fresh] = attr_ids_.emplace(name, static_cast<int>(attr_names_.size()));
        if (fresh) attr_names_.push_back(name);
        return it->second;
    }

    int atom_node(const std::string& name) {
        auto [it, fresh] = atom_ids_.emplace(name, static_cast<int>(atom_names_.size()));
        if (fresh) {
            atom_names_.push_back(name);
            atom_node_.push_back(-1);
        }
        int aid = it->second;
        if (atom_node_[aid] == -1) {
            atom_node_[aid] = new_node(-1, aid);
            trail_.push_back({Op::atom_map, aid, 0});
        }
        return atom_node_[aid];
    }

    int node_of(const Term& t) const {
        if (is_atom(t)) {
            auto it = atom_ids_.find(as_atom(t).name);
            return it == atom_ids_.end() ? -1 : atom_node_[it->second];
        }
        auto it = var_node_.find(as_var(t).id);
        return it == var_node_.end() ? -1 : it->second;
    }

    int node_of_mut(const Term& t) {
        if (is_atom(t)) return atom_node(as_atom(t).name);
        ensure_var(as_var(t));
        return var_node_[as_var(t).id];
    }

    int find(int n) const {
        while (nodes_[n].parent != n) n = nodes_[n].parent;
        return n;
    }

    Term repr(int root) const {
        if (nodes_[root].atom != -1) return Atom{atom_names_[nodes_[root].atom]};
        return Var{nodes_[root].min_var};
    }

    // Follow (and materialize) `p` from `t`; -1 signals a clash (a step out
    // of an atom-bound class).
    int walk(const Term& t, const Path& p) {
        int n = node_of_mut(t);
        for (const auto& attr : p.attrs) {
            ++stats_.walk_steps;
            int r = find(n);
            if (nodes_[r].atom != -1) return -1;
            int aid = intern_attr(attr.name);
            auto it = nodes_[r].succ.find(aid);
            if (it != nodes_[r].succ.end()) {
                n = it->second;
            } else {
                trail_.push_back({Op::anon_ctr, next_anon_ - kAnonVarBase, 0});
                int vid = next_anon_++;
                int m = new_node(vid, -1);
                var_node_[vid] = m;
                trail_.push_back({Op::var_map, vid, 0});
                nodes_[r].succ.emplace(aid, m);
                trail_.push_back({Op::succ_add, r, aid});
                n = m;
            }
        }
        return n;
    }

    bool merge(int x, int y) {
        std::vector<std::pair<int, int>> work{{x, y}};
        while (!work.empty()) {
            auto [u, v] = work.back();
            work.pop_back();
            int a = find(u), b = find(v);
            if (a == b) continue;
            ++stats_.unions;
            if (nodes_[a].atom != -1 && nodes_[b].atom != -1) return false;  // distinct atoms
            if (nodes_[a].rank < nodes_[b].rank) std::swap(a, b);
            if (nodes_[a].rank == nodes_[b].rank) {
                ++nodes_[a].rank;
                trail_.push_back({Op::rank_bump, a, 0});
            }
            nodes_[b].parent = a;
            trail_.push_back({Op::union_parent, b, 0});
            if (nodes_[b].atom != -1 && nodes_[a].atom == -1) {
                nodes_[a].atom = nodes_[b].atom;
                trail_.push_back({Op::atom_bind, a, 0});
            }
            if (nodes_[b].min_var != -1 &&
                (nodes_[a].min_var == -1 || nodes_[b].min_var < nodes_[a].min_var)) {
                trail_.push_back({Op::min_var_set, a, nodes_[a].min_var});
                nodes_[a].min_var = nodes_[b].min_var;
            }
            // Fold b's successors into a; b's own table is left intact so a
            // later undo only needs to re-root b.
            for (const auto& [aid, tgt] : nodes_[b].succ) {
                auto it = nodes_[a].succ.find(aid);
                if (it == nodes_[a].succ.end()) {
                    nodes_[a].succ.emplace(aid, tgt);
                    trail_.push_back({Op::succ_add, a, aid});
                } else {
                    work.push_back({it->second, tgt});
                }
            }
            if (nodes_[a].atom != -1 && !nodes_[a].succ.empty()) return false;  // atom sink
            affected_.push_back(a);
        }
        return true;
    }

    // A merge can only create a cycle through a class it touched.
    bool creates_cycle() const {
        for (int n : affected_) {
            int r = find(n);
            std::set<int> gray, black;
            if (cycle_dfs(r, gray, black)) return true;
        }
        return false;
    }

    bool cycle_dfs(int r, std::set<int>& gray, std::set<int>& black) const {
        if (black.count(r)) return false;
        if (!gray.insert(r).second) return true;
        for (const auto& [aid, tgt] : nodes_[r].succ) {
            if (cycle_dfs(find(tgt), gray, black)) return true;
        }
        gray.erase(r);
        black.insert(r);
        return false;
    }

    void undo_to_size(std::size_t len) {
        while (trail_.size() > len) {
            TrailEnt e = trail_.back();
            trail_.pop_back();
            switch (e.op) {
                case Op::union_parent: nodes_[e.a].parent = e.a; break;
                case Op::rank_bump: --nodes_[e.a].rank; break;
                case Op::min_var_set: nodes_[e.a].min_var = e.b; break;
                case Op::atom_bind: nodes_[e.a].atom = -1; break;
                case Op::succ_add: nodes_[e.a].succ.erase(e.b); break;
                case Op::node_created: nodes_.pop_back(); break;
                case Op::var_map: var_node_.erase(e.a); break;
                case Op::atom_map: atom_node_[e.a] = -1; break;
                case Op::var_ctr: next_var_ = e.a; break;
                case Op::anon_ctr: next_anon_ = kAnonVarBase + e.a; break;
            }
        }
    }
};

// Decides a whole conjunction from scratch.  Sat yields the canonical solved
// form rooted at the first-mentioned variable (or at `root` if supplied).
inline std::optional<FeatureGraph> check_consistency(const ConjFormula& f, bool acyclic = true,
                                                     std::optional<Term> root = std::nullopt) {
    Solver s(acyclic);
    for (Var v : vars_of(f)) s.ensure_var(v);
    if (s.assert_all(f) == AssertResult::clash) return std::nullopt;
    Term r = Var{0};
    if (root) {
        r = *root;
        if (is_var(r)) s.ensure_var(as_var(r));
    } else {
        auto vs = vars_of(f);
        if (!vs.empty()) {
            r = vs.front();
        } else if (!f.eqs.empty()) {
            r = f.eqs.front().s;
        } else {
            r = s.fresh_var();
        }
    }
    return s.snapshot_graph(r);
}

}  // namespace ravg
