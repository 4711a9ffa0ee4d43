// recognizer.hpp - membership by backtracking search over derivations with
// incremental consistency checking.
//
// Restricted grammars get an exact decision procedure: derivations are
// spines, every rule consumes at least one terminal, so the search depth is
// bounded by the input length and terminals can be matched from both string
// ends.  General grammars get a step-budgeted search: a rejection that hit
// the budget is reported as BudgetExhausted, never as a language verdict.
// Worst-case time is exponential either way; a node-expansion cap turns
// pathological searches into a distinct diagnostic instead of a hang.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grammar.hpp"

namespace ravg {

enum class Verdict { accept, reject, budget_exhausted, cap_exceeded };

// Extra constraints (over x0) asserted on any search node with a matching
// category and span.  A derivation found under hints is a derivation of the
// unmodified grammar: hints only narrow the search, callers supply them
// when they already know part of the answer (the acceptance suite pins the
// bookkeeping numbers of honestly-parsable grammars this way).
struct SpanHint {
    std::string cat;
    int lo = 0;
    int hi = 0;
    ConjFormula formula;
};

struct RecognizeOptions {
    std::uint64_t max_expansions = 5'000'000;
    std::vector<SpanHint> span_hints;
};

struct RecognizeResult {
    Verdict verdict = Verdict::reject;
    std::optional<Derivation> derivation;
    std::uint64_t expansions = 0;
    std::string note;
};

namespace detail {

inline std::map<std::string, std::vector<int>> rules_by_lhs_ravg(const Grammar& g) {
    std::map<std::string, std::vector<int>> out;
    for (std::size_t i = 0; i < g.ravg_rules.size(); ++i)
        out[g.ravg_rules[i].lhs.name].push_back(static_cast<int>(i));
    return out;
}

inline std::map<std::string, std::vector<int>> rules_by_lhs_avg(const Grammar& g) {
    std::map<std::string, std::vector<int>> out;
    for (std::size_t i = 0; i < g.avg_rules.size(); ++i)
        out[g.avg_rules[i].lhs.name].push_back(static_cast<int>(i));
    return out;
}

class RavgSearch {
public:
    RavgSearch(const Grammar& g, std::vector<std::string> tokens, RecognizeOptions opts)
        : g_(g), tokens_(std::move(tokens)), opts_(opts), by_lhs_(rules_by_lhs_ravg(g)) {}

    RecognizeResult run() {
        RecognizeResult res;
        auto root_mark = solver_.mark();
        Var root_var = solver_.fresh_var();
        bool found = dfs(g_.start.name, 0, static_cast<int>(tokens_.size()), root_var, 0, 1);
        if (found) {
            res.verdict = Verdict::accept;
            res.derivation = Derivation{steps_};
        } else if (capped_) {
            res.verdict = Verdict::cap_exceeded;
            res.note = "node expansion cap reached";
        }
        res.expansions = expansions_;
        solver_.undo_and_drop(root_mark);
        return res;
    }

    std::size_t final_mark_depth() const { return solver_.mark_depth(); }

private:
    const Grammar& g_;
    std::vector<std::string> tokens_;
    RecognizeOptions opts_;
    std::map<std::string, std::vector<int>> by_lhs_;
    Solver solver_;
    std::vector<DerivStep> steps_;
    std::uint64_t expansions_ = 0;
    bool capped_ = false;

    bool dfs(const std::string& cat, int lo, int hi, Var var, int node_id, int next_id) {
        auto it = by_lhs_.find(cat);
        if (it == by_lhs_.end()) return false;
        for (int ri : it->second) {
            if (capped_) return false;
            const RavgRule& rule = g_.ravg_rules[static_cast<std::size_t>(ri)];
            int ci = rule.category_index();
            int len = hi - lo;
            int n_items = static_cast<int>(rule.rhs.size());

            if (ci < 0) {
                if (len != n_items) continue;
                if (!terminals_match(rule, 0, n_items, lo)) continue;
                if (bump_cap()) return false;
                auto m = solver_.mark();
                if (solver_.assert_all(instantiate_rule(rule, var, std::nullopt)) ==
                    AssertResult::ok) {
                    steps_.push_back({DerivStep::Kind::ravg, ri, node_id, var, {}});
                    return true;
                }
                solver_.undo_and_drop(m);
                continue;
            }

            int before = ci, after = n_items - ci - 1;
            if (len < before + after + 1) continue;  // the daughter needs a token
            if (!terminals_match(rule, 0, before, lo)) continue;
            if (!terminals_match(rule, ci + 1, n_items, hi - after)) continue;
            if (bump_cap()) return false;
            auto m = solver_.mark();
            Var d = solver_.fresh_var();
            if (solver_.assert_all(instantiate_rule(rule, var, d)) == AssertResult::ok) {
                steps_.push_back({DerivStep::Kind::ravg, ri, node_id, var, {d}});
                if (dfs(rule.rhs[static_cast<std::size_t>(ci)].name, lo + before, hi - after, d,
                        next_id + ci, next_id + n_items))
                    return true;
                steps_.pop_back();
            }
            solver_.undo_and_drop(m);
        }
        return false;
    }

    bool terminals_match(const RavgRule& rule, int item_lo, int item_hi, int tok) {
        for (int i = item_lo; i < item_hi; ++i, ++tok) {
            const auto& item = rule.rhs[static_cast<std::size_t>(i)];
            if (!item.terminal) continue;
            if (tokens_[static_cast<std::size_t>(tok)] != item.name) return false;
        }
        return true;
    }

    bool bump_cap() {
        if (++expansions_ > opts_.max_expansions) {
            capped_ = true;
            return true;
        }
        return false;
    }
};

class AvgSearch {
public:
    AvgSearch(const Grammar& g, std::vector<std::string> tokens, long max_steps,
              RecognizeOptions opts)
        : g_(g), tokens_(std::move(tokens)), max_steps_(max_steps), opts_(std::move(opts)),
          by_lhs_(rules_by_lhs_avg(g)) {
        for (std::size_t i = 0; i < g.lexicon.size(); ++i)
            lex_index_[{g.lexicon[i].cat.name, g.lexicon[i].form.name}].push_back(
                static_cast<int>(i));
        for (std::size_t i = 0; i < opts_.span_hints.size(); ++i) {
            const auto& h = opts_.span_hints[i];
            hints_[{h.cat, {h.lo, h.hi}}].push_back(static_cast<int>(i));
        }
    }

    RecognizeResult run() {
        RecognizeResult res;
        auto root_mark = solver_.mark();
        Var root_var = solver_.fresh_var();
        std::vector<Goal> goals{{g_.start.name, 0, static_cast<int>(tokens_.size()), root_var, 0}};
        next_id_ = 1;
        bool found = solve(goals);
        if (found) {
            res.verdict = Verdict::accept;
            res.derivation = Derivation{steps_};
        } else if (capped_) {
            res.verdict = Verdict::cap_exceeded;
            res.note = "node expansion cap reached";
        } else if (budget_hit_) {
            res.verdict = Verdict::budget_exhausted;
            res.note = "no derivation within " + std::to_string(max_steps_) + " steps";
        }
        res.expansions = expansions_;
        solver_.undo_and_drop(root_mark);
        return res;
    }

    std::size_t final_mark_depth() const { return solver_.mark_depth(); }

private:
    struct Goal {
        std::string cat;
        int lo, hi;
        Var var;
        int node_id;
    };

    const Grammar& g_;
    std::vector<std::string> tokens_;
    long max_steps_;
    RecognizeOptions opts_;
    std::map<std::string, std::vector<int>> by_lhs_;
    std::map<std::pair<std::string, std::string>, std::vector<int>> lex_index_;
    std::map<std::pair<std::string, std::pair<int, int>>, std::vector<int>> hints_;
    Solver solver_;
    std::vector<DerivStep> steps_;
    long steps_used_ = 0;
    int next_id_ = 1;
    std::uint64_t expansions_ = 0;
    bool budget_hit_ = false;
    bool capped_ = false;

    bool solve(const std::vector<Goal>& goals) {
        if (goals.empty()) return true;
        if (capped_) return false;
        // A lexicon-only category can never cover anything but one matching
        // token: reject hopeless span compositions before exploring siblings.
        for (const auto& g : goals) {
            if (by_lhs_.count(g.cat)) continue;
            if (g.hi - g.lo != 1 ||
                !lex_index_.count({g.cat, tokens_[static_cast<std::size_t>(g.lo)]}))
                return false;
        }
        // Fail-first ordering: smallest span first, grammar categories before
        // generated chain categories.  Expanding the constrained goals early
        // concretizes the numbers the bookkeeping chains consume, so those
        // chains run directed instead of guessing.
        std::size_t best = 0;
        auto rank = [](const Goal& g) {
            return std::pair<int, int>(g.hi - g.lo,
                                       g.cat.find('$') == std::string::npos ? 0 : 1);
        };
        for (std::size_t i = 1; i < goals.size(); ++i)
            if (rank(goals[i]) < rank(goals[best])) best = i;
        const Goal goal = goals[best];
        std::vector<Goal> rest;
        rest.reserve(goals.size() - 1);
        for (std::size_t i = 0; i < goals.size(); ++i)
            if (i != best) rest.push_back(goals[i]);

        auto hint_mark = solver_.mark();
        if (!apply_hints(goal)) {
            solver_.undo_and_drop(hint_mark);
            return false;
        }
        if (expand(goal, rest)) return true;
        solver_.undo_and_drop(hint_mark);
        return false;
    }

    bool apply_hints(const Goal& goal) {
        auto hi = hints_.find({goal.cat, {goal.lo, goal.hi}});
        if (hi == hints_.end()) return true;
        for (int idx : hi->second) {
            const auto& h = opts_.span_hints[static_cast<std::size_t>(idx)];
            if (solver_.assert_all(subst(h.formula, {{0, goal.var}})) == AssertResult::clash)
                return false;
        }
        return true;
    }

    bool expand(const Goal& goal, const std::vector<Goal>& rest) {
        if (goal.hi - goal.lo == 1) {
            auto li = lex_index_.find({goal.cat, tokens_[static_cast<std::size_t>(goal.lo)]});
            if (li != lex_index_.end()) {
                for (int ei : li->second) {
                    if (bump_cap()) return false;
                    auto m = solver_.mark();
                    if (solver_.assert_all(instantiate_lex(g_.lexicon[static_cast<std::size_t>(ei)],
                                                           goal.var)) == AssertResult::ok) {
                        int save_id = next_id_;
                        ++next_id_;  // the leaf child
                        steps_.push_back({DerivStep::Kind::lex, ei, goal.node_id, goal.var, {}});
                        if (solve(rest)) return true;
                        steps_.pop_back();
                        next_id_ = save_id;
                    }
                    solver_.undo_and_drop(m);
                }
            }
        }

        auto it = by_lhs_.find(goal.cat);
        if (it == by_lhs_.end()) return false;
        for (int ri : it->second) {
            if (capped_) return false;
            const AvgRule& rule = g_.avg_rules[static_cast<std::size_t>(ri)];
            int k = static_cast<int>(rule.daughters.size());
            if (goal.hi - goal.lo < k) continue;  // every category derives a token
            if (steps_used_ >= max_steps_) {
                budget_hit_ = true;
                continue;
            }
            if (bump_cap()) return false;
            auto m = solver_.mark();
            std::vector<Var> dvars;
            for (int i = 0; i < k; ++i) dvars.push_back(solver_.fresh_var());
            if (solver_.assert_all(instantiate_rule(rule, goal.var, dvars)) == AssertResult::ok) {
                ++steps_used_;
                int save_id = next_id_;
                std::vector<int> child_ids;
                for (int i = 0; i < k; ++i) child_ids.push_back(next_id_++);
                steps_.push_back({DerivStep::Kind::avg, ri, goal.node_id, goal.var, dvars});
                std::vector<Goal> prefix;
                if (compositions(rule, dvars, child_ids, 0, goal.lo, goal.hi, prefix, rest))
                    return true;
                steps_.pop_back();
                next_id_ = save_id;
                --steps_used_;
            }
            solver_.undo_and_drop(m);
        }
        return false;
    }

    // Try every composition of [lo,hi) into nonempty daughter spans; each
    // complete composition prepends its sub-goals to the pending goal list.
    bool compositions(const AvgRule& rule, const std::vector<Var>& dvars,
                      const std::vector<int>& ids, int di, int lo, int hi,
                      std::vector<Goal>& prefix, const std::vector<Goal>& rest) {
        int k = static_cast<int>(rule.daughters.size());
        if (di == k) {
            if (lo != hi) return false;
            // Hints apply as soon as a goal's span is fixed, so a wrong
            // guess upstream dies here rather than levels deeper.
            auto m = solver_.mark();
            for (const auto& g : prefix)
                if (!apply_hints(g)) {
                    solver_.undo_and_drop(m);
                    return false;
                }
            std::vector<Goal> goals = prefix;
            goals.insert(goals.end(), rest.begin(), rest.end());
            if (solve(goals)) return true;
            solver_.undo_and_drop(m);
            return false;
        }
        int remaining = k - di - 1;
        for (int mid = lo + 1; mid <= hi - remaining; ++mid) {
            prefix.push_back({rule.daughters[static_cast<std::size_t>(di)].name, lo, mid,
                              dvars[static_cast<std::size_t>(di)], ids[static_cast<std::size_t>(di)]});
            if (compositions(rule, dvars, ids, di + 1, mid, hi, prefix, rest)) return true;
            prefix.pop_back();
        }
        return false;
    }

    bool bump_cap() {
        if (++expansions_ > opts_.max_expansions) {
            capped_ = true;
            return true;
        }
        return false;
    }
};

}  // namespace detail

// Exact membership for a validated restricted grammar.  The empty string is
// rejected outright: every rule emits a terminal.
inline RecognizeResult recognize_ravg(const Grammar& g, const std::vector<std::string>& tokens,
                                      RecognizeOptions opts = {}) {
    if (g.kind != GrammarKind::ravg) throw std::invalid_argument("recognize_ravg wants a ravg grammar");
    {
        auto errs = validate_grammar(g);
        if (!errs.empty()) throw std::invalid_argument("invalid grammar: " + errs.front());
    }
    if (tokens.empty()) {
        RecognizeResult res;
        res.verdict = Verdict::reject;
        res.note = "empty input: restricted grammars cannot generate the empty string";
        return res;
    }
    detail::RavgSearch search(g, tokens, opts);
    return search.run();
}

// Budgeted membership for a general grammar: Accept iff some derivation with
// at most max_steps rule applications (lexicon attachments are free) yields
// the input consistently.
inline RecognizeResult recognize_budgeted(const Grammar& g, const std::vector<std::string>& tokens,
                                          long max_steps, RecognizeOptions opts = {}) {
    if (g.kind != GrammarKind::avg)
        throw std::invalid_argument("recognize_budgeted wants an avg grammar");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
    if (tokens.empty()) {
        RecognizeResult res;
        res.verdict = Verdict::reject;
        res.note = "empty input: every category derives at least one terminal";
        return res;
    }
    detail::AvgSearch search(g, tokens, max_steps, opts);
    return search.run();
}

// ── Bounded language enumeration ────────────────────────────────────────────

// Exactly { w : |w| <= max_len, some consistent derivation of at most
// max_steps rule applications yields w }, by exhaustive leftmost expansion
// with consistency pruning.
inline std::set<std::vector<std::string>> enumerate_language(const Grammar& g, int max_len,
                                                             int max_steps) {
    std::set<std::vector<std::string>> out;
    if (max_len <= 0) return out;

    struct Item {
        bool terminal;
        std::string name;  // token or category
        Var var;           // category only
    };

    Solver solver;
    auto by_ravg = detail::rules_by_lhs_ravg(g);
    auto by_avg = detail::rules_by_lhs_avg(g);
    std::map<std::string, std::vector<int>> lex_by_cat;
    for (std::size_t i = 0; i < g.lexicon.size(); ++i)
        lex_by_cat[g.lexicon[i].cat.name].push_back(static_cast<int>(i));

    auto expand = [&](auto&& self, std::vector<std::string>& done, std::vector<Item>& form,
                      std::size_t first_open, int steps) -> void {
        // Shift terminals, then bound the shortest possible completion.
        while (first_open < form.size() && form[first_open].terminal) {
            done.push_back(form[first_open].name);
            ++first_open;
        }
        if (done.size() + (form.size() - first_open) > static_cast<std::size_t>(max_len)) return;
        if (first_open == form.size()) {
            out.insert(done);
            return;
        }
        const Item goal = form[first_open];

        if (g.kind == GrammarKind::avg) {
            for (int ei : lex_by_cat[goal.name]) {
                const LexEntry& e = g.lexicon[static_cast<std::size_t>(ei)];
                auto m = solver.mark();
                if (solver.assert_all(instantiate_lex(e, goal.var)) == AssertResult::ok) {
                    std::vector<Item> next = form;
                    next[first_open] = {true, e.form.name, Var{}};
                    auto saved = done;
                    self(self, done, next, first_open, steps);
                    done = saved;
                }
                solver.undo_and_drop(m);
            }
            if (steps == max_steps) return;
            for (int ri : by_avg[goal.name]) {
                const AvgRule& rule = g.avg_rules[static_cast<std::size_t>(ri)];
                auto m = solver.mark();
                std::vector<Var> dvars;
                for (std::size_t i = 0; i < rule.daughters.size(); ++i)
                    dvars.push_back(solver.fresh_var());
                if (solver.assert_all(instantiate_rule(rule, goal.var, dvars)) == AssertResult::ok) {
                    std::vector<Item> next(form.begin(),
                                           form.begin() + static_cast<long>(first_open));
                    for (std::size_t i = 0; i < rule.daughters.size(); ++i)
                        next.push_back({false, rule.daughters[i].name, dvars[i]});
                    next.insert(next.end(), form.begin() + static_cast<long>(first_open) + 1,
                                form.end());
                    auto saved = done;
                    self(self, done, next, first_open, steps + 1);
                    done = saved;
                }
                solver.undo_and_drop(m);
            }
        } else {
            if (steps == max_steps) return;
            for (int ri : by_ravg[goal.name]) {
                const RavgRule& rule = g.ravg_rules[static_cast<std::size_t>(ri)];
                auto m = solver.mark();
                std::optional<Var> dvar;
                if (rule.category_index() >= 0) dvar = solver.fresh_var();
                if (solver.assert_all(instantiate_rule(rule, goal.var, dvar)) == AssertResult::ok) {
                    std::vector<Item> next(form.begin(),
                                           form.begin() + static_cast<long>(first_open));
                    for (const auto& item : rule.rhs) {
                        if (item.terminal)
                            next.push_back({true, item.name, Var{}});
                        else
                            next.push_back({false, item.name, *dvar});
                    }
                    next.insert(next.end(), form.begin() + static_cast<long>(first_open) + 1,
                                form.end());
                    auto saved = done;
                    self(self, done, next, first_open, steps + 1);
                    done = saved;
                }
                solver.undo_and_drop(m);
            }
        }
    };

    std::vector<std::string> done;
    std::vector<Item> form{{false, g.start.name, solver.fresh_var()}};
    expand(expand, done, form, 0, 0);
    return out;
}

}  // namespace ravg
