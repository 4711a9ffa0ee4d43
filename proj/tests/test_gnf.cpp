#include <doctest.h>

#include "ravg/gnf.hpp"
#include "ravg/io.hpp"
#include "ravg/oracles.hpp"
#include "ravg/recognizer.hpp"
#include "ravg/text.hpp"
#include "test_util.hpp"

using namespace ravg;
using namespace ravg::testutil;

namespace {

Cfg balanced_parens() {
    return parse_cfg(R"gr(
start S
S -> S S | "(" S ")" | epsilon ;
)gr");
}

}  // namespace

TEST_CASE("push expands to the table's exact equations") {
    CHECK(print_formula(expand_push({Atom{"A2"}})) == "top(x1) = @A2 & rest(x1) = x0");
    CHECK(print_formula(expand_push({Atom{"A2"}, Atom{"A3"}})) ==
          "top(x1) = @A2 & top rest(x1) = @A3 & rest rest(x1) = x0");
    CHECK(print_formula(expand_push({})) == "x1 = x0");
}

TEST_CASE("pop and empty-stack expand to the table's exact equations") {
    CHECK(print_formula(expand_pop(Atom{"B"})) == "top(x0) = @B & rest(x0) = x1");
    CHECK(print_formula(expand_empty_stack()) == "x0 = @$");
}

TEST_CASE("a push followed by a pop restores the stack") {
    // push(B): x0 -> x1; pop(B) on the next level: x1 plays x0, x2 gets the tail.
    Solver s;
    auto push = subst(expand_push({Atom{"B"}}), {{0, Var{0}}, {1, Var{1}}});
    auto pop = subst(expand_pop(Atom{"B"}), {{0, Var{1}}, {1, Var{2}}});
    REQUIRE(s.assert_all(push) == AssertResult::ok);
    REQUIRE(s.assert_all(pop) == AssertResult::ok);
    CHECK(s.same_class(Var{0}, Var{2}));
    // popping the wrong symbol clashes
    Solver t;
    REQUIRE(t.assert_all(push) == AssertResult::ok);
    auto wrong = subst(expand_pop(Atom{"C"}), {{0, Var{1}}, {1, Var{2}}});
    CHECK(t.assert_all(wrong) == AssertResult::clash);
}

TEST_CASE("to_gnf leaves a GNF grammar's language unchanged") {
    Cfg g;
    g.start = "S";
    g.nonterminals = {"S", "A"};
    g.terminals = {"a", "b"};
    g.productions = {{"S", {{true, "a"}, {false, "A"}}}, {"A", {{true, "b"}}}};
    REQUIRE(is_gnf(g));
    Cfg gnf = to_gnf(g);
    CHECK(is_gnf(gnf));
    CHECK(oracle::cyk_language(g, 5) == oracle::cyk_language(gnf, 5));
}

TEST_CASE("balanced parentheses convert to GNF with the same language") {
    Cfg g = balanced_parens();
    Cfg gnf = to_gnf(g);
    CHECK(is_gnf(gnf));
    oracle::CykParser before(g), after(gnf);
    CHECK(before.accepts({}));
    CHECK(after.accepts({}));  // S -> epsilon is preserved
    CHECK(before.language(8) == after.language(8));
}

TEST_CASE("to_gnf agrees with CYK on random grammars") {
    CfgGen gen(31415);
    int nonempty = 0;
    for (int i = 0; i < 20; ++i) {
        Cfg g = gen.cfg();
        Cfg gnf = to_gnf(g);
        CHECK(is_gnf(gnf));
        oracle::CykParser before(g), after(gnf);
        auto lb = before.language(6), la = after.language(6);
        CAPTURE(print_cfg(g));
        CHECK(lb == la);
        CHECK(before.accepts({}) == after.accepts({}));
        if (!lb.empty()) ++nonempty;
    }
    CHECK(nonempty >= 8);  // the generator should produce real languages
}

TEST_CASE("compile emits one row per table case") {
    // Single production S -> a over nonterminals {S, A, B}.
    Cfg g;
    g.start = "S";
    g.nonterminals = {"S", "A", "B"};
    g.terminals = {"a"};
    g.productions = {{"S", {{true, "a"}}},
                     {"A", {{true, "a"}}},
                     {"B", {{true, "a"}, {false, "A"}}}};
    auto res = compile_gnf(g);
    const Grammar& out = res.grammar;
    CHECK(out.atoms == std::set<std::string>{"$", "A", "B", "S"});
    CHECK(out.attrs == std::set<std::string>{"rest", "top"});

    // S -> a yields: S -> "a" B with pop(B) & empty-stack for B in {A, B},
    // plus S -> "a" with empty-stack.
    int s_pop = 0, s_final = 0;
    for (const auto& r : out.ravg_rules) {
        if (r.lhs.name != "S") continue;
        if (r.category_index() >= 0) {
            ++s_pop;
            REQUIRE(r.formula.eqs.size() == 3);
            CHECK(print_equation(r.formula.eqs[0]) ==
                  "top(x0) = @" + r.rhs[1].name);
            CHECK(print_equation(r.formula.eqs[1]) == "rest(x0) = x1");
            CHECK(print_equation(r.formula.eqs[2]) == "x0 = @$");
        } else {
            ++s_final;
            CHECK(print_formula(r.formula) == "x0 = @$");
        }
    }
    CHECK(s_pop == 2);
    CHECK(s_final == 1);

    // A -> a yields pop rules without the empty-stack conjunct.
    for (const auto& r : out.ravg_rules) {
        if (r.lhs.name == "A" && r.category_index() >= 0) CHECK(r.formula.eqs.size() == 2);
        if (r.lhs.name == "B" && r.category_index() >= 0) {
            // B -> a A pushes nothing: stack shared through to the daughter.
            CHECK(print_formula(r.formula) == "x1 = x0");
        }
    }
    CHECK(validate_grammar(out).empty());

    // The start's pop rules demand a popped symbol on an empty stack, which
    // no feature graph provides; they contribute nothing to the language.
    auto lang = enumerate_language(out, 4, 4);
    CHECK(lang == std::set<std::vector<std::string>>{{"a"}});
}

TEST_CASE("compiled grammars reject the empty string and warn about epsilon") {
    auto res = compile_cfg(balanced_parens());
    CHECK_FALSE(res.warnings.empty());
    CHECK(recognize_ravg(res.grammar, {}).verdict == Verdict::reject);
}

TEST_CASE("compiled recognizer equals CYK at small lengths") {
    Cfg g = balanced_parens();
    auto res = compile_cfg(g);
    REQUIRE(validate_grammar(res.grammar).empty());
    auto got = enumerate_language(res.grammar, 6, 6);
    auto want = oracle::cyk_language(g, 6);
    CHECK(got == want);
}

TEST_CASE("accepting stacks drain back to the bottom symbol") {
    auto res = compile_cfg(balanced_parens());
    const Grammar& g = res.grammar;
    std::vector<std::string> w{"(", "(", ")", ")", "(", ")"};
    auto r = recognize_ravg(g, w);
    REQUIRE(r.verdict == Verdict::accept);
    auto cst = build_cst(g, *r.derivation);
    REQUIRE(generates(g, cst));
    // The deepest spine node's stack variable must be exactly the bottom atom.
    Solver s;
    REQUIRE(s.assert_all(cst.formula) == AssertResult::ok);
    Var last = r.derivation->steps.back().mother;
    CHECK(s.lookup_path(last, Path{}) == Term{Atom{"$"}});
}
