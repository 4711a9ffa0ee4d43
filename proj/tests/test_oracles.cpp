#include <doctest.h>

#include "ravg/io.hpp"
#include "ravg/oracles.hpp"
#include "test_util.hpp"

using namespace ravg;
using namespace ravg::testutil;

TEST_CASE("cyk handles the empty string through nullability") {
    Cfg eps = parse_cfg("start S\nS -> epsilon ;\n");
    CHECK(oracle::cyk_membership(eps, {}));
    Cfg noeps = parse_cfg("start S\nS -> \"a\" ;\n");
    CHECK_FALSE(oracle::cyk_membership(noeps, {}));
}

TEST_CASE("cyk accepts hand-derived balanced parentheses") {
    Cfg g = parse_cfg("start S\nS -> S S | \"(\" S \")\" | epsilon ;\n");
    CHECK(oracle::cyk_membership(g, {"(", "(", ")", ")"}));
    CHECK(oracle::cyk_membership(g, {"(", ")", "(", ")"}));
    CHECK_FALSE(oracle::cyk_membership(g, {"(", "(", ")"}));
    CHECK_FALSE(oracle::cyk_membership(g, {")", "("}));
}

TEST_CASE("cyk agrees with direct derivation enumeration") {
    CfgGen gen(2718);
    for (int i = 0; i < 20; ++i) {
        Cfg g = gen.cfg();
        CAPTURE(print_cfg(g));
        CHECK(oracle::cyk_language(g, 5) == oracle::cfg_enumerate(g, 5));
    }
}

TEST_CASE("the saturation oracle handles the named corner cases") {
    // functionality: f(x)=a and f(x)=b
    auto f1 = parse_formula("f(x0) = @a & f(x0) = @b");
    CHECK_FALSE(oracle::brute_congruence_closure(f1));
    // atoms are sinks
    auto f2 = parse_formula("f(x0) = x1 & x0 = @a");
    CHECK_FALSE(oracle::brute_congruence_closure(f2));
    // cycles only clash in acyclic mode
    auto f3 = parse_formula("f(x0) = x0");
    CHECK_FALSE(oracle::brute_congruence_closure(f3, true));
    CHECK(oracle::brute_congruence_closure(f3, false));
    // sharing is fine
    auto f4 = parse_formula("f(x0) = x1 & g(x0) = x1 & h(x1) = @a");
    CHECK(oracle::brute_congruence_closure(f4));
}

TEST_CASE("the simulator walks unary chains and reports steps") {
    Grammar g = parse_grammar(R"(
kind avg
start A
atoms k
attrs f
rule A -> B : f(x1) = @k ;
rule B -> C : f(x0) = f(x1) ;
)");
    REQUIRE(validate_grammar(g).empty());
    auto sim = oracle::simulate_derivation(g, Category{"A"}, ConjFormula{}, Category{"C"});
    REQUIRE(sim.reached);
    CHECK(sim.steps == 2);
    CHECK(sim.rule_trace == std::vector<int>{0, 1});
    CHECK(sim.solver.lookup_path(sim.exit, path_of({"f"})) == Term{Atom{"k"}});
}
