#include <doctest.h>

#include "ravg/text.hpp"

using namespace ravg;

TEST_CASE("formula syntax round-trips and respects the reversed surface order") {
    auto f = parse_formula("top rest(x1) = @A1 & rest rest(x1) = x0");
    REQUIRE(f.eqs.size() == 2);
    // "top rest(x1)": rest is applied first.
    CHECK(f.eqs[0].p == path_of({"rest", "top"}));
    CHECK(f.eqs[0].s == Term{Var{1}});
    CHECK(f.eqs[0].t == Term{Atom{"A1"}});
    CHECK(print_formula(f) == "top rest(x1) = @A1 & rest rest(x1) = x0");
}

TEST_CASE("bare terms, reserved atoms and comments") {
    auto f = parse_formula("x0 = @$ # bottom of stack\n& x1 = x0");
    REQUIRE(f.eqs.size() == 2);
    CHECK(f.eqs[0].t == Term{Atom{"$"}});
    CHECK(print_equation(f.eqs[0]) == "x0 = @$");
    CHECK(parse_formula("").eqs.empty());
    auto g = parse_formula("v(x2) = @1 & 0(x2) = @+");
    CHECK(g.eqs[1].p == path_of({"0"}));
    CHECK(g.eqs[1].t == Term{Atom{"+"}});
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_formula("f(x0) ="), ParseError);
    CHECK_THROWS_AS(parse_formula("f(@a) = x0"), ParseError);  // path out of an atom
    CHECK_THROWS_AS(parse_formula("x1 x2(x0) = x3"), ParseError);  // attr named like a var
    CHECK_THROWS_AS(parse_formula("f(x0) = x1 x2"), ParseError);
    try {
        parse_formula("f(x0) = x1 &\n& g(x0) = x2");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("parsed formulas are well-formed") {
    auto f = parse_formula("s n(x1) = @z & n(x1) = x0 & x0 = @z");
    CHECK(f.well_formed());
}
