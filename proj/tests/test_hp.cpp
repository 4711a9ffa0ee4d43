#include <doctest.h>

#include "ravg/hp.hpp"
#include "ravg/io.hpp"
#include "ravg/oracles.hpp"
#include "ravg/recognizer.hpp"
#include "test_util.hpp"

using namespace ravg;
using namespace ravg::testutil;

namespace {

std::vector<std::string> chars(const std::string& s) {
    std::vector<std::string> t;
    for (char c : s) t.push_back(std::string(1, c));
    return t;
}

}  // namespace

TEST_CASE("embed_under re-roots variables and leaves atoms alone") {
    auto f = parse_formula("x0 = x1");
    CHECK(print_formula(embed_under(f, Attribute{"grammar"})) == "grammar(x0) = grammar(x1)");
    auto g = parse_formula("f(x0) = @a");
    CHECK(print_formula(embed_under(g, Attribute{"grammar"})) == "f grammar(x0) = @a");
}

TEST_CASE("embed_under is injective on random formulas") {
    FormulaGen gen(808);
    std::set<std::string> in, out;
    for (int i = 0; i < 100; ++i) {
        auto f = gen.formula();
        if (!in.insert(print_formula(f)).second) continue;
        CHECK(out.insert(print_formula(embed_under(f, Attribute{"grammar"}))).second);
    }
}

TEST_CASE("reserved attributes are rejected") {
    Grammar g;
    g.kind = GrammarKind::avg;
    g.cats = {"S"};
    g.start = Category{"S"};
    g.attrs = {"poly"};
    g.lexforms = {"a"};
    g.lexicon.push_back({LexForm{"a"}, Category{"S"}, ConjFormula{}});
    CHECK_THROWS_AS(transform_hpc(g, 2), std::invalid_argument);
}

TEST_CASE("lexicon entries gain the counter bookkeeping") {
    Grammar g = parse_grammar(R"(
kind avg
start S
atoms sg
attrs agr
rule S -> T : agr(x0) = agr(x1) ;
lex "a" T : agr(x0) = @sg ;
)");
    Grammar hp = transform_hpc(g, 1);
    REQUIRE(validate_grammar(hp).empty());
    REQUIRE(hp.lexicon.size() == 1);
    const auto& psi = hp.lexicon[0].formula;
    auto has = [&](const char* eq_text) {
        for (const auto& e : psi.eqs)
            if (print_equation(e) == eq_text) return true;
        return false;
    };
    CHECK(has("agr grammar(x0) = @sg"));            // original content, re-rooted
    CHECK(has("v size counter(x0) = @1"));          // the size is one
    CHECK(has("1 size counter(x0) = @+"));
    CHECK(has("v poly counter(x0) = @0"));          // and no derivation steps are spent
    CHECK(has("0 poly counter(x0) = @+"));
}

TEST_CASE("the transform keeps grammars conjunctive and well-formed") {
    Grammar g = to_avg(parse_grammar_file(std::string(GRAMMAR_DIR) + "/anbncn.ravg"));
    Grammar hp = transform_hpc(g, 2);
    CHECK(validate_grammar(hp).empty());
    CHECK(hp.start.name != g.start.name);
    for (const auto& r : hp.avg_rules) CHECK(r.formula.well_formed());
    // the generated grammar survives the file format
    Grammar reparsed = parse_grammar(print_grammar(hp));
    CHECK(reparsed.avg_rules.size() == hp.avg_rules.size());
    CHECK(reparsed.lexicon == hp.lexicon);
    CHECK(reparsed.start == hp.start);
    for (std::size_t i = 0; i < hp.avg_rules.size(); ++i) {
        CHECK(reparsed.avg_rules[i].lhs == hp.avg_rules[i].lhs);
        CHECK(reparsed.avg_rules[i].daughters == hp.avg_rules[i].daughters);
        CHECK(reparsed.avg_rules[i].formula == hp.avg_rules[i].formula);
    }
}

TEST_CASE("a guided derivation exists, validates, and keeps the books") {
    Grammar src = to_avg(parse_grammar_file(std::string(GRAMMAR_DIR) + "/anbncn.ravg"));
    Grammar hp = transform_hpc(src, 2);
    auto toks = chars("abc");

    auto source = recognize_budgeted(src, toks, 6);
    REQUIRE(source.verdict == Verdict::accept);

    RecognizeOptions opts;
    opts.span_hints = oracle::hp_hints(src, *source.derivation);
    opts.max_expansions = 5'000'000;
    auto r = recognize_budgeted(hp, toks, 20 * 27, opts);
    REQUIRE(r.verdict == Verdict::accept);

    auto cst = build_cst(hp, *r.derivation);
    CHECK(generates(hp, cst));  // hint-free validation
    CHECK(yield_of(cst) == toks);

    // decode the bookkeeping at the original categories
    Solver s;
    REQUIRE(s.assert_all(cst.formula) == AssertResult::ok);
    auto value_at = [&](int node, const char* attr) -> unsigned long {
        auto t = s.lookup_path(cst.h.at(node), path_of({"counter", attr}));
        REQUIRE(t.has_value());
        auto d = decode_number(s, *t);
        REQUIRE(d.ok());
        return *d.value;
    };
    std::set<std::string> original = src.cats;
    int root_orig = -1;
    for (int n = 0; n < static_cast<int>(cst.nodes.size()); ++n) {
        const auto& nd = cst.at(n);
        if (!nd.leaf && nd.label == src.start.name && root_orig < 0) root_orig = n;
    }
    REQUIRE(root_orig >= 0);
    CHECK(value_at(root_orig, "size") == toks.size());

    // poly at each original mother = sum of original daughters' polys + 1
    auto original_children = [&](auto&& self, int n, std::vector<int>& out) -> void {
        for (int c : cst.at(n).children) {
            if (cst.at(c).leaf) continue;
            if (original.count(cst.at(c).label))
                out.push_back(c);
            else
                self(self, c, out);
        }
    };
    int checked = 0;
    for (int n = 0; n < static_cast<int>(cst.nodes.size()); ++n) {
        const auto& nd = cst.at(n);
        if (nd.leaf || !original.count(nd.label)) continue;
        bool preterminal = nd.children.size() == 1 && cst.at(nd.children[0]).leaf;
        if (preterminal) {
            CHECK(value_at(n, "poly") == 0ul);
            CHECK(value_at(n, "size") == 1ul);
            continue;
        }
        std::vector<int> kids;
        original_children(original_children, n, kids);
        unsigned long sum_poly = 0, sum_size = 0;
        for (int c : kids) {
            sum_poly += value_at(c, "poly");
            sum_size += value_at(c, "size");
        }
        CHECK(value_at(n, "poly") == sum_poly + 1);
        CHECK(value_at(n, "size") == sum_size);
        ++checked;
    }
    CHECK(checked >= 3);
}

TEST_CASE("unguided searches never accept strings outside the source language") {
    Grammar src = to_avg(parse_grammar_file(std::string(GRAMMAR_DIR) + "/anbncn.ravg"));
    Grammar hp = transform_hpc(src, 2);
    for (const char* w : {"a", "ab", "cba", "abca"}) {
        RecognizeOptions opts;
        opts.max_expansions = 8000;
        auto r = recognize_budgeted(hp, chars(w), 5 * 64, opts);
        CAPTURE(w);
        CHECK(r.verdict != Verdict::accept);
    }
}
