#include <doctest.h>

#include <random>

#include "ravg/io.hpp"
#include "ravg/recognizer.hpp"

using namespace ravg;

namespace {

std::vector<std::string> chars(const std::string& s) {
    std::vector<std::string> t;
    for (char c : s) t.push_back(std::string(1, c));
    return t;
}

std::string joined(const std::vector<std::string>& toks) {
    std::string s;
    for (const auto& t : toks) s += t;
    return s;
}

Grammar anbncn() { return parse_grammar_file(std::string(GRAMMAR_DIR) + "/anbncn.ravg"); }

}  // namespace

TEST_CASE("the shipped counting grammar accepts exactly a^n b^n c^n") {
    Grammar g = anbncn();
    for (int n = 1; n <= 4; ++n) {
        std::string w = std::string(n, 'a') + std::string(n, 'b') + std::string(n, 'c');
        auto r = recognize_ravg(g, chars(w));
        CAPTURE(w);
        CHECK(r.verdict == Verdict::accept);
        REQUIRE(r.derivation.has_value());
        auto cst = build_cst(g, *r.derivation);
        CHECK(generates(g, cst));
        CHECK(joined(yield_of(cst)) == w);
        CHECK(r.derivation->step_count() == w.size());  // one terminal per rule
    }
    for (const char* w : {"aabbc", "abbc", "aabbccc", "ba", "abcabc", "aaabbbcc"}) {
        CAPTURE(w);
        CHECK(recognize_ravg(g, chars(w)).verdict == Verdict::reject);
    }
}

TEST_CASE("the empty string is rejected with an explanation") {
    auto r = recognize_ravg(anbncn(), {});
    CHECK(r.verdict == Verdict::reject);
    CHECK_FALSE(r.note.empty());
}

TEST_CASE("searches unwind their solver marks") {
    Grammar g = anbncn();
    for (const char* w : {"aabbcc", "aabbc"}) {
        detail::RavgSearch s(g, chars(w), {});
        s.run();
        CHECK(s.final_mark_depth() == 0);
    }
    Grammar avg = to_avg(g);
    detail::AvgSearch s(avg, chars("abc"), 10, {});
    s.run();
    CHECK(s.final_mark_depth() == 0);
}

TEST_CASE("enumeration matches per-string recognition up to length 6") {
    Grammar g = anbncn();
    auto lang = enumerate_language(g, 6, 6);
    std::set<std::vector<std::string>> accepted;
    std::vector<std::string> alphabet{"a", "b", "c"};
    std::vector<std::vector<std::string>> frontier{{}};
    for (int len = 1; len <= 6; ++len) {
        std::vector<std::vector<std::string>> next;
        for (const auto& w : frontier)
            for (const auto& ch : alphabet) {
                auto v = w;
                v.push_back(ch);
                next.push_back(v);
            }
        frontier = next;
        for (const auto& w : frontier)
            if (recognize_ravg(g, w).verdict == Verdict::accept) accepted.insert(w);
    }
    CHECK(lang == accepted);
}

TEST_CASE("enumerate_language trivialities") {
    Grammar g = parse_grammar(R"(
kind ravg
start S
rule S -> "a" ;
)");
    auto lang = enumerate_language(g, 3, 3);
    CHECK(lang == std::set<std::vector<std::string>>{{"a"}});
    CHECK(enumerate_language(g, 0, 5).empty());
    CHECK(enumerate_language(anbncn(), 0, 10).empty());
}

TEST_CASE("budgeted recognition agrees with the exact recognizer") {
    Grammar g = anbncn();
    Grammar avg = to_avg(g);
    for (const char* w : {"abc", "aabbcc", "aabbc", "abcc"}) {
        auto exact = recognize_ravg(g, chars(w));
        auto budgeted = recognize_budgeted(avg, chars(w), 20);
        CAPTURE(w);
        if (exact.verdict == Verdict::accept) {
            CHECK(budgeted.verdict == Verdict::accept);
            auto cst = build_cst(avg, *budgeted.derivation);
            CHECK(generates(avg, cst));
            CHECK(joined(yield_of(cst)) == w);
        } else {
            CHECK(budgeted.verdict == Verdict::reject);
        }
    }
}

TEST_CASE("budget exhaustion is distinguished from rejection") {
    Grammar g = parse_grammar(R"(
kind avg
start S
rule S -> A ;
rule A -> B ;
lex "a" B ;
)");
    REQUIRE(validate_grammar(g).empty());
    auto tight = recognize_budgeted(g, {"a"}, 1);
    CHECK(tight.verdict == Verdict::budget_exhausted);
    auto enough = recognize_budgeted(g, {"a"}, 2);
    CHECK(enough.verdict == Verdict::accept);
    CHECK(enough.derivation->step_count() == 2);

    // monotone: accepting budgets stay accepting
    for (long b = 2; b <= 6; ++b)
        CHECK(recognize_budgeted(g, {"a"}, b).verdict == Verdict::accept);
    // a true non-member rejects even with slack
    CHECK(recognize_budgeted(g, {"a", "a"}, 10).verdict == Verdict::reject);
}

TEST_CASE("the expansion cap aborts with a distinct verdict") {
    Grammar g = anbncn();
    RecognizeOptions opts;
    opts.max_expansions = 2;
    auto r = recognize_ravg(g, chars("aaabbbccc"), opts);
    CHECK(r.verdict == Verdict::cap_exceeded);
}

TEST_CASE("avg enumeration with a step bound is exact") {
    Grammar g = parse_grammar(R"(
kind avg
start S
rule S -> A : ;
rule S -> S A : ;
lex "a" A ;
)");
    REQUIRE(validate_grammar(g).empty());
    // S -> A^k needs k rule applications (k-1 binary + 1 unary).
    auto lang = enumerate_language(g, 4, 3);
    std::set<std::vector<std::string>> expect{{"a"}, {"a", "a"}, {"a", "a", "a"}};
    CHECK(lang == expect);
}
