#include <doctest.h>

#include <set>

#include "ravg/arith.hpp"
#include "ravg/oracles.hpp"
#include "ravg/text.hpp"
#include "test_util.hpp"

using namespace ravg;
using namespace ravg::testutil;

namespace {

int trailing_ones(unsigned long x) {
    int k = 0;
    while (x & 1) {
        ++k;
        x >>= 1;
    }
    return k;
}

int bitlen(unsigned long x) {
    int n = 0;
    while (x) {
        ++n;
        x >>= 1;
    }
    return n ? n : 1;
}

ConjFormula encode_list(const std::vector<unsigned long>& xs, Var root, const Path& base) {
    ConjFormula f;
    Path cell = base;
    for (unsigned long x : xs) {
        f &= encode_number_at(x, root, cell.then(Attribute{"f"}));
        cell = cell.then(Attribute{"r"});
    }
    f &= eq(cell, root, Path{}, Atom{"+"});
    return f;
}

struct SchemaRun {
    bool reached = false;
    long steps = 0;
    std::optional<unsigned long> value;
    std::vector<std::string> tags;
};

SchemaRun run_schema(const Grammar& g, const Category& entry, const Category& exit,
                     const ConjFormula& init, const Path& out_path, oracle::SimOptions opts = {}) {
    auto sim = oracle::simulate_derivation(g, entry, init, exit, opts);
    SchemaRun r;
    r.reached = sim.reached;
    if (!sim.reached) return r;
    r.steps = sim.steps;
    for (int ri : sim.rule_trace) r.tags.push_back(g.avg_rules[static_cast<std::size_t>(ri)].tag);
    auto t = sim.solver.lookup_path(sim.exit, out_path);
    if (t) {
        auto d = decode_number(sim.solver, *t);
        if (d.ok()) r.value = *d.value;
    }
    return r;
}

}  // namespace

TEST_CASE("number encoding matches the convention") {
    CHECK(print_formula(encode_number(0, Var{0})) == "v(x0) = @0 & 0(x0) = @+");
    CHECK(print_formula(encode_number(1, Var{0})) == "v(x0) = @1 & 1(x0) = @+");
    CHECK(print_formula(encode_number(5, Var{0})) ==
          "v(x0) = @1 & v 1(x0) = @0 & v 0 1(x0) = @1 & 1 0 1(x0) = @+");
    for (unsigned long n = 0; n <= 64; ++n) {
        Solver s;
        Var x = s.fresh_var();
        REQUIRE(s.assert_all(encode_number(n, x)) == AssertResult::ok);
        auto d = decode_number(s, Term{x});
        REQUIRE(d.ok());
        CHECK(*d.value == n);
    }
}

TEST_CASE("decode rejects damaged encodings and reads the bare terminator as zero") {
    {
        Solver s;
        REQUIRE(s.assert_all(parse_formula("v(x0) = @1 & 0(x0) = @+")) == AssertResult::ok);
        CHECK_FALSE(decode_number(s, Term{Var{0}}).ok());  // v says 1, bit attribute is 0
    }
    {
        Solver s;
        REQUIRE(s.assert_all(parse_formula("0(x0) = @+ & 1(x0) = @+")) == AssertResult::ok);
        CHECK_FALSE(decode_number(s, Term{Var{0}}).ok());
    }
    {
        Solver s;
        CHECK(decode_number(s, Term{Atom{"+"}}).value == 0ul);
    }
    {
        Solver s;
        REQUIRE(s.assert_all(parse_formula("v(x0) = @0 & v 0(x0) = @0 & 0 0(x0) = @+")) ==
                AssertResult::ok);
        CHECK(decode_number(s, Term{Var{0}}).value == 0ul);  // leading zero tolerated
    }
}

TEST_CASE("the equality test is one rule, one step, and exact") {
    auto schema = gen_equality_test(Category{"A"}, Category{"B"}, path_of({"n"}), path_of({"m"}));
    REQUIRE(schema.rules.size() == 1);
    NameAllocator alloc;
    Grammar g = schema_grammar(schema, alloc);
    for (unsigned long x = 0; x <= 8; ++x)
        for (unsigned long y = 0; y <= 8; ++y) {
            ConjFormula init = encode_number_at(x, Var{0}, path_of({"n"}));
            init &= encode_number_at(y, Var{0}, path_of({"m"}));
            auto r = run_schema(g, Category{"A"}, Category{"B"}, init, path_of({"n"}));
            CAPTURE(x);
            CAPTURE(y);
            CHECK(r.reached == (x == y));
            if (r.reached) CHECK(r.steps == 1);
        }
    // equality by sharing: both paths lead to the same variable
    auto shared = parse_formula("n(x0) = x1 & m(x0) = x1");
    CHECK(run_schema(g, Category{"A"}, Category{"B"}, shared, path_of({"n"})).reached);
}

TEST_CASE("doubling is one step and always emits a zero lsb") {
    auto schema = gen_double(Category{"A"}, Category{"B"}, path_of({"n"}));
    NameAllocator alloc;
    Grammar g = schema_grammar(schema, alloc);
    for (unsigned long x = 0; x <= 32; ++x) {
        auto r = run_schema(g, Category{"A"}, Category{"B"},
                            encode_number_at(x, Var{0}, path_of({"n"})), path_of({"n"}));
        REQUIRE(r.reached);
        CHECK(r.steps == 1);
        CHECK(r.value == 2 * x);
    }
}

TEST_CASE("increment: value, step count, and the rule sequence") {
    NameAllocator alloc;
    auto schema = gen_increment(Category{"A"}, Category{"C"}, path_of({"n"}), alloc);
    REQUIRE(schema.rules.size() == 5);
    Grammar g = schema_grammar(schema, alloc);

    auto inc = [&](unsigned long x) {
        return run_schema(g, Category{"A"}, Category{"C"},
                          encode_number_at(x, Var{0}, path_of({"n"})), path_of({"n"}));
    };
    auto r0 = inc(0);
    CHECK(r0.value == 1ul);
    CHECK(r0.tags == std::vector<std::string>{"inc:flip0"});  // lsb 0: one step
    auto r3 = inc(3);
    CHECK(r3.value == 4ul);
    CHECK(r3.tags == std::vector<std::string>{"inc:carry", "inc:thru1", "inc:grow"});
    for (unsigned long x = 0; x <= 32; ++x) {
        auto r = inc(x);
        REQUIRE(r.reached);
        CHECK(r.value == x + 1);
        CHECK(r.steps == trailing_ones(x) + 1);
        CHECK(r.steps <= bitlen(x) + 2);
    }
}

TEST_CASE("decrement mirrors increment and refuses zero") {
    NameAllocator alloc;
    auto schema = gen_decrement(Category{"A"}, Category{"C"}, path_of({"n"}), alloc);
    Grammar g = schema_grammar(schema, alloc);
    auto dec = [&](unsigned long x) {
        return run_schema(g, Category{"A"}, Category{"C"},
                          encode_number_at(x, Var{0}, path_of({"n"})), path_of({"n"}));
    };
    CHECK(dec(1).value == 0ul);
    CHECK_FALSE(dec(0).reached);
    for (unsigned long x = 0; x <= 16; ++x) {
        auto down = dec(x + 1);
        REQUIRE(down.reached);
        CHECK(down.value == x);  // decrement(increment(x)) = x
    }
}

TEST_CASE("summation is exact with bounded steps") {
    NameAllocator alloc;
    auto schema = gen_sum(Category{"A"}, Category{"C"}, path_of({"n"}), path_of({"m"}), alloc);
    REQUIRE(schema.rules.size() == 16);
    Grammar g = schema_grammar(schema, alloc);
    for (unsigned long x = 0; x <= 15; ++x)
        for (unsigned long y = 0; y <= 15; ++y) {
            ConjFormula init = encode_number_at(x, Var{0}, path_of({"n"}));
            init &= encode_number_at(y, Var{0}, path_of({"m"}));
            auto r = run_schema(g, Category{"A"}, Category{"C"}, init, path_of({"n"}));
            CAPTURE(x);
            CAPTURE(y);
            REQUIRE(r.reached);
            CHECK(r.value == x + y);
            CHECK(r.steps <= 4 * (bitlen(std::max(x, y)) + 1));
        }

    // 0 + 0 can close on the stop rule with both operand pointers spent.
    ConjFormula init = encode_number_at(0, Var{0}, path_of({"n"}));
    init &= encode_number_at(0, Var{0}, path_of({"m"}));
    oracle::SimOptions only_nm;
    only_nm.admit = [](const AvgRule& r, const Solver&, Var) {
        return r.tag.rfind("sum:stop", 0) != 0 || r.tag.rfind("sum:stop-nm", 0) == 0;
    };
    auto r = run_schema(g, Category{"A"}, Category{"C"}, init, path_of({"n"}), only_nm);
    REQUIRE(r.reached);
    CHECK(r.value == 0ul);
    bool used_nm = false;
    for (const auto& t : r.tags) used_nm |= t == "sum:stop-nm";
    CHECK(used_nm);
}

TEST_CASE("list summation handles the empty list, singletons, and longer lists") {
    NameAllocator alloc;
    auto schema =
        gen_list_sum(Category{"A"}, Category{"B"}, path_of({"l"}), path_of({"suml"}), alloc);
    REQUIRE(schema.rules.size() == 3);
    Grammar g = schema_grammar(schema, alloc);
    auto run = [&](const std::vector<unsigned long>& xs) {
        return run_schema(g, Category{"A"}, Category{"B"}, encode_list(xs, Var{0}, path_of({"l"})),
                          path_of({"suml"}));
    };
    auto empty = run({});
    REQUIRE(empty.reached);
    CHECK(empty.value == 0ul);
    CHECK(empty.steps == 2);  // init straight to exit
    CHECK(run({1, 2, 3}).value == 6ul);
    for (unsigned long x = 0; x <= 16; ++x) CHECK(run({x}).value == x);
    auto big = run({7, 9, 2, 15});
    CHECK(big.value == 33ul);
    CHECK(big.steps <= 8 * (3 + 4 + 2 + 4 + 4));  // c * (total bitlen + length)
}

TEST_CASE("the reversed list sum pins the same totals") {
    NameAllocator alloc;
    auto schema =
        gen_list_sum_rev(Category{"A"}, Category{"B"}, path_of({"l"}), path_of({"suml"}), alloc);
    Grammar g = schema_grammar(schema, alloc);
    for (auto xs : std::vector<std::vector<unsigned long>>{{}, {5}, {1, 2, 3}, {0, 7, 0}}) {
        unsigned long want = 0;
        for (auto x : xs) want += x;
        ConjFormula init = encode_list(xs, Var{0}, path_of({"l"}));
        init &= encode_number_at(want, Var{0}, path_of({"suml"}));
        auto r = run_schema(g, Category{"A"}, Category{"B"}, init, path_of({"suml"}));
        CAPTURE(xs.size());
        REQUIRE(r.reached);
        CHECK(r.value == want);
        if (!xs.empty()) {
            ConjFormula bad = encode_list(xs, Var{0}, path_of({"l"}));
            bad &= encode_number_at(want + 1, Var{0}, path_of({"suml"}));
            CHECK_FALSE(
                run_schema(g, Category{"A"}, Category{"B"}, bad, path_of({"suml"})).reached);
        }
    }
}

TEST_CASE("macro expansion: passthrough, rule counts, and name hygiene") {
    NameAllocator alloc;
    ProtoRule plain{Category{"X"}, {Category{"Y"}}, parse_formula("x0 = x1"), {}, "plain"};
    auto rules = expand_arith_macros(plain, alloc);
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].formula == plain.pure);

    ProtoRule with_succ{Category{"X"}, {Category{"Y"}}, parse_formula("f(x0) = f(x1)"), {}, "s"};
    with_succ.macros.push_back({MacroCall::Kind::succ, {0, path_of({"n"})}, {}, {1, path_of({"n"})}});
    auto expanded = expand_arith_macros(with_succ, alloc);
    CHECK(expanded.size() == 7);  // bridge + five increment rules + glue

    ProtoRule nested{Category{"X"}, {Category{"Y"}}, {}, {}, "n"};
    nested.macros.push_back(
        {MacroCall::Kind::sum, {0, path_of({"a"})}, {0, path_of({"b"})}, {1, path_of({"c"})}});
    nested.macros.push_back({MacroCall::Kind::succ, {0, path_of({"c"})}, {}, {1, path_of({"d"})}});
    auto all = expand_arith_macros(nested, alloc);
    for (const auto& r : all) CHECK(r.formula.well_formed());
    // each generated category gets distinct rules; fresh names never collide
    // with ones handed out earlier in this allocator's lifetime
    std::set<std::string> gen;
    for (const auto& r : all)
        if (r.lhs.name.find('$') != std::string::npos) gen.insert(r.lhs.name);
    CHECK(gen.size() >= 6);
    for (const auto& r : expanded)
        if (r.lhs.name.find('$') != std::string::npos) CHECK_FALSE(gen.count(r.lhs.name));
}

TEST_CASE("the counter initializes and grows as documented") {
    const Path size = path_of({"size"}), n = path_of({"n"}), m = path_of({"m"}),
               poly = path_of({"poly"});
    for (int k = 1; k <= 3; ++k) {
        NameAllocator alloc;
        auto schema = gen_counter(k, Category{"S"}, Category{"A"}, Category{"B"});
        Grammar g = schema_grammar(schema, alloc);
        REQUIRE(validate_grammar(g).empty());

        std::map<std::string, std::vector<int>> by_lhs;
        for (std::size_t i = 0; i < g.avg_rules.size(); ++i)
            by_lhs[g.avg_rules[i].lhs.name].push_back(static_cast<int>(i));

        Solver s;
        Var cur = s.fresh_var();
        std::string cat = "S";
        long left_fired = 0;
        auto decode_at = [&](const Path& p) {
            auto t = s.lookup_path(cur, p);
            REQUIRE(t.has_value());
            auto d = decode_number(s, *t);
            REQUIRE(d.ok());
            return *d.value;
        };
        auto advance = [&](const std::string& to, bool prefer_extend) {
            while (cat != to) {
                bool moved = false;
                for (int ri : by_lhs[cat]) {
                    const AvgRule& r = g.avg_rules[static_cast<std::size_t>(ri)];
                    if (cat == "B" && (r.tag == "ctr:extend") != prefer_extend) continue;
                    auto mk = s.mark();
                    Var d = s.fresh_var();
                    if (s.assert_all(instantiate_rule(r, cur, {d})) == AssertResult::ok) {
                        if (r.tag == "ctr:extend") ++left_fired;
                        cur = d;
                        cat = r.daughters[0].name;
                        moved = true;
                        break;
                    }
                    s.undo_and_drop(mk);
                }
                if (!moved) return false;
            }
            return true;
        };
        REQUIRE(advance("A", false));
        CHECK(decode_at(size) == 0ul);
        CHECK(decode_at(n) == 0ul);
        CHECK(decode_at(m) == 1ul);
        CHECK(decode_at(poly) == 1ul);

        int bound = k == 1 ? 100 : 30;
        for (int target = 1; target <= bound; ++target) {
            REQUIRE(advance("B", false));
            bool extend = decode_at(n) == 2 * decode_at(m);
            REQUIRE(advance("A", extend));
            CHECK(decode_at(size) == static_cast<unsigned long>(target));
            long flog = 0;  // floor(log2(size/2 + 1))
            while ((1l << (flog + 1)) <= target / 2 + 1) ++flog;
            CHECK(left_fired == flog);
            unsigned long want_poly = 1ul << static_cast<unsigned>(flog * k);
            CHECK(decode_at(poly) == want_poly);
            if (target == 14) CHECK(left_fired == 3);
        }
    }
}

TEST_CASE("the extension only fires when n equals twice m") {
    // exhaustive small-depth search over every consistent counter run
    NameAllocator alloc;
    auto schema = gen_counter(2, Category{"S"}, Category{"A"}, Category{"B"});
    Grammar g = schema_grammar(schema, alloc);
    std::map<std::string, std::vector<int>> by_lhs;
    for (std::size_t i = 0; i < g.avg_rules.size(); ++i)
        by_lhs[g.avg_rules[i].lhs.name].push_back(static_cast<int>(i));

    Solver s;
    long checked = 0;
    auto dfs = [&](auto&& self, const std::string& cat, Var var, int depth) -> void {
        if (depth == 0) return;
        for (int ri : by_lhs[cat]) {
            const AvgRule& r = g.avg_rules[static_cast<std::size_t>(ri)];
            auto mk = s.mark();
            Var d = s.fresh_var();
            if (s.assert_all(instantiate_rule(r, var, {d})) == AssertResult::ok) {
                if (r.tag == "ctr:extend") {
                    auto dn = decode_number(s, *s.lookup_path(var, path_of({"n"})));
                    auto dm = decode_number(s, *s.lookup_path(var, path_of({"m"})));
                    REQUIRE(dn.ok());
                    REQUIRE(dm.ok());
                    CHECK(*dn.value == 2 * *dm.value);
                    ++checked;
                }
                self(self, r.daughters[0].name, d, depth - 1);
            }
            s.undo_and_drop(mk);
        }
    };
    Var root = s.fresh_var();
    dfs(dfs, "S", root, 26);
    CHECK(checked > 0);
    CHECK(s.mark_depth() == 0);
}
