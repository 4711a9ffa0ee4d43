// ravg - command line front end: formula consistency checking, recognition,
// bounded enumeration, CFG compilation, arithmetic schema generation, chain
// simulation, and the honest-parsability transform.
//
// Exit codes: 0 accept/ok, 1 reject/unsat, 2 budget or search cap exhausted,
// 3 usage or parse errors.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ravg/arith.hpp"
#include "ravg/gnf.hpp"
#include "ravg/grammar.hpp"
#include "ravg/hp.hpp"
#include "ravg/io.hpp"
#include "ravg/oracles.hpp"
#include "ravg/recognizer.hpp"
#include "ravg/text.hpp"

using namespace ravg;

namespace {

constexpr int kExitAccept = 0;
constexpr int kExitReject = 1;
constexpr int kExitExhausted = 2;
constexpr int kExitUsage = 3;

// Single-character lexicons take their input unspaced; otherwise tokens are
// whitespace separated.
std::vector<std::string> tokenize(const Grammar& g, const std::string& input) {
    bool all_single = !g.lexforms.empty();
    for (const auto& lf : g.lexforms)
        if (lf.size() != 1) all_single = false;
    std::vector<std::string> toks;
    if (input.find_first_of(" \t") == std::string::npos && all_single) {
        for (char c : input) toks.push_back(std::string(1, c));
        return toks;
    }
    std::istringstream is(input);
    for (std::string w; is >> w;) toks.push_back(w);
    return toks;
}

Path parse_dotted_path(const std::string& text) {
    Path p;
    std::string cur;
    for (char c : text + ".") {
        if (c == '.') {
            if (!cur.empty()) p.attrs.push_back(Attribute{cur});
            cur.clear();
        } else {
            cur += c;
        }
    }
    return p;
}

std::string render_tokens(const std::vector<std::string>& toks) {
    std::string out;
    for (const auto& t : toks) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

// Counters shown in traces: binary encodings decode to numbers, chains of a
// single repeated attribute (unary counters) decode to their length.
std::string decoded_values(const Solver& s, Var v, const std::set<std::string>& attrs) {
    std::string out;
    for (const auto& a : attrs) {
        auto t = s.lookup_path(v, path_of({a.c_str()}));
        if (!t) continue;
        auto d = decode_number(s, *t);
        if (d.ok()) {
            out += " " + a + "=" + std::to_string(*d.value);
            continue;
        }
        if (!is_var(*t)) continue;
        Term cur = *t;
        int count = 0;
        std::string chain_attr;
        bool broken = false;
        while (is_var(cur) && count <= 64 && !broken) {
            bool advanced = false;
            for (const auto& b : attrs) {
                auto nxt = s.lookup_path(cur, path_of({b.c_str()}));
                if (!nxt) continue;
                if (!chain_attr.empty() && chain_attr != b) {
                    broken = true;
                    break;
                }
                chain_attr = b;
                cur = *nxt;
                ++count;
                advanced = true;
                break;
            }
            if (!advanced) break;
        }
        if (!broken && count > 0 && is_atom(cur))
            out += " " + a + "=" + std::to_string(count) + "u";
    }
    return out;
}

void print_derivation(std::ostream& os, const Grammar& g, const Derivation& d, bool decode) {
    AnnotatedCst cst = build_cst(g, d);
    Solver solver;
    bool consistent = solver.assert_all(cst.formula) == AssertResult::ok;
    std::map<int, int> depth;
    depth[cst.root] = 0;
    for (const auto& step : d.steps)
        for (int c : cst.at(step.node).children) depth[c] = depth[step.node] + 1;
    for (const auto& step : d.steps) {
        os << std::string(static_cast<std::size_t>(depth[step.node]) * 2, ' ');
        if (step.kind == DerivStep::Kind::ravg) {
            const auto& r = g.ravg_rules[static_cast<std::size_t>(step.index)];
            os << r.lhs.name << " ->";
            for (const auto& it : r.rhs)
                os << " " << (it.terminal ? "\"" + it.name + "\"" : it.name);
            if (!r.tag.empty()) os << "   [" << r.tag << "]";
        } else if (step.kind == DerivStep::Kind::avg) {
            const auto& r = g.avg_rules[static_cast<std::size_t>(step.index)];
            os << r.lhs.name << " ->";
            for (const auto& c : r.daughters) os << " " << c.name;
            if (!r.tag.empty()) os << "   [" << r.tag << "]";
        } else {
            const auto& e = g.lexicon[static_cast<std::size_t>(step.index)];
            os << e.cat.name << " -> \"" << e.form.name << "\"";
        }
        if (decode && consistent) os << decoded_values(solver, step.mother, g.attrs);
        os << "\n";
    }
}

int exit_for(Verdict v) {
    switch (v) {
        case Verdict::accept: return kExitAccept;
        case Verdict::reject: return kExitReject;
        default: return kExitExhausted;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"restricted attribute-value grammar toolkit"};
    app.require_subcommand(1);

    std::string check_file;
    bool check_cyclic = false;
    auto* check = app.add_subcommand("check", "decide consistency of a formula file");
    check->add_option("formula-file", check_file)->required();
    check->add_flag("--cyclic", check_cyclic, "allow cyclic feature graphs");

    std::string rec_grammar, rec_input;
    long rec_budget = -1;
    bool rec_trace = false;
    std::uint64_t rec_cap = 5'000'000;
    auto* rec = app.add_subcommand("recognize", "decide membership of a string");
    rec->add_option("grammar-file", rec_grammar)->required();
    rec->add_option("string", rec_input)->required();
    rec->add_option("--budget", rec_budget, "derivation step budget (general grammars)");
    rec->add_option("--cap", rec_cap, "node expansion cap");
    rec->add_flag("--trace", rec_trace, "print the accepting derivation");

    std::string enum_grammar;
    int enum_len = 0, enum_steps = -1;
    auto* enu = app.add_subcommand("enumerate", "list the language up to a length bound");
    enu->add_option("grammar-file", enum_grammar)->required();
    enu->add_option("--max-len", enum_len)->required();
    enu->add_option("--max-steps", enum_steps, "derivation step bound (default: max-len)");

    std::string cc_in, cc_out, cc_gnf;
    auto* cc = app.add_subcommand("compile-cfg", "compile a CFG into a restricted grammar");
    cc->add_option("cfg-file", cc_in)->required();
    cc->add_option("-o,--output", cc_out)->required();
    cc->add_option("--emit-gnf", cc_gnf, "also write the intermediate Greibach form ('-' = stdout)");

    std::string ga_schema, ga_out;
    int ga_k = 1;
    auto* ga = app.add_subcommand("gen-arith", "emit an arithmetic rule schema as a grammar");
    ga->add_option("--schema", ga_schema, "eq|double|inc|dec|sum|listsum|counter")->required();
    ga->add_option("--k", ga_k, "degree for the counter schema");
    ga->add_option("-o,--output", ga_out)->required();

    std::string sim_grammar, sim_input, sim_decode, sim_start, sim_target;
    long sim_max = 100000;
    auto* sim = app.add_subcommand("simulate", "drive a chain grammar and decode the results");
    sim->add_option("grammar-file", sim_grammar)->required();
    sim->add_option("--input", sim_input, "comma separated path=value pairs (dotted paths)");
    sim->add_option("--decode", sim_decode, "comma separated dotted paths to decode");
    sim->add_option("--start", sim_start, "start category (default: grammar start)");
    sim->add_option("--target", sim_target, "target category (default: the unique sink)");
    sim->add_option("--max-steps", sim_max);

    std::string th_in, th_out;
    int th_k = 1;
    auto* th = app.add_subcommand("transform-hpc", "thread the step counter through a grammar");
    th->add_option("grammar-file", th_in)->required();
    th->add_option("--k", th_k, "degree of the step polynomial")->required();
    th->add_option("-o,--output", th_out)->required();

    auto* orc = app.add_subcommand("oracle", "brute-force reference checks");
    std::string ocyk_file, ocyk_input;
    auto* ocyk = orc->add_subcommand("cyk", "CYK membership for a CFG");
    ocyk->add_option("cfg-file", ocyk_file)->required();
    ocyk->add_option("string", ocyk_input)->required();
    std::string occ_file;
    bool occ_cyclic = false;
    auto* occ = orc->add_subcommand("cc", "saturation consistency check for a formula file");
    occ->add_option("formula-file", occ_file)->required();
    occ->add_flag("--cyclic", occ_cyclic);
    std::string oenum_file;
    int oenum_len = 0;
    auto* oenum = orc->add_subcommand("enum-cfg", "enumerate a CFG's language");
    oenum->add_option("cfg-file", oenum_file)->required();
    oenum->add_option("--max-len", oenum_len)->required();
    orc->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*check) {
            auto f = parse_formula(read_file(check_file));
            auto g = check_consistency(f, !check_cyclic);
            if (!g) {
                std::cout << "unsat\n";
                return kExitReject;
            }
            std::cout << "sat\n";
            std::cout << "root: " << print_term(g->root) << "\n";
            for (const auto& [key, tgt] : g->edges)
                std::cout << "  " << print_term(Var{key.first}) << " ." << key.second << " -> "
                          << print_term(tgt) << "\n";
            return kExitAccept;
        }

        if (*rec) {
            Grammar g = parse_grammar_file(rec_grammar);
            auto errs = validate_grammar(g);
            if (!errs.empty()) {
                for (const auto& e : errs) std::cerr << "error: " << e << "\n";
                return kExitUsage;
            }
            auto toks = tokenize(g, rec_input);
            RecognizeOptions opts;
            opts.max_expansions = rec_cap;
            RecognizeResult r;
            Grammar avg;  // keeps a converted grammar alive for tracing
            const Grammar* used = &g;
            if (g.kind == GrammarKind::ravg && rec_budget < 0) {
                r = recognize_ravg(g, toks, opts);
            } else {
                if (g.kind == GrammarKind::ravg) {
                    avg = to_avg(g);
                    used = &avg;
                }
                if (rec_budget < 0) {
                    std::cerr << "error: general grammars need --budget\n";
                    return kExitUsage;
                }
                r = recognize_budgeted(*used, toks, rec_budget, opts);
            }
            if (r.verdict == Verdict::accept) {
                std::cout << "accept (" << r.derivation->step_count() << " steps)\n";
                if (rec_trace) print_derivation(std::cout, *used, *r.derivation, true);
            } else {
                std::cout << (r.verdict == Verdict::reject ? "reject" : "exhausted");
                if (!r.note.empty()) std::cout << ": " << r.note;
                std::cout << "\n";
            }
            return exit_for(r.verdict);
        }

        if (*enu) {
            Grammar g = parse_grammar_file(enum_grammar);
            int steps = enum_steps < 0 ? enum_len : enum_steps;
            for (const auto& w : enumerate_language(g, enum_len, steps))
                std::cout << render_tokens(w) << "\n";
            return kExitAccept;
        }

        if (*cc) {
            Cfg cfg = parse_cfg_file(cc_in);
            Cfg gnf = to_gnf(cfg);
            if (!cc_gnf.empty()) {
                if (cc_gnf == "-")
                    std::cout << print_cfg(gnf);
                else
                    write_file(cc_gnf, print_cfg(gnf));
            }
            auto res = compile_gnf(gnf);
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
            write_file(cc_out, print_grammar(res.grammar));
            return kExitAccept;
        }

        if (*ga) {
            NameAllocator alloc;
            RuleSchema schema;
            Path n = path_of({"n"}), m = path_of({"m"});
            if (ga_schema == "eq")
                schema = gen_equality_test(Category{"A"}, Category{"B"}, n, m);
            else if (ga_schema == "double")
                schema = gen_double(Category{"A"}, Category{"B"}, n);
            else if (ga_schema == "inc")
                schema = gen_increment(Category{"A"}, Category{"C"}, n, alloc);
            else if (ga_schema == "dec")
                schema = gen_decrement(Category{"A"}, Category{"C"}, n, alloc);
            else if (ga_schema == "sum")
                schema = gen_sum(Category{"A"}, Category{"C"}, n, m, alloc);
            else if (ga_schema == "listsum")
                schema = gen_list_sum(Category{"A"}, Category{"B"}, path_of({"l"}),
                                      path_of({"suml"}), alloc);
            else if (ga_schema == "counter")
                schema = gen_counter(ga_k, Category{"S"}, Category{"A"}, Category{"B"});
            else {
                std::cerr << "error: unknown schema '" << ga_schema << "'\n";
                return kExitUsage;
            }
            write_file(ga_out, print_grammar(schema_grammar(schema, alloc)));
            return kExitAccept;
        }

        if (*sim) {
            Grammar g = parse_grammar_file(sim_grammar);
            if (g.kind != GrammarKind::avg) {
                std::cerr << "error: simulate drives general (avg) chain grammars\n";
                return kExitUsage;
            }
            Category start = sim_start.empty() ? g.start : Category{sim_start};
            Category target;
            if (!sim_target.empty()) {
                target = Category{sim_target};
            } else {
                std::set<std::string> with_rules;
                for (const auto& r : g.avg_rules) with_rules.insert(r.lhs.name);
                std::vector<std::string> sinks;
                for (const auto& c : g.cats)
                    if (!with_rules.count(c)) sinks.push_back(c);
                if (sinks.size() != 1) {
                    std::cerr << "error: pass --target (the grammar has " << sinks.size()
                              << " sink categories)\n";
                    return kExitUsage;
                }
                target = Category{sinks.front()};
            }
            ConjFormula init;
            if (!sim_input.empty()) {
                std::istringstream is(sim_input);
                for (std::string part; std::getline(is, part, ',');) {
                    auto eqpos = part.find('=');
                    if (eqpos == std::string::npos) {
                        std::cerr << "error: --input wants path=value pairs\n";
                        return kExitUsage;
                    }
                    Path p = parse_dotted_path(part.substr(0, eqpos));
                    unsigned long value = std::stoul(part.substr(eqpos + 1));
                    init &= encode_number_at(value, Var{0}, p);
                }
            }
            oracle::SimOptions opts;
            opts.max_steps = sim_max;
            auto res = oracle::simulate_derivation(g, start, init, target, opts);
            if (!res.reached) {
                std::cout << "no derivation from " << start.name << " to " << target.name
                          << " within " << sim_max << " steps\n";
                return kExitReject;
            }
            std::cout << "reached " << target.name << " in " << res.steps << " steps\n";
            for (int ri : res.rule_trace) {
                const auto& r = g.avg_rules[static_cast<std::size_t>(ri)];
                std::cout << "  " << r.lhs.name << " -> " << r.daughters[0].name;
                if (!r.tag.empty()) std::cout << "   [" << r.tag << "]";
                std::cout << "\n";
            }
            if (!sim_decode.empty()) {
                std::istringstream is(sim_decode);
                for (std::string part; std::getline(is, part, ',');) {
                    Path p = parse_dotted_path(part);
                    auto t = res.solver.lookup_path(res.exit, p);
                    std::cout << part << " = ";
                    if (!t) {
                        std::cout << "(absent)\n";
                        continue;
                    }
                    auto d = decode_number(res.solver, *t);
                    if (d.ok())
                        std::cout << *d.value << "\n";
                    else
                        std::cout << "(" << d.error << ")\n";
                }
            }
            return kExitAccept;
        }

        if (*th) {
            Grammar g = parse_grammar_file(th_in);
            if (g.kind == GrammarKind::ravg) g = to_avg(g);
            write_file(th_out, print_grammar(transform_hpc(g, th_k)));
            return kExitAccept;
        }

        if (*ocyk) {
            Cfg cfg = parse_cfg_file(ocyk_file);
            std::vector<std::string> toks;
            if (ocyk_input.find(' ') == std::string::npos) {
                for (char c : ocyk_input) toks.push_back(std::string(1, c));
            } else {
                std::istringstream is(ocyk_input);
                for (std::string w; is >> w;) toks.push_back(w);
            }
            bool in = oracle::cyk_membership(cfg, toks);
            std::cout << (in ? "member" : "non-member") << "\n";
            return in ? kExitAccept : kExitReject;
        }
        if (*occ) {
            auto f = parse_formula(read_file(occ_file));
            bool sat = oracle::brute_congruence_closure(f, !occ_cyclic);
            std::cout << (sat ? "sat" : "unsat") << "\n";
            return sat ? kExitAccept : kExitReject;
        }
        if (*oenum) {
            Cfg cfg = parse_cfg_file(oenum_file);
            for (const auto& w : oracle::cfg_enumerate(cfg, oenum_len))
                std::cout << render_tokens(w) << "\n";
            return kExitAccept;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
