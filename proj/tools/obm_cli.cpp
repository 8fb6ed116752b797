// Command-line front end: reproducible runs of the fractional algorithms,
// rounding engines and verification harnesses over OBMI instance files.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/randomness.hpp"
#include "obm/rounding.hpp"
#include "obm/verify.hpp"

using namespace obm;
using nlohmann::ordered_json;

namespace {

constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

AlgoSelector parse_algo(const std::string& spec) {
    if (spec == "water") return AlgoSelector::water();
    if (spec == "vw2") return AlgoSelector::vw2();
    if (spec.rfind("klevel:", 0) == 0) {
        int k = std::stoi(spec.substr(7));
        if (k < 1 || k > 16) throw UsageError("klevel k out of range");
        return AlgoSelector::klevel(k);
    }
    throw UsageError("unknown algo '" + spec + "' (water | klevel:K | vw2)");
}

struct RngSpec {
    SourceKind kind = SourceKind::IID;
    int kprime = 0;         // kwise
    Rat delta = Rat(1, 8);  // smallbias
};

RngSpec parse_rng(const std::string& spec) {
    RngSpec rng;
    if (spec == "iid") return rng;
    if (spec.rfind("kwise:", 0) == 0) {
        rng.kind = SourceKind::KWise;
        rng.kprime = std::stoi(spec.substr(6));
        if (rng.kprime < 1) throw UsageError("kwise order must be >= 1");
        return rng;
    }
    if (spec.rfind("smallbias:", 0) == 0) {
        rng.kind = SourceKind::SmallBias;
        auto d = rat_from_string(spec.substr(10));
        if (!d || *d <= 0 || *d >= 1) throw UsageError("smallbias delta must be a rational in (0,1)");
        rng.delta = *d;
        return rng;
    }
    throw UsageError("unknown rng '" + spec + "' (iid | kwise:K | smallbias:DELTA)");
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write output file: " + path);
    f << content;
}

std::string ratio_string(const Rat& r) {
    std::ostringstream ss;
    ss.precision(12);
    ss << std::fixed << to_double(r);
    return ss.str();
}

// The certificate the algorithm's analysis supplies: exact level constants
// for vw2 and the unweighted 2-level run, g-duals at base 1.6 otherwise.
std::optional<DualCertificate> attach_certificate(const AlgoSelector& sel, const FractionalTrace& trace) {
    bool unit_weights = true;
    for (const Rat& w : trace.instance.weights) unit_weights &= w == 1;
    if (sel.algo == Algo::VW2) return dual_fit_certificate(trace, DualFitConfig::vw());
    if (!unit_weights) return std::nullopt;
    if (sel.algo == Algo::KLevel && sel.k == 2)
        return dual_fit_certificate(trace, DualFitConfig::two_level_unweighted());
    return dual_fit_certificate(trace, DualFitConfig::g_based(1.6));
}

ordered_json certificate_json(const DualCertificate& cert) {
    ordered_json j;
    j["kind"] = cert.kind == DualFitConfig::Kind::Constants ? "constants" : "g-based";
    j["feasible"] = cert.feasible;
    if (!cert.feasible) j["infeasible_edge"] = cert.infeasible_edge;
    if (cert.has_exact_ratio) j["worst_step_ratio"] = rat_to_string(cert.worst_ratio);
    j["worst_step_ratio_float"] = cert.worst_ratio_f;
    return j;
}

ordered_json accounting_json(const SeedAccounting& acc) {
    ordered_json j;
    j["m"] = acc.m;
    j["k'"] = acc.kprime;
    j["eps"] = rat_to_string(acc.eps);
    j["delta"] = rat_to_string(acc.delta);
    j["h"] = acc.h;
    j["seed_bits"] = acc.seed_bits;
    j["construction"] = acc.construction;
    return j;
}

struct McSetup {
    MonteCarloConfig cfg;
    int seed_bits = 0;
};

McSetup monte_carlo_setup(const AlgoSelector& sel, const FractionalTrace& trace,
                          const std::string& engine_spec, const RngSpec& rng, uint64_t seed, int trials,
                          int jobs) {
    McSetup setup;
    MonteCarloConfig& cfg = setup.cfg;
    if (engine_spec == "general") {
        cfg.engine = Engine::General;
        if (trace.instance.n > 20) throw UsageError("engine=general requires n <= 20");
        if (rng.kind != SourceKind::IID) throw UsageError("engine=general requires the iid rng");
    } else if (engine_spec == "maximal") {
        cfg.engine = Engine::Maximal;
    } else {
        throw UsageError("unknown engine '" + engine_spec + "' (none | general | maximal)");
    }
    cfg.rng = rng.kind;
    cfg.trials = trials;
    cfg.master_seed = seed;
    cfg.jobs = jobs;
    if (rng.kind != SourceKind::IID) {
        BbitReport bits = check_bbit_precise(trace, 64);
        if (!bits.pass)
            throw UsageError("bounded-independence rngs need a b-bit precise (k-level) trace");
        cfg.b = std::max(1, bits.required_bits);
        int klevels = sel.algo == Algo::KLevel ? sel.k : 2;
        cfg.kprime = rng.kind == SourceKind::KWise ? rng.kprime : cfg.b * (1 << (klevels + 2));
        cfg.delta = rng.delta;
        RandomSource probe =
            rng.kind == SourceKind::KWise
                ? RandomSource::kwise(cfg.kprime, cfg.b, trace.instance.num_arrivals(), seed)
                : RandomSource::smallbias(rng.delta, cfg.kprime, cfg.b, trace.instance.num_arrivals(),
                                          seed);
        setup.seed_bits = probe.accounting().seed_bits;
    }
    return setup;
}

// Verbosity through one environment variable: OBM_LOG=debug enables stage
// notes on stderr.
void log_debug(const std::string& msg) {
    const char* level = std::getenv("OBM_LOG");
    if (level && std::string(level) == "debug") std::cerr << "[obm] " << msg << "\n";
}

int run_command(const std::string& algo_spec, const std::string& input, const std::string& engine_spec,
                const std::string& rng_spec, uint64_t seed, int trials, int jobs,
                const std::string& output, const std::string& format, const std::string& trace_out) {
    AlgoSelector sel = parse_algo(algo_spec);
    RngSpec rng = parse_rng(rng_spec);
    Instance inst = load_instance(input);
    log_debug("running " + sel.name() + " on " + input);
    FractionalTrace trace = run_fractional(sel, inst);

    ordered_json report;
    report["command"] = "run";
    report["algo"] = sel.name();
    report["input"] = input;
    report["n"] = inst.n;
    report["T"] = inst.num_arrivals();
    report["primal"] = rat_to_string(trace.primal);

    auto [opt, matching] = max_weight_matching(inst);
    report["opt"] = rat_to_string(opt);
    if (opt > 0) {
        report["ratio"] = rat_to_string(trace.primal / opt);
        report["ratio_float"] = ratio_string(trace.primal / opt);
    }

    std::optional<DualCertificate> cert = attach_certificate(sel, trace);
    if (cert) report["dual_certificate"] = certificate_json(*cert);
    if (!trace_out.empty()) {
        std::ofstream f(trace_out);
        if (!f) throw UsageError("cannot write trace file: " + trace_out);
        f << trace_to_jsonl(trace, cert ? &*cert : nullptr);
        log_debug("trace written to " + trace_out);
    }

    bool ok = true;
    report["engine"] = engine_spec;
    if (engine_spec != "none") {
        log_debug("rounding with engine=" + engine_spec + " trials=" + std::to_string(trials));
        McSetup setup = monte_carlo_setup(sel, trace, engine_spec, rng, seed, trials, jobs);
        auto stats = monte_carlo_marginals(trace, setup.cfg);

        double mean_value = 0, worst_dev = 0;
        double band_delta = rng.kind == SourceKind::SmallBias ? to_double(rng.delta) : 0.0;
        bool within_band = true;
        for (const EdgeStat& st : stats) {
            mean_value += to_double(inst.weights[st.node]) * st.mean;
            worst_dev = std::max(worst_dev, std::abs(st.mean - to_double(st.exact)));
            within_band = within_band && st.within_band(band_delta);
        }
        ok = within_band;
        report["trials"] = trials;
        report["master_seed"] = seed;
        report["matching_value_mean"] = mean_value;
        report["marginal_worst_abs_dev"] = worst_dev;
        report["marginals_within_band"] = within_band;
        if (rng.kind != SourceKind::IID) {
            SeedAccounting acc{rng.kind == SourceKind::KWise ? "kwise" : "smallbias", 0, 0, Rat(0),
                               Rat(0), 0, 0, ""};
            RandomSource probe =
                rng.kind == SourceKind::KWise
                    ? RandomSource::kwise(setup.cfg.kprime, setup.cfg.b, inst.num_arrivals(), seed)
                    : RandomSource::smallbias(rng.delta, setup.cfg.kprime, setup.cfg.b,
                                              inst.num_arrivals(), seed);
            acc = probe.accounting();
            report["seed_accounting"] = accounting_json(acc);
        } else {
            report["seed_accounting"] = accounting_json(RandomSource::iid(seed).accounting());
        }
    }

    if (format == "csv") {
        std::ostringstream csv;
        csv << "algo,n,T,P,OPT,ratio\n"
            << sel.name() << ',' << inst.n << ',' << inst.num_arrivals() << ','
            << rat_to_string(trace.primal) << ',' << rat_to_string(opt) << ','
            << (opt > 0 ? ratio_string(trace.primal / opt) : "") << "\n";
        write_output(output, csv.str());
    } else {
        write_output(output, report.dump(2) + "\n");
    }
    return ok ? 0 : kExitVerification;
}

int verify_command(const std::string& demo, const std::string& input, const std::string& algo_spec,
                   const std::string& engine_spec, const std::string& trace_path,
                   const std::string& check, const std::string& dampen,
                   const std::string& output) {
    if (!demo.empty()) {
        if (demo == "impossibility") {
            VerificationReport rep = impossibility_demo();
            std::ostringstream text;
            text << "soundness violation at arrival 3: mass 1 > 3/4 allowed by the pair product "
                    "(margin 1/4)\n"
                 << rep.to_json() << "\n";
            write_output(output, text.str());
            return rep.all_pass() ? 0 : kExitVerification;
        }
        if (demo == "threechoice") {
            ThreeChoiceGap gap = three_choice_gap();
            std::ostringstream text;
            text << "three-choice fractional value " << rat_to_string(gap.fractional_value)
                 << " > best expected matching " << rat_to_string(gap.greedy_expectation) << " (gap "
                 << rat_to_string(gap.gap) << ")\n"
                 << gap.report.to_json() << "\n";
            write_output(output, text.str());
            return gap.report.all_pass() ? 0 : kExitVerification;
        }
        throw UsageError("unknown demo '" + demo + "' (impossibility | threechoice)");
    }

    if (input.empty()) throw UsageError("verify needs --input (or --demo)");
    Instance inst = load_instance(input);
    if (!trace_path.empty()) {
        std::ifstream f(trace_path);
        if (!f) throw UsageError("cannot open trace file: " + trace_path);
        std::stringstream buf;
        buf << f.rdbuf();
        FractionalTrace trace = trace_from_jsonl(inst, buf.str());
        CheckReport rep = check == "maximal" ? check_maximal(trace) : check_sound(trace);
        CheckReport feas = check_trace_feasible(trace);
        ordered_json j;
        j["command"] = "verify";
        j["check"] = check;
        j["pass"] = rep.pass && feas.pass;
        if (!rep.pass) {
            j["violations"] = rep.violations;
            j["detail"] = rep.detail;
        } else if (!feas.pass) {
            j["violations"] = feas.violations;
            j["detail"] = feas.detail;
        }
        write_output(output, j.dump(2) + "\n");
        return rep.pass && feas.pass ? 0 : kExitVerification;
    }

    AlgoSelector sel = parse_algo(algo_spec);
    FractionalTrace trace = run_fractional(sel, inst);
    Engine engine = engine_spec == "general" ? Engine::General : Engine::Maximal;
    auto gamma = rat_from_string(dampen);
    if (!gamma || *gamma <= 0 || *gamma > 1) throw UsageError("dampen must be a rational in (0, 1]");
    FractionalTrace checked = *gamma < 1 ? dampen_trace(trace, *gamma) : trace;
    if (engine == Engine::Maximal && *gamma < 1)
        throw UsageError("dampened traces are sound but not maximal; use --engine general");
    VerificationReport rep = sweep_invariants(checked, engine);
    write_output(output, rep.to_json() + "\n");
    return rep.all_pass() ? 0 : kExitVerification;
}

int bench_command(const std::string& family, int kmin, int kmax, int count, int n, int T,
                  int max_degree, long long wmin, long long wmax, const std::string& algo_spec,
                  const std::string& engine_spec, const std::string& rng_spec, uint64_t seed,
                  int trials, int jobs, const std::string& output) {
    std::ostringstream csv;
    csv << "family,k,n,T,algo,engine,rng,P,OPT,ratio,seed_bits,wall_ms\n";

    std::vector<std::pair<std::string, Instance>> instances;
    if (family == "adversarial") {
        for (int k = kmin; k <= kmax; ++k)
            instances.push_back({std::to_string(k), gen_adversarial_waterlevel(k)});
    } else if (family == "random") {
        for (int i = 0; i < count; ++i)
            instances.push_back({std::to_string(i), gen_random_instance(n, T, max_degree, wmin, wmax,
                                                                        seed + static_cast<uint64_t>(i))});
    } else {
        throw UsageError("unknown family '" + family + "' (adversarial | random)");
    }

    AlgoSelector sel = parse_algo(algo_spec);
    RngSpec rng = parse_rng(rng_spec);
    for (const auto& [label, inst] : instances) {
        auto start = std::chrono::steady_clock::now();
        std::string row_error;
        Rat primal(0), opt(0);
        int seed_bits = 0;
        try {
            FractionalTrace trace = run_fractional(sel, inst);
            primal = trace.primal;
            opt = max_weight_matching(inst).first;
            if (engine_spec != "none") {
                McSetup setup = monte_carlo_setup(sel, trace, engine_spec, rng, seed, trials, jobs);
                seed_bits = setup.seed_bits;
                monte_carlo_marginals(trace, setup.cfg);
            }
        } catch (const std::exception& e) {
            row_error = e.what();
        }
        auto wall =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        csv << family << ',' << label << ',' << inst.n << ',' << inst.num_arrivals() << ',' << sel.name()
            << ',' << engine_spec << ',' << rng_spec << ',';
        if (row_error.empty()) {
            csv << rat_to_string(primal) << ',' << rat_to_string(opt) << ','
                << (opt > 0 ? ratio_string(primal / opt) : "") << ',' << seed_bits << ',' << wall.count()
                << "\n";
        } else {
            csv << "ERROR(" << row_error << "),,,," << wall.count() << "\n";
        }
    }
    write_output(output, csv.str());
    return 0;
}

int gen_command(const std::string& family, int k, int n, int T, int max_degree, long long wmin,
                long long wmax, uint64_t seed, const std::string& output) {
    Instance inst;
    if (family == "adversarial")
        inst = gen_adversarial_waterlevel(k);
    else if (family == "random")
        inst = gen_random_instance(n, T, max_degree, wmin, wmax, seed);
    else if (family == "impossible")
        inst = gen_example_impossible().first;
    else
        throw UsageError("unknown family '" + family + "' (adversarial | random | impossible)");
    write_output(output, serialize_instance(inst));
    return 0;
}

int smallbias_command(int m, int k, const std::string& eps_str, const std::string& delta_str,
                      bool exhaustive, const std::string& output) {
    Rat eps;
    if (!delta_str.empty()) {
        auto delta = rat_from_string(delta_str);
        if (!delta || *delta <= 0 || *delta >= 1) throw UsageError("delta must be a rational in (0,1)");
        int k_even = k + (k & 1);
        eps = *delta / pow2(static_cast<unsigned>(k_even / 2));
    } else {
        auto e = rat_from_string(eps_str.empty() ? "0" : eps_str);
        if (!e || *e < 0 || *e >= 1) throw UsageError("eps must be a rational in [0,1)");
        eps = *e;
    }
    SmallBiasSpace space = make_small_bias_space(m, k, eps);
    SeedAccounting acc{"space", space.m, space.k, space.eps, space.delta, space.h, space.seed_bits,
                       space.construction};
    ordered_json j = accounting_json(acc);
    if (exhaustive) {
        DeltaKReport rep = verify_delta_k(enumerate_space(space), space.k, space.delta);
        j["exhaustive_delta_k_pass"] = rep.pass;
        j["worst_tv"] = rat_to_string(rep.worst_tv);
        write_output(output, j.dump(2) + "\n");
        return rep.pass ? 0 : kExitVerification;
    }
    write_output(output, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online bipartite matching: sound/maximal fractional algorithms, lossless rounding, "
                 "bounded-independence seeds"};
    app.require_subcommand(1);

    std::string algo = "water", input, engine = "none", rng = "iid", output, format = "json";
    std::string trace_out;
    uint64_t seed = 1;
    int trials = 1000, jobs = 1;

    auto* run = app.add_subcommand("run", "fractional pass plus optional rounding");
    run->add_option("--algo", algo, "water | klevel:K | vw2");
    run->add_option("--input", input, "OBMI v1 instance file")->required();
    run->add_option("--engine", engine, "none | general | maximal");
    run->add_option("--rng", rng, "iid | kwise:K | smallbias:DELTA");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--trials", trials, "Monte-Carlo trials");
    run->add_option("--jobs", jobs, "trial-level parallelism");
    run->add_option("--output,-o", output, "report file (default stdout)");
    run->add_option("--format", format, "json | csv");
    run->add_option("--trace-out", trace_out, "write the fractional trace as JSON lines");

    std::string demo, trace_path, check = "sound", dampen = "1";
    auto* verify = app.add_subcommand("verify", "invariant sweeps and counterexample demos");
    verify->add_option("--demo", demo, "impossibility | threechoice");
    verify->add_option("--input", input, "OBMI v1 instance file");
    verify->add_option("--algo", algo, "water | klevel:K | vw2");
    verify->add_option("--engine", engine, "general | maximal");
    verify->add_option("--dampen", dampen, "scale deltas by this rational before the sweep");
    verify->add_option("--trace", trace_path, "trace JSONL to check");
    verify->add_option("--check", check, "sound | maximal");
    verify->add_option("--output,-o", output, "report file (default stdout)");

    std::string family = "adversarial";
    int kmin = 1, kmax = 4, count = 10, n = 8, T = 10, max_degree = 3, kgen = 2;
    long long wmin = 1, wmax = 1;
    auto* bench = app.add_subcommand("bench", "CSV table over instance families");
    bench->add_option("--family", family, "adversarial | random");
    bench->add_option("--kmin", kmin);
    bench->add_option("--kmax", kmax);
    bench->add_option("--count", count, "random-family instances");
    bench->add_option("--n", n);
    bench->add_option("--T", T);
    bench->add_option("--max-degree", max_degree);
    bench->add_option("--wmin", wmin);
    bench->add_option("--wmax", wmax);
    bench->add_option("--algo", algo);
    bench->add_option("--engine", engine);
    bench->add_option("--rng", rng);
    bench->add_option("--seed", seed);
    bench->add_option("--trials", trials);
    bench->add_option("--jobs", jobs);
    bench->add_option("--output,-o", output);

    auto* gen = app.add_subcommand("gen", "write an instance file");
    gen->add_option("--family", family, "adversarial | random | impossible");
    gen->add_option("--k", kgen, "adversarial rounds");
    gen->add_option("--n", n);
    gen->add_option("--T", T);
    gen->add_option("--max-degree", max_degree);
    gen->add_option("--wmin", wmin);
    gen->add_option("--wmax", wmax);
    gen->add_option("--seed", seed);
    gen->add_option("--output,-o", output);

    int m = 8, korder = 2;
    std::string eps_str, delta_str;
    bool exhaustive = false;
    auto* smallbias = app.add_subcommand("smallbias", "inspect a (delta,k)-dependent space");
    smallbias->add_option("--m", m, "binary variables");
    smallbias->add_option("--k", korder, "dependence order");
    smallbias->add_option("--eps", eps_str, "bias bound (rational)");
    smallbias->add_option("--delta", delta_str, "target delta (rational); sets eps = delta/2^(k/2)");
    smallbias->add_flag("--verify-exhaustive", exhaustive, "enumerate all seeds and verify");
    smallbias->add_option("--output,-o", output);

    try {
        app.parse(argc, argv);
        if (run->parsed())
            return run_command(algo, input, engine, rng, seed, trials, jobs, output, format, trace_out);
        if (verify->parsed())
            return verify_command(demo, input, algo, engine, trace_path, check, dampen, output);
        if (bench->parsed())
            return bench_command(family, kmin, kmax, count, n, T, max_degree, wmin, wmax, algo, engine,
                                 rng, seed, trials, jobs, output);
        if (gen->parsed()) return gen_command(family, kgen, n, T, max_degree, wmin, wmax, seed, output);
        if (smallbias->parsed())
            return smallbias_command(m, korder, eps_str, delta_str, exhaustive, output);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
