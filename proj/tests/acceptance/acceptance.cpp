// Acceptance suite: every criterion below runs at its stated tolerance and
// prints one PASS/FAIL line. The process exits nonzero if any criterion
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/probprogram.hpp"
#include "obm/prng.hpp"
#include "obm/randomness.hpp"
#include "obm/rounding.hpp"
#include "obm/verify.hpp"

using namespace obm;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(const std::string& name, bool pass, double seconds, const std::string& detail = "") {
    std::printf("[%s] %-34s (%6.2f s)%s%s\n", pass ? "PASS" : "FAIL", name.c_str(), seconds,
                detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::vector<Instance> random_corpus(int count, int n_max, int t_max, long long w_hi, uint64_t salt) {
    std::vector<Instance> out;
    for (int i = 0; i < count; ++i) {
        SplitMix64 rng(salt + static_cast<uint64_t>(i));
        int n = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(n_max - 1)));
        int T = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(t_max)));
        int max_degree = std::min(n, 1 + static_cast<int>(rng.below(4)));
        out.push_back(gen_random_instance(n, T, max_degree, 1, w_hi, rng.next()));
    }
    return out;
}

const std::vector<AlgoSelector> kAllAlgos = {AlgoSelector::water(), AlgoSelector::klevel(2),
                                             AlgoSelector::klevel(3), AlgoSelector::vw2()};

bool marginals_match_trace(const FractionalTrace& trace, Engine engine) {
    auto marg = exact_marginals(trace, engine);
    for (size_t t = 0; t < trace.steps.size(); ++t) {
        const StepRecord& s = trace.steps[t];
        for (const auto& [node, p] : marg[t]) {
            Rat want = !s.a.is_dummy() && s.a.node == node ? s.a.delta : s.b.delta;
            if (p != want) return false;
        }
    }
    return true;
}

// --- criteria ---------------------------------------------------------------

void criterion_1() {
    Timer timer;
    auto corpus = random_corpus(50, 10, 12, 3, 101);
    bool pass = true;
    int runs = 0;
    for (const Instance& inst : corpus)
        for (const AlgoSelector& sel : kAllAlgos) {
            FractionalTrace trace = run_fractional(sel, inst);
            pass = pass && check_maximal(trace).pass && marginals_match_trace(trace, Engine::Maximal);
            ++runs;
        }
    pass = pass && timer.seconds() < 60.0;
    report("1 lossless marginals, maximal", pass, timer.seconds(),
           std::to_string(runs) + " runs, exact equality");
}

void criterion_2() {
    Timer timer;
    auto corpus = random_corpus(50, 8, 10, 1, 202);
    const Rat gammas[] = {Rat(1, 2), Rat(1, 3), Rat(3, 4), Rat(2, 3), Rat(5, 8)};
    bool pass = true;
    for (size_t i = 0; i < corpus.size(); ++i) {
        AlgoSelector sel = i % 2 == 0 ? AlgoSelector::water() : AlgoSelector::klevel(2);
        FractionalTrace damp = dampen_trace(run_fractional(sel, corpus[i]), gammas[i % 5]);
        pass = pass && check_sound(damp).pass && marginals_match_trace(damp, Engine::General);
    }
    report("2 lossless marginals, general", pass, timer.seconds(), "50 dampened sound traces");
}

void criterion_3() {
    Timer timer;
    auto corpus = random_corpus(20, 8, 10, 3, 303);
    bool pass = true;
    for (const Instance& inst : corpus)
        for (const AlgoSelector& sel : kAllAlgos) {
            VerificationReport rep = sweep_invariants(run_fractional(sel, inst), Engine::Maximal);
            for (const CheckResult& c : rep.checks)
                if (c.name == "product-or-zero" || c.name == "negativity-monotone" ||
                    c.name == "independent-factorization" || c.name == "marginals-exact")
                    pass = pass && c.pass;
        }
    report("3 product-or-zero, exhaustive", pass, timer.seconds(), "all subsets, all times, n <= 8");
}

void criterion_4() {
    Timer timer;
    auto corpus = random_corpus(20, 6, 9, 1, 404);
    const Rat gammas[] = {Rat(1, 2), Rat(2, 3), Rat(3, 4)};
    bool pass = true;
    bool fkg_ran = false;
    for (size_t i = 0; i < corpus.size(); ++i) {
        FractionalTrace damp =
            dampen_trace(run_fractional(AlgoSelector::water(), corpus[i]), gammas[i % 3]);
        VerificationReport rep = sweep_invariants(damp, Engine::General);
        for (const CheckResult& c : rep.checks) {
            if (c.name == "fkg") fkg_ran = true;
            pass = pass && c.pass;
        }
    }
    report("4 FKG inequality, exhaustive", pass && fkg_ran, timer.seconds(),
           "general engine, dampened corpus, n <= 6");
}

void criterion_5() {
    Timer timer;
    bool pass = true;
    for (int k = 1; k <= 7; ++k) {
        Instance inst = gen_adversarial_waterlevel(k);
        FractionalTrace trace = run_fractional(AlgoSelector::water(), inst);
        pass = pass && trace.primal / inst.n == hardness_ratio(k);
    }
    double r12 = to_double(hardness_ratio(12));
    pass = pass && r12 >= 0.5362 && r12 <= 0.5364;
    pass = pass && timer.seconds() < 10.0;
    report("5 competitive ratio, unweighted", pass, timer.seconds(),
           "P/3^k = hardness_ratio(k) for k=1..7; hr(12) = " + std::to_string(r12));
}

void criterion_6() {
    Timer timer;

    // (a) two-level unweighted: every step has dD/dP <= 36/19 exactly.
    bool pass_a = true;
    auto unit_corpus = random_corpus(25, 10, 12, 1, 606);
    unit_corpus.push_back(gen_adversarial_waterlevel(3));
    unit_corpus.push_back(gen_adversarial_waterlevel(4));
    for (const Instance& inst : unit_corpus) {
        DualCertificate cert = dual_fit_certificate(run_fractional(AlgoSelector::klevel(2), inst),
                                                    DualFitConfig::two_level_unweighted());
        pass_a = pass_a && cert.feasible && cert.worst_ratio >= Rat(19, 36);
    }

    // (b) vertex-weighted: every step has dP >= (11/21) dD exactly.
    bool pass_b = true;
    auto vw_corpus = random_corpus(25, 10, 12, 3, 707);
    for (long long w2 : {2, 3, 4, 5, 6, 8, 11, 20}) {  // two-neighbor stress rows per case table
        Instance stress;
        stress.n = 4;
        stress.weights = {Rat(1), Rat(w2), Rat(1), Rat(w2)};
        stress.arrivals = {{0, 1}, {0, 1}, {2, 3}, {1, 3}, {0, 2}, {1, 2}, {3}, {0, 3}};
        vw_corpus.push_back(stress);
    }
    for (const Instance& inst : vw_corpus) {
        DualCertificate cert =
            dual_fit_certificate(run_fractional(AlgoSelector::vw2(), inst), DualFitConfig::vw());
        pass_b = pass_b && cert.feasible && cert.worst_ratio >= Rat(11, 21);
    }

    // (c) water level with g base 1.6.
    double alpha = alpha_g(1.6, AlphaMode::WaterLevel);
    bool pass_c_cert = true;
    auto water_corpus = random_corpus(25, 12, 14, 1, 808);
    for (int k = 1; k <= 5; ++k) water_corpus.push_back(gen_adversarial_waterlevel(k));
    for (const Instance& inst : water_corpus) {
        DualCertificate cert = dual_fit_certificate(run_fractional(AlgoSelector::water(), inst),
                                                    DualFitConfig::g_based(1.6));
        pass_c_cert = pass_c_cert && cert.feasible && cert.worst_ratio_f >= alpha - 1e-9;
    }
    bool pass_c_interval = alpha >= 0.5315 && alpha <= 0.5325;

    bool in_time = timer.seconds() < 60.0;
    report("6a dual certificate, 2-level", pass_a && in_time, timer.seconds(), "dD/dP <= 36/19 exact");
    report("6b dual certificate, vw", pass_b && in_time, timer.seconds(), "dP >= (11/21) dD exact");
    report("6c dual certificate, g = 1.6", pass_c_cert && in_time, timer.seconds(),
           "worst step ratio >= alpha_g(1.6) - 1e-9");
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "alpha_g(1.6) = %.7f, required [0.5315, 0.5325]; the exact minimum of the stated "
                  "expression is (sqrt(1.6)+1)/(sqrt(1.6)+3) ~ 0.5310570 at x = 0",
                  alpha);
    report("6c alpha_g(1.6) interval", pass_c_interval, timer.seconds(), buf);
}

void criterion_7() {
    Timer timer;

    // Exhaustive (delta, k)-dependence for small constructed spaces.
    bool pass_spaces = true;
    struct SpaceCase {
        int m, k;
        Rat eps;
    };
    const SpaceCase cases[] = {
        {16, 4, Rat(1, 16)}, {15, 4, Rat(1, 16)}, {16, 2, Rat(1, 4)}, {8, 2, Rat(1, 8)},
        {12, 3, Rat(1, 8)},
    };
    for (const SpaceCase& c : cases) {
        SmallBiasSpace space = make_small_bias_space(c.m, c.k, c.eps);
        DeltaKReport rep = verify_delta_k(enumerate_space(space), space.k, space.delta);
        pass_spaces = pass_spaces && rep.pass;
    }

    // Algorithm 3 (k = 2, b = 2) on the k = 4 adversarial instance with a
    // (1/8, b*2^(k+2))-dependent source: marginals within 1/8 + 4 sigma.
    Instance inst = gen_adversarial_waterlevel(4);
    FractionalTrace trace = run_fractional(AlgoSelector::klevel(2), inst);
    BbitReport bits = check_bbit_precise(trace, 2);
    MonteCarloConfig cfg;
    cfg.engine = Engine::Maximal;
    cfg.rng = SourceKind::SmallBias;
    cfg.delta = Rat(1, 8);
    cfg.b = 2;
    cfg.kprime = 2 * (1 << 4);  // b * 2^(k+2) = 32
    cfg.trials = 100000;
    cfg.master_seed = 20240;
    cfg.jobs = 2;
    auto stats = monte_carlo_marginals(trace, cfg);
    bool pass_mc = bits.pass && !stats.empty();
    double worst = 0;
    for (const EdgeStat& st : stats) {
        worst = std::max(worst, std::abs(st.mean - to_double(st.exact)));
        pass_mc = pass_mc && st.within_band(0.125);
    }
    bool in_time = timer.seconds() < 300.0;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst |emp - x| = %.5f vs 1/8 + 4 sigma, 1e5 trials", worst);
    report("7 small-bias correctness", pass_spaces && pass_mc && in_time, timer.seconds(), buf);
}

void criterion_8() {
    Timer timer;
    SeedBudgetReport rep = seed_budget(2187, 2, 2, Rat(1, 8));  // n = 3^7
    char buf[128];
    std::snprintf(buf, sizeof(buf), "seed_bits = %d, log2 log2 m = %.3f, C = %.3f (<= 8)",
                  rep.seed_bits, rep.log2log2_m, rep.constant_C);
    report("8 seed budget", rep.within_budget, timer.seconds(), buf);
}

void criterion_9() {
    Timer timer;
    bool pass = true;
    int worst = 0;
    for (int k = 1; k <= 3; ++k) {
        LevelTable table = LevelTable::standard(k);
        auto corpus = random_corpus(12, 10, 12, 1, 909 + static_cast<uint64_t>(k));
        corpus.push_back(gen_adversarial_waterlevel(4));
        for (const Instance& inst : corpus) {
            DependencyReport rep = dependency_tracker(run_fractional(AlgoSelector::klevel(k), inst), table);
            pass = pass && rep.pass;
            if (k == 3) worst = std::max(worst, rep.max_edge_slots);
        }
    }
    report("9 dependency bound", pass, timer.seconds(),
           "edge events <= 2^(k+2) slots, levels <= 2^(l+1)-2; worst k=3 edge = " +
               std::to_string(worst));
}

void criterion_10() {
    Timer timer;
    ThreeChoiceGap gap = three_choice_gap();
    bool pass = gap.fractional_value == Rat(60533, 13824) && gap.greedy_expectation == Rat(35, 8) &&
                gap.gap == Rat(53, 13824) && gap.report.all_pass();
    report("10 three-choice gap", pass, timer.seconds(),
           rat_to_string(gap.fractional_value) + " vs " + rat_to_string(gap.greedy_expectation) +
               ", gap " + rat_to_string(gap.gap) + ", condition (17) holds");
}

void criterion_11() {
    Timer timer;
    VerificationReport rep = impossibility_demo();
    bool margin_ok = false;
    for (const CheckResult& c : rep.checks)
        if (c.name == "soundness-violated-at-arrival-3") margin_ok = c.pass && c.worst_deviation == "1/4";
    report("11 impossibility demo", rep.all_pass() && margin_ok, timer.seconds(),
           "violation margin exactly 1/4 at arrival 3");
}

void criterion_12() {
    Timer timer;
    bool pass = true;
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        SplitMix64 rng(1200 + static_cast<uint64_t>(i));
        int n = 3 + static_cast<int>(rng.below(6));
        Instance inst = gen_random_instance(n, 2 + static_cast<int>(rng.below(9)), std::min(n, 3), 1, 3,
                                            rng.next());
        AlgoSelector sel = kAllAlgos[i % kAllAlgos.size()];
        FractionalTrace trace = run_fractional(sel, inst);

        DistributionTracker tracker(inst.n);
        NegativePairState state(inst.n);
        for (const StepRecord& step : trace.steps) {
            StepSlot p1 = step.a.in_pt() ? step.a : (step.b.in_pt() ? step.b : StepSlot{});
            StepSlot p2 = step.a.in_pt() && step.b.in_pt() ? step.b : StepSlot{};
            bool negative = p2.is_dummy() || tracker.pair_free(p1.node, p2.node) == 0;
            tracker.advance(step, decision_probs_maximal(step, negative));
            update_negative_pairs(state, step);
            for (int a = 0; a < inst.n; ++a)
                for (int b = a + 1; b < inst.n; ++b) {
                    pass = pass && (tracker.pair_free(a, b) == 0) == negativity_query(state, a, b);
                    ++checked;
                }
        }
    }
    report("12 tracker/negative-pair equivalence", pass, timer.seconds(),
           std::to_string(checked) + " pair-time comparisons over 100 maximal traces");
}

// 2^-10-step grid over (a1, a2) with exact b_i from constraint (12); existence
// oracle for the prob-program.
bool grid_search_feasible(const ProbProgramInput& in) {
    const int steps = 1 << 10;
    Rat r1 = 1 - in.x1 - in.p12;
    Rat r2 = 1 - in.x2 - in.p12;
    for (int i = 0; i <= steps; ++i) {
        Rat a1(i, steps);
        Rat b1;
        if (r1 == 0) {
            if (a1 * in.p12 != in.dx1) continue;
            b1 = a1;
        } else {
            b1 = (in.dx1 - a1 * in.p12) / r1;
            if (b1 < a1 || b1 > 1) continue;
        }
        auto floor_steps = [&](const Rat& bound) {
            Rat scaled = bound * steps;
            if (scaled <= 0) return 0;
            BigInt q = numerator(scaled) / denominator(scaled);
            return static_cast<int>(q.convert_to<long long>());
        };
        int j_start = 0;
        if (r2 != 0 && in.p12 > 0) j_start = std::max(j_start, floor_steps((in.dx2 - r2) / in.p12));
        if (b1 > 0) j_start = std::max(j_start, floor_steps(1 - a1 / b1));
        for (int j = j_start; j + i <= steps; ++j) {
            Rat a2(j, steps);
            ProbProgramSolution sol{a1, a2, b1, Rat(0)};
            if (r2 == 0) {
                if (a2 * in.p12 != in.dx2) continue;
                sol.b2 = a2;
            } else {
                sol.b2 = (in.dx2 - a2 * in.p12) / r2;
                if (sol.b2 < sol.a2) break;
            }
            if (check_feasible(sol, in).ok) return true;
        }
    }
    return false;
}

void criterion_13() {
    Timer timer;
    SplitMix64 rng(1313);
    auto random_rat = [&](int bits) {
        uint64_t den = uint64_t{1} << bits;
        return Rat(BigInt(static_cast<long long>(rng.below(den + 1))),
                   BigInt(static_cast<long long>(den)));
    };
    auto random_input = [&]() {
        ProbProgramInput in;
        in.x1 = random_rat(6);
        in.x2 = random_rat(6);
        if (in.x1 == 1) in.x1 = Rat(63, 64);
        if (in.x2 == 1) in.x2 = Rat(63, 64);
        Rat cap = 1 - in.x1 * in.x2;
        in.dx1 = std::min(Rat(cap * random_rat(6)), Rat(1 - in.x1)) * random_rat(6);
        in.dx2 = std::min(Rat(cap - in.dx1), Rat(1 - in.x2)) * random_rat(6);
        in.p12 = (1 - in.x1) * (1 - in.x2) * random_rat(6);
        return in;
    };

    bool pass = true;
    for (int trial = 0; trial < 10000; ++trial) {
        ProbProgramInput in = random_input();
        pass = pass && check_feasible(solve(in), in).ok;
    }
    int grid_hits = 0;
    for (int trial = 0; trial < 60; ++trial) {
        ProbProgramInput in = random_input();
        if (grid_search_feasible(in)) {
            ++grid_hits;
            pass = pass && check_feasible(solve(in), in).ok;
        }
    }
    report("13 prob-program feasibility", pass && grid_hits > 0, timer.seconds(),
           "10^4 random sound inputs exact; grid oracle agreed on " + std::to_string(grid_hits) +
               "/60");
}

}  // namespace

int main() {
    std::printf("acceptance suite: sound/maximal fractional matching, lossless rounding, "
                "low-randomness seeds\n");
    Timer total;
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    criterion_13();
    std::printf("%d criterion check(s) failed (total %.2f s)\n", g_failures, total.seconds());
    return g_failures == 0 ? 0 : 1;
}
