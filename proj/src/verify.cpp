#include "obm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "obm/prng.hpp"
#include "obm/randomness.hpp"

namespace obm {

bool VerificationReport::all_pass() const {
    for (const CheckResult& c : checks)
        if (!c.pass) return false;
    return true;
}

void VerificationReport::add(const std::string& name, bool pass, const std::string& dev,
                             const std::string& counter) {
    checks.push_back({name, pass, dev, counter});
}

bool EdgeStat::within_band(double shift) const {
    double sigma = std::max(stderr_, stderr_exact);
    return std::abs(mean - to_double(exact)) <= shift + 4.0 * sigma + 1e-12;
}

std::string VerificationReport::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const CheckResult& c : checks) {
        nlohmann::ordered_json rec;
        rec["check"] = c.name;
        rec["pass"] = c.pass;
        rec["worst_deviation"] = c.worst_deviation;
        if (!c.counterexample.empty()) rec["counterexample"] = c.counterexample;
        arr.push_back(rec);
    }
    nlohmann::ordered_json out;
    out["all_pass"] = all_pass();
    out["checks"] = arr;
    return out.dump(2);
}

std::string VerificationReport::to_csv(const std::string& instance_label,
                                       const std::string& engine_label) const {
    std::ostringstream out;
    out << "check,instance,engine,worst_dev,pass\n";
    for (const CheckResult& c : checks)
        out << c.name << ',' << instance_label << ',' << engine_label << ',' << c.worst_deviation
            << ',' << (c.pass ? "1" : "0") << "\n";
    return out.str();
}

std::vector<EdgeStat> monte_carlo_marginals(const FractionalTrace& trace, const MonteCarloConfig& cfg) {
    if (cfg.trials < 1) throw ObmError("monte_carlo_marginals: trials must be >= 1");
    std::vector<DecisionProbs> plan = cfg.engine == Engine::Maximal ? maximal_decision_plan(trace)
                                                                    : general_decision_plan(trace);

    std::vector<EdgeStat> stats;
    for (const DecisionProbs& probs : plan) {
        for (const StepSlot* slot : {&probs.p1, &probs.p2}) {
            if (slot->is_dummy() || slot->delta == 0) continue;
            EdgeStat st;
            st.t = probs.t;
            st.node = slot->node;
            st.exact = slot->delta;
            stats.push_back(st);
        }
    }

    // One shared space for bounded-independence sources; per-trial seeds only.
    std::shared_ptr<const SmallBiasSpace> space;
    int T = trace.instance.num_arrivals();
    if (cfg.rng != SourceKind::IID) {
        Rat eps = 0;
        int k_even = cfg.kprime + (cfg.kprime & 1);
        if (cfg.rng == SourceKind::SmallBias) eps = cfg.delta / pow2(static_cast<unsigned>(k_even / 2));
        space = std::make_shared<SmallBiasSpace>(make_small_bias_space(2 * cfg.b * T, cfg.kprime, eps));
        if (cfg.engine != Engine::Maximal)
            throw ObmError("monte_carlo_marginals: bounded-independence sources drive the maximal engine");
    }

    int jobs = std::max(1, cfg.jobs);
    std::vector<std::vector<uint64_t>> partial(jobs, std::vector<uint64_t>(stats.size(), 0));
    auto run_range = [&](int job, int lo, int hi) {
        std::vector<uint64_t>& hits = partial[job];
        for (int trial = lo; trial < hi; ++trial) {
            uint64_t seed = derive_seed(cfg.master_seed, static_cast<uint64_t>(trial));
            RandomSource source =
                cfg.rng == SourceKind::IID
                    ? RandomSource::iid(seed)
                    : RandomSource::from_shared_space(space, cfg.b, T, seed,
                                                      cfg.rng == SourceKind::KWise
                                                          ? RandomSource::Kind::KWise
                                                          : RandomSource::Kind::SmallBias);
            Matching m = sample_with_plan(plan, source);
            std::set<std::pair<int, int>> edges(m.edges.begin(), m.edges.end());
            for (size_t e = 0; e < stats.size(); ++e)
                if (edges.count({stats[e].node, stats[e].t})) ++hits[e];
        }
    };

    if (jobs == 1) {
        run_range(0, 0, cfg.trials);
    } else {
        std::vector<std::thread> threads;
        int chunk = (cfg.trials + jobs - 1) / jobs;
        for (int j = 0; j < jobs; ++j) {
            int lo = j * chunk, hi = std::min(cfg.trials, (j + 1) * chunk);
            if (lo >= hi) break;
            threads.emplace_back(run_range, j, lo, hi);
        }
        for (auto& th : threads) th.join();
    }

    for (size_t e = 0; e < stats.size(); ++e) {
        uint64_t hits = 0;
        for (int j = 0; j < jobs; ++j) hits += partial[j][e];
        stats[e].hits = hits;
        double p = static_cast<double>(hits) / cfg.trials;
        double px = to_double(stats[e].exact);
        stats[e].mean = p;
        stats[e].stderr_ = std::sqrt(p * (1.0 - p) / cfg.trials);
        stats[e].stderr_exact = std::sqrt(px * (1.0 - px) / cfg.trials);
    }
    return stats;
}

namespace {

std::string subset_to_string(uint32_t mask, int n) {
    std::string s = "{";
    for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) s += (s.size() > 1 ? "," : "") + std::to_string(i);
    return s + "}";
}

}  // namespace

VerificationReport sweep_invariants(const FractionalTrace& trace, Engine engine) {
    VerificationReport rep;
    int n = trace.instance.n;
    if (n > 8) throw ObmError("sweep_invariants: exhaustive subset checks need n <= 8");

    auto feas = check_trace_feasible(trace);
    rep.add("trace-feasible", feas.pass, "", feas.detail);
    auto sound = check_sound(trace);
    rep.add("sound", sound.pass, "", sound.detail);
    if (engine == Engine::Maximal) {
        auto maxi = check_maximal(trace);
        rep.add("maximal", maxi.pass, "", maxi.detail);
        if (!maxi.pass || !sound.pass) return rep;  // validators gate the invariant sweep
    } else if (!sound.pass) {
        return rep;
    }

    size_t full = size_t{1} << n;
    DistributionTracker tracker(n);
    std::vector<Rat> deg(n, Rat(0));
    std::vector<char> was_negative(full, 0);

    bool marginals_ok = true, poz_ok = true, fkg_ok = true, mono_ok = true, fact_ok = true;
    std::string marg_bad, poz_bad, fkg_bad, mono_bad, fact_bad;
    Rat min_fkg_slack(1);  // tightest margin seen; negative would be a violation

    bool do_fkg = engine == Engine::General && n <= 6;

    for (const StepRecord& step : trace.steps) {
        DecisionProbs probs;
        if (engine == Engine::General) {
            StepSlot p1 = step.a.in_pt() ? step.a : (step.b.in_pt() ? step.b : StepSlot{});
            StepSlot p2 = step.a.in_pt() && step.b.in_pt() ? step.b : StepSlot{};
            Rat p12 = p2.is_dummy() ? Rat(0) : tracker.pair_free(p1.node, p2.node);
            probs = decision_probs_general(step, p12);
        } else {
            StepSlot p1 = step.a.in_pt() ? step.a : (step.b.in_pt() ? step.b : StepSlot{});
            StepSlot p2 = step.a.in_pt() && step.b.in_pt() ? step.b : StepSlot{};
            bool negative = p2.is_dummy() || tracker.pair_free(p1.node, p2.node) == 0;
            probs = decision_probs_maximal(step, negative);
        }
        tracker.advance(step, probs);
        for (const StepSlot* slot : {&step.a, &step.b})
            if (!slot->is_dummy()) deg[slot->node] += slot->delta;

        std::vector<Rat> free = tracker.all_free_probs();
        std::vector<Rat> prod(full, Rat(1));
        for (size_t mask = 1; mask < full; ++mask) {
            int low = std::countr_zero(mask);
            prod[mask] = prod[mask ^ (size_t{1} << low)] * (1 - deg[low]);
        }

        for (int i = 0; i < n && marginals_ok; ++i) {
            if (free[size_t{1} << i] != 1 - deg[i]) {
                marginals_ok = false;
                marg_bad = "t=" + std::to_string(step.t) + " node " + std::to_string(i) + ": Pr[free]=" +
                           rat_to_string(free[size_t{1} << i]) + " vs 1-x=" + rat_to_string(1 - deg[i]);
            }
        }

        if (engine == Engine::Maximal) {
            for (size_t mask = 1; mask < full; ++mask) {
                if (poz_ok && free[mask] != 0 && free[mask] != prod[mask]) {
                    poz_ok = false;
                    poz_bad = "t=" + std::to_string(step.t) + " I=" + subset_to_string(mask, n) +
                              ": Pr=" + rat_to_string(free[mask]) + " vs prod=" + rat_to_string(prod[mask]);
                }
                bool negative_now = free[mask] == 0;
                if (mono_ok && was_negative[mask] && !negative_now) {
                    mono_ok = false;
                    mono_bad = "t=" + std::to_string(step.t) + " I=" + subset_to_string(mask, n) +
                               " lost negativity";
                }
                if (mono_ok && negative_now) {
                    for (int j = 0; j < n; ++j) {
                        size_t sup = mask | (size_t{1} << j);
                        if (free[sup] != 0) {
                            mono_ok = false;
                            mono_bad = "t=" + std::to_string(step.t) + " superset of " +
                                       subset_to_string(mask, n) + " not negative";
                            break;
                        }
                    }
                }
                was_negative[mask] = negative_now ? 1 : 0;
            }
            // Independent sets factorize over every (free, matched) split.
            for (size_t mask = 1; mask < full && fact_ok; ++mask) {
                if (free[mask] == 0 || free[mask] != prod[mask]) continue;
                for (size_t k_sub = mask;; k_sub = (k_sub - 1) & mask) {
                    size_t j_sub = mask ^ k_sub;
                    Rat want = 1;
                    for (int i = 0; i < n; ++i) {
                        if (k_sub & (size_t{1} << i)) want *= 1 - deg[i];
                        if (j_sub & (size_t{1} << i)) want *= deg[i];
                    }
                    Rat got = 0;
                    for (const auto& [matched_mask, p] : tracker.states())
                        if ((matched_mask & k_sub) == 0 && (matched_mask & j_sub) == j_sub) got += p;
                    if (got != want) {
                        fact_ok = false;
                        fact_bad = "t=" + std::to_string(step.t) + " I=" + subset_to_string(mask, n) +
                                   " split K=" + subset_to_string(k_sub, n) + ": Pr=" + rat_to_string(got) +
                                   " vs " + rat_to_string(want);
                        break;
                    }
                    if (k_sub == 0) break;
                }
            }
        }

        if (do_fkg && fkg_ok) {
            // Pr[F_{K+i}] Pr[F_J] <= Pr[F_{J+i}] Pr[F_K] for all J subset K, i outside K.
            for (int i = 0; i < n && fkg_ok; ++i) {
                size_t bit = size_t{1} << i;
                for (size_t k_mask = 0; k_mask < full && fkg_ok; ++k_mask) {
                    if (k_mask & bit) continue;
                    if (free[k_mask] == 0) continue;
                    for (size_t j_mask = k_mask;; j_mask = (j_mask - 1) & k_mask) {
                        Rat lhs = free[k_mask | bit] * free[j_mask];
                        Rat rhs = free[j_mask | bit] * free[k_mask];
                        if (lhs > rhs) {
                            fkg_ok = false;
                            fkg_bad = "t=" + std::to_string(step.t) + " i=" + std::to_string(i) +
                                      " J=" + subset_to_string(j_mask, n) + " K=" + subset_to_string(k_mask, n);
                            break;
                        }
                        Rat slack = rhs - lhs;
                        if (slack < min_fkg_slack) min_fkg_slack = slack;
                        if (j_mask == 0) break;
                    }
                }
            }
        }
    }

    rep.add("marginals-exact", marginals_ok, "", marg_bad);
    if (engine == Engine::Maximal) {
        rep.add("product-or-zero", poz_ok, "", poz_bad);
        rep.add("negativity-monotone", mono_ok, "", mono_bad);
        rep.add("independent-factorization", fact_ok, "", fact_bad);
    }
    if (do_fkg) rep.add("fkg", fkg_ok, rat_to_string(min_fkg_slack), fkg_bad);
    return rep;
}

VerificationReport impossibility_demo() {
    VerificationReport rep;
    auto [inst, values] = gen_example_impossible();
    FractionalTrace trace = trace_from_values(inst, values);

    auto sound = check_sound(trace);
    bool at_third = !sound.pass && sound.violations.size() == 1 && sound.violations[0] == 2;
    // Margin at the probe arrival: sum(dx) - (1 - x_i * x_j) = 1 - 3/4.
    Rat margin = (Rat(1, 2) + Rat(1, 2)) - (1 - Rat(1, 2) * Rat(1, 2));
    rep.add("soundness-violated-at-arrival-3", at_third && margin == Rat(1, 4), rat_to_string(margin),
            sound.detail);

    // Lossless rounding would match each of the first two arrivals with
    // probability one.
    bool first_two = true;
    for (int t = 0; t < 2; ++t) {
        Rat sum = 0;
        for (const auto& [node, v] : values.per_arrival[t]) sum += v;
        if (sum != 1) first_two = false;
    }
    rep.add("first-two-arrivals-matched-w.p.-1", first_two);

    // Couplings of the first two (forced) matches form a one-parameter family
    //   Pr[0 and 2 matched] = q, Pr[0,3] = 1/2 - q, Pr[1,2] = 1/2 - q,
    //   Pr[1,3] = q.  Some pair is jointly matched w.p. >= 1/4 for every q,
    //   and the best coupling achieves exactly 1/4.
    bool every_coupling = true;
    Rat best_min = 0;
    for (int num = 0; num <= 32; ++num) {
        Rat q(num, 64);
        Rat other = Rat(1, 2) - q;
        Rat worst_pair = std::max(q, other);
        Rat min_pair = std::min(q, other);
        if (worst_pair < Rat(1, 4)) every_coupling = false;
        if (min_pair > best_min) best_min = min_pair;
    }
    rep.add("some-pair-jointly-matched-geq-1/4", every_coupling && best_min == Rat(1, 4),
            rat_to_string(best_min));
    return rep;
}

namespace {

// Matched count among arrivals 3 and 4 under one fixed greedy policy for the
// pair arrivals; the tie-breaking of arrivals 3 and 4 themselves is branched
// exhaustively and must not change the count.
int greedy_late_matches(const Instance& inst, int policy) {
    int result = -1;
    std::function<void(int, uint32_t, int)> walk = [&](int t, uint32_t matched, int late) {
        if (t == inst.num_arrivals()) {
            if (result < 0) result = late;
            if (result != late)
                throw ObmError("three_choice_gap: late tie-breakings change the matched count");
            return;
        }
        std::vector<int> free_nb;
        for (int u : inst.arrivals[t])
            if (!(matched & (1u << u))) free_nb.push_back(u);
        if (free_nb.empty()) {
            walk(t + 1, matched, late);
        } else if (t < 3) {
            // Greedy matches one node of the pair, per the policy bit.
            int u = 2 * t + ((policy >> t) & 1);
            walk(t + 1, matched | (1u << u), late);
        } else {
            for (int u : free_nb) walk(t + 1, matched | (1u << u), late + 1);
        }
    };
    walk(0, 0, 0);
    return result;
}

}  // namespace

ThreeChoiceGap three_choice_gap() {
    ThreeChoiceGap out;
    auto family = gen_three_choice_counterexample();

    Rat prob_total = 0;
    out.fractional_value = 0;
    for (const auto& arrivals : family[0].values.per_arrival)
        for (const auto& [node, v] : arrivals) out.fractional_value += v;

    // Every deterministic greedy policy has the same expectation over the
    // eight graphs; exhausting the policies removes the modeling choice.
    Rat expectation = 0;
    bool policies_agree = true;
    bool cond17_all = true;
    for (int policy = 0; policy < 8; ++policy) {
        Rat exp_p = 0;
        for (const auto& sample : family)
            exp_p += sample.probability * (3 + greedy_late_matches(sample.instance, policy));
        if (policy == 0)
            expectation = exp_p;
        else if (exp_p != expectation)
            policies_agree = false;
    }
    for (const auto& sample : family) {
        prob_total += sample.probability;
        if (!condition17_check(sample.instance, sample.values).all_pass()) cond17_all = false;
    }
    out.greedy_expectation = expectation;
    out.gap = out.fractional_value - out.greedy_expectation;
    out.report.add("greedy-policies-agree", policies_agree);

    out.report.add("probabilities-sum-to-1", prob_total == 1, rat_to_string(prob_total));
    out.report.add("t5-value-closed-form",
                   Rat(6965, 41472) == (1 - Rat(19, 24) * Rat(19, 24) * Rat(19, 24)) / 3);
    out.report.add("fractional-value", out.fractional_value == Rat(60533, 13824),
                   rat_to_string(out.fractional_value));
    out.report.add("greedy-expectation", out.greedy_expectation == Rat(35, 8),
                   rat_to_string(out.greedy_expectation));
    out.report.add("condition-17-holds", cond17_all);
    out.report.add("gap-positive", out.gap == Rat(53, 13824) && out.gap > 0, rat_to_string(out.gap));
    return out;
}

VerificationReport condition17_check(const Instance& inst, const EdgeValues& values) {
    VerificationReport rep;
    if (values.per_arrival.size() != inst.arrivals.size())
        throw ObmError("condition17_check: arrival count mismatch");
    std::vector<Rat> deg(inst.n, Rat(0));
    bool ok = true;
    std::string bad;
    Rat worst_slack(1);
    for (size_t t = 0; t < values.per_arrival.size(); ++t) {
        const auto& pt = values.per_arrival[t];
        if (pt.size() > 8) throw ObmError("condition17_check: |P_t| > 8");
        for (uint32_t sub = 1; sub < (1u << pt.size()); ++sub) {
            Rat sum = 0, prod = 1;
            for (size_t j = 0; j < pt.size(); ++j) {
                if (!(sub & (1u << j))) continue;
                sum += pt[j].second;
                prod *= deg[pt[j].first];
            }
            Rat slack = (1 - prod) - sum;
            if (slack < worst_slack) worst_slack = slack;
            if (slack < 0 && ok) {
                ok = false;
                bad = "t=" + std::to_string(t) + " subset #" + std::to_string(sub) + ": sum " +
                      rat_to_string(sum) + " > " + rat_to_string(1 - prod);
            }
        }
        for (const auto& [node, v] : pt) deg[node] += v;
    }
    rep.add("condition-17", ok, rat_to_string(worst_slack), bad);
    return rep;
}

}  // namespace obm
