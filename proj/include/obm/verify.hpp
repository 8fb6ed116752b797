#pragma once

#include <string>
#include <vector>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/rounding.hpp"

namespace obm {

struct CheckResult {
    std::string name;
    bool pass = true;
    std::string worst_deviation;  // exact rational or float, as text
    std::string counterexample;   // payload when failing
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    bool all_pass() const;
    void add(const std::string& name, bool pass, const std::string& dev = "",
             const std::string& counter = "");
    std::string to_json() const;
    // CSV columns: check, instance, engine, worst_dev, pass
    std::string to_csv(const std::string& instance_label, const std::string& engine_label) const;
};

struct EdgeStat {
    int t = 0;
    int node = 0;
    Rat exact;
    uint64_t hits = 0;
    double mean = 0;
    double stderr_ = 0;        // binomial, from the empirical mean
    double stderr_exact = 0;   // binomial, from the exact marginal

    // 4-sigma acceptance band around the exact value, widened by shift for
    // biased sources; the wider of the two stderrs keeps the band meaningful
    // when one side degenerates at 0 or 1.
    bool within_band(double shift = 0.0) const;
};

enum class SourceKind { IID, KWise, SmallBias };

struct MonteCarloConfig {
    Engine engine = Engine::Maximal;
    SourceKind rng = SourceKind::IID;
    Rat delta = Rat(1, 8);  // SmallBias only
    int kprime = 0;         // KWise/SmallBias dependence order
    int b = 2;              // slot width for bounded-independence sources
    int trials = 1000;
    uint64_t master_seed = 1;
    int jobs = 1;
};

// Empirical per-edge matching frequencies with binomial standard errors.
// Trial i uses derive_seed(master_seed, i); results do not depend on jobs.
std::vector<EdgeStat> monte_carlo_marginals(const FractionalTrace& trace, const MonteCarloConfig& cfg);

// Exhaustive distribution checks at every arrival: exact marginals, and per
// engine the product-or-zero / negativity-monotonicity / independent-set
// factorization (maximal) or FKG (general, n <= 6) invariants. n <= 8.
VerificationReport sweep_invariants(const FractionalTrace& trace, Engine engine);

// The soundness-violation walkthrough: reports the arrival-3 violation of
// margin exactly 1/4 and the coupling bound showing some pair of offline
// nodes must be jointly matched with probability at least 1/4.
VerificationReport impossibility_demo();

struct ThreeChoiceGap {
    Rat fractional_value;     // 60533/13824
    Rat greedy_expectation;   // 35/8
    Rat gap;                  // 53/13824
    VerificationReport report;
};

// Exact evaluation of the three-choice counterexample: the fractional value
// strictly exceeds the best achievable expected matching size.
ThreeChoiceGap three_choice_gap();

// sum_{i in I} x_{i,t} <= 1 - prod_{i in I} x_i^(t) for every I within P_t,
// every arrival; |P_t| <= 8.
VerificationReport condition17_check(const Instance& inst, const EdgeValues& values);

}  // namespace obm
