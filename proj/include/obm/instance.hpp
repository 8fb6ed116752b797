#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "obm/rational.hpp"

namespace obm {

// An online bipartite matching instance: n offline nodes with positive
// rational weights, and an ordered list of arrivals, each a list of distinct
// offline neighbor indices. The arrival order is the online order and is
// immutable once the instance is built.
struct Instance {
    int n = 0;
    std::vector<Rat> weights;
    std::vector<std::vector<int>> arrivals;

    int num_arrivals() const { return static_cast<int>(arrivals.size()); }

    // Throws ObmError if any structural invariant is violated.
    void validate() const;
};

// A (partial) matching as (offline index, arrival index) pairs; each side has
// degree at most one.
struct Matching {
    std::vector<std::pair<int, int>> edges;

    Rat weight(const Instance& inst) const;
    void validate(const Instance& inst) const;
};

struct ParseError : ObmError {
    int line;
    ParseError(int line_, const std::string& msg)
        : ObmError("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// OBMI v1 text format:
//   line 1        OBMI v1
//   line 2        n
//   line 3        n space-separated weights, integer or p/q
//   line 4        T
//   lines 5..4+T  space-separated 0-based neighbor indices (may be empty)
Instance parse_instance(std::istream& in);
Instance parse_instance_string(const std::string& text);
Instance load_instance(const std::string& path);

std::string serialize_instance(const Instance& inst);

// The hard instance for the water-level algorithm: n = 3^k offline nodes,
// k rounds of triple arrivals over the active set followed by one singleton
// arrival per surviving active node. Active nodes all carry equal degree, so
// the documented lowest-index tie-breaking raises the two lowest-indexed
// members of each triple and strands the highest-indexed one. The instance
// admits a perfect matching of value 3^k.
Instance gen_adversarial_waterlevel(int k);

// Per-arrival fractional values (node, x_{node,t}) for hand-built fractional
// matchings that are not produced by one of the online algorithms.
struct EdgeValues {
    std::vector<std::vector<std::pair<int, Rat>>> per_arrival;
};

// The two-arrival-plus-probe example showing that sound rounding constraints
// are necessary: arrivals {0,1} and {2,3} at value 1/2 each, then a third
// arrival adjacent to one node of each pair. The returned assignment gives
// every listed edge value 1/2 and violates soundness at the third arrival.
std::pair<Instance, EdgeValues> gen_example_impossible();

// One graph of the three-choice counterexample distribution, for a choice
// vector c in {0,1}^3 selecting one node of each offline pair as the shared
// neighbor of online nodes 4 and 5.
struct WeightedGraphSample {
    Instance instance;
    EdgeValues values;
    Rat probability;
};

// The eight equiprobable graphs of the three-choice counterexample, with the
// fixed fractional values 1/2, 7/24 and 6965/41472.
std::vector<WeightedGraphSample> gen_three_choice_counterexample();

// Deterministic pseudo-random instance: arrivals draw between 0 and
// max_degree distinct neighbors; weights are uniform integers in
// [weight_lo, weight_hi].
Instance gen_random_instance(int n, int T, int max_degree, long long weight_lo,
                             long long weight_hi, uint64_t seed);

// Exact maximum-weight matching of the full offline-known graph. Offline
// weights make the matchable offline sets a transversal matroid, so greedy by
// weight with augmenting-path feasibility tests is exact.
std::pair<Rat, Matching> max_weight_matching(const Instance& inst);

}  // namespace obm
