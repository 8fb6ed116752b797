#pragma once

#include <map>
#include <string>
#include <vector>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/probprogram.hpp"
#include "obm/randomness.hpp"
#include "obm/rational.hpp"

namespace obm {

// Exact joint distribution of the matched-status vector over offline nodes,
// evolved deterministically alongside a rounding run. Keys are bitmasks of
// matched nodes; zero-probability entries are pruned. Exponential in the
// number of touched nodes, hence the n <= 20 desk-scale limit.
class DistributionTracker {
  public:
    explicit DistributionTracker(int n);

    int n() const { return n_; }
    int time() const { return t_; }

    Rat free_prob(uint32_t node_set) const;  // Pr[all nodes in set free]
    Rat pair_free(int i, int j) const;
    Rat matched_prob(int i) const;

    // Pr[F_I] for every I as a dense table of size 2^n (n <= 16 guard).
    std::vector<Rat> all_free_probs() const;

    const std::map<uint32_t, Rat>& states() const { return states_; }
    std::map<std::string, std::string> dump() const;  // subset -> "p/q"

    void advance(const StepRecord& step, const struct DecisionProbs& probs);

  private:
    int n_;
    int t_ = 0;
    std::map<uint32_t, Rat> states_;
};

// Matching probabilities for one arrival over the rounding pair (P_t padded
// with dummies): a1/a2 when both free (choose pair-slot 1 vs 2), s1/s2 when
// only that slot is free.
struct DecisionProbs {
    int t = 0;
    StepSlot p1, p2;
    Rat a1, a2, s1, s2;
};

// General (sound-trace) engine: probabilities from the prob-program with the
// tracker-supplied p12.
DecisionProbs decision_probs_general(const StepRecord& step, const Rat& p12);

// Maximal engine: negative pair matches its sole free slot with probability
// dx/(1-x); an independent pair matches a lone free slot outright and breaks
// a both-free tie with the closed-form a1.
DecisionProbs decision_probs_maximal(const StepRecord& step, bool pair_negative);

void tracker_update(DistributionTracker& tracker, const StepRecord& step, const DecisionProbs& probs);

// Strictly-negative pair bookkeeping of the maximal engine: S[i] holds the
// partners j that can no longer be simultaneously free with i, plus the set
// of nodes at degree 1. O(n) work per arrival.
class NegativePairState {
  public:
    explicit NegativePairState(int n);

    int n() const { return n_; }
    bool strictly_negative(int i, int j) const { return s_[i][j] != 0; }
    bool at_one(int i) const { return at_one_[i] != 0; }
    const std::vector<char>& partners(int i) const { return s_[i]; }
    uint64_t ops() const { return ops_; }  // touched entries, for the O(n) check

    void apply(const StepRecord& step);

  private:
    friend void update_negative_pairs(NegativePairState&, const StepRecord&);
    int n_;
    std::vector<std::vector<char>> s_;
    std::vector<char> at_one_;
    uint64_t ops_ = 0;
};

// negative iff x_i = 1 or x_j = 1 or {i,j} is strictly negative.
bool negativity_query(const NegativePairState& state, int i, int j);

void update_negative_pairs(NegativePairState& state, const StepRecord& step);

// Per-arrival decision probabilities are a deterministic function of the
// trace; precomputing them once lets Monte-Carlo trials replay cheaply.
std::vector<DecisionProbs> general_decision_plan(const FractionalTrace& trace);  // n <= 20
std::vector<DecisionProbs> maximal_decision_plan(const FractionalTrace& trace);

Matching sample_with_plan(const std::vector<DecisionProbs>& plan, RandomSource& source);

// Online lossless rounding of a sound trace; requires the exact tracker for
// p12, so n <= 20. Matches each edge with probability exactly x_{i,t}.
Matching round_general(const FractionalTrace& trace, RandomSource& source);

// Online lossless rounding of a maximal trace in O(n) per arrival.
Matching round_maximal(const FractionalTrace& trace, RandomSource& source);

enum class Engine { General, Maximal };

// Tracker-only pass (no sampling): exact Pr[(i,t) in M] per edge of P_t.
std::vector<std::vector<std::pair<int, Rat>>> exact_marginals(const FractionalTrace& trace, Engine engine);

std::string matching_to_json(const Matching& m);

}  // namespace obm
