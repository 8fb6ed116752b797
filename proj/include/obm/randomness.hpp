#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "obm/fractional.hpp"
#include "obm/prng.hpp"
#include "obm/rational.hpp"

namespace obm {

// --- GF(2^s) helpers ---------------------------------------------------------

// Lexicographically first irreducible polynomial of degree s over GF(2),
// encoded with bit i = coefficient of x^i (bit s always set). s <= 32.
uint64_t find_irreducible_poly(int s);

uint64_t gf2x_mulmod(uint64_t a, uint64_t b, uint64_t poly, int s);

// --- small-bias spaces --------------------------------------------------------

// m vectors over GF(2)^h, any k of them linearly independent, from powers
// beta^1, beta^3, ..., beta^(2*tau-1) of m distinct nonzero field elements
// (the rows of a BCH parity check matrix). k is rounded up to even,
// tau = k/2, h = tau * ceil(log2(m+1)).
struct KwiseVectors {
    int m = 0, k = 0, q = 0, tau = 0, h = 0;
    std::vector<std::vector<uint64_t>> rows;  // m x words(h)
};
KwiseVectors bch_kwise_vectors(int m, int k);

// (delta, k)-dependent space over m binary variables: x_i = <v_i, r> with r
// either uniform over GF(2)^h (eps = 0; k-wise independent, seed_bits = h) or
// drawn from the quadratic "powering" eps-biased family over GF(2^s) with
// s = ceil(log2(h/eps)) and seed_bits = 2s. delta = 2^(k/2) * eps.
struct SmallBiasSpace {
    int m = 0;
    int k = 0;  // dependence order (even)
    Rat eps, delta;
    int h = 0;
    int q = 0, tau = 0;
    std::vector<std::vector<uint64_t>> vectors;
    int s = 0;          // powering field degree; 0 in uniform mode
    uint64_t poly = 0;  // field polynomial in powering mode
    int seed_bits = 0;
    std::string construction;  // "uniform" or "powering-v1"
};

SmallBiasSpace make_small_bias_space(int m, int k, const Rat& eps);

// The eps-biased string r(alpha, beta) in GF(2)^h with r_j = <alpha^j, beta>.
std::vector<uint64_t> eps_biased_string(const SmallBiasSpace& space, uint64_t alpha, uint64_t beta);

// Bit assignment x_1..x_m for an explicit seed: powering mode takes
// {alpha, beta}, uniform mode the h seed words.
std::vector<uint64_t> sample_delta_k(const SmallBiasSpace& space, const std::vector<uint64_t>& seed);

// Assignment for a uniformly drawn seed.
std::vector<uint64_t> draw_assignment(const SmallBiasSpace& space, SplitMix64& rng);

// --- exhaustive verification ---------------------------------------------------

// Distribution over GF(2)^m as a list of equiprobable sample points.
struct ExplicitDist {
    int m = 0;
    std::vector<uint32_t> atoms;
};

// Enumerates every seed of the space; m <= 32 and seed_bits <= 24 guards.
ExplicitDist enumerate_space(const SmallBiasSpace& space);

// | Pr[parity over S = 0] - Pr[parity = 1] |.
Rat bias_of_subset(const ExplicitDist& dist, uint32_t subset_mask);

struct DeltaKReport {
    bool pass = true;
    Rat worst_tv;
    uint32_t worst_subset = 0;
    bool spot_check_pass = true;  // planted k-variable events stay within delta
};

// Checks sum_v |Pr[Y_I = v] - 2^-|I|| <= delta for every subset of at most k
// variables.
DeltaKReport verify_delta_k(const ExplicitDist& dist, int k, const Rat& delta);

// 1 iff the b-bit value is below a; Pr = a/2^b under uniform bits.
int bernoulli_from_bits(uint64_t value, uint64_t a, int b);

// --- randomness sources ---------------------------------------------------------

struct SeedAccounting {
    std::string kind;  // "iid" | "kwise" | "smallbias"
    int m = 0;
    int kprime = 0;
    Rat eps, delta;
    int h = 0;
    int seed_bits = 0;
    std::string construction;
};

// Randomness for the rounding engines. IID mode draws exact-probability
// Bernoullis from a bit stream; the bounded-independence modes precompute one
// assignment of m = 2*b*T binary variables and serve b-bit coin slots, two
// per arrival (A then B, allocated whether or not consumed).
class RandomSource {
  public:
    enum class Kind { IID, KWise, SmallBias };

    static RandomSource iid(uint64_t seed);
    static RandomSource kwise(int kprime, int b, int num_arrivals, uint64_t seed);
    static RandomSource smallbias(const Rat& delta, int kprime, int b, int num_arrivals, uint64_t seed);
    // Reuses a prebuilt space across trials; only the seed varies.
    static RandomSource from_shared_space(std::shared_ptr<const SmallBiasSpace> space, int b,
                                          int num_arrivals, uint64_t seed, Kind kind);

    Kind kind() const { return kind_; }
    bool slot_based() const { return kind_ != Kind::IID; }
    int slot_bits() const { return b_; }

    bool bernoulli(const Rat& p);                     // IID only
    int categorical3(const Rat& p0, const Rat& p1);   // IID only

    // b-bit block of slot (t, role); role 0 = A (both free), 1 = B (sole free).
    uint64_t slot_value(int t, int role);

    uint64_t bits_consumed() const;
    SeedAccounting accounting() const;

  private:
    RandomSource(Kind kind, uint64_t seed);

    Kind kind_;
    int b_ = 0;
    int num_arrivals_ = 0;
    BitStream bits_;
    std::shared_ptr<const SmallBiasSpace> space_;
    std::vector<uint64_t> assignment_;
    uint64_t fixed_seed_bits_ = 0;
};

// --- seed budget and dependency accounting --------------------------------------

struct SeedBudgetReport {
    int n = 0, k = 0, b = 0;
    Rat delta, eps;
    int m = 0, kprime = 0, h = 0, seed_bits = 0;
    double log2log2_m = 0, constant_C = 0;
    bool within_budget = false;  // C <= 8
};

// Builds the small-bias space sized for a k-level b-bit run on n offline
// nodes (m = 2*b*n*k variables, dependence order k' = b*2^(k+2)) and reports
// the measured constant C in seed_bits <= log2 log2 m + C*(k' + log2(1/delta)).
SeedBudgetReport seed_budget(int n, int k, int b, const Rat& delta);

struct DependencyReport {
    bool pass = true;
    int max_edge_slots = 0;
    int edge_bound = 0;  // 2^(k+2)
    std::vector<int> max_free_slots_per_level;
    std::vector<int> level_bound;  // 2^(l+1) - 2
    std::vector<std::string> violations;
};

// Counts, per matched-edge event of a maximal k-level trace, the coin slots
// the event depends on, following the free-status recursion
// F_{i,t+1} = F_i (F_j !A + !F_j !B); constant-threshold coins contribute
// nothing. Asserts the 2^(k+2) edge bound and the 2^(l+1)-2 level bound.
DependencyReport dependency_tracker(const FractionalTrace& trace, const LevelTable& table);

}  // namespace obm
