#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/randomness.hpp"

using namespace obm;

namespace {

// GF(2) rank by Gaussian elimination over packed rows.
int gf2_rank(std::vector<std::vector<uint64_t>> rows) {
    int rank = 0;
    size_t words = rows.empty() ? 0 : rows[0].size();
    for (size_t col = 0; col < words * 64; ++col) {
        size_t pivot = rank;
        while (pivot < rows.size() && !((rows[pivot][col / 64] >> (col % 64)) & 1)) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[rank], rows[pivot]);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (r != static_cast<size_t>(rank) && ((rows[r][col / 64] >> (col % 64)) & 1))
                for (size_t w = 0; w < words; ++w) rows[r][w] ^= rows[rank][w];
        }
        ++rank;
        if (rank == static_cast<int>(rows.size())) break;
    }
    return rank;
}

}  // namespace

TEST_CASE("irreducible polynomials") {
    for (int s = 1; s <= 16; ++s) {
        uint64_t f = find_irreducible_poly(s);
        CHECK((f >> s) == 1);  // degree exactly s
        if (s > 1) CHECK((f & 1) == 1);
    }
    CHECK(find_irreducible_poly(2) == 0b111);   // x^2 + x + 1
    CHECK(find_irreducible_poly(3) == 0b1011);  // x^3 + x + 1
    // Field sanity: x * x^(2^s - 2) = 1 in GF(2^s).
    int s = 8;
    uint64_t poly = find_irreducible_poly(s);
    uint64_t inv = 2;
    for (int i = 0; i < (1 << s) - 3; ++i) inv = gf2x_mulmod(inv, 2, poly, s);
    CHECK(gf2x_mulmod(2, inv, poly, s) == 1);
}

TEST_CASE("bch vectors: pairwise independence means distinct and nonzero") {
    KwiseVectors v = bch_kwise_vectors(4, 2);
    CHECK(v.tau == 1);
    std::set<uint64_t> seen;
    for (const auto& row : v.rows) {
        CHECK(row[0] != 0);
        CHECK(seen.insert(row[0]).second);
    }
}

TEST_CASE("bch vectors: every 4-subset is linearly independent for k = 4") {
    for (int m : {16, 64}) {
        KwiseVectors v = bch_kwise_vectors(m, 4);
        if (m == 16) CHECK(v.h <= 2 * 4 + 4);  // (k/2) log2 m plus a small constant
        bool all_independent = true;
        for (int a = 0; a < m && all_independent; ++a)
            for (int b = a + 1; b < m && all_independent; ++b)
                for (int c = b + 1; c < m && all_independent; ++c)
                    for (int d = c + 1; d < m; ++d)
                        if (gf2_rank({v.rows[a], v.rows[b], v.rows[c], v.rows[d]}) != 4) {
                            all_independent = false;
                            break;
                        }
        CHECK(all_independent);
    }
}

TEST_CASE("bch vectors: m = 1") {
    KwiseVectors v = bch_kwise_vectors(1, 2);
    CHECK(v.rows.size() == 1);
    CHECK(v.rows[0][0] != 0);
}

TEST_CASE("eps-biased space: exhaustive bias check at h = 8") {
    // Vectors with h = 8 come from m <= 15, k = 4 (tau = 2, q = 4).
    SmallBiasSpace space = make_small_bias_space(8, 4, Rat(1, 4));
    CHECK(space.h == 8);
    CHECK(space.seed_bits == 2 * space.s);
    // seed_bits = 2 ceil(log2(h/eps)).
    CHECK(space.s == 5);

    // Bias of every nonempty seed-string subset is at most eps: check the
    // r-strings directly.
    std::vector<uint32_t> strings;
    for (uint64_t alpha = 0; alpha < (uint64_t{1} << space.s); ++alpha)
        for (uint64_t beta = 0; beta < (uint64_t{1} << space.s); ++beta)
            strings.push_back(static_cast<uint32_t>(eps_biased_string(space, alpha, beta)[0]));
    ExplicitDist dist{space.h, strings};
    for (uint32_t subset = 1; subset < (1u << space.h); ++subset)
        CHECK(bias_of_subset(dist, subset) <= Rat(1, 4));
}

TEST_CASE("uniform seed mode is exactly k-wise independent") {
    SmallBiasSpace space = make_small_bias_space(6, 2, Rat(0));
    CHECK(space.construction == "uniform");
    CHECK(space.seed_bits == space.h);
    CHECK(space.delta == 0);
    ExplicitDist dist = enumerate_space(space);
    for (uint32_t subset = 1; subset < (1u << space.m); ++subset)
        if (std::popcount(subset) <= space.k) CHECK(bias_of_subset(dist, subset) == 0);
    CHECK(verify_delta_k(dist, space.k, Rat(0)).pass);

    // The eps = 0 seed space itself is the full uniform cube: every nonempty
    // subset of seed coordinates has bias zero.
    ExplicitDist seeds{space.h, {}};
    for (uint32_t r = 0; r < (1u << space.h); ++r) seeds.atoms.push_back(r);
    for (uint32_t subset = 1; subset < (1u << space.h); ++subset)
        CHECK(bias_of_subset(seeds, subset) == 0);
}

TEST_CASE("bias_of_subset on tiny distributions") {
    ExplicitDist dist{2, {0b00, 0b11}};
    CHECK(bias_of_subset(dist, 0b01) == 0);
    CHECK(bias_of_subset(dist, 0b11) == 1);
}

TEST_CASE("sample_delta_k") {
    SmallBiasSpace space = make_small_bias_space(4, 2, Rat(1, 8));
    // Zero seed: all inner products vanish.
    auto zero = sample_delta_k(space, {0, 0});
    CHECK(zero[0] == 0);

    ExplicitDist dist = enumerate_space(space);
    // Every single variable is (delta, 1)-close to fair.
    DeltaKReport rep1 = verify_delta_k(dist, 1, space.delta);
    CHECK(rep1.pass);
    // Parity of any <= k variables has bias at most eps.
    for (uint32_t subset = 1; subset < (1u << space.m); ++subset)
        if (std::popcount(subset) <= space.k) CHECK(bias_of_subset(dist, subset) <= space.eps);
}

TEST_CASE("verify_delta_k verdicts") {
    // Uniform distribution passes any budget.
    SmallBiasSpace uni = make_small_bias_space(5, 4, Rat(0));
    CHECK(verify_delta_k(enumerate_space(uni), 4, Rat(0)).pass);

    // Constant zero fails immediately.
    ExplicitDist constant{3, {0, 0, 0, 0}};
    CHECK(!verify_delta_k(constant, 1, Rat(0)).pass);

    // The spec's h = 8 construction: (1/4, 4)-dependent with eps = 1/16.
    SmallBiasSpace space = make_small_bias_space(15, 4, Rat(1, 16));
    CHECK(space.h == 8);
    CHECK(space.delta == Rat(1, 4));
    DeltaKReport rep = verify_delta_k(enumerate_space(space), 4, Rat(1, 4));
    CHECK(rep.pass);
    CHECK(rep.spot_check_pass);
}

TEST_CASE("bernoulli_from_bits") {
    CHECK(bernoulli_from_bits(0, 0, 3) == 0);
    CHECK(bernoulli_from_bits(7, 8, 3) == 1);
    for (int b = 0; b <= 10; ++b) {
        for (uint64_t a : {uint64_t{0}, uint64_t{1} << b, (uint64_t{1} << b) / 2}) {
            uint64_t ones = 0;
            for (uint64_t v = 0; v < (uint64_t{1} << b); ++v)
                ones += static_cast<uint64_t>(bernoulli_from_bits(v, a, b));
            CHECK(ones == a);
        }
    }
    // b = 3, a = 7: the 7/8 coin of the vertex-weighted shift.
    uint64_t ones = 0;
    for (uint64_t v = 0; v < 8; ++v) ones += static_cast<uint64_t>(bernoulli_from_bits(v, 7, 3));
    CHECK(ones == 7);
    CHECK_THROWS_AS(bernoulli_from_bits(0, 9, 3), ObmError);
}

TEST_CASE("random sources") {
    RandomSource iid = RandomSource::iid(7);
    int ones = 0;
    for (int i = 0; i < 2000; ++i) ones += iid.bernoulli(Rat(1, 3)) ? 1 : 0;
    CHECK(ones > 500);
    CHECK(ones < 850);
    CHECK(iid.bits_consumed() > 0);
    CHECK_THROWS_AS(iid.slot_value(0, 0), ObmError);

    RandomSource sb = RandomSource::smallbias(Rat(1, 8), 8, 2, 5, 99);
    CHECK_THROWS_AS(sb.bernoulli(Rat(1, 2)), ObmError);
    SeedAccounting acc = sb.accounting();
    CHECK(acc.kind == "smallbias");
    CHECK(acc.construction == "powering-v1");
    CHECK(acc.m == 2 * 2 * 5);
    CHECK(acc.delta == Rat(1, 8));
    CHECK(acc.seed_bits == sb.bits_consumed());
    for (int t = 0; t < 5; ++t)
        for (int role = 0; role < 2; ++role) CHECK(sb.slot_value(t, role) < 4);

    RandomSource kw = RandomSource::kwise(8, 2, 5, 99);
    CHECK(kw.accounting().construction == "uniform");
    CHECK(kw.accounting().eps == 0);
}

TEST_CASE("seed budget") {
    SeedBudgetReport rep = seed_budget(2187, 2, 2, Rat(1, 8));
    CHECK(rep.kprime == 32);
    CHECK(rep.m == 2 * 2 * 2187 * 2);
    CHECK(rep.seed_bits > 0);
    CHECK(rep.within_budget);
    CHECK(rep.constant_C <= 8.0);

    // Halving delta costs O(1) extra seed bits.
    SeedBudgetReport half = seed_budget(2187, 2, 2, Rat(1, 16));
    CHECK(half.seed_bits - rep.seed_bits <= 4);
    CHECK(half.seed_bits >= rep.seed_bits);

    // Minimal space: k' = 1, delta close to 1 still needs a seed bit.
    SmallBiasSpace tiny = make_small_bias_space(1, 1, Rat(1, 2));
    CHECK(tiny.seed_bits >= 1);
}

TEST_CASE("dependency accounting on k-level traces") {
    for (int k = 1; k <= 3; ++k) {
        LevelTable table = LevelTable::standard(k);
        for (uint64_t seed = 0; seed < 4; ++seed) {
            Instance inst = gen_random_instance(6, 10, 3, 1, 1, seed + 500);
            FractionalTrace trace = run_fractional(AlgoSelector::klevel(k), inst);
            DependencyReport rep = dependency_tracker(trace, table);
            CHECK(rep.pass);
            CHECK(rep.max_edge_slots <= rep.edge_bound);
        }
        Instance adv = gen_adversarial_waterlevel(std::min(4, k + 2));
        DependencyReport rep = dependency_tracker(run_fractional(AlgoSelector::klevel(k), adv), table);
        CHECK(rep.pass);
    }

    // Two fresh nodes raised by one random step: both coins, nothing else.
    Instance inst;
    inst.n = 2;
    inst.weights = {Rat(1), Rat(1)};
    inst.arrivals = {{0, 1}};
    LevelTable t2 = LevelTable::standard(2);
    DependencyReport rep = dependency_tracker(run_fractional(AlgoSelector::klevel(2), inst), t2);
    CHECK(rep.pass);
    CHECK(rep.max_edge_slots == 2);
    CHECK(rep.max_free_slots_per_level[1] == 2);
    CHECK(rep.max_free_slots_per_level[0] == 0);

    // A vertex-weighted shift step inherits the partner's dependence count.
    Instance shift_inst;
    shift_inst.n = 3;
    shift_inst.weights = {Rat(4), Rat(4), Rat(1)};
    shift_inst.arrivals = {{0, 1}, {0, 2}};
    FractionalTrace vw = run_fractional(AlgoSelector::vw2(), shift_inst);
    REQUIRE(vw.steps[1].kind == StepKind::Shift);
    DependencyReport vrep = dependency_tracker(vw, t2);
    CHECK(vrep.pass);
    // Node 2's matched event depends on node 0's two coins from arrival 0.
    CHECK(vrep.max_free_slots_per_level[1] == 2);
}
