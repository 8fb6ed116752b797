#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/prng.hpp"

using namespace obm;

namespace {

// Exhaustive maximum-weight matching for tiny instances; the oracle for the
// augmenting-path solver.
Rat brute_force_opt(const Instance& inst) {
    Rat best = 0;
    std::set<int> used;
    std::function<void(int, Rat)> walk = [&](int t, Rat acc) {
        if (t == inst.num_arrivals()) {
            best = std::max(best, acc);
            return;
        }
        walk(t + 1, acc);
        for (int u : inst.arrivals[t]) {
            if (used.count(u)) continue;
            used.insert(u);
            walk(t + 1, acc + inst.weights[u]);
            used.erase(u);
        }
    };
    walk(0, Rat(0));
    return best;
}

}  // namespace

TEST_CASE("parse minimal well-formed file") {
    Instance inst = parse_instance_string("OBMI v1\n2\n1 1\n1\n0 1\n");
    CHECK(inst.n == 2);
    CHECK(inst.num_arrivals() == 1);
    CHECK(inst.arrivals[0] == std::vector<int>{0, 1});
    CHECK(inst.weights[0] == 1);
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_instance_string("OBMI v2\n1\n1\n0\n"), ParseError);
    // Arrival referencing node 5 with n = 2.
    try {
        parse_instance_string("OBMI v1\n2\n1 1\n1\n0 5\n");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line == 5);
    }
    CHECK_THROWS_AS(parse_instance_string("OBMI v1\n1\n0\n0\n"), ParseError);         // weight <= 0
    CHECK_THROWS_AS(parse_instance_string("OBMI v1\n1\n-1/2\n0\n"), ParseError);      // negative weight
    CHECK_THROWS_AS(parse_instance_string("OBMI v1\n2\n1 1\n1\n0 0\n"), ParseError);  // duplicate
    CHECK_THROWS_AS(parse_instance_string("OBMI v1\n2\n1\n0\n"), ParseError);         // weight count
}

TEST_CASE("serialize canonical forms") {
    Instance inst;
    inst.n = 1;
    inst.weights = {Rat(1)};
    inst.arrivals = {{0}};
    CHECK(serialize_instance(inst) == "OBMI v1\n1\n1\n1\n0\n");

    inst.weights = {Rat(5, 11)};
    CHECK(serialize_instance(inst).find("5/11") != std::string::npos);

    inst.arrivals = {{}};
    CHECK(serialize_instance(inst) == "OBMI v1\n1\n5/11\n1\n\n");
}

TEST_CASE("parse/serialize round trip") {
    std::string canonical = "OBMI v1\n3\n1 5/11 2\n3\n0 2\n\n1\n";
    CHECK(serialize_instance(parse_instance_string(canonical)) == canonical);

    for (uint64_t seed = 0; seed < 20; ++seed) {
        Instance inst = gen_random_instance(6, 8, 3, 1, 4, seed);
        std::string text = serialize_instance(inst);
        CHECK(serialize_instance(parse_instance_string(text)) == text);
    }
}

TEST_CASE("adversarial instance, k = 1") {
    Instance inst = gen_adversarial_waterlevel(1);
    CHECK(inst.n == 3);
    REQUIRE(inst.num_arrivals() == 3);
    CHECK(inst.arrivals[0] == std::vector<int>{0, 1, 2});
    CHECK(inst.arrivals[1] == std::vector<int>{0});
    CHECK(inst.arrivals[2] == std::vector<int>{1});
    CHECK(brute_force_opt(inst) == 3);
}

TEST_CASE("adversarial instance degrees follow the level sequence") {
    // Active nodes at the start of round i sit at z_i = 1 - 2^(1-2^i).
    for (int k = 1; k <= 5; ++k) {
        Instance inst = gen_adversarial_waterlevel(k);
        CHECK(inst.n == static_cast<int>(std::lround(std::pow(3, k))));
        FractionalTrace trace = run_fractional(AlgoSelector::water(), inst);

        int arrival = 0;
        std::vector<int> active(inst.n);
        for (int i = 0; i < inst.n; ++i) active[i] = i;
        for (int round = 0; round < k; ++round) {
            Rat z_i = round == 0 ? Rat(0) : Rat(1) - Rat(BigInt(2), BigInt(1) << (1u << round));
            std::vector<Rat> deg = trace.degrees_before(arrival);
            for (int u : active) CHECK(deg[u] == z_i);
            std::vector<int> next;
            for (size_t j = 0; j + 2 < active.size(); j += 3) {
                next.push_back(active[j]);
                next.push_back(active[j + 1]);
                ++arrival;
            }
            std::sort(next.begin(), next.end());
            active = next;
        }
    }
}

TEST_CASE("adversarial instance admits a perfect matching") {
    for (int k = 1; k <= 4; ++k) {
        Instance inst = gen_adversarial_waterlevel(k);
        auto [value, matching] = max_weight_matching(inst);
        CHECK(value == static_cast<int>(std::lround(std::pow(3, k))));
        matching.validate(inst);
    }
}

TEST_CASE("impossible example shape") {
    auto [inst, values] = gen_example_impossible();
    CHECK(inst.n == 4);
    REQUIRE(inst.num_arrivals() == 3);
    CHECK(inst.arrivals[0] == std::vector<int>{0, 1});
    CHECK(inst.arrivals[1] == std::vector<int>{2, 3});
    REQUIRE(inst.arrivals[2].size() == 2);
    // The probe arrival spans the two pairs.
    CHECK(inst.arrivals[2][0] <= 1);
    CHECK(inst.arrivals[2][1] >= 2);
    for (const auto& row : values.per_arrival)
        for (const auto& [node, v] : row) CHECK(v == Rat(1, 2));
}

TEST_CASE("three-choice counterexample family") {
    auto family = gen_three_choice_counterexample();
    REQUIRE(family.size() == 8);
    Rat total = 0;
    std::set<std::string> distinct;
    for (const auto& g : family) {
        total += g.probability;
        CHECK(g.probability == Rat(1, 8));
        CHECK(g.instance.n == 6);
        REQUIRE(g.instance.num_arrivals() == 5);
        CHECK(g.instance.arrivals[3] == g.instance.arrivals[4]);
        distinct.insert(serialize_instance(g.instance));
        for (const auto& [node, v] : g.values.per_arrival[4]) CHECK(v == Rat(6965, 41472));
    }
    CHECK(total == 1);
    CHECK(distinct.size() == 8);
    CHECK(Rat(6965, 41472) == (1 - Rat(19, 24) * Rat(19, 24) * Rat(19, 24)) / 3);
}

TEST_CASE("random instance generator") {
    Instance a = gen_random_instance(7, 9, 3, 1, 3, 42);
    Instance b = gen_random_instance(7, 9, 3, 1, 3, 42);
    CHECK(serialize_instance(a) == serialize_instance(b));
    a.validate();

    Instance c = gen_random_instance(5, 12, 1, 1, 1, 7);
    for (const auto& nb : c.arrivals) CHECK(nb.size() <= 1);
    for (const Rat& w : c.weights) CHECK(w == 1);
}

TEST_CASE("max weight matching basics") {
    Instance inst;
    inst.n = 2;
    inst.weights = {Rat(1), Rat(3)};
    inst.arrivals = {{0, 1}};
    CHECK(max_weight_matching(inst).first == 3);

    inst.arrivals = {};
    CHECK(max_weight_matching(inst).first == 0);
}

TEST_CASE("max weight matching agrees with exhaustive search") {
    for (uint64_t seed = 0; seed < 60; ++seed) {
        SplitMix64 rng(seed * 977 + 3);
        int n = 2 + static_cast<int>(rng.below(5));
        int T = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(12 - n)));
        Instance inst = gen_random_instance(n, T, std::min(n, 3), 1, 5, seed);
        auto [value, matching] = max_weight_matching(inst);
        matching.validate(inst);
        CHECK(matching.weight(inst) == value);
        CHECK(value == brute_force_opt(inst));
    }
}
