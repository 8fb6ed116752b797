#include "obm/rounding.hpp"

#include <algorithm>
#include <json.hpp>

namespace obm {

DistributionTracker::DistributionTracker(int n) : n_(n) {
    if (n < 0 || n > 20) throw ObmError("DistributionTracker: n must be in [0, 20]");
    states_[0] = Rat(1);
}

Rat DistributionTracker::free_prob(uint32_t node_set) const {
    Rat p = 0;
    for (const auto& [mask, prob] : states_)
        if ((mask & node_set) == 0) p += prob;
    return p;
}

Rat DistributionTracker::pair_free(int i, int j) const {
    uint32_t set = 0;
    if (i >= 0) set |= 1u << i;
    if (j >= 0) set |= 1u << j;
    return free_prob(set);
}

Rat DistributionTracker::matched_prob(int i) const { return Rat(1) - free_prob(1u << i); }

std::vector<Rat> DistributionTracker::all_free_probs() const {
    if (n_ > 16) throw ObmError("all_free_probs: n too large for the dense table");
    size_t full = size_t{1} << n_;
    std::vector<Rat> dense(full, Rat(0));
    for (const auto& [mask, prob] : states_) dense[mask] = prob;
    // Subset sums: h[J] = sum over matched-masks s contained in J.
    for (int bit = 0; bit < n_; ++bit)
        for (size_t j = 0; j < full; ++j)
            if (j & (size_t{1} << bit)) dense[j] += dense[j ^ (size_t{1} << bit)];
    std::vector<Rat> free(full);
    for (size_t i = 0; i < full; ++i) free[i] = dense[(full - 1) ^ i];
    return free;
}

std::map<std::string, std::string> DistributionTracker::dump() const {
    std::map<std::string, std::string> out;
    for (const auto& [mask, prob] : states_) {
        std::string key = "{";
        for (int i = 0; i < n_; ++i)
            if (mask & (1u << i)) key += (key.size() > 1 ? "," : "") + std::to_string(i);
        key += "}";
        out[key] = rat_to_string(prob);
    }
    return out;
}

void DistributionTracker::advance(const StepRecord& step, const DecisionProbs& probs) {
    std::map<uint32_t, Rat> next;
    auto add = [&](uint32_t mask, const Rat& p) {
        if (p == 0) return;
        next[mask] += p;
    };
    for (const auto& [mask, p] : states_) {
        bool f1 = !probs.p1.is_dummy() && !(mask & (1u << probs.p1.node));
        bool f2 = !probs.p2.is_dummy() && !(mask & (1u << probs.p2.node));
        if (f1 && f2) {
            add(mask | (1u << probs.p1.node), p * probs.a1);
            add(mask | (1u << probs.p2.node), p * probs.a2);
            add(mask, p * (1 - probs.a1 - probs.a2));
        } else if (f1) {
            add(mask | (1u << probs.p1.node), p * probs.s1);
            add(mask, p * (1 - probs.s1));
        } else if (f2) {
            add(mask | (1u << probs.p2.node), p * probs.s2);
            add(mask, p * (1 - probs.s2));
        } else {
            add(mask, p);
        }
    }
    Rat mass = 0;
    for (const auto& [mask, p] : next) {
        if (p < 0) throw ObmError("tracker: negative probability");
        mass += p;
    }
    if (mass != 1) throw ObmError("tracker: mass " + rat_to_string(mass) + " != 1 after arrival " +
                                  std::to_string(step.t));
    states_ = std::move(next);
    ++t_;
}

namespace {

// The rounding pair is P_t padded with dummies; untouched real neighbors of
// the arrival never take part in the rounding decision.
std::pair<StepSlot, StepSlot> rounding_pair(const StepRecord& step) {
    std::vector<StepSlot> pt;
    for (const StepSlot* slot : {&step.a, &step.b})
        if (slot->in_pt()) pt.push_back(*slot);
    while (pt.size() < 2) pt.push_back(StepSlot{});
    return {pt[0], pt[1]};
}

}  // namespace

DecisionProbs decision_probs_general(const StepRecord& step, const Rat& p12) {
    auto [p1, p2] = rounding_pair(step);
    ProbProgramInput in{p1.delta, p2.delta, p1.prior, p2.prior, p12};
    ProbProgramSolution sol = solve(in);
    return {step.t, p1, p2, sol.a1, sol.a2, sol.b1, sol.b2};
}

DecisionProbs decision_probs_maximal(const StepRecord& step, bool pair_negative) {
    auto [p1, p2] = rounding_pair(step);
    DecisionProbs probs{step.t, p1, p2, Rat(0), Rat(0), Rat(0), Rat(0)};
    if (p2.is_dummy()) {
        // Singleton (or empty) P_t: the pair includes a degree-1 dummy and is
        // negative; only the sole-free rule can fire.
        if (!p1.is_dummy()) probs.s1 = p1.delta / (1 - p1.prior);
        return probs;
    }
    if (pair_negative) {
        probs.s1 = p1.delta / (1 - p1.prior);
        probs.s2 = p2.delta / (1 - p2.prior);
    } else {
        ProbProgramSolution sol = maximal_closed_form(p1.delta, p2.delta, p1.prior, p2.prior);
        probs.a1 = sol.a1;
        probs.a2 = sol.a2;
        probs.s1 = probs.s2 = Rat(1);
    }
    return probs;
}

void tracker_update(DistributionTracker& tracker, const StepRecord& step, const DecisionProbs& probs) {
    tracker.advance(step, probs);
}

NegativePairState::NegativePairState(int n)
    : n_(n), s_(n, std::vector<char>(n, 0)), at_one_(n, 0) {}

bool negativity_query(const NegativePairState& state, int i, int j) {
    return state.at_one(i) || state.at_one(j) || state.strictly_negative(i, j);
}

void update_negative_pairs(NegativePairState& state, const StepRecord& step) {
    auto [p1, p2] = rounding_pair(step);
    int n = state.n_;
    if (p1.is_dummy()) return;

    if (p2.is_dummy()) {
        // Maximal singleton: the node reaches degree 1 and leaves every
        // strictly-negative pair.
        int u = p1.node;
        if (p1.prior + p1.delta != 1)
            throw ObmError("update_negative_pairs: singleton step does not reach degree 1");
        for (int i = 0; i < n; ++i) {
            state.s_[i][u] = 0;
            state.s_[u][i] = 0;
        }
        state.at_one_[u] = 1;
        state.ops_ += static_cast<uint64_t>(n);
        return;
    }

    int u = p1.node, v = p2.node;
    bool negative = negativity_query(state, u, v);
    if (!negative) {
        // S'_u = S_u | S_v | {v}, symmetrically for v; partners of either
        // gain the other endpoint.
        for (int i = 0; i < n; ++i) {
            char in_u = state.s_[u][i], in_v = state.s_[v][i];
            if (in_u || in_v) {
                state.s_[u][i] = state.s_[v][i] = 1;
                state.s_[i][u] = state.s_[i][v] = 1;
            }
        }
        state.s_[u][v] = state.s_[v][u] = 1;
        state.ops_ += static_cast<uint64_t>(n);
    }
    for (const StepSlot& slot : {p1, p2}) {
        if (slot.prior + slot.delta == 1) {
            int w = slot.node;
            for (int i = 0; i < n; ++i) {
                state.s_[i][w] = 0;
                state.s_[w][i] = 0;
            }
            state.at_one_[w] = 1;
            state.ops_ += static_cast<uint64_t>(n);
        }
    }
}

void NegativePairState::apply(const StepRecord& step) { update_negative_pairs(*this, step); }

namespace {

uint64_t dyadic_numerator(const Rat& p, int b) {
    Rat scaled = p * pow2(static_cast<unsigned>(b));
    if (denominator(scaled) != 1 || scaled < 0 || scaled > pow2(static_cast<unsigned>(b)))
        throw ObmError("slot rounding requires dyadic probability " + rat_to_string(p) +
                       " with b = " + std::to_string(b));
    return numerator(scaled).convert_to<uint64_t>();
}

// Realized decision for one arrival; shared by both engines.
void sample_arrival(const DecisionProbs& probs, RandomSource& source, std::vector<char>& matched,
                    Matching& out) {
    bool f1 = !probs.p1.is_dummy() && !matched[probs.p1.node];
    bool f2 = !probs.p2.is_dummy() && !matched[probs.p2.node];
    int target = -1;
    if (source.slot_based()) {
        int b = source.slot_bits();
        if (f1 && f2) {
            // One b-bit coin realizes the categorical (a1, a2, 1-a1-a2). For a
            // maximal independent pair a1 + a2 = 1; a negative pair reaching
            // this state under a biased source has a1 = a2 = 0 and matches
            // nobody (no sole free neighbor exists for it to match).
            uint64_t v = source.slot_value(probs.t, 0);
            uint64_t n1 = dyadic_numerator(probs.a1, b);
            uint64_t n2 = dyadic_numerator(probs.a2, b);
            if (v < n1)
                target = probs.p1.node;
            else if (v < n1 + n2)
                target = probs.p2.node;
        } else if (f1 || f2) {
            uint64_t v = source.slot_value(probs.t, 1);
            const Rat& s = f1 ? probs.s1 : probs.s2;
            if (v < dyadic_numerator(s, b)) target = f1 ? probs.p1.node : probs.p2.node;
        }
    } else {
        if (f1 && f2) {
            int c = source.categorical3(probs.a1, probs.a2);
            if (c == 0) target = probs.p1.node;
            if (c == 1) target = probs.p2.node;
        } else if (f1 || f2) {
            if (source.bernoulli(f1 ? probs.s1 : probs.s2)) target = f1 ? probs.p1.node : probs.p2.node;
        }
    }
    if (target >= 0) {
        matched[target] = 1;
        out.edges.push_back({target, probs.t});
    }
}

}  // namespace

std::vector<DecisionProbs> general_decision_plan(const FractionalTrace& trace) {
    if (trace.instance.n > 20) throw ObmError("general engine: n must be <= 20 for the exact tracker");
    if (auto rep = check_sound(trace); !rep.pass)
        throw ObmError("general engine: trace not sound (" + rep.detail + ")");

    DistributionTracker tracker(trace.instance.n);
    std::vector<DecisionProbs> plan;
    for (const StepRecord& step : trace.steps) {
        auto [p1, p2] = rounding_pair(step);
        Rat p12 = p2.is_dummy() ? Rat(0)  // a dummy partner is never free
                                : tracker.pair_free(p1.node, p2.node);
        DecisionProbs probs = decision_probs_general(step, p12);
        tracker.advance(step, probs);
        plan.push_back(std::move(probs));
    }
    return plan;
}

std::vector<DecisionProbs> maximal_decision_plan(const FractionalTrace& trace) {
    if (auto rep = check_maximal(trace); !rep.pass)
        throw ObmError("maximal engine: trace not maximal (" + rep.detail + ")");

    NegativePairState state(trace.instance.n);
    std::vector<DecisionProbs> plan;
    for (const StepRecord& step : trace.steps) {
        auto [p1, p2] = rounding_pair(step);
        bool negative = p2.is_dummy() || negativity_query(state, p1.node, p2.node);
        plan.push_back(decision_probs_maximal(step, negative));
        update_negative_pairs(state, step);
    }
    return plan;
}

Matching sample_with_plan(const std::vector<DecisionProbs>& plan, RandomSource& source) {
    int n = 0;
    for (const DecisionProbs& probs : plan)
        for (const StepSlot* slot : {&probs.p1, &probs.p2})
            if (!slot->is_dummy()) n = std::max(n, slot->node + 1);
    std::vector<char> matched(n, 0);
    Matching out;
    for (const DecisionProbs& probs : plan) sample_arrival(probs, source, matched, out);
    return out;
}

Matching round_general(const FractionalTrace& trace, RandomSource& source) {
    if (source.slot_based())
        throw ObmError("round_general: bounded-independence sources are for the maximal engine");
    return sample_with_plan(general_decision_plan(trace), source);
}

Matching round_maximal(const FractionalTrace& trace, RandomSource& source) {
    return sample_with_plan(maximal_decision_plan(trace), source);
}

std::vector<std::vector<std::pair<int, Rat>>> exact_marginals(const FractionalTrace& trace, Engine engine) {
    if (trace.instance.n > 20) throw ObmError("exact_marginals: n must be <= 20");
    if (engine == Engine::General) {
        if (auto rep = check_sound(trace); !rep.pass)
            throw ObmError("exact_marginals: trace not sound (" + rep.detail + ")");
    } else {
        if (auto rep = check_maximal(trace); !rep.pass)
            throw ObmError("exact_marginals: trace not maximal (" + rep.detail + ")");
    }

    DistributionTracker tracker(trace.instance.n);
    std::vector<std::vector<std::pair<int, Rat>>> result;
    for (const StepRecord& step : trace.steps) {
        auto [p1, p2] = rounding_pair(step);
        DecisionProbs probs;
        if (engine == Engine::General) {
            Rat p12 = p2.is_dummy() ? Rat(0)
                                    : tracker.pair_free(p1.is_dummy() ? -1 : p1.node, p2.node);
            probs = decision_probs_general(step, p12);
        } else {
            bool negative = p2.is_dummy() || tracker.pair_free(p1.node, p2.node) == 0;
            probs = decision_probs_maximal(step, negative);
        }
        std::vector<Rat> before;
        for (const StepSlot& slot : {p1, p2})
            before.push_back(slot.is_dummy() ? Rat(0) : tracker.matched_prob(slot.node));
        tracker.advance(step, probs);
        std::vector<std::pair<int, Rat>> row;
        int idx = 0;
        for (const StepSlot& slot : {p1, p2}) {
            if (!slot.is_dummy()) row.push_back({slot.node, tracker.matched_prob(slot.node) - before[idx]});
            ++idx;
        }
        result.push_back(std::move(row));
    }
    return result;
}

std::string matching_to_json(const Matching& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto [i, t] : m.edges) arr.push_back({i, t});
    return arr.dump();
}

}  // namespace obm
