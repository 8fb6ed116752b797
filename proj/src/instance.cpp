#include "obm/instance.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

#include "obm/prng.hpp"

namespace obm {

void Instance::validate() const {
    if (n < 0) throw ObmError("instance: negative n");
    if (static_cast<int>(weights.size()) != n) throw ObmError("instance: weight count != n");
    for (int i = 0; i < n; ++i) {
        if (weights[i] <= 0) throw ObmError("instance: non-positive weight at node " + std::to_string(i));
    }
    for (size_t t = 0; t < arrivals.size(); ++t) {
        std::set<int> seen;
        for (int v : arrivals[t]) {
            if (v < 0 || v >= n)
                throw ObmError("instance: arrival " + std::to_string(t) + " references node " + std::to_string(v));
            if (!seen.insert(v).second)
                throw ObmError("instance: arrival " + std::to_string(t) + " repeats node " + std::to_string(v));
        }
    }
}

Rat Matching::weight(const Instance& inst) const {
    Rat total = 0;
    for (auto [i, t] : edges) total += inst.weights[i];
    return total;
}

void Matching::validate(const Instance& inst) const {
    std::set<int> off, on;
    for (auto [i, t] : edges) {
        if (i < 0 || i >= inst.n || t < 0 || t >= inst.num_arrivals()) throw ObmError("matching: edge out of range");
        const auto& nb = inst.arrivals[t];
        if (std::find(nb.begin(), nb.end(), i) == nb.end()) throw ObmError("matching: non-edge matched");
        if (!off.insert(i).second) throw ObmError("matching: offline node matched twice");
        if (!on.insert(t).second) throw ObmError("matching: arrival matched twice");
    }
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

Instance parse_instance(std::istream& in) {
    Instance inst;
    std::string line;
    int lineno = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(lineno + 1, std::string("missing ") + what);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    next_line("header");
    if (line != "OBMI v1") throw ParseError(lineno, "expected header 'OBMI v1'");

    next_line("node count");
    try {
        inst.n = std::stoi(line);
    } catch (const std::exception&) {
        throw ParseError(lineno, "malformed node count");
    }
    if (inst.n < 0) throw ParseError(lineno, "negative node count");

    next_line("weights");
    {
        auto toks = split_ws(line);
        if (static_cast<int>(toks.size()) != inst.n)
            throw ParseError(lineno, "expected " + std::to_string(inst.n) + " weights, got " +
                                         std::to_string(toks.size()));
        for (const auto& tok : toks) {
            auto w = rat_from_string(tok);
            if (!w) throw ParseError(lineno, "malformed weight '" + tok + "'");
            if (*w <= 0) throw ParseError(lineno, "non-positive weight '" + tok + "'");
            inst.weights.push_back(*w);
        }
    }

    next_line("arrival count");
    int T = 0;
    try {
        T = std::stoi(line);
    } catch (const std::exception&) {
        throw ParseError(lineno, "malformed arrival count");
    }
    if (T < 0) throw ParseError(lineno, "negative arrival count");

    for (int t = 0; t < T; ++t) {
        next_line("arrival line");
        std::vector<int> nb;
        std::set<int> seen;
        for (const auto& tok : split_ws(line)) {
            int v;
            try {
                v = std::stoi(tok);
            } catch (const std::exception&) {
                throw ParseError(lineno, "malformed neighbor index '" + tok + "'");
            }
            if (v < 0 || v >= inst.n) throw ParseError(lineno, "neighbor index " + tok + " out of range");
            if (!seen.insert(v).second) throw ParseError(lineno, "duplicate neighbor " + tok);
            nb.push_back(v);
        }
        inst.arrivals.push_back(std::move(nb));
    }
    return inst;
}

Instance parse_instance_string(const std::string& text) {
    std::istringstream ss(text);
    return parse_instance(ss);
}

Instance load_instance(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ObmError("cannot open instance file: " + path);
    return parse_instance(f);
}

std::string serialize_instance(const Instance& inst) {
    std::ostringstream out;
    out << "OBMI v1\n" << inst.n << "\n";
    for (int i = 0; i < inst.n; ++i) {
        if (i) out << ' ';
        out << rat_to_string(inst.weights[i]);
    }
    out << "\n" << inst.num_arrivals() << "\n";
    for (const auto& nb : inst.arrivals) {
        for (size_t j = 0; j < nb.size(); ++j) {
            if (j) out << ' ';
            out << nb[j];
        }
        out << "\n";
    }
    return out.str();
}

Instance gen_adversarial_waterlevel(int k) {
    if (k < 1 || k > 9) throw ObmError("gen_adversarial_waterlevel: k must be in [1, 9]");
    int n = 1;
    for (int i = 0; i < k; ++i) n *= 3;

    Instance inst;
    inst.n = n;
    inst.weights.assign(n, Rat(1));

    std::vector<int> active(n);
    std::iota(active.begin(), active.end(), 0);

    for (int round = 0; round < k; ++round) {
        std::vector<int> survivors;
        for (size_t j = 0; j + 2 < active.size(); j += 3) {
            // Triple ordered ascending; lowest-index tie-breaking raises the
            // first two and strands the third.
            inst.arrivals.push_back({active[j], active[j + 1], active[j + 2]});
            survivors.push_back(active[j]);
            survivors.push_back(active[j + 1]);
        }
        std::sort(survivors.begin(), survivors.end());
        active = std::move(survivors);
    }
    for (int u : active) inst.arrivals.push_back({u});
    return inst;
}

std::pair<Instance, EdgeValues> gen_example_impossible() {
    Instance inst;
    inst.n = 4;
    inst.weights.assign(4, Rat(1));
    inst.arrivals = {{0, 1}, {2, 3}, {0, 2}};

    EdgeValues vals;
    Rat half(1, 2);
    vals.per_arrival = {
        {{0, half}, {1, half}},
        {{2, half}, {3, half}},
        {{0, half}, {2, half}},
    };
    return {inst, vals};
}

std::vector<WeightedGraphSample> gen_three_choice_counterexample() {
    // Offline nodes 2t, 2t+1 form the pair of online node t, t = 0..2.
    // Online nodes 3 and 4 share one uniformly chosen node per pair.
    const Rat v_pair(1, 2);
    const Rat v_four(7, 24);
    const Rat v_five(6965, 41472);

    std::vector<WeightedGraphSample> out;
    for (int c = 0; c < 8; ++c) {
        WeightedGraphSample g;
        g.instance.n = 6;
        g.instance.weights.assign(6, Rat(1));
        std::vector<int> chosen;
        for (int t = 0; t < 3; ++t) chosen.push_back(2 * t + ((c >> t) & 1));
        for (int t = 0; t < 3; ++t) g.instance.arrivals.push_back({2 * t, 2 * t + 1});
        g.instance.arrivals.push_back(chosen);
        g.instance.arrivals.push_back(chosen);

        for (int t = 0; t < 3; ++t)
            g.values.per_arrival.push_back({{2 * t, v_pair}, {2 * t + 1, v_pair}});
        std::vector<std::pair<int, Rat>> a4, a5;
        for (int u : chosen) {
            a4.push_back({u, v_four});
            a5.push_back({u, v_five});
        }
        g.values.per_arrival.push_back(a4);
        g.values.per_arrival.push_back(a5);
        g.probability = Rat(1, 8);
        out.push_back(std::move(g));
    }
    return out;
}

Instance gen_random_instance(int n, int T, int max_degree, long long weight_lo,
                             long long weight_hi, uint64_t seed) {
    if (n < 1 || T < 1) throw ObmError("gen_random_instance: n, T must be >= 1");
    if (max_degree < 0 || max_degree > n) throw ObmError("gen_random_instance: max_degree out of range");
    if (weight_lo < 1 || weight_hi < weight_lo) throw ObmError("gen_random_instance: bad weight range");

    SplitMix64 rng(seed);
    Instance inst;
    inst.n = n;
    for (int i = 0; i < n; ++i)
        inst.weights.push_back(Rat(static_cast<long long>(weight_lo + rng.below(weight_hi - weight_lo + 1))));
    for (int t = 0; t < T; ++t) {
        int deg = static_cast<int>(rng.below(max_degree + 1));
        std::set<int> nb;
        while (static_cast<int>(nb.size()) < deg) nb.insert(static_cast<int>(rng.below(n)));
        inst.arrivals.push_back(std::vector<int>(nb.begin(), nb.end()));
    }
    return inst;
}

namespace {

bool try_augment(const std::vector<std::vector<int>>& arrivals_of, int i,
                 std::vector<int>& match_of_arrival, std::vector<char>& visited) {
    for (int t : arrivals_of[i]) {
        if (visited[t]) continue;
        visited[t] = 1;
        if (match_of_arrival[t] < 0 ||
            try_augment(arrivals_of, match_of_arrival[t], match_of_arrival, visited)) {
            match_of_arrival[t] = i;
            return true;
        }
    }
    return false;
}

}  // namespace

std::pair<Rat, Matching> max_weight_matching(const Instance& inst) {
    inst.validate();
    std::vector<std::vector<int>> arrivals_of(inst.n);
    for (int t = 0; t < inst.num_arrivals(); ++t)
        for (int i : inst.arrivals[t]) arrivals_of[i].push_back(t);

    std::vector<int> order(inst.n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return inst.weights[a] > inst.weights[b]; });

    std::vector<int> match_of_arrival(inst.num_arrivals(), -1);
    Rat value = 0;
    for (int i : order) {
        std::vector<char> visited(inst.num_arrivals(), 0);
        if (try_augment(arrivals_of, i, match_of_arrival, visited)) value += inst.weights[i];
    }

    Matching m;
    for (int t = 0; t < inst.num_arrivals(); ++t)
        if (match_of_arrival[t] >= 0) m.edges.push_back({match_of_arrival[t], t});
    std::sort(m.edges.begin(), m.edges.end());
    return {value, m};
}

}  // namespace obm
