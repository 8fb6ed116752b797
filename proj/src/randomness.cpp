#include "obm/randomness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace obm {

namespace {

int gf2x_degree(uint64_t p) { return p == 0 ? -1 : 63 - std::countl_zero(p); }

uint64_t gf2x_mul(uint64_t a, uint64_t b) {
    uint64_t r = 0;
    while (b) {
        if (b & 1) r ^= a;
        a <<= 1;
        b >>= 1;
    }
    return r;
}

uint64_t gf2x_rem(uint64_t a, uint64_t b) {
    int db = gf2x_degree(b);
    for (int d = gf2x_degree(a); d >= db; d = gf2x_degree(a)) a ^= b << (d - db);
    return a;
}

uint64_t gf2x_gcd(uint64_t a, uint64_t b) {
    while (b) {
        uint64_t r = gf2x_rem(a, b);
        a = b;
        b = r;
    }
    return a;
}

bool is_irreducible(uint64_t f, int s) {
    // f irreducible of degree s iff x^(2^s) = x (mod f) and
    // gcd(x^(2^(s/p)) - x, f) = 1 for every prime p | s.
    uint64_t x_mod_f = gf2x_rem(2, f);
    auto sq_pow_x = [&](int reps) {
        uint64_t t = x_mod_f;
        for (int i = 0; i < reps; ++i) t = gf2x_rem(gf2x_mul(t, t), f);
        return t;
    };
    if (sq_pow_x(s) != x_mod_f) return false;
    for (int p = 2; p <= s; ++p) {
        if (s % p != 0) continue;
        bool prime = true;
        for (int d = 2; d * d <= p; ++d)
            if (p % d == 0) prime = false;
        if (!prime) continue;
        if (gf2x_gcd(sq_pow_x(s / p) ^ x_mod_f, f) != 1) return false;
    }
    return true;
}

uint64_t parity_words(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
    uint64_t acc = 0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) acc ^= a[i] & b[i];
    return std::popcount(acc) & 1u;
}

void set_bit(std::vector<uint64_t>& words, int pos) { words[pos / 64] |= uint64_t{1} << (pos % 64); }

int get_bit(const std::vector<uint64_t>& words, int pos) {
    return static_cast<int>((words[pos / 64] >> (pos % 64)) & 1u);
}

}  // namespace

uint64_t find_irreducible_poly(int s) {
    if (s < 1 || s > 32) throw ObmError("find_irreducible_poly: s must be in [1, 32]");
    for (uint64_t f = (uint64_t{1} << s) + 1; f < (uint64_t{1} << (s + 1)); f += 2)
        if (is_irreducible(f, s)) return f;
    throw ObmError("find_irreducible_poly: no polynomial found");
}

uint64_t gf2x_mulmod(uint64_t a, uint64_t b, uint64_t poly, int s) {
    (void)s;
    return gf2x_rem(gf2x_mul(a, b), poly);
}

KwiseVectors bch_kwise_vectors(int m, int k) {
    if (m < 1) throw ObmError("bch_kwise_vectors: m must be >= 1");
    if (k < 1) throw ObmError("bch_kwise_vectors: k must be >= 1");
    KwiseVectors out;
    out.m = m;
    out.k = k + (k & 1);  // round up to even
    out.tau = out.k / 2;
    out.q = 1;
    while ((uint64_t{1} << out.q) < static_cast<uint64_t>(m) + 1) ++out.q;
    if (out.q > 32) throw ObmError("bch_kwise_vectors: m too large");
    out.h = out.tau * out.q;

    uint64_t poly = find_irreducible_poly(out.q);
    int words = (out.h + 63) / 64;
    for (int i = 1; i <= m; ++i) {
        uint64_t beta = static_cast<uint64_t>(i);
        uint64_t beta2 = gf2x_mulmod(beta, beta, poly, out.q);
        std::vector<uint64_t> row(words, 0);
        uint64_t cur = beta;  // beta^1, beta^3, ..., beta^(2*tau-1)
        for (int j = 0; j < out.tau; ++j) {
            for (int bit = 0; bit < out.q; ++bit)
                if ((cur >> bit) & 1) set_bit(row, j * out.q + bit);
            cur = gf2x_mulmod(cur, beta2, poly, out.q);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

SmallBiasSpace make_small_bias_space(int m, int k, const Rat& eps) {
    if (eps < 0 || eps >= 1) throw ObmError("make_small_bias_space: eps must be in [0, 1)");
    KwiseVectors vecs = bch_kwise_vectors(m, k);

    SmallBiasSpace space;
    space.m = m;
    space.k = vecs.k;
    space.eps = eps;
    space.delta = pow2(static_cast<unsigned>(vecs.tau)) * eps;  // 2^(k/2) * eps
    space.h = vecs.h;
    space.q = vecs.q;
    space.tau = vecs.tau;
    space.vectors = std::move(vecs.rows);

    if (eps == 0) {
        space.s = 0;
        space.seed_bits = space.h;
        space.construction = "uniform";
        return space;
    }
    int s = 1;
    while (pow2(static_cast<unsigned>(s)) * eps < Rat(space.h)) {
        if (++s > 32) throw ObmError("make_small_bias_space: infeasible parameters (seed space too large)");
    }
    space.s = s;
    space.poly = find_irreducible_poly(s);
    space.seed_bits = 2 * s;
    space.construction = "powering-v1";
    return space;
}

std::vector<uint64_t> eps_biased_string(const SmallBiasSpace& space, uint64_t alpha, uint64_t beta) {
    if (space.s == 0) throw ObmError("eps_biased_string: uniform-mode space has no powering seed");
    uint64_t mask = space.s == 64 ? ~uint64_t{0} : (uint64_t{1} << space.s) - 1;
    alpha &= mask;
    beta &= mask;
    std::vector<uint64_t> r((space.h + 63) / 64, 0);
    uint64_t pw = 1;  // alpha^j
    for (int j = 0; j < space.h; ++j) {
        if (std::popcount(pw & beta) & 1) set_bit(r, j);
        pw = gf2x_mulmod(pw, alpha, space.poly, space.s);
    }
    return r;
}

std::vector<uint64_t> sample_delta_k(const SmallBiasSpace& space, const std::vector<uint64_t>& seed) {
    std::vector<uint64_t> r;
    if (space.s == 0) {
        r = seed;
        r.resize((space.h + 63) / 64, 0);
        if (space.h % 64 != 0 && !r.empty()) r[space.h / 64] &= (uint64_t{1} << (space.h % 64)) - 1;
    } else {
        if (seed.size() < 2) throw ObmError("sample_delta_k: powering seed is {alpha, beta}");
        r = eps_biased_string(space, seed[0], seed[1]);
    }
    std::vector<uint64_t> x((space.m + 63) / 64, 0);
    for (int i = 0; i < space.m; ++i)
        if (parity_words(space.vectors[i], r)) set_bit(x, i);
    return x;
}

std::vector<uint64_t> draw_assignment(const SmallBiasSpace& space, SplitMix64& rng) {
    std::vector<uint64_t> seed;
    if (space.s == 0) {
        for (int w = 0; w < (space.h + 63) / 64; ++w) seed.push_back(rng.next());
    } else {
        uint64_t mask = (uint64_t{1} << space.s) - 1;
        seed.push_back(rng.next() & mask);
        seed.push_back(rng.next() & mask);
    }
    return sample_delta_k(space, seed);
}

ExplicitDist enumerate_space(const SmallBiasSpace& space) {
    if (space.m > 32) throw ObmError("enumerate_space: m must be <= 32");
    if (space.seed_bits > 24) throw ObmError("enumerate_space: seed space too large to enumerate");
    ExplicitDist dist;
    dist.m = space.m;
    if (space.s == 0) {
        for (uint64_t r = 0; r < (uint64_t{1} << space.h); ++r) {
            std::vector<uint64_t> seed{r};
            dist.atoms.push_back(static_cast<uint32_t>(sample_delta_k(space, seed)[0]));
        }
    } else {
        uint64_t side = uint64_t{1} << space.s;
        for (uint64_t alpha = 0; alpha < side; ++alpha)
            for (uint64_t beta = 0; beta < side; ++beta)
                dist.atoms.push_back(static_cast<uint32_t>(sample_delta_k(space, {alpha, beta})[0]));
    }
    return dist;
}

Rat bias_of_subset(const ExplicitDist& dist, uint32_t subset_mask) {
    if (dist.atoms.empty()) throw ObmError("bias_of_subset: empty distribution");
    int64_t even = 0, odd = 0;
    for (uint32_t atom : dist.atoms) (std::popcount(atom & subset_mask) & 1 ? odd : even)++;
    int64_t diff = even - odd;
    if (diff < 0) diff = -diff;
    return Rat(BigInt(diff), BigInt(static_cast<int64_t>(dist.atoms.size())));
}

DeltaKReport verify_delta_k(const ExplicitDist& dist, int k, const Rat& delta) {
    if (dist.m > 20) throw ObmError("verify_delta_k: m must be <= 20");
    DeltaKReport rep;
    rep.worst_tv = 0;
    size_t full = size_t{1} << dist.m;
    std::vector<uint64_t> count(full, 0);
    for (uint32_t atom : dist.atoms) ++count[atom];
    std::vector<std::pair<uint32_t, uint64_t>> support;
    for (size_t a = 0; a < full; ++a)
        if (count[a]) support.push_back({static_cast<uint32_t>(a), count[a]});
    BigInt total(static_cast<int64_t>(dist.atoms.size()));

    for (uint32_t subset = 1; subset < full; ++subset) {
        int size = std::popcount(subset);
        if (size > k) continue;
        int bits[32];
        int nb = 0;
        for (int bit = 0; bit < dist.m; ++bit)
            if (subset & (1u << bit)) bits[nb++] = bit;
        // Project the support onto the subset's coordinates.
        std::vector<uint64_t> proj(size_t{1} << size, 0);
        for (const auto& [a, c] : support) {
            uint32_t key = 0;
            for (int pos = 0; pos < nb; ++pos) key |= ((a >> bits[pos]) & 1u) << pos;
            proj[key] += c;
        }
        Rat tv = 0;
        Rat uniform = pow2_inv(static_cast<unsigned>(size));
        for (uint64_t c : proj) {
            Rat d = Rat(BigInt(static_cast<int64_t>(c)), total) - uniform;
            tv += d < 0 ? -d : d;
        }
        if (tv > rep.worst_tv) {
            rep.worst_tv = tv;
            rep.worst_subset = subset;
        }
        if (tv > delta) rep.pass = false;
    }

    // Planted events determined by k variables: all-zero and odd parity on
    // the first min(k, m) coordinates must sit within delta of uniform.
    int size = std::min(k, dist.m);
    uint32_t subset = (uint32_t{1} << size) - 1;
    uint64_t zero_cnt = 0, parity_cnt = 0;
    for (uint32_t atom : dist.atoms) {
        if ((atom & subset) == 0) ++zero_cnt;
        if (std::popcount(atom & subset) & 1) ++parity_cnt;
    }
    auto within = [&](uint64_t cnt, const Rat& uniform_prob) {
        Rat d = Rat(BigInt(static_cast<int64_t>(cnt)), total) - uniform_prob;
        if (d < 0) d = -d;
        return d <= delta;
    };
    rep.spot_check_pass =
        within(zero_cnt, pow2_inv(static_cast<unsigned>(size))) && within(parity_cnt, Rat(1, 2));
    if (!rep.spot_check_pass) rep.pass = false;
    return rep;
}

int bernoulli_from_bits(uint64_t value, uint64_t a, int b) {
    if (b < 0 || b > 63) throw ObmError("bernoulli_from_bits: b out of range");
    if (a > (uint64_t{1} << b)) throw ObmError("bernoulli_from_bits: numerator exceeds 2^b");
    return value < a ? 1 : 0;
}

// --- RandomSource -----------------------------------------------------------

RandomSource::RandomSource(Kind kind, uint64_t seed) : kind_(kind), bits_(seed) {}

RandomSource RandomSource::iid(uint64_t seed) { return RandomSource(Kind::IID, seed); }

RandomSource RandomSource::from_shared_space(std::shared_ptr<const SmallBiasSpace> space, int b,
                                             int num_arrivals, uint64_t seed, Kind kind) {
    if (kind == Kind::IID) throw ObmError("RandomSource: iid has no space");
    RandomSource src(kind, seed);
    src.b_ = b;
    src.num_arrivals_ = num_arrivals;
    src.space_ = std::move(space);
    if (src.space_->m < 2 * b * num_arrivals) throw ObmError("RandomSource: space too small for the run");
    SplitMix64 rng(seed);
    src.assignment_ = draw_assignment(*src.space_, rng);
    src.fixed_seed_bits_ = src.space_->seed_bits;
    return src;
}

RandomSource RandomSource::kwise(int kprime, int b, int num_arrivals, uint64_t seed) {
    auto space = std::make_shared<SmallBiasSpace>(
        make_small_bias_space(2 * b * num_arrivals, kprime, Rat(0)));
    return from_shared_space(std::move(space), b, num_arrivals, seed, Kind::KWise);
}

RandomSource RandomSource::smallbias(const Rat& delta, int kprime, int b, int num_arrivals, uint64_t seed) {
    if (delta <= 0 || delta >= 1) throw ObmError("RandomSource::smallbias: delta must be in (0, 1)");
    int k_even = kprime + (kprime & 1);
    Rat eps = delta / pow2(static_cast<unsigned>(k_even / 2));
    auto space = std::make_shared<SmallBiasSpace>(
        make_small_bias_space(2 * b * num_arrivals, kprime, eps));
    return from_shared_space(std::move(space), b, num_arrivals, seed, Kind::SmallBias);
}

bool RandomSource::bernoulli(const Rat& p) {
    if (slot_based()) throw ObmError("RandomSource: bernoulli draws need the iid source");
    return bits_.bernoulli(p);
}

int RandomSource::categorical3(const Rat& p0, const Rat& p1) {
    if (slot_based()) throw ObmError("RandomSource: categorical draws need the iid source");
    return bits_.categorical3(p0, p1);
}

uint64_t RandomSource::slot_value(int t, int role) {
    if (!slot_based()) throw ObmError("RandomSource: slot values need a bounded-independence source");
    if (t < 0 || t >= num_arrivals_ || role < 0 || role > 1)
        throw ObmError("RandomSource: slot out of range");
    int base = (2 * t + role) * b_;
    uint64_t v = 0;
    for (int j = 0; j < b_; ++j) v = (v << 1) | static_cast<uint64_t>(get_bit(assignment_, base + j));
    return v;
}

uint64_t RandomSource::bits_consumed() const {
    return slot_based() ? fixed_seed_bits_ : bits_.bits_consumed();
}

SeedAccounting RandomSource::accounting() const {
    SeedAccounting acc;
    switch (kind_) {
        case Kind::IID:
            acc.kind = "iid";
            acc.construction = "iid";
            acc.seed_bits = 64;
            return acc;
        case Kind::KWise: acc.kind = "kwise"; break;
        case Kind::SmallBias: acc.kind = "smallbias"; break;
    }
    acc.m = space_->m;
    acc.kprime = space_->k;
    acc.eps = space_->eps;
    acc.delta = space_->delta;
    acc.h = space_->h;
    acc.seed_bits = space_->seed_bits;
    acc.construction = space_->construction;
    return acc;
}

// --- seed budget -------------------------------------------------------------

SeedBudgetReport seed_budget(int n, int k, int b, const Rat& delta) {
    if (n < 2 || k < 1 || b < 1) throw ObmError("seed_budget: bad parameters");
    if (delta <= 0 || delta >= 1) throw ObmError("seed_budget: delta must be in (0, 1)");
    SeedBudgetReport rep;
    rep.n = n;
    rep.k = k;
    rep.b = b;
    rep.delta = delta;
    rep.kprime = b * (1 << (k + 2));
    rep.m = 2 * b * n * k;  // two b-bit slots per arrival, at most n*k relevant arrivals
    rep.eps = delta / pow2(static_cast<unsigned>(rep.kprime / 2));

    SmallBiasSpace space = make_small_bias_space(rep.m, rep.kprime, rep.eps);
    rep.h = space.h;
    rep.seed_bits = space.seed_bits;
    rep.log2log2_m = std::log2(std::log2(static_cast<double>(rep.m)));
    double denom = rep.kprime + std::log2(1.0 / to_double(delta));
    rep.constant_C = (rep.seed_bits - rep.log2log2_m) / denom;
    rep.within_budget = rep.constant_C <= 8.0;
    return rep;
}

// --- dependency accounting -----------------------------------------------------

DependencyReport dependency_tracker(const FractionalTrace& trace, const LevelTable& table) {
    if (auto rep = check_maximal(trace); !rep.pass)
        throw ObmError("dependency_tracker: trace not maximal");
    if (auto rep = classify_klevel_steps(trace, table); !rep.pass)
        throw ObmError("dependency_tracker: trace is not k-level (" + rep.detail + ")");

    int n = trace.instance.n;
    int k = table.k;
    DependencyReport rep;
    rep.edge_bound = 1 << (k + 2);
    rep.max_free_slots_per_level.assign(k + 1, 0);
    rep.level_bound.assign(k + 1, 0);
    for (int l = 0; l <= k; ++l) rep.level_bound[l] = (1 << (l + 1)) - 2;

    std::vector<std::set<int>> dep(n);

    auto check_edge = [&](int t, int node, const std::set<int>& slots) {
        rep.max_edge_slots = std::max(rep.max_edge_slots, static_cast<int>(slots.size()));
        if (static_cast<int>(slots.size()) > rep.edge_bound) {
            rep.pass = false;
            rep.violations.push_back("edge (" + std::to_string(node) + "," + std::to_string(t) +
                                     ") depends on " + std::to_string(slots.size()) + " slots");
        }
    };
    std::vector<Rat> deg(n, Rat(0));
    auto check_level = [&](int t, int node) {
        auto lvl = table.level_of(deg[node]);
        if (!lvl || *lvl > k) return;  // degree 1 clears its dependence set
        int count = static_cast<int>(dep[node].size());
        rep.max_free_slots_per_level[*lvl] = std::max(rep.max_free_slots_per_level[*lvl], count);
        if (count > rep.level_bound[*lvl]) {
            rep.pass = false;
            rep.violations.push_back("node " + std::to_string(node) + " at level " +
                                     std::to_string(*lvl) + " depends on " + std::to_string(count) +
                                     " slots after arrival " + std::to_string(t));
        }
    };
    for (const StepRecord& step : trace.steps) {
        std::vector<StepSlot> pt;
        for (const StepSlot* slot : {&step.a, &step.b})
            if (slot->in_pt()) pt.push_back(*slot);

        if (pt.empty()) continue;
        int slot_a = 2 * step.t, slot_b = 2 * step.t + 1;

        if (pt.size() == 1) {
            // Deterministic singleton: matched iff free; the sole-free coin
            // has threshold 1 and contributes nothing.
            int u = pt[0].node;
            check_edge(step.t, u, dep[u]);
            dep[u].clear();
        } else if (step.kind == StepKind::Shift) {
            // F_{u,t+1} = F_{v,t}; both matched-edge events are functions of
            // v's prior free status.
            int u = pt[0].node, v = pt[1].node;
            check_edge(step.t, u, dep[v]);
            check_edge(step.t, v, dep[v]);
            dep[u] = dep[v];
            dep[v].clear();
        } else {
            // Random step: F_{i,t+1} = F_i (F_j !A + !F_j !B).
            int u = pt[0].node, v = pt[1].node;
            std::set<int> joint = dep[u];
            joint.insert(dep[v].begin(), dep[v].end());
            joint.insert(slot_a);
            joint.insert(slot_b);
            check_edge(step.t, u, joint);
            check_edge(step.t, v, joint);
            dep[u] = joint;
            dep[v] = std::move(joint);
        }
        for (const StepSlot& slot : pt) {
            deg[slot.node] = slot.prior + slot.delta;
            if (deg[slot.node] == 1) dep[slot.node].clear();
        }
        for (const StepSlot& slot : pt) check_level(step.t, slot.node);
    }
    return rep;
}

}  // namespace obm
