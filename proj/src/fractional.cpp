#include "obm/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <sstream>

namespace obm {

const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::Deterministic: return "deterministic";
        case StepKind::Random: return "random";
        case StepKind::Shift: return "shift";
        case StepKind::Noop: return "noop";
        case StepKind::Unclassified: return "unclassified";
    }
    return "?";
}

LevelTable LevelTable::standard(int k) {
    if (k < 1 || k > 16) throw ObmError("LevelTable: k must be in [1, 16]");
    LevelTable table;
    table.k = k;
    table.z.push_back(Rat(0));
    for (int i = 1; i <= k; ++i) {
        // z_i = 1 - 2^(1 - 2^i)
        table.z.push_back(Rat(1) - Rat(BigInt(2), BigInt(1) << (1u << i)));
    }
    table.z.push_back(Rat(1));
    return table;
}

std::optional<int> LevelTable::level_of(const Rat& value) const {
    for (size_t i = 0; i < z.size(); ++i)
        if (z[i] == value) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<Rat> FractionalTrace::degrees_before(int t) const {
    std::vector<Rat> deg(instance.n, Rat(0));
    for (int s = 0; s < t && s < static_cast<int>(steps.size()); ++s) {
        for (const StepSlot* slot : {&steps[s].a, &steps[s].b})
            if (!slot->is_dummy()) deg[slot->node] += slot->delta;
    }
    return deg;
}

std::string AlgoSelector::name() const {
    switch (algo) {
        case Algo::Water: return "water";
        case Algo::KLevel: return "klevel:" + std::to_string(k);
        case Algo::VW2: return "vw2";
    }
    return "?";
}

namespace {

struct Picked {
    int node = StepSlot::kDummy;
    Rat degree = Rat(1);
};

// Two lowest-degree neighbors, ties by lowest index, dummies (degree 1) when
// fewer than two neighbors exist.
std::pair<Picked, Picked> pick_two_lowest(const std::vector<std::pair<int, Rat>>& neighbors) {
    std::vector<Picked> all;
    for (const auto& [node, deg] : neighbors) all.push_back({node, deg});
    std::sort(all.begin(), all.end(), [](const Picked& a, const Picked& b) {
        if (a.degree != b.degree) return a.degree < b.degree;
        return a.node < b.node;
    });
    while (all.size() < 2) all.push_back({});
    return {all[0], all[1]};
}

StepKind classify_structural(const StepSlot& a, const StepSlot& b) {
    int pt = (a.in_pt() ? 1 : 0) + (b.in_pt() ? 1 : 0);
    if (pt == 0) return StepKind::Noop;
    if (pt == 1) {
        const StepSlot& s = a.in_pt() ? a : b;
        return s.prior + s.delta == 1 ? StepKind::Deterministic : StepKind::Unclassified;
    }
    Rat na = a.prior + a.delta, nb = b.prior + b.delta;
    Rat hi = std::max(a.prior, b.prior);
    if (na > hi && nb > hi) return StepKind::Random;
    if (a.prior == 0 && b.prior > 0 && b.prior < 1 && na == b.prior && nb == 1) return StepKind::Shift;
    return StepKind::Unclassified;
}

}  // namespace

StepRecord water_level_step(int t, const std::vector<std::pair<int, Rat>>& neighbor_degrees) {
    auto [p1, p2] = pick_two_lowest(neighbor_degrees);
    Rat x1 = p1.degree, x2 = p2.degree;
    Rat xf = (x1 + x2 + 1 - x1 * x2) / 2;

    StepRecord rec;
    rec.t = t;
    rec.a = {p1.node, x1, xf - x1};
    rec.b = {p2.node, x2, xf - x2};
    if (p1.node == StepSlot::kDummy) rec.a.delta = 0;
    if (p2.node == StepSlot::kDummy) rec.b.delta = 0;
    rec.kind = classify_structural(rec.a, rec.b);
    return rec;
}

StepRecord klevel_step(int t, const std::vector<std::pair<int, Rat>>& neighbor_degrees,
                       const LevelTable& table) {
    for (const auto& [node, deg] : neighbor_degrees)
        if (!table.contains(deg))
            throw ObmError("klevel_step: degree " + rat_to_string(deg) + " of node " +
                           std::to_string(node) + " not in level table");

    auto [p1, p2] = pick_two_lowest(neighbor_degrees);
    Rat x1 = p1.degree, x2 = p2.degree;
    const Rat& zk = table.z[table.k];

    StepRecord rec;
    rec.t = t;
    rec.a = {p1.node, x1, Rat(0)};
    rec.b = {p2.node, x2, Rat(0)};
    if (x1 == 1) {
        rec.kind = StepKind::Noop;
    } else if (x1 < x2 || x1 == zk) {
        rec.a.delta = Rat(1) - x1;
        rec.kind = StepKind::Deterministic;
    } else {
        // x1 == x2 == z_i < z_k: one joint level raise.
        int level = *table.level_of(x1);
        rec.a.delta = table.z[level + 1] - x1;
        rec.b.delta = table.z[level + 1] - x2;
        rec.kind = StepKind::Random;
    }
    return rec;
}

StepRecord vertex_weighted_step(int t, const std::vector<WeightedNeighbor>& neighbors) {
    static const Rat kHalf(1, 2), kSeven8(7, 8);
    for (const auto& nb : neighbors)
        if (nb.degree != 0 && nb.degree != kHalf && nb.degree != kSeven8 && nb.degree != 1)
            throw ObmError("vertex_weighted_step: degree " + rat_to_string(nb.degree) +
                           " outside level set {0, 1/2, 7/8, 1}");

    // Two neighbors of maximal slack w*(1-x), ties by lowest index.
    std::vector<WeightedNeighbor> all = neighbors;
    std::sort(all.begin(), all.end(), [](const WeightedNeighbor& a, const WeightedNeighbor& b) {
        Rat sa = a.weight * (1 - a.degree), sb = b.weight * (1 - b.degree);
        if (sa != sb) return sa > sb;
        return a.node < b.node;
    });
    while (all.size() < 2) all.push_back({StepSlot::kDummy, Rat(1), Rat(1)});
    WeightedNeighbor n1 = all[0], n2 = all[1];

    // Label by degree; for equal degrees, the heavier node is second.
    if (n1.degree > n2.degree || (n1.degree == n2.degree && n1.weight > n2.weight) ||
        (n1.degree == n2.degree && n1.weight == n2.weight && n1.node > n2.node))
        std::swap(n1, n2);

    StepRecord rec;
    rec.t = t;
    rec.a = {n1.node, n1.degree, Rat(0)};
    rec.b = {n2.node, n2.degree, Rat(0)};

    auto raise_a_to = [&](const Rat& v) { rec.a.delta = v - n1.degree; };
    auto raise_b_to = [&](const Rat& v) { rec.b.delta = v - n2.degree; };
    // Thresholds are stated for w_1 = 1; compare w_2 against threshold * w_1.
    auto w2_at_most = [&](const Rat& threshold) { return n2.weight <= threshold * n1.weight; };

    const Rat& x1 = n1.degree;
    const Rat& x2 = n2.degree;
    if (x1 == 1) {
        rec.kind = StepKind::Noop;
    } else if (x2 == 1) {
        raise_a_to(Rat(1));
        rec.kind = StepKind::Deterministic;
    } else if (x1 == 0 && x2 == 0) {
        if (w2_at_most(Rat(11, 6))) {  // 1/(1-y_1)
            raise_a_to(kHalf);
            raise_b_to(kHalf);
            rec.kind = StepKind::Random;
        } else {
            raise_b_to(Rat(1));
            rec.kind = StepKind::Deterministic;
        }
    } else if (x1 == kHalf && x2 == kHalf) {
        if (w2_at_most(Rat(16, 3))) {  // (1-y_1)/(1-y_2)
            raise_a_to(kSeven8);
            raise_b_to(kSeven8);
            rec.kind = StepKind::Random;
        } else {
            raise_b_to(Rat(1));
            rec.kind = StepKind::Deterministic;
        }
    } else if (x1 == kSeven8 && x2 == kSeven8) {
        if (w2_at_most(Rat(1)))
            raise_a_to(Rat(1));
        else
            raise_b_to(Rat(1));
        rec.kind = StepKind::Deterministic;
    } else if (x1 == 0 && x2 == kHalf) {
        if (w2_at_most(Rat(3, 2))) {
            raise_a_to(Rat(1));
            rec.kind = StepKind::Deterministic;
        } else {
            raise_a_to(kHalf);
            raise_b_to(Rat(1));
            rec.kind = StepKind::Shift;
        }
    } else if (x1 == 0 && x2 == kSeven8) {
        if (w2_at_most(Rat(11, 2))) {
            raise_a_to(Rat(1));
            rec.kind = StepKind::Deterministic;
        } else {
            raise_a_to(kSeven8);
            raise_b_to(Rat(1));
            rec.kind = StepKind::Shift;
        }
    } else {  // x1 == 1/2, x2 == 7/8
        if (w2_at_most(Rat(4)))
            raise_a_to(Rat(1));
        else
            raise_b_to(Rat(1));
        rec.kind = StepKind::Deterministic;
    }
    return rec;
}

FractionalTrace run_fractional(const AlgoSelector& sel, const Instance& inst) {
    inst.validate();
    FractionalTrace trace;
    trace.instance = inst;
    std::vector<Rat> deg(inst.n, Rat(0));

    LevelTable table;
    if (sel.algo == Algo::KLevel) table = LevelTable::standard(sel.k);

    for (int t = 0; t < inst.num_arrivals(); ++t) {
        StepRecord rec;
        if (sel.algo == Algo::VW2) {
            std::vector<WeightedNeighbor> nb;
            for (int u : inst.arrivals[t]) nb.push_back({u, inst.weights[u], deg[u]});
            rec = vertex_weighted_step(t, nb);
        } else {
            std::vector<std::pair<int, Rat>> nb;
            for (int u : inst.arrivals[t]) nb.push_back({u, deg[u]});
            rec = sel.algo == Algo::Water ? water_level_step(t, nb) : klevel_step(t, nb, table);
        }
        for (const StepSlot* slot : {&rec.a, &rec.b})
            if (!slot->is_dummy()) deg[slot->node] += slot->delta;
        trace.steps.push_back(std::move(rec));
    }

    trace.final_degrees = deg;
    for (int i = 0; i < inst.n; ++i) trace.primal += inst.weights[i] * deg[i];
    return trace;
}

FractionalTrace trace_from_values(const Instance& inst, const EdgeValues& values) {
    inst.validate();
    if (values.per_arrival.size() != inst.arrivals.size())
        throw ObmError("trace_from_values: arrival count mismatch");

    FractionalTrace trace;
    trace.instance = inst;
    std::vector<Rat> deg(inst.n, Rat(0));
    for (int t = 0; t < inst.num_arrivals(); ++t) {
        std::vector<std::pair<int, Rat>> positive;
        for (const auto& [node, v] : values.per_arrival[t]) {
            if (v < 0) throw ObmError("trace_from_values: negative value");
            if (v > 0) positive.push_back({node, v});
        }
        if (positive.size() > 2) throw ObmError("trace_from_values: more than two positive edges at arrival " +
                                                std::to_string(t));
        std::sort(positive.begin(), positive.end(), [&](const auto& l, const auto& r) {
            if (deg[l.first] != deg[r.first]) return deg[l.first] < deg[r.first];
            return l.first < r.first;
        });
        StepRecord rec;
        rec.t = t;
        if (positive.size() >= 1) rec.a = {positive[0].first, deg[positive[0].first], positive[0].second};
        if (positive.size() >= 2) rec.b = {positive[1].first, deg[positive[1].first], positive[1].second};
        rec.kind = classify_structural(rec.a, rec.b);
        for (const StepSlot* slot : {&rec.a, &rec.b})
            if (!slot->is_dummy()) deg[slot->node] += slot->delta;
        trace.steps.push_back(std::move(rec));
    }
    trace.final_degrees = deg;
    for (int i = 0; i < inst.n; ++i) trace.primal += inst.weights[i] * deg[i];
    return trace;
}

FractionalTrace dampen_trace(const FractionalTrace& trace, const Rat& gamma) {
    if (gamma <= 0 || gamma >= 1) throw ObmError("dampen_trace: gamma must be in (0, 1)");
    FractionalTrace out;
    out.instance = trace.instance;
    for (const StepRecord& s : trace.steps) {
        StepRecord r = s;
        for (StepSlot* slot : {&r.a, &r.b}) {
            if (slot->is_dummy()) continue;
            slot->prior *= gamma;
            slot->delta *= gamma;
        }
        r.kind = classify_structural(r.a, r.b);
        out.steps.push_back(std::move(r));
    }
    for (const Rat& d : trace.final_degrees) out.final_degrees.push_back(d * gamma);
    out.primal = trace.primal * gamma;
    return out;
}

CheckReport check_sound(const FractionalTrace& trace) {
    CheckReport rep;
    for (const StepRecord& s : trace.steps) {
        Rat sum = 0, prod = 1;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (!slot->in_pt()) continue;
            sum += slot->delta;
            prod *= slot->prior;
        }
        if (s.pt_size() > 0 && sum > 1 - prod) {
            rep.pass = false;
            rep.violations.push_back(s.t);
            if (rep.detail.empty())
                rep.detail = "arrival " + std::to_string(s.t) + ": sum " + rat_to_string(sum) +
                             " > " + rat_to_string(Rat(1) - prod);
        }
    }
    return rep;
}

CheckReport check_maximal(const FractionalTrace& trace) {
    CheckReport rep;
    for (const StepRecord& s : trace.steps) {
        if (s.pt_size() == 0) continue;
        Rat sum = 0, prod = 1;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (!slot->in_pt()) continue;
            sum += slot->delta;
            prod *= slot->prior;
        }
        if (sum != 1 - prod) {
            rep.pass = false;
            rep.violations.push_back(s.t);
            if (rep.detail.empty())
                rep.detail = "arrival " + std::to_string(s.t) + ": sum " + rat_to_string(sum) +
                             " != " + rat_to_string(Rat(1) - prod);
        }
    }
    return rep;
}

CheckReport check_trace_feasible(const FractionalTrace& trace) {
    CheckReport rep;
    const Instance& inst = trace.instance;
    std::vector<Rat> deg(inst.n, Rat(0));
    auto fail = [&](int t, const std::string& why) {
        rep.pass = false;
        rep.violations.push_back(t);
        if (rep.detail.empty()) rep.detail = "arrival " + std::to_string(t) + ": " + why;
    };
    for (const StepRecord& s : trace.steps) {
        Rat mass = 0;
        if (!s.a.is_dummy() && !s.b.is_dummy() && s.a.node == s.b.node) fail(s.t, "duplicate slot node");
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (slot->is_dummy()) {
                if (slot->delta != 0) fail(s.t, "dummy with positive delta");
                continue;
            }
            const auto& nb = inst.arrivals[s.t];
            if (std::find(nb.begin(), nb.end(), slot->node) == nb.end()) fail(s.t, "slot is not a neighbor");
            if (slot->prior != deg[slot->node]) fail(s.t, "prior degree mismatch");
            if (slot->delta < 0) fail(s.t, "negative delta");
            deg[slot->node] += slot->delta;
            if (deg[slot->node] > 1) fail(s.t, "degree exceeds 1");
            mass += slot->delta;
        }
        if (mass > 1) fail(s.t, "arrival mass exceeds 1");
    }
    if (trace.final_degrees != deg) {
        rep.pass = false;
        if (rep.detail.empty()) rep.detail = "final degrees mismatch";
    }
    return rep;
}

BbitReport check_bbit_precise(const FractionalTrace& trace, int b) {
    BbitReport rep;
    for (const StepRecord& s : trace.steps) {
        int needed = 0;
        bool dyadic = true;
        auto account = [&](const Rat& v) {
            if (v < 0 || v > 1) {
                dyadic = false;
                return;
            }
            auto bits = dyadic_bits(v);
            if (!bits)
                dyadic = false;
            else
                needed = std::max(needed, static_cast<int>(*bits));
        };

        if (s.pt_size() > 0) {
            // The rounding pair is P_t padded with a dummy (degree 1, delta 0)
            // when only one node is increased; untouched real neighbors play
            // no role in Def 3.3's quantities.
            StepSlot p1 = s.a.in_pt() ? s.a : StepSlot{};
            StepSlot p2 = s.b.in_pt() ? s.b : StepSlot{};
            Rat pair_free = (1 - p1.prior) * (1 - p2.prior);
            for (const StepSlot* slot : {&p1, &p2}) {
                if (slot->delta == 0) {
                    // Dummy partner: both quantities degenerate to 0.
                } else if (slot->prior == 1) {
                    throw ObmError("check_bbit_precise: arrival " + std::to_string(s.t) +
                                   " increases a node of degree 1");
                } else {
                    account(slot->delta / (1 - slot->prior));
                }
                if (pair_free != 0) account((1 - slot->prior - slot->delta) / pair_free);
            }
        }
        rep.min_bits_per_arrival.push_back(dyadic ? needed : -1);
        if (!dyadic || needed > b) {
            rep.pass = false;
            rep.violations.push_back(s.t);
        }
        if (dyadic) rep.required_bits = std::max(rep.required_bits, needed);
    }
    return rep;
}

ClassifyReport classify_klevel_steps(const FractionalTrace& trace, const LevelTable& table) {
    ClassifyReport rep;
    for (const StepRecord& s : trace.steps) {
        bool in_table = true;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (slot->is_dummy()) continue;
            if (!table.contains(slot->prior) || !table.contains(slot->prior + slot->delta)) in_table = false;
        }
        StepKind kind = in_table ? classify_structural(s.a, s.b) : StepKind::Unclassified;
        rep.kinds.push_back(kind);
        if (kind == StepKind::Unclassified) {
            rep.pass = false;
            rep.violations.push_back(s.t);
            if (rep.detail.empty())
                rep.detail = "arrival " + std::to_string(s.t) +
                             (in_table ? ": no step rule matches" : ": degree outside level table");
        }
    }
    return rep;
}

// --- dual fitting ------------------------------------------------------------

DualFitConfig DualFitConfig::two_level_unweighted() {
    DualFitConfig cfg;
    cfg.kind = Kind::Constants;
    cfg.y1 = Rat(17, 38);
    cfg.y2 = Rat(67, 76);
    cfg.vertex_weighted = false;
    cfg.target = Rat(19, 36);
    return cfg;
}

DualFitConfig DualFitConfig::vw() {
    DualFitConfig cfg;
    cfg.kind = Kind::Constants;
    cfg.y1 = Rat(5, 11);
    cfg.y2 = Rat(79, 88);
    cfg.vertex_weighted = true;
    cfg.target = Rat(11, 21);
    return cfg;
}

DualFitConfig DualFitConfig::g_based(double base) {
    DualFitConfig cfg;
    cfg.kind = Kind::GBased;
    cfg.g_base = base;
    cfg.target = 0;
    return cfg;
}

namespace {

Rat level_dual(const DualFitConfig& cfg, const Rat& x) {
    static const Rat kHalf(1, 2), kSeven8(7, 8);
    if (x == 0) return Rat(0);
    if (x == kHalf) return cfg.y1;
    if (x == kSeven8) return cfg.y2;
    if (x == 1) return Rat(1);
    throw ObmError("dual_fit_certificate: degree " + rat_to_string(x) + " has no level dual");
}

DualCertificate constants_certificate(const FractionalTrace& trace, const DualFitConfig& cfg) {
    const Instance& inst = trace.instance;
    DualCertificate cert;
    cert.kind = DualFitConfig::Kind::Constants;
    cert.has_exact_ratio = true;

    auto weight_of = [&](const StepSlot& s) { return cfg.vertex_weighted ? inst.weights[s.node] : Rat(1); };

    bool have_ratio = false;
    Rat worst;
    for (const StepRecord& s : trace.steps) {
        Rat yt = 0, dD = 0, dP = 0;
        if (s.pt_size() == 0) {
            cert.ledger.y_online.push_back(yt);
            cert.ledger.dP.push_back(dP);
            cert.ledger.dD.push_back(dD);
            continue;
        }
        if (cfg.vertex_weighted) {
            // y_t covers unselected neighbors via the smaller pre-step slack
            // of the selected pair, and the pair itself via post-step slacks.
            auto pre_slack = [&](const StepSlot& sl) {
                return sl.is_dummy() ? Rat(0) : weight_of(sl) * (1 - level_dual(cfg, sl.prior));
            };
            auto post_slack = [&](const StepSlot& sl) {
                return sl.is_dummy() ? Rat(0) : weight_of(sl) * (1 - level_dual(cfg, sl.prior + sl.delta));
            };
            yt = std::max(std::min(pre_slack(s.a), pre_slack(s.b)),
                          std::max(post_slack(s.a), post_slack(s.b)));
        } else {
            yt = 1 - level_dual(cfg, s.b.prior);
        }
        dD = yt;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (slot->is_dummy()) continue;
            Rat w = weight_of(*slot);
            dD += w * (level_dual(cfg, slot->prior + slot->delta) - level_dual(cfg, slot->prior));
            dP += w * slot->delta;
        }
        cert.ledger.y_online.push_back(yt);
        cert.ledger.dP.push_back(dP);
        cert.ledger.dD.push_back(dD);
        if (dD > 0) {
            Rat ratio = dP / dD;
            if (!have_ratio || ratio < worst) {
                worst = ratio;
                have_ratio = true;
            }
        }
    }

    cert.worst_ratio = have_ratio ? worst : Rat(1);
    cert.worst_ratio_f = to_double(cert.worst_ratio);
    cert.meets_target = cert.worst_ratio >= cfg.target;

    for (int i = 0; i < inst.n; ++i)
        cert.ledger.y_offline.push_back((cfg.vertex_weighted ? inst.weights[i] : Rat(1)) *
                                        level_dual(cfg, trace.final_degrees[i]));
    for (int t = 0; t < inst.num_arrivals(); ++t) {
        for (int i : inst.arrivals[t]) {
            Rat wi = cfg.vertex_weighted ? inst.weights[i] : Rat(1);
            if (cert.ledger.y_offline[i] + cert.ledger.y_online[t] < wi) {
                cert.feasible = false;
                cert.infeasible_edge = "(" + std::to_string(i) + "," + std::to_string(t) + ")";
                return cert;
            }
        }
    }
    return cert;
}

DualCertificate gbased_certificate(const FractionalTrace& trace, const DualFitConfig& cfg) {
    const Instance& inst = trace.instance;
    for (const Rat& w : inst.weights)
        if (w != 1) throw ObmError("dual_fit_certificate: g-based duals require unit weights");

    double a = cfg.g_base;
    auto g = [a](double x) { return a <= 1.0 ? x : (std::pow(a, x) - 1.0) / (a - 1.0); };

    DualCertificate cert;
    cert.kind = DualFitConfig::Kind::GBased;
    double worst = 2.0;
    std::vector<Rat> yt_arg(trace.steps.size(), Rat(1));  // x_2 before the step

    for (const StepRecord& s : trace.steps) {
        double dP = 0, dD = 0;
        if (s.pt_size() > 0) {
            yt_arg[s.t] = s.b.prior;
            dD = 1.0 - g(to_double(s.b.prior));
            for (const StepSlot* slot : {&s.a, &s.b}) {
                if (slot->is_dummy()) continue;
                dD += g(to_double(slot->prior + slot->delta)) - g(to_double(slot->prior));
                dP += to_double(slot->delta);
            }
            if (dD > 0) worst = std::min(worst, dP / dD);
        }
        cert.ledger.dP_f.push_back(dP);
        cert.ledger.dD_f.push_back(dD);
    }
    cert.worst_ratio_f = worst;

    // Feasibility g(x_i, final) + 1 - g(x_2, pre) >= 1 reduces to the exact
    // comparison x_i >= x_2 since g is strictly increasing.
    for (int t = 0; t < inst.num_arrivals(); ++t) {
        for (int i : inst.arrivals[t]) {
            if (trace.final_degrees[i] < yt_arg[t]) {
                cert.feasible = false;
                cert.infeasible_edge = "(" + std::to_string(i) + "," + std::to_string(t) + ")";
                return cert;
            }
        }
    }
    return cert;
}

}  // namespace

DualCertificate dual_fit_certificate(const FractionalTrace& trace, const DualFitConfig& cfg) {
    return cfg.kind == DualFitConfig::Kind::Constants ? constants_certificate(trace, cfg)
                                                      : gbased_certificate(trace, cfg);
}

namespace {

double minimize_expr(const std::function<double(double)>& f) {
    const double step = 1e-5;
    double best_x = 0, best = f(0);
    for (int i = 1; i <= 100000; ++i) {
        double x = i == 100000 ? 1.0 : i * step;
        double v = f(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    double lo = std::max(0.0, best_x - step), hi = std::min(1.0, best_x + step);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (f(m1) <= f(m2))
            hi = m2;
        else
            lo = m1;
    }
    for (double x : {lo, (lo + hi) / 2, hi}) best = std::min(best, f(x));
    return best;
}

}  // namespace

double alpha_g(double base, AlphaMode mode) {
    bool linear = base <= 1.0;
    auto g = [base, linear](double x) { return linear ? x : (std::pow(base, x) - 1.0) / (base - 1.0); };
    double gp1 = linear ? 1.0 : base * std::log(base) / (base - 1.0);

    auto water = [&](double x) {
        if (x >= 1.0) return 2.0 / (3.0 * gp1);
        double num = 1.0 - x * x;
        double den = 1.0 - 3.0 * g(x) + 2.0 * g(x + num / 2.0);
        return num / den;
    };
    auto klevel = [&](double x) {
        if (x >= 1.0) return 1.0 / gp1;
        double num = 1.0 - x;
        double den = 2.0 - g(x) - g(x + (1.0 - x * x) / 2.0);
        return num / den;
    };

    double result = minimize_expr(water);
    if (mode == AlphaMode::KLevel) result = std::min(result, minimize_expr(klevel));
    return result;
}

Rat hardness_ratio(int k) {
    if (k < 0 || k > 12) throw ObmError("hardness_ratio: k must be in [0, 12]");
    Rat sum = 0;
    Rat third(1, 3), two_thirds(2, 3);
    Rat geo(1);
    for (int i = 0; i < k; ++i) {
        Rat z_i = Rat(1) - Rat(BigInt(2), BigInt(1) << (1u << i));
        sum += third * geo * z_i;
        geo *= two_thirds;
    }
    return sum + geo;  // geo == (2/3)^k
}

std::string trace_to_jsonl(const FractionalTrace& trace, const DualCertificate* cert) {
    std::ostringstream out;
    for (const StepRecord& s : trace.steps) {
        nlohmann::ordered_json rec;
        rec["t"] = s.t;
        nlohmann::ordered_json members = nlohmann::ordered_json::array();
        Rat dP = 0;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (!slot->in_pt()) continue;
            members.push_back({{"node", slot->node},
                               {"prior", rat_to_string(slot->prior)},
                               {"delta", rat_to_string(slot->delta)}});
            dP += trace.instance.weights[slot->node] * slot->delta;
        }
        rec["P_t"] = members;
        rec["kind"] = step_kind_name(s.kind);
        rec["dP"] = rat_to_string(dP);
        if (cert) {
            if (cert->has_exact_ratio)
                rec["dD"] = rat_to_string(cert->ledger.dD[s.t]);
            else
                rec["dD"] = cert->ledger.dD_f[s.t];
        }
        out << rec.dump() << "\n";
    }
    return out.str();
}

FractionalTrace trace_from_jsonl(const Instance& inst, const std::string& jsonl) {
    inst.validate();
    FractionalTrace trace;
    trace.instance = inst;
    std::istringstream in(jsonl);
    std::string line;
    int t = 0;
    std::vector<Rat> deg(inst.n, Rat(0));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ObmError("trace line " + std::to_string(t + 1) + ": " + e.what());
        }
        StepRecord step;
        step.t = rec.value("t", t);
        std::vector<StepSlot> slots;
        for (const auto& m : rec.at("P_t")) {
            StepSlot slot;
            slot.node = m.at("node").get<int>();
            auto prior = rat_from_string(m.at("prior").get<std::string>());
            auto delta = rat_from_string(m.at("delta").get<std::string>());
            if (slot.node < 0 || slot.node >= inst.n || !prior || !delta)
                throw ObmError("trace line " + std::to_string(t + 1) + ": malformed member");
            slot.prior = *prior;
            slot.delta = *delta;
            slots.push_back(slot);
        }
        if (slots.size() > 2) throw ObmError("trace line " + std::to_string(t + 1) + ": |P_t| > 2");
        if (slots.size() >= 1) step.a = slots[0];
        if (slots.size() >= 2) step.b = slots[1];
        std::string kind = rec.value("kind", "unclassified");
        step.kind = StepKind::Unclassified;
        for (StepKind k : {StepKind::Deterministic, StepKind::Random, StepKind::Shift, StepKind::Noop})
            if (kind == step_kind_name(k)) step.kind = k;
        for (const StepSlot* slot : {&step.a, &step.b})
            if (!slot->is_dummy()) deg[slot->node] += slot->delta;
        trace.steps.push_back(std::move(step));
        ++t;
    }
    if (t != inst.num_arrivals()) throw ObmError("trace has " + std::to_string(t) + " records, instance has " +
                                                 std::to_string(inst.num_arrivals()) + " arrivals");
    trace.final_degrees = deg;
    for (int i = 0; i < inst.n; ++i) trace.primal += inst.weights[i] * deg[i];
    return trace;
}

}  // namespace obm
