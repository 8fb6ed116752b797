#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obm/instance.hpp"
#include "obm/rational.hpp"

namespace obm {

enum class StepKind { Deterministic, Random, Shift, Noop, Unclassified };

const char* step_kind_name(StepKind k);

// One side of the (at most two) offline slots an arrival touches.
// node == kDummy marks a virtual dummy neighbor: degree 1, delta 0. Dummies
// exist only inside step computation and are never matched or exported.
struct StepSlot {
    static constexpr int kDummy = -1;
    int node = kDummy;
    Rat prior = Rat(1);
    Rat delta = Rat(0);

    bool is_dummy() const { return node == kDummy; }
    bool in_pt() const { return !is_dummy() && delta > 0; }
};

// Per-arrival record. P_t = slots with positive delta; slot `a` sorts before
// slot `b` by (prior degree, node index), matching the algorithms' labeling.
struct StepRecord {
    int t = 0;
    StepKind kind = StepKind::Noop;
    StepSlot a, b;

    int pt_size() const { return (a.in_pt() ? 1 : 0) + (b.in_pt() ? 1 : 0); }
};

// Level values z_0 = 0 < z_1 < ... < z_k < z_{k+1} = 1.
struct LevelTable {
    int k = 0;
    std::vector<Rat> z;

    // z_i = z_{i-1} + (1 - z_{i-1}^2)/2, i.e. z_i = 1 - 2^(1 - 2^i).
    static LevelTable standard(int k);

    std::optional<int> level_of(const Rat& value) const;
    bool contains(const Rat& value) const { return level_of(value).has_value(); }
};

struct FractionalTrace {
    Instance instance;
    std::vector<StepRecord> steps;
    std::vector<Rat> final_degrees;
    Rat primal = Rat(0);  // sum_i w_i * x_i

    std::vector<Rat> degrees_before(int t) const;  // O(n + t), for tests/tools
};

enum class Algo { Water, KLevel, VW2 };

struct AlgoSelector {
    Algo algo = Algo::Water;
    int k = 2;  // levels, KLevel only

    static AlgoSelector water() { return {Algo::Water, 0}; }
    static AlgoSelector klevel(int k) { return {Algo::KLevel, k}; }
    static AlgoSelector vw2() { return {Algo::VW2, 0}; }
    std::string name() const;
};

// --- single-arrival step rules -------------------------------------------

// Water level on the two lowest-degree neighbors (ties by lowest index):
// both rise to x_f = (x1 + x2 + 1 - x1*x2)/2.
StepRecord water_level_step(int t, const std::vector<std::pair<int, Rat>>& neighbor_degrees);

// k-level rule: strictly smaller first degree (or first degree at z_k) jumps
// to 1; an equal pair below z_k rises one level; a pair at 1 is a no-op.
StepRecord klevel_step(int t, const std::vector<std::pair<int, Rat>>& neighbor_degrees,
                       const LevelTable& table);

// Vertex-weighted 2-level rule of the seven-case table. Selection is by
// slack w_i*(1 - x_i), labeling by degree (equal degrees: heavier second),
// thresholds normalized by w_1.
struct WeightedNeighbor {
    int node;
    Rat weight;
    Rat degree;
};
StepRecord vertex_weighted_step(int t, const std::vector<WeightedNeighbor>& neighbors);

// Runs the selected algorithm over the whole arrival sequence.
FractionalTrace run_fractional(const AlgoSelector& sel, const Instance& inst);

// Reinterprets hand-built per-arrival values as a trace (arrivals with at
// most two positive edges only).
FractionalTrace trace_from_values(const Instance& inst, const EdgeValues& values);

// Scales every delta by gamma < 1; the result of dampening a sound trace is
// sound but no longer maximal.
FractionalTrace dampen_trace(const FractionalTrace& trace, const Rat& gamma);

// --- validators ------------------------------------------------------------

struct CheckReport {
    bool pass = true;
    std::vector<int> violations;  // arrival indices
    std::string detail;
};

// Soundness: sum_{P_t} dx_i <= 1 - prod_{P_t} x_i for every arrival.
CheckReport check_sound(const FractionalTrace& trace);
// Maximality: the soundness inequality holds with equality whenever P_t is
// nonempty.
CheckReport check_maximal(const FractionalTrace& trace);

// Degrees within [0,1] and nondecreasing, per-arrival mass at most 1, slots
// are neighbors of t, dummies never gain mass.
CheckReport check_trace_feasible(const FractionalTrace& trace);

struct BbitReport {
    bool pass = true;
    std::vector<int> min_bits_per_arrival;  // -1 where no dyadic b suffices
    int required_bits = 0;
    std::vector<int> violations;
};

// Both rounding quantities dx_i/(1-x_i) and (1-x_i-dx_i)/((1-x1)(1-x2)) must
// be dyadic a/2^b. Reports the minimal sufficient b per arrival.
BbitReport check_bbit_precise(const FractionalTrace& trace, int b);

struct ClassifyReport {
    bool pass = true;
    std::vector<StepKind> kinds;
    std::vector<int> violations;
    std::string detail;
};

// Tags every step deterministic/random/shift/noop; errors if a step fits no
// rule or leaves the level set.
ClassifyReport classify_klevel_steps(const FractionalTrace& trace, const LevelTable& table);

// --- dual fitting -----------------------------------------------------------

struct DualFitConfig {
    enum class Kind { GBased, Constants } kind = Kind::Constants;
    // GBased: y_i = g(x_i) with g(x) = (a^x - 1)/(a - 1), evaluated in double
    // precision (the only non-rational computation in the library).
    double g_base = 1.6;
    // Constants: y(z_1) = y1, y(z_2) = y2, plus y(0) = 0, y(1) = 1.
    Rat y1, y2;
    bool vertex_weighted = false;
    // Target worst-case primal/dual ratio (dP/dD >= target).
    Rat target;

    static DualFitConfig two_level_unweighted();  // y1 = 17/38, y2 = 67/76, target 19/36
    static DualFitConfig vw();                    // y1 = 5/11,  y2 = 79/88, target 11/21
    static DualFitConfig g_based(double base);
};

struct DualLedger {
    std::vector<Rat> y_offline;  // final offline duals (constants mode)
    std::vector<Rat> y_online;   // per-arrival duals
    std::vector<Rat> dP, dD;     // per-step changes
    std::vector<double> dP_f, dD_f;
};

struct DualCertificate {
    DualFitConfig::Kind kind;
    DualLedger ledger;
    bool feasible = true;
    std::string infeasible_edge;
    bool has_exact_ratio = false;
    Rat worst_ratio;        // min over steps of dP/dD (constants mode)
    double worst_ratio_f = 0;  // same, as double (both modes)
    bool meets_target = true;
};

// Maintains y_i = g(x_i) (or the level constants) and the per-arrival duals
// of the respective competitive analyses, asserts dual feasibility on all
// revealed edges, and reports the worst per-step dP/dD. By weak duality the
// primal is at least worst_ratio * OPT when the certificate is feasible.
DualCertificate dual_fit_certificate(const FractionalTrace& trace, const DualFitConfig& cfg);

enum class AlphaMode { WaterLevel, KLevel };

// Numerical minimum over x in [0,1] of the competitive-ratio expressions for
// g(x) = (a^x - 1)/(a - 1); grid step 1e-5 with local ternary refinement to
// 1e-9. a -> 1 degenerates to g(x) = x.
double alpha_g(double base, AlphaMode mode);

// Exact value of the adversarial-instance ratio
//   sum_{i=0}^{k-1} (1/3)(2/3)^i (1 - 2^(1-2^i)) + (2/3)^k,
// which the water-level algorithm attains on gen_adversarial_waterlevel(k).
Rat hardness_ratio(int k);

// --- trace export ------------------------------------------------------------

// JSON lines, one record per arrival: t, P_t members, prior degrees, deltas,
// step kind, dP, dD (rationals as "p/q" strings; g-based duals as numbers).
std::string trace_to_jsonl(const FractionalTrace& trace, const DualCertificate* cert = nullptr);

// Inverse of trace_to_jsonl over the given instance. Slot priors, final
// degrees and the primal are rebuilt from the recorded deltas; malformed
// records throw.
FractionalTrace trace_from_jsonl(const Instance& inst, const std::string& jsonl);

}  // namespace obm
