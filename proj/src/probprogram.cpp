#include "obm/probprogram.hpp"

#include <algorithm>

namespace obm {

FeasibilityReport check_feasible(const ProbProgramSolution& sol, const ProbProgramInput& in) {
    FeasibilityReport rep;
    auto violated = [&](const std::string& name) {
        rep.ok = false;
        rep.violations.push_back(name);
    };
    if (sol.a1 + sol.a2 > 1) violated("(7) a1+a2 <= 1");
    if (sol.a1 < 0 || sol.a2 < 0) violated("(8) a_i >= 0");
    if (sol.b1 > 1 || sol.b2 > 1) violated("(9) b_i <= 1");
    if (sol.b1 < sol.a1 || sol.b2 < sol.a2) violated("(10) b_i >= a_i");
    if (sol.a2 < 1 && sol.b1 * (1 - sol.a2) > sol.a1) violated("(11) b_1 <= a_1/(1-a_2)");
    if (sol.a1 < 1 && sol.b2 * (1 - sol.a1) > sol.a2) violated("(11) b_2 <= a_2/(1-a_1)");
    if (sol.a1 * in.p12 + sol.b1 * (1 - in.x1 - in.p12) != in.dx1) violated("(12) marginal for node 1");
    if (sol.a2 * in.p12 + sol.b2 * (1 - in.x2 - in.p12) != in.dx2) violated("(12) marginal for node 2");
    return rep;
}

namespace {

struct Side {
    Rat dx, x;
    Rat a0, b0;      // initial point
    Rat fa, fb;      // floor point
};

Side make_side(const Rat& dx, const Rat& x, const Rat& p12) {
    Side s;
    s.dx = dx;
    s.x = x;
    Rat u = 1 - x;
    s.a0 = s.b0 = (u == 0) ? Rat(0) : dx / u;
    if (p12 == 0) {
        // Constraint (12) degenerates to b_i*(1-x_i) = dx_i with a_i free;
        // the floor is the continuous limit a = 0, b unchanged.
        s.fa = 0;
        s.fb = s.b0;
        return s;
    }
    Rat raw = (dx - (u - p12)) / p12;
    if (raw > 0) {
        s.fa = raw;
        s.fb = 1;
    } else {
        s.fa = 0;
        s.fb = (u == p12) ? Rat(0) : dx / (u - p12);
    }
    return s;
}

}  // namespace

ProbProgramSolution solve(const ProbProgramInput& in) {
    auto fail = [](const std::string& which) {
        throw ObmError("prob-program: infeasible input, violated " + which);
    };
    if (in.dx1 < 0 || in.dx1 > 1 - in.x1) fail("0 <= dx1 <= 1-x1");
    if (in.dx2 < 0 || in.dx2 > 1 - in.x2) fail("0 <= dx2 <= 1-x2");
    if (in.dx1 + in.dx2 > 1 - in.x1 * in.x2) fail("soundness dx1+dx2 <= 1-x1*x2");
    if (in.p12 < 0) fail("p12 >= 0");
    if (in.p12 > std::min(1 - in.x1, 1 - in.x2)) fail("p12 <= min(1-x1, 1-x2)");
    if (1 - in.x1 - in.p12 == 0 && in.dx1 > in.p12) fail("dx1 <= p12 when 1-x1-p12 = 0");
    if (1 - in.x2 - in.p12 == 0 && in.dx2 > in.p12) fail("dx2 <= p12 when 1-x2-p12 = 0");

    Side s1 = make_side(in.dx1, in.x1, in.p12);
    Side s2 = make_side(in.dx2, in.x2, in.p12);

    if (s1.a0 + s2.a0 <= 1) return {s1.a0, s2.a0, s1.b0, s2.b0};

    Rat init_sum = s1.a0 + s2.a0;
    Rat floor_sum = s1.fa + s2.fa;
    if (floor_sum > 1) {
        // No lambda reaches a_1 + a_2 = 1 (possible only when p12 exceeds
        // (1-x1)(1-x2)); the floor point is the best available.
        return {s1.fa, s2.fa, s1.fb, s2.fb};
    }
    Rat lambda = (init_sum - 1) / (init_sum - floor_sum);
    auto mix = [&](const Rat& from, const Rat& to) { return from + lambda * (to - from); };
    return {mix(s1.a0, s1.fa), mix(s2.a0, s2.fa), mix(s1.b0, s1.fb), mix(s2.b0, s2.fb)};
}

ProbProgramSolution maximal_closed_form(const Rat& dx1, const Rat& dx2, const Rat& x1, const Rat& x2) {
    if (x1 == 1 || x2 == 1)
        throw ObmError("maximal_closed_form: degree-1 node; use the singleton path");
    if (dx1 + dx2 != 1 - x1 * x2) throw ObmError("maximal_closed_form: input not maximal");
    Rat pair_free = (1 - x1) * (1 - x2);
    return {(1 - x2 - dx2) / pair_free, (1 - x1 - dx1) / pair_free, Rat(1), Rat(1)};
}

}  // namespace obm
