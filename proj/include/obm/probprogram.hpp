#pragma once

#include <string>
#include <vector>

#include "obm/rational.hpp"

namespace obm {

// Inputs of the probability-setting program for one arrival: the two deltas,
// the two prior degrees, and the probability that both nodes are free.
struct ProbProgramInput {
    Rat dx1, dx2, x1, x2, p12;
};

// Matching probabilities: a_i when both nodes are free, b_i when only node i
// is free.
struct ProbProgramSolution {
    Rat a1, a2, b1, b2;
};

struct FeasibilityReport {
    bool ok = true;
    std::vector<std::string> violations;
};

// Exact verification of constraint families (7)-(12); (11) is checked only
// when a_{3-i} < 1 (it is vacuous at a_1 + a_2 = 1, bounded by (9)).
FeasibilityReport check_feasible(const ProbProgramSolution& sol, const ProbProgramInput& in);

// Feasible-point construction: start at a_i = b_i = dx_i/(1-x_i); if the a's
// sum above 1, slide along constraint (12) toward the floor point
// (b_i = 1, a_i clamped at 0) and stop at a_1 + a_2 = 1. Throws ObmError
// naming the violated inequality when the input precondition fails.
ProbProgramSolution solve(const ProbProgramInput& in);

// The maximal-case closed form: b_i = 1, a_1 = (1-x2-dx2)/((1-x1)(1-x2)) and
// symmetrically; requires dx1 + dx2 = 1 - x1*x2 and x1, x2 < 1.
ProbProgramSolution maximal_closed_form(const Rat& dx1, const Rat& dx2, const Rat& x1, const Rat& x2);

}  // namespace obm
