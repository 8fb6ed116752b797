// Python bindings for the main operations. Exact rationals cross the
// boundary as "p/q" strings; obm/__init__.py converts them to Fraction.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "obm/fractional.hpp"
#include "obm/instance.hpp"
#include "obm/probprogram.hpp"
#include "obm/randomness.hpp"
#include "obm/rounding.hpp"
#include "obm/verify.hpp"

namespace py = pybind11;
using namespace obm;

namespace {

Rat rat_arg(const std::string& s) {
    auto r = rat_from_string(s);
    if (!r) throw ObmError("malformed rational '" + s + "'");
    return *r;
}

AlgoSelector algo_arg(const std::string& spec) {
    if (spec == "water") return AlgoSelector::water();
    if (spec == "vw2") return AlgoSelector::vw2();
    if (spec.rfind("klevel:", 0) == 0) return AlgoSelector::klevel(std::stoi(spec.substr(7)));
    throw ObmError("unknown algo '" + spec + "'");
}

py::list steps_to_py(const FractionalTrace& trace) {
    py::list steps;
    for (const StepRecord& s : trace.steps) {
        py::dict d;
        d["t"] = s.t;
        d["kind"] = step_kind_name(s.kind);
        py::list members;
        for (const StepSlot* slot : {&s.a, &s.b}) {
            if (!slot->in_pt()) continue;
            py::dict m;
            m["node"] = slot->node;
            m["prior"] = rat_to_string(slot->prior);
            m["delta"] = rat_to_string(slot->delta);
            members.append(m);
        }
        d["P_t"] = members;
        steps.append(d);
    }
    return steps;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "sound/maximal two-choice fractional online matching, lossless rounding, "
              "bounded-independence seeds";

    py::register_exception<ObmError>(m, "ObmError");

    py::class_<Instance>(m, "Instance")
        .def(py::init([](int n, const std::vector<std::string>& weights,
                         const std::vector<std::vector<int>>& arrivals) {
                 Instance inst;
                 inst.n = n;
                 for (const auto& w : weights) inst.weights.push_back(rat_arg(w));
                 inst.arrivals = arrivals;
                 inst.validate();
                 return inst;
             }),
             py::arg("n"), py::arg("weights"), py::arg("arrivals"))
        .def_readonly("n", &Instance::n)
        .def_property_readonly("weights",
                               [](const Instance& inst) {
                                   std::vector<std::string> out;
                                   for (const Rat& w : inst.weights) out.push_back(rat_to_string(w));
                                   return out;
                               })
        .def_readonly("arrivals", &Instance::arrivals)
        .def("serialize", [](const Instance& inst) { return serialize_instance(inst); });

    m.def("parse_instance", [](const std::string& text) { return parse_instance_string(text); });
    m.def("load_instance", &load_instance);
    m.def("gen_adversarial_waterlevel", &gen_adversarial_waterlevel, py::arg("k"));
    m.def("gen_random_instance", &gen_random_instance, py::arg("n"), py::arg("T"),
          py::arg("max_degree"), py::arg("weight_lo") = 1, py::arg("weight_hi") = 1,
          py::arg("seed") = 1);
    m.def("max_weight_matching", [](const Instance& inst) {
        auto [value, matching] = max_weight_matching(inst);
        return py::make_tuple(rat_to_string(value), matching.edges);
    });

    py::class_<FractionalTrace>(m, "FractionalTrace")
        .def_property_readonly("primal",
                               [](const FractionalTrace& t) { return rat_to_string(t.primal); })
        .def_property_readonly("final_degrees",
                               [](const FractionalTrace& t) {
                                   std::vector<std::string> out;
                                   for (const Rat& d : t.final_degrees) out.push_back(rat_to_string(d));
                                   return out;
                               })
        .def_property_readonly("steps", &steps_to_py)
        .def("to_jsonl", [](const FractionalTrace& t) { return trace_to_jsonl(t); });

    m.def("run_fractional",
          [](const std::string& algo, const Instance& inst) { return run_fractional(algo_arg(algo), inst); },
          py::arg("algo"), py::arg("instance"));
    m.def("dampen_trace",
          [](const FractionalTrace& t, const std::string& gamma) { return dampen_trace(t, rat_arg(gamma)); });
    m.def("check_sound", [](const FractionalTrace& t) {
        auto rep = check_sound(t);
        return py::make_tuple(rep.pass, rep.violations);
    });
    m.def("check_maximal", [](const FractionalTrace& t) {
        auto rep = check_maximal(t);
        return py::make_tuple(rep.pass, rep.violations);
    });
    m.def("check_bbit_precise", [](const FractionalTrace& t, int b) {
        auto rep = check_bbit_precise(t, b);
        return py::make_tuple(rep.pass, rep.required_bits);
    });
    m.def("hardness_ratio", [](int k) { return rat_to_string(hardness_ratio(k)); });
    m.def("alpha_g", [](double base, const std::string& mode) {
        return alpha_g(base, mode == "klevel" ? AlphaMode::KLevel : AlphaMode::WaterLevel);
    });
    m.def("dual_fit_certificate", [](const FractionalTrace& t, const std::string& kind) {
        DualFitConfig cfg;
        if (kind == "two_level_unweighted")
            cfg = DualFitConfig::two_level_unweighted();
        else if (kind == "vw")
            cfg = DualFitConfig::vw();
        else
            cfg = DualFitConfig::g_based(std::stod(kind));
        DualCertificate cert = dual_fit_certificate(t, cfg);
        py::dict d;
        d["feasible"] = cert.feasible;
        d["worst_ratio_float"] = cert.worst_ratio_f;
        if (cert.has_exact_ratio) d["worst_ratio"] = rat_to_string(cert.worst_ratio);
        return d;
    });

    m.def("solve_prob_program",
          [](const std::string& dx1, const std::string& dx2, const std::string& x1,
             const std::string& x2, const std::string& p12) {
              ProbProgramInput in{rat_arg(dx1), rat_arg(dx2), rat_arg(x1), rat_arg(x2), rat_arg(p12)};
              ProbProgramSolution sol = solve(in);
              bool ok = check_feasible(sol, in).ok;
              py::dict d;
              d["a1"] = rat_to_string(sol.a1);
              d["a2"] = rat_to_string(sol.a2);
              d["b1"] = rat_to_string(sol.b1);
              d["b2"] = rat_to_string(sol.b2);
              d["feasible"] = ok;
              return d;
          });

    m.def("exact_marginals", [](const FractionalTrace& t, const std::string& engine) {
        auto marg = exact_marginals(t, engine == "general" ? Engine::General : Engine::Maximal);
        py::list out;
        for (const auto& row : marg) {
            py::list r;
            for (const auto& [node, p] : row) r.append(py::make_tuple(node, rat_to_string(p)));
            out.append(r);
        }
        return out;
    });
    m.def("round_maximal",
          [](const FractionalTrace& t, uint64_t seed) {
              RandomSource src = RandomSource::iid(seed);
              return round_maximal(t, src).edges;
          },
          py::arg("trace"), py::arg("seed") = 1);
    m.def("round_general",
          [](const FractionalTrace& t, uint64_t seed) {
              RandomSource src = RandomSource::iid(seed);
              return round_general(t, src).edges;
          },
          py::arg("trace"), py::arg("seed") = 1);

    m.def("monte_carlo_marginals",
          [](const FractionalTrace& t, const std::string& engine, int trials, uint64_t seed, int jobs) {
              MonteCarloConfig cfg;
              cfg.engine = engine == "general" ? Engine::General : Engine::Maximal;
              cfg.trials = trials;
              cfg.master_seed = seed;
              cfg.jobs = jobs;
              py::list out;
              for (const EdgeStat& st : monte_carlo_marginals(t, cfg)) {
                  py::dict d;
                  d["t"] = st.t;
                  d["node"] = st.node;
                  d["exact"] = rat_to_string(st.exact);
                  d["mean"] = st.mean;
                  d["stderr"] = st.stderr_;
                  out.append(d);
              }
              return out;
          },
          py::arg("trace"), py::arg("engine") = "maximal", py::arg("trials") = 1000,
          py::arg("seed") = 1, py::arg("jobs") = 1);

    m.def("sweep_invariants", [](const FractionalTrace& t, const std::string& engine) {
        VerificationReport rep = sweep_invariants(t, engine == "general" ? Engine::General : Engine::Maximal);
        py::list checks;
        for (const CheckResult& c : rep.checks) {
            py::dict d;
            d["name"] = c.name;
            d["pass"] = c.pass;
            checks.append(d);
        }
        return py::make_tuple(rep.all_pass(), checks);
    });
    m.def("impossibility_demo", []() {
        VerificationReport rep = impossibility_demo();
        return py::make_tuple(rep.all_pass(), rep.to_json());
    });
    m.def("three_choice_gap", []() {
        ThreeChoiceGap gap = three_choice_gap();
        py::dict d;
        d["fractional_value"] = rat_to_string(gap.fractional_value);
        d["greedy_expectation"] = rat_to_string(gap.greedy_expectation);
        d["gap"] = rat_to_string(gap.gap);
        d["all_pass"] = gap.report.all_pass();
        return d;
    });

    m.def("small_bias_accounting", [](int m_vars, int k, const std::string& eps) {
        SmallBiasSpace space = make_small_bias_space(m_vars, k, rat_arg(eps));
        py::dict d;
        d["m"] = space.m;
        d["k"] = space.k;
        d["eps"] = rat_to_string(space.eps);
        d["delta"] = rat_to_string(space.delta);
        d["h"] = space.h;
        d["seed_bits"] = space.seed_bits;
        d["construction"] = space.construction;
        return d;
    });
    m.def("seed_budget", [](int n, int k, int b, const std::string& delta) {
        SeedBudgetReport rep = seed_budget(n, k, b, rat_arg(delta));
        py::dict d;
        d["m"] = rep.m;
        d["kprime"] = rep.kprime;
        d["h"] = rep.h;
        d["seed_bits"] = rep.seed_bits;
        d["C"] = rep.constant_C;
        d["within_budget"] = rep.within_budget;
        return d;
    });
    m.def("dependency_bounds", [](const FractionalTrace& t, int k) {
        DependencyReport rep = dependency_tracker(t, LevelTable::standard(k));
        py::dict d;
        d["pass"] = rep.pass;
        d["max_edge_slots"] = rep.max_edge_slots;
        d["edge_bound"] = rep.edge_bound;
        return d;
    });
}
