#include "mpflow/harness.hpp"

#include <chrono>

namespace mpflow::harness {

namespace {

ExperimentConfig make(ExperimentKind kind, const std::string& scenario, Params params, std::uint64_t seed) {
    ExperimentConfig c;
    c.kind = kind;
    c.scenario = scenario;
    c.params = std::move(params);
    c.seed = seed;
    c.integrator.atol = c.integrator.rtol = 1e-10;
    c.shooting.integrator = c.integrator;
    return c;
}

bool has_prefix(const std::string& s, const std::vector<std::string>& prefixes) {
    for (const auto& p : prefixes) {
        if (s.rfind(p, 0) == 0) return true;
    }
    return prefixes.empty();
}

// Runs cfg and copies the selected checks, tagged with `tag`.
void gather(Report& into, const std::string& tag, const ExperimentConfig& cfg,
            const std::vector<std::string>& prefixes = {}) {
    try {
        const ExperimentOutput out = run_experiment(cfg);
        for (Check c : out.report.checks) {
            if (!has_prefix(c.name, prefixes)) continue;
            c.name = tag + "/" + c.name;
            into.checks.push_back(c);
        }
        for (const auto& o : out.report.oracles) {
            if (std::find(into.oracles.begin(), into.oracles.end(), o) == into.oracles.end()) into.oracles.push_back(o);
        }
        for (const auto& f : out.report.failures) into.failures.push_back(tag + ": " + f);
    } catch (const Error& e) {
        into.checks.push_back(Check{tag + "/error", NAN, 0.0, Relation::AtMost, false});
        into.failures.push_back(tag + ": " + e.what());
    }
}

}  // namespace

const std::vector<CriterionInfo>& criteria() {
    static const std::vector<CriterionInfo> list = {
        {1, "energy conservation on the simple catalog"},
        {2, "four flow formulations agree"},
        {3, "H-flow energy and time-changed H-tilde flows"},
        {4, "Hamiltonian table identities and level sets"},
        {5, "reduction: unit speed and equal action tables"},
        {6, "flat closed-form action"},
        {7, "constant-field scattering against Larmor arcs"},
        {8, "gauge group laws"},
        {9, "boundary-compatible gauge preserves boundary data"},
        {10, "counterexample pair"},
        {11, "strict convexity margin"},
    };
    return list;
}

CriterionResult run_criterion(int id, std::uint64_t seed) {
    CriterionResult res;
    res.id = id;
    for (const auto& c : criteria()) {
        if (c.id == id) res.title = c.title;
    }
    if (res.title.empty()) throw Error(ErrorCode::Config, "no acceptance criterion " + std::to_string(id));
    Report& rep = res.report;
    rep.experiment = "acceptance-" + std::to_string(id);
    rep.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();

    using K = ExperimentKind;
    switch (id) {
        case 1:
            for (const auto& s : simple_scenarios()) {
                ExperimentConfig c = make(K::Simulate, s, {}, seed);
                c.resolution.rays = 20;
                gather(rep, s, c);
            }
            break;
        case 2: {
            ExperimentConfig a = make(K::FlowsCompare, "constant-field", {{"B", 0.5}}, seed);
            ExperimentConfig b = make(K::FlowsCompare, "conformal-disk", {{"a", 0.1}, {"u0", 0.2}}, seed);
            for (ExperimentConfig* c : {&a, &b}) {
                c->resolution.rays = 10;
                c->resolution.phase_points = 0;
            }
            gather(rep, "flat+B", a, {"four_flow"});
            gather(rep, "conformal+U", b, {"four_flow"});
            break;
        }
        case 3: {
            ExperimentConfig c = make(K::FlowsCompare, "radial-potential", {{"u0", 0.3}, {"B", 0.4}, {"a", 0.1}}, seed);
            c.resolution.rays = 10;
            c.resolution.phase_points = 0;
            gather(rep, "radial+B", c, {"h_flow", "h_tilde"});
            break;
        }
        case 4: {
            ExperimentConfig c = make(K::FlowsCompare, "radial-potential", {{"u0", 0.3}, {"B", 0.4}, {"a", 0.1}}, seed);
            c.resolution.rays = 0;
            c.resolution.phase_points = 100;
            gather(rep, "radial+B", c, {"table", "level_set"});
            break;
        }
        case 5: {
            ExperimentConfig c = make(K::ReduceCheck, "conformal-disk", {{"a", 0.1}, {"u0", 0.2}, {"B", 0.3}}, seed);
            c.resolution.rays = 20;
            c.resolution.table = 16;
            gather(rep, "conformal", c);
            break;
        }
        case 6:
            for (double k : {0.5, 1.0, 2.0}) {
                ExperimentConfig c = make(K::Action, "flat-disk", {}, seed);
                c.k = k;
                c.resolution.pairs = 10;
                gather(rep, "k=" + format_number(k), c);
            }
            break;
        case 7:
            for (double B : {0.1, 0.5}) {
                ExperimentConfig c = make(K::Scatter, "constant-field", {{"B", B}}, seed);
                c.resolution.rays = 20;
                gather(rep, "B=" + format_number(B), c);
            }
            break;
        case 8: {
            ExperimentConfig c = make(K::Gauge, "conformal-disk", {{"a", 0.1}, {"u0", 0.2}, {"B", 0.3}}, seed);
            c.gauge = "group-law";
            c.resolution.points = 100;
            c.resolution.gauge_pairs = 5;
            gather(rep, "conformal", c);
            break;
        }
        case 9: {
            ExperimentConfig c = make(K::Gauge, "conformal-disk", {{"a", 0.1}, {"u0", 0.1}, {"B", 0.3}}, seed);
            c.gauge = "boundary-compatible";
            c.resolution.table = 16;
            c.resolution.rays = 20;
            gather(rep, "conformal", c);
            break;
        }
        case 10: {
            ExperimentConfig c = make(K::Gauge, "counterexample", {}, seed);
            c.resolution.points = 200;
            c.resolution.table = 16;
            c.resolution.rays = 20;
            gather(rep, "counterexample", c);
            break;
        }
        case 11:
            for (const auto& s : simple_scenarios()) {
                ExperimentConfig c = make(K::ConvexityCheck, s, {}, seed);
                c.resolution.samples = 100;
                gather(rep, s, c);
            }
            {
                ExperimentConfig c = make(K::ConvexityCheck, "dented-disk", {}, seed);
                c.resolution.samples = 100;
                c.expect_convex = false;
                gather(rep, "dented-disk", c);
            }
            break;
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace mpflow::harness
