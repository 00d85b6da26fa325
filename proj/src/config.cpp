#include "mpflow/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mpflow::harness {

namespace {

using json = nlohmann::json;

struct Kind {
    ExperimentKind kind;
    const char* name;
};

constexpr Kind kKinds[] = {
    {ExperimentKind::Simulate, "simulate"},         {ExperimentKind::Scatter, "scatter"},
    {ExperimentKind::Action, "action"},             {ExperimentKind::ReduceCheck, "reduce-check"},
    {ExperimentKind::Gauge, "gauge"},               {ExperimentKind::FlowsCompare, "flows-compare"},
    {ExperimentKind::ConvexityCheck, "convexity-check"},
};

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail("'" + where + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) fail("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

double number(const json& j, const std::string& key) {
    if (!j.is_number()) fail("'" + key + "' must be a number");
    return j.get<double>();
}

double positive(const json& j, const std::string& key) {
    const double v = number(j, key);
    if (!(v > 0)) fail("'" + key + "' must be positive");
    return v;
}

int count(const json& j, const std::string& key) {
    if (!j.is_number_integer()) fail("'" + key + "' must be an integer");
    const long long v = j.get<long long>();
    if (v < 0 || v > 100000) fail("'" + key + "' out of range");
    return static_cast<int>(v);
}

std::string text(const json& j, const std::string& key) {
    if (!j.is_string()) fail("'" + key + "' must be a string");
    return j.get<std::string>();
}

Params numbers(const json& j, const std::string& key) {
    if (!j.is_object()) fail("'" + key + "' must be an object");
    Params p;
    for (const auto& [k, v] : j.items()) p[k] = number(v, key + "." + k);
    return p;
}

int line_of(const std::string& s, std::size_t byte) {
    byte = std::min(byte, s.size());
    return 1 + static_cast<int>(std::count(s.begin(), s.begin() + static_cast<long>(byte), '\n'));
}

}  // namespace

const char* to_string(ExperimentKind kind) {
    for (const auto& k : kKinds) {
        if (k.kind == kind) return k.name;
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& name) {
    for (const auto& k : kKinds) {
        if (name == k.name) return k.kind;
    }
    fail("unknown experiment '" + name + "'");
}

std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& k : kKinds) out.emplace_back(k.name);
    return out;
}

MPSystem build_system(const ExperimentConfig& cfg) {
    Params p = cfg.params;
    if (cfg.k) {
        if (cfg.scenario == "counterexample") {
            if (*cfg.k != 3.0) fail("the counterexample family lives at k = 3");
        } else {
            p["k"] = *cfg.k;
        }
    }
    return make_scenario(cfg.scenario, p, cfg.mode);
}

ExperimentConfig parse_config(const std::string& src, const std::string& source) {
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        std::ostringstream msg;
        msg << source << ":" << line_of(src, e.byte) << ": " << e.what();
        fail(msg.str());
    }
    only_keys(j, "", {"experiment", "scenario", "params", "k", "derivatives", "integrator", "shooting", "gauge",
                      "expect", "resolution", "seed", "out"});
    ExperimentConfig c;
    if (j.contains("experiment")) {
        c.kind = parse_kind(text(j["experiment"], "experiment"));
        c.kind_given = true;
    }
    if (j.contains("scenario")) c.scenario = text(j["scenario"], "scenario");
    if (j.contains("params")) c.params = numbers(j["params"], "params");
    if (j.contains("k")) c.k = positive(j["k"], "k");
    if (j.contains("derivatives")) {
        const std::string m = text(j["derivatives"], "derivatives");
        if (m == "analytic") c.mode = DerivativeMode::Analytic;
        else if (m == "finite-difference") c.mode = DerivativeMode::FiniteDifference;
        else fail("'derivatives' must be analytic or finite-difference");
    }
    if (j.contains("integrator")) {
        const json& o = j["integrator"];
        only_keys(o, "integrator", {"atol", "rtol", "t_max", "max_steps"});
        if (o.contains("atol")) c.integrator.atol = positive(o["atol"], "integrator.atol");
        if (o.contains("rtol")) c.integrator.rtol = positive(o["rtol"], "integrator.rtol");
        if (o.contains("t_max")) {
            c.t_max = number(o["t_max"], "integrator.t_max");
            if (c.t_max < 0) fail("'integrator.t_max' must be non-negative");
        }
        if (o.contains("max_steps")) c.integrator.max_steps = std::max(1, count(o["max_steps"], "integrator.max_steps"));
    }
    c.shooting.integrator = c.integrator;
    if (j.contains("shooting")) {
        const json& o = j["shooting"];
        only_keys(o, "shooting", {"tol", "max_iterations"});
        if (o.contains("tol")) c.shooting.tol = positive(o["tol"], "shooting.tol");
        if (o.contains("max_iterations")) c.shooting.max_iterations = count(o["max_iterations"], "shooting.max_iterations");
    }
    if (j.contains("gauge")) {
        const json& o = j["gauge"];
        only_keys(o, "gauge", {"key", "params", "perturbation"});
        if (o.contains("key")) c.gauge = text(o["key"], "gauge.key");
        if (o.contains("params")) c.gauge_params = numbers(o["params"], "gauge.params");
        if (o.contains("perturbation")) c.perturbation = positive(o["perturbation"], "gauge.perturbation");
    }
    if (j.contains("expect")) {
        const std::string e = text(j["expect"], "expect");
        if (e != "convex" && e != "concave") fail("'expect' must be convex or concave");
        c.expect_convex = e == "convex";
    }
    if (j.contains("resolution")) {
        const json& o = j["resolution"];
        only_keys(o, "resolution", {"rays", "table", "pairs", "points", "phase_points", "samples", "gauge_pairs"});
        Resolution& r = c.resolution;
        if (o.contains("rays")) r.rays = count(o["rays"], "resolution.rays");
        if (o.contains("table")) r.table = count(o["table"], "resolution.table");
        if (o.contains("pairs")) r.pairs = count(o["pairs"], "resolution.pairs");
        if (o.contains("points")) r.points = count(o["points"], "resolution.points");
        if (o.contains("phase_points")) r.phase_points = count(o["phase_points"], "resolution.phase_points");
        if (o.contains("samples")) r.samples = count(o["samples"], "resolution.samples");
        if (o.contains("gauge_pairs")) r.gauge_pairs = count(o["gauge_pairs"], "resolution.gauge_pairs");
        if (r.table == 1) fail("'resolution.table' must be 0 or at least 2");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("out")) c.out = text(j["out"], "out");

    const MPSystem sys = build_system(c);
    if (c.kind == ExperimentKind::Gauge && c.gauge != "group-law" && c.scenario != "counterexample") {
        make_gauge(c.gauge, sys, c.gauge_params);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace mpflow::harness
