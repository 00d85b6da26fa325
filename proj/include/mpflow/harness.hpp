#pragma once

#include "mpflow/catalog.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mpflow::harness {

enum class ExperimentKind { Simulate, Scatter, Action, ReduceCheck, Gauge, FlowsCompare, ConvexityCheck };

const char* to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);  // throws Config
std::vector<std::string> experiment_names();

struct Resolution {
    int rays = 20;           // inbound ray fan
    int table = 16;          // boundary action table size (0 skips)
    int pairs = 0;           // random boundary pairs instead of a table when > 0
    int points = 100;        // interior samples for tensor checks
    int phase_points = 100;  // random phase points for Hamiltonian identities
    int samples = 100;       // boundary samples (convexity) or curve samples (flows)
    int gauge_pairs = 5;     // random gauge pairs for the group laws
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Simulate;
    bool kind_given = false;  // the document named its experiment
    std::string scenario = "flat-disk";
    Params params;
    std::optional<double> k;
    DerivativeMode mode = DerivativeMode::Analytic;
    IntegratorOptions integrator;
    double t_max = 0.0;  // 0 picks the default horizon
    ShootOptions shooting;
    std::string gauge = "boundary-compatible";  // or "group-law"
    Params gauge_params;
    double perturbation = 0.1;  // amplitude of the non-equivalent control
    bool expect_convex = true;
    Resolution resolution;
    std::uint64_t seed = 1;
    std::string out;
};

// JSON text -> validated config. Parse errors carry the line number; unknown
// keys and non-positive tolerances are Config errors naming the key. The
// scenario is built once, so k <= max U fails with BelowPotential.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

MPSystem build_system(const ExperimentConfig& cfg);

enum class Relation { AtMost, Above, Below };

struct Check {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    Relation relation = Relation::AtMost;
    bool pass = false;
};

struct Report {
    std::string experiment;
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<Check> checks;
    std::vector<std::string> oracles;
    std::vector<std::string> failures;  // per-entry failures (not checks)
    std::vector<std::string> files;

    void at_most(const std::string& name, double value, double tol);
    void above(const std::string& name, double value, double tol);
    void below(const std::string& name, double value, double tol);
    bool pass() const;  // all checks pass and there is at least one
    const Check* find(const std::string& name) const;
};

struct CsvTable {
    std::vector<std::string> meta;  // written as "# ..." lines
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::string format_number(double x);  // %.17g
std::string format_csv(const CsvTable& table);
void emit_csv(const CsvTable& table, const std::string& path);
std::string report_json(const Report& report);
void emit_report(const Report& report, const std::string& path);

struct ExperimentOutput {
    Report report;
    std::map<std::string, CsvTable> tables;  // file name -> table
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// Writes every table plus report.json into dir (created if missing).
void write_outputs(ExperimentOutput& out, const std::string& dir);

// Acceptance criteria 1..11, each a fixed set of experiments.
struct CriterionInfo {
    int id;
    std::string title;
};
const std::vector<CriterionInfo>& criteria();

struct CriterionResult {
    int id = 0;
    std::string title;
    Report report;  // checks gathered from all runs, names prefixed by the run
    double seconds = 0.0;
    bool pass() const { return report.pass(); }
};

CriterionResult run_criterion(int id, std::uint64_t seed = 1);

}  // namespace mpflow::harness
