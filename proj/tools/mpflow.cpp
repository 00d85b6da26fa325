#include "mpflow/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace mpflow;
namespace hn = mpflow::harness;

namespace {

void list_catalog() {
    std::cout << "scenarios:\n";
    for (const auto& e : scenario_catalog()) {
        std::cout << "  " << e.key << "  " << e.description << "\n   ";
        for (const auto& [k, v] : e.defaults) std::cout << " " << k << "=" << hn::format_number(v);
        std::cout << "\n";
    }
    std::cout << "gauges:\n";
    for (const auto& e : gauge_catalog()) {
        std::cout << "  " << e.key << "  " << e.description << "\n   ";
        for (const auto& [k, v] : e.defaults) std::cout << " " << k << "=" << hn::format_number(v);
        std::cout << "\n";
    }
    std::cout << "  group-law  five random gauge pairs, group laws only\n";
    std::cout << "experiments:";
    for (const auto& n : hn::experiment_names()) std::cout << " " << n;
    std::cout << " acceptance\n";
}

void print_checks(const hn::Report& r) {
    for (const auto& c : r.checks) {
        const char* rel = c.relation == hn::Relation::AtMost ? "<=" : c.relation == hn::Relation::Above ? ">" : "<";
        std::printf("  %-4s %-55s %.3e %s %.1e\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, rel, c.tol);
    }
    for (const auto& f : r.failures) std::printf("  note %s\n", f.c_str());
}

int run_acceptance(int only, std::uint64_t seed, bool verbose) {
    bool all = true;
    for (const auto& info : hn::criteria()) {
        if (only && info.id != only) continue;
        const hn::CriterionResult r = hn::run_criterion(info.id, seed);
        std::printf("criterion %2d %s: %s (%.1f s)\n", r.id, r.pass() ? "PASS" : "FAIL", r.title.c_str(), r.seconds);
        if (verbose || !r.pass()) print_checks(r.report);
        std::fflush(stdout);
        all = all && r.pass();
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mpflow: MP-system flows, scattering, action and gauge experiments"};
    app.require_subcommand(0, 1);
    bool list = false;
    app.add_flag("--list-scenarios", list, "print the scenario and gauge catalogs");

    std::string config, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<CLI::App*> experiments;
    for (const auto& name : hn::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "PRNG seed (overrides the config)")->each([&](const std::string&) { seed_set = true; });
        experiments.push_back(sub);
    }
    int criterion = 0;
    bool verbose = false;
    CLI::App* acc = app.add_subcommand("acceptance", "run the acceptance criteria");
    acc->add_option("--criterion", criterion, "run only this criterion")->check(CLI::Range(1, 11));
    acc->add_option("--seed", seed, "PRNG seed");
    acc->add_flag("-v,--verbose", verbose, "print every check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list) {
            list_catalog();
            return 0;
        }
        if (acc->parsed()) return run_acceptance(criterion, seed ? seed : 1, verbose);
        for (CLI::App* sub : experiments) {
            if (!sub->parsed()) continue;
            hn::ExperimentConfig cfg = hn::load_config(config);
            const hn::ExperimentKind kind = hn::parse_kind(sub->get_name());
            if (cfg.kind_given && cfg.kind != kind) {
                std::fprintf(stderr, "error: config is for '%s', not '%s'\n", hn::to_string(cfg.kind),
                             sub->get_name().c_str());
                return 2;
            }
            cfg.kind = kind;
            if (!out.empty()) cfg.out = out;
            if (seed_set) cfg.seed = seed;
            hn::ExperimentOutput res = hn::run_experiment(cfg);
            std::printf("%s on %s: %s\n", sub->get_name().c_str(), res.report.scenario.c_str(),
                        res.report.pass() ? "PASS" : "FAIL");
            print_checks(res.report);
            if (!cfg.out.empty()) std::printf("outputs in %s\n", cfg.out.c_str());
            return res.report.pass() ? 0 : 1;
        }
        std::cout << app.help();
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
