#include "mpflow/harness.hpp"
#include "mpflow/oracles.hpp"

#include <cmath>
#include <numbers>

namespace mpflow::harness {

namespace {

constexpr double kEnergyTol = 1e-8;
constexpr double kHFlowEnergyTol = 1e-9;
constexpr double kCurveTol = 1e-6;
constexpr double kIdentityTol = 1e-12;
constexpr double kUnitSpeedTol = 1e-8;
constexpr double kTableTol = 1e-6;
constexpr double kOracleTol = 1e-7;
constexpr double kGroupTol = 1e-9;
constexpr double kBoundaryDataTol = 1e-10;
constexpr double kControlTol = 1e-3;

struct Run {
    const ExperimentConfig& cfg;
    MPSystem sys;
    Params eff;  // catalog defaults with overrides
    IntegratorOptions io;
    ExperimentOutput out;

    explicit Run(const ExperimentConfig& c) : cfg(c), sys(build_system(c)), io(c.integrator) {
        for (const auto& e : scenario_catalog()) {
            if (e.key == c.scenario) eff = e.defaults;
        }
        for (const auto& [k, v] : c.params) eff[k] = v;
        out.report.experiment = to_string(c.kind);
        out.report.scenario = sys.label;
        out.report.seed = c.seed;
    }

    Report& report() { return out.report; }

    double param(const std::string& key, double fallback = 0.0) const {
        auto it = eff.find(key);
        return it == eff.end() ? fallback : it->second;
    }

    // Euclidean metric, U = 0, alpha = (B/2)(-y, x) in the plane.
    bool planar_free() const {
        const bool family = cfg.scenario == "flat-disk" || cfg.scenario == "conformal-disk" ||
                            cfg.scenario == "constant-field" || cfg.scenario == "radial-potential";
        return family && sys.dim() == 2 && param("lambda0") == 0.0 && param("a") == 0.0 && param("u0") == 0.0;
    }

    void fail(const std::string& what) { out.report.failures.push_back(what); }

    std::vector<std::string> meta() const {
        std::vector<std::string> m = {std::string("experiment: ") + to_string(cfg.kind), "scenario: " + sys.label,
                                      "k: " + format_number(sys.k), "seed: " + std::to_string(cfg.seed)};
        for (const auto& [k, v] : cfg.params) m.push_back("param " + k + ": " + format_number(v));
        return m;
    }
};

PhaseState lifted(const MPSystem& sys, const Ray& r) { return PhaseState{r.p, sphere_lift(sys, r.p, r.u)}; }

// Angle of v from the inward normal (sign > 0) or the outward normal
// (sign < 0). Signed in 2D, unsigned in 3D.
double direction_angle(const ChartDomain& dom, const Vec& x, const Vec& v, double sign) {
    const Vec n = sign * dom.grad_rho(x).normalized();
    if (dom.dim == 2) return std::atan2(v.dot(Vec(boundary_tangent_basis(dom, x).col(0))), v.dot(n));
    return std::acos(std::clamp(v.normalized().dot(n), -1.0, 1.0));
}

std::string params_text(const std::vector<double>& p) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ":" : "") + format_number(p[i]);
    return s;
}

CsvTable table_csv(const Run& run, const ActionTable& t) {
    CsvTable c;
    c.meta = run.meta();
    c.meta.push_back("n: " + std::to_string(t.size()));
    std::string rows;
    for (const auto& p : t.params) rows += (rows.empty() ? "" : ",") + params_text(p);
    c.meta.push_back("rows: " + rows);
    c.meta.push_back("cols: " + rows);
    for (int i = 0; i < t.size(); ++i) {
        std::vector<double> row;
        for (int j = 0; j < t.size(); ++j) row.push_back(t.entries[i][j].value);
        c.rows.push_back(row);
    }
    return c;
}

std::vector<std::string> coordinate_names(int n) {
    std::vector<std::string> v = {"x1", "x2"};
    if (n == 3) v.push_back("x3");
    return v;
}

void simulate(Run& run) {
    const MPSystem& sys = run.sys;
    CsvTable csv;
    csv.meta = run.meta();
    csv.header = {"ray", "t"};
    for (const auto& c : coordinate_names(sys.dim())) csv.header.push_back(c);
    csv.header.push_back("energy");
    double drift = 0.0;
    int failed = 0;
    const auto rays = ray_fan(sys.domain, run.cfg.resolution.rays);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        try {
            const Trajectory tr = integrate(sys, Formulation::Lagrangian, lifted(sys, rays[i]), run.cfg.t_max, run.io);
            drift = std::max(drift, tr.max_energy_drift(sys.k));
            const auto& ts = tr.knots();
            for (std::size_t s = 0; s < ts.size(); ++s) {
                std::vector<double> row = {double(i), ts[s]};
                const ode::State& z = tr.solution.states()[s];
                for (int d = 0; d < sys.dim(); ++d) row.push_back(z[d]);
                row.push_back(tr.energies[s]);
                csv.rows.push_back(row);
            }
        } catch (const Error& e) {
            ++failed;
            run.fail("ray " + std::to_string(i) + ": " + e.what());
        }
    }
    run.report().at_most("energy.max_drift", drift, kEnergyTol);
    run.report().at_most("energy.failed_rays", failed, 0);
    run.out.tables["trajectories.csv"] = csv;
}

void scatter(Run& run) {
    const MPSystem& sys = run.sys;
    CsvTable csv;
    csv.meta = run.meta();
    if (sys.dim() == 3) csv.meta.push_back("theta is the azimuth; dir is the unsigned angle to the normal");
    csv.header = {"theta_in", "dir_in", "theta_out", "dir_out", "tau", "action"};
    const bool oracle = run.planar_free();
    const double B = run.param("B");
    if (oracle) run.report().oracles.push_back(B != 0.0 ? "planar Larmor arc" : "straight chord");
    double e_exit = 0.0, d_x = 0.0, d_v = 0.0, d_tau = 0.0, d_act = 0.0;
    int failed = 0;
    const auto rays = ray_fan(sys.domain, run.cfg.resolution.rays);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        try {
            const ScatteringRecord r = scattering(sys, rays[i].p, rays[i].u, run.io);
            csv.rows.push_back({boundary_angle(sys.domain, r.entry_x), direction_angle(sys.domain, r.entry_x, r.entry_v, 1),
                                boundary_angle(sys.domain, r.exit_x), direction_angle(sys.domain, r.exit_x, r.exit_v, -1),
                                r.tau, r.action});
            e_exit = std::max(e_exit, std::abs(energy(sys, r.exit_x, r.exit_v) - sys.k));
            if (r.glancing) {
                run.fail("ray " + std::to_string(i) + ": glancing exit, excluded from oracle comparison");
                continue;
            }
            if (!oracle) continue;
            oracle::ArcExit o;
            if (B != 0.0) {
                o = oracle::larmor_exit(B, r.entry_x, r.entry_v);
            } else {
                const Vec& p = r.entry_x;
                const Vec& v = r.entry_v;
                o.exit_x = p - 2.0 * p.dot(v) / v.squaredNorm() * v;
                o.exit_v = v;
                o.tau = (o.exit_x - p).norm() / v.norm();
                o.action = 2.0 * sys.k * o.tau;
            }
            d_x = std::max(d_x, (o.exit_x - r.exit_x).norm());
            d_v = std::max(d_v, (o.exit_v - r.exit_v).norm());
            d_tau = std::max(d_tau, std::abs(o.tau - r.tau));
            d_act = std::max(d_act, std::abs(o.action - r.action));
        } catch (const Error& e) {
            ++failed;
            run.fail("ray " + std::to_string(i) + ": " + e.what());
        }
    }
    run.report().at_most("scatter.exit_energy", e_exit, kEnergyTol);
    run.report().at_most("scatter.failed_rays", failed, 0);
    if (oracle) {
        run.report().at_most("scatter.oracle_exit_point", d_x, kOracleTol);
        run.report().at_most("scatter.oracle_exit_velocity", d_v, kOracleTol);
        run.report().at_most("scatter.oracle_exit_time", d_tau, kOracleTol);
        run.report().at_most("scatter.oracle_action", d_act, kOracleTol);
    }
    run.out.tables["scattering.csv"] = csv;
}

double action_oracle(const Run& run, const Vec& x, const Vec& y) {
    const double B = run.param("B");
    if (B == 0.0) return oracle::chord_action(run.sys.k, x, y);
    return oracle::larmor_shot(B, std::sqrt(2.0 * run.sys.k), x, y).action;
}

void action(Run& run) {
    const MPSystem& sys = run.sys;
    const bool oracle = run.planar_free();
    if (oracle) run.report().oracles.push_back(run.param("B") != 0.0 ? "planar Larmor arc" : "chord length");
    double err = 0.0;
    int failures = 0;
    const int pairs = run.cfg.resolution.pairs;
    if (pairs > 0) {
        CsvTable csv;
        csv.meta = run.meta();
        csv.header = {"theta_x", "theta_y", "action", "T", "residual"};
        if (oracle) csv.header.push_back("oracle");
        const auto pts = sample_boundary(sys.domain, 2 * pairs, run.cfg.seed);
        for (int i = 0; i < pairs; ++i) {
            const Vec& x = pts[2 * i];
            const Vec& y = pts[2 * i + 1];
            std::vector<double> row = {boundary_angle(sys.domain, x), boundary_angle(sys.domain, y)};
            try {
                const ActionValue a = mane_potential(sys, x, y, run.cfg.shooting, false);
                row.insert(row.end(), {a.value, a.T, a.residual});
                if (oracle) {
                    const double o = action_oracle(run, x, y);
                    row.push_back(o);
                    err = std::max(err, std::abs(o - a.value));
                }
            } catch (const Error& e) {
                ++failures;
                run.fail("pair " + std::to_string(i) + ": " + e.what());
                row.insert(row.end(), oracle ? 4 : 3, std::numeric_limits<double>::quiet_NaN());
            }
            csv.rows.push_back(row);
        }
        run.out.tables["action_pairs.csv"] = csv;
    } else if (run.cfg.resolution.table > 0) {
        const ActionTable t = boundary_action_table(sys, run.cfg.resolution.table, run.cfg.shooting);
        failures = t.failures;
        for (int i = 0; i < t.size(); ++i) {
            for (int j = 0; j < t.size(); ++j) {
                const ActionValue& a = t.entries[i][j];
                if (i == j) continue;
                if (!a.converged) {
                    run.fail("entry " + std::to_string(i) + "," + std::to_string(j) + ": " + a.message);
                } else if (oracle) {
                    err = std::max(err, std::abs(action_oracle(run, t.points[i], t.points[j]) - a.value));
                }
            }
        }
        const double asym = table_asymmetry(t);
        if (run.param("B") != 0.0) {
            run.report().above("action.asymmetry", asym, 1e-9);
        } else if (run.cfg.scenario != "dented-disk" && run.cfg.scenario != "counterexample") {
            run.report().at_most("action.asymmetry", asym, kTableTol);
        }
        run.out.tables["action_table.csv"] = table_csv(run, t);
    }
    run.report().at_most("action.shooting_failures", failures, 0);
    if (oracle) run.report().at_most("action.oracle_error", err, kOracleTol);
}

void reduce_check(Run& run) {
    const MPSystem& sys = run.sys;
    const MPSystem red = reduce(sys);
    CsvTable csv;
    csv.meta = run.meta();
    csv.header = {"ray", "tau", "s_end", "action", "reduced_action", "speed_error", "curve_deviation"};
    double speed = 0.0, act = 0.0, curve = 0.0;
    int failed = 0;
    const int samples = std::max(2, run.cfg.resolution.samples);
    const auto rays = ray_fan(sys.domain, run.cfg.resolution.rays);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        try {
            const PhaseState s0 = lifted(sys, rays[i]);
            auto tr = std::make_shared<const Trajectory>(integrate(sys, Formulation::Lagrangian, s0, run.cfg.t_max, run.io));
            const ReducedCurve rc(sys, tr);
            const double a = action_along(sys, *tr);
            const double ar = magnetic_action_along(red, rc);
            // The reduced system's own magnetic geodesic from the same point.
            const Vec w = sphere_lift(red, s0.x, s0.w);
            IntegratorOptions o = run.io;
            o.stop_at_exit = false;
            const Trajectory mg = integrate(red, Formulation::Lagrangian, PhaseState{s0.x, w}, rc.s_end(), o);
            double se = 0.0, cd = 0.0;
            for (int q = 0; q <= samples; ++q) {
                const double s = rc.s_end() * q / samples;
                const Vec x = rc.position(s);
                se = std::max(se, std::abs(g_norm(red.fields.metric(x), rc.tangent(s)) - 1.0));
                cd = std::max(cd, (x - mg.position_at(std::min(s, mg.t_end()))).norm());
            }
            speed = std::max(speed, se);
            curve = std::max(curve, cd);
            act = std::max(act, std::abs(a - ar));
            csv.rows.push_back({double(i), tr->exit.tau, rc.s_end(), a, ar, se, cd});
        } catch (const Error& e) {
            ++failed;
            run.fail("ray " + std::to_string(i) + ": " + e.what());
        }
    }
    run.report().at_most("reduce.unit_speed", speed, kUnitSpeedTol);
    run.report().at_most("reduce.ray_action", act, kTableTol);
    run.report().at_most("reduce.curve_vs_reduced_flow", curve, kCurveTol);
    run.report().at_most("reduce.failed_rays", failed, 0);
    run.out.tables["reduced_rays.csv"] = csv;

    if (run.cfg.resolution.table > 0) {
        const ActionTable a = boundary_action_table(sys, run.cfg.resolution.table, run.cfg.shooting);
        const ActionTable b = boundary_action_table(red, run.cfg.resolution.table, run.cfg.shooting);
        const TableDifference d = compare_tables(a, b);
        run.report().at_most("reduce.table_difference", d.max_abs, kTableTol);
        run.report().at_most("reduce.table_failures", a.failures + b.failures, 0);
        run.out.tables["action_table.csv"] = table_csv(run, a);
        run.out.tables["reduced_action_table.csv"] = table_csv(run, b);
    }
}

void group_law(Run& run) {
    const MPSystem& sys = run.sys;
    SplitMix64 rng(run.cfg.seed);
    const auto pts = sample_interior(sys.domain, run.cfg.resolution.points, run.cfg.seed);
    const GaugeTransform I = identity_gauge(sys.dim(), sys.k);
    CsvTable csv;
    csv.meta = run.meta();
    csv.header = {"pair", "sequential_vs_composed", "composed_factor", "identity", "inverse"};
    double seq = 0.0, fac = 0.0, id = 0.0, inv = 0.0;
    for (int i = 0; i < run.cfg.resolution.gauge_pairs; ++i) {
        const GaugeTransform G1 = random_gauge(sys, rng);
        const GaugeTransform G2 = random_gauge(sys, rng);
        const GaugeTransform C = compose(G1, G2);
        const MPSystem a1 = apply(G1, sys);
        const double s = system_difference(apply(G2, a1), apply(C, sys), pts).max();
        double f = 0.0;
        for (const Vec& x : pts) f = std::max(f, std::abs(C.mu(x) - G2.mu(x) * G1.mu(G2.f->map(x))));
        const double d = std::max(system_difference(apply(compose(I, G1), sys), a1, pts).max(),
                                  system_difference(apply(compose(G1, I), sys), a1, pts).max());
        const double v = std::max(system_difference(apply(compose(G1, inverse(G1)), sys), sys, pts).max(),
                                  system_difference(apply(compose(inverse(G1), G1), sys), sys, pts).max());
        seq = std::max(seq, s);
        fac = std::max(fac, f);
        id = std::max(id, d);
        inv = std::max(inv, v);
        csv.rows.push_back({double(i), s, f, d, v});
    }
    run.report().at_most("group.sequential_vs_composed", seq, kGroupTol);
    run.report().at_most("group.composed_factor", fac, kIdentityTol);
    run.report().at_most("group.identity", id, kGroupTol);
    run.report().at_most("group.inverse", inv, kGroupTol);
    run.out.tables["group_law.csv"] = csv;
}

struct Boundary {
    ActionTable table;
    std::vector<ScatteringRecord> records;  // glancing and failed rays hold no exit
    std::vector<bool> ok;
};

Boundary boundary_data(Run& run, const MPSystem& sys, const std::string& tag) {
    Boundary b;
    if (run.cfg.resolution.table > 0) {
        b.table = boundary_action_table(sys, run.cfg.resolution.table, run.cfg.shooting);
        if (b.table.failures) run.fail(tag + ": " + std::to_string(b.table.failures) + " shooting failures");
    }
    for (const Ray& r : ray_fan(sys.domain, run.cfg.resolution.rays)) {
        try {
            b.records.push_back(scattering(sys, r.p, r.u, run.io));
            b.ok.push_back(!b.records.back().glancing);
        } catch (const Error& e) {
            run.fail(tag + ": " + e.what());
            b.records.emplace_back();
            b.ok.push_back(false);
        }
    }
    return b;
}

struct BoundaryDiff {
    double table = 0.0;
    int table_compared = 0;
    int failures = 0;
    double point = 0.0, velocity = 0.0, action = 0.0;
    int rays = 0;
};

// Exit times are not compared: they differ by the time change when mu != 1.
BoundaryDiff compare_boundary(const Boundary& a, const Boundary& b) {
    BoundaryDiff d;
    if (a.table.size() > 0) {
        const TableDifference t = compare_tables(a.table, b.table);
        d.table = t.max_abs;
        d.table_compared = t.compared;
        d.failures = a.table.failures + b.table.failures;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (!a.ok[i] || !b.ok[i]) continue;
        d.point = std::max(d.point, (a.records[i].exit_x - b.records[i].exit_x).norm());
        d.velocity = std::max(d.velocity, (a.records[i].exit_v - b.records[i].exit_v).norm());
        d.action = std::max(d.action, std::abs(a.records[i].action - b.records[i].action));
        ++d.rays;
    }
    return d;
}

void report_boundary(Run& run, const std::string& prefix, const BoundaryDiff& d) {
    Report& r = run.report();
    if (run.cfg.resolution.table > 0) {
        r.at_most(prefix + ".table_difference", d.table, kTableTol);
        r.at_most(prefix + ".table_failures", d.failures, 0);
    }
    if (run.cfg.resolution.rays > 0) {
        r.at_most(prefix + ".scattering_point", d.point, kTableTol);
        r.at_most(prefix + ".scattering_velocity", d.velocity, kTableTol);
        r.at_most(prefix + ".scattering_action", d.action, kTableTol);
        r.above(prefix + ".rays_compared", d.rays, 0);
    }
}

void write_boundary(Run& run, const Boundary& b, const std::string& stem) {
    if (b.table.size() > 0) run.out.tables[stem + "_action_table.csv"] = table_csv(run, b.table);
    CsvTable csv;
    csv.meta = run.meta();
    csv.header = {"theta_in", "dir_in", "theta_out", "dir_out", "tau", "action"};
    const ChartDomain& dom = run.sys.domain;
    for (std::size_t i = 0; i < b.records.size(); ++i) {
        const ScatteringRecord& r = b.records[i];
        if (!b.ok[i]) continue;
        csv.rows.push_back({boundary_angle(dom, r.entry_x), direction_angle(dom, r.entry_x, r.entry_v, 1),
                            boundary_angle(dom, r.exit_x), direction_angle(dom, r.exit_x, r.exit_v, -1), r.tau,
                            r.action});
    }
    run.out.tables[stem + "_scattering.csv"] = csv;
}

void counterexample(Run& run) {
    const CounterexamplePair cp = counterexample_from(run.cfg.params, run.cfg.mode);
    const auto pts = sample_interior(cp.sys1.domain, run.cfg.resolution.points, run.cfg.seed);
    Report& r = run.report();
    r.at_most("counterexample.reduction_identity", system_difference(reduce(cp.sys1), reduce(cp.sys2), pts).max(),
              kIdentityTol);
    double lo = INFINITY, hi = INFINITY;
    for (const Vec& x : pts) {
        lo = std::min(lo, 1.5 - cp.phi(x));
        hi = std::min(hi, 2.0 * cp.psi(x) - 1.5);
    }
    r.above("counterexample.ordering_phi_below", lo, 0.0);
    r.above("counterexample.ordering_2psi_above", hi, 0.0);
    const Correspondence c = reduction_correspondence(cp.sys1, cp.sys2, identity_map(cp.sys1.dim()),
                                                      constant_scalar(0.0), pts);
    double dmu = 0.0;
    for (const Vec& x : pts) dmu = std::max(dmu, std::abs(c.mu(x) - (3.0 - 2.0 * cp.psi(x)) / (3.0 - cp.phi(x))));
    r.at_most("counterexample.correspondence_residual", c.residuals.max(), kRelationTolerance);
    r.at_most("counterexample.mu_formula", dmu, kIdentityTol);
    r.at_most("counterexample.relation_residual", relation_residuals(cp.sys1, cp.sys2, cp.gauge, pts).max(),
              kRelationTolerance);
    const Boundary b1 = boundary_data(run, cp.sys1, "system 1");
    const Boundary b2 = boundary_data(run, cp.sys2, "system 2");
    report_boundary(run, "counterexample", compare_boundary(b1, b2));
    write_boundary(run, b1, "system1");
    write_boundary(run, b2, "system2");
}

void gauge(Run& run) {
    if (run.cfg.gauge == "group-law") return group_law(run);
    if (run.cfg.scenario == "counterexample") return counterexample(run);
    const MPSystem& sys = run.sys;
    Report& r = run.report();
    const GaugeTransform G = make_gauge(run.cfg.gauge, sys, run.cfg.gauge_params);
    const GaugeValidation v = validate_gauge(G, sys.domain);
    r.at_most("gauge.boundary_displacement", v.boundary_displacement, kBoundaryDataTol);
    r.at_most("gauge.boundary_phi", v.boundary_phi, kBoundaryDataTol);
    r.above("gauge.min_mu", v.min_mu, 0.0);
    const MPSystem sys2 = apply(G, sys);
    const auto pts = sample_interior(sys.domain, run.cfg.resolution.points, run.cfg.seed);

    EquivalenceOptions eo;
    eo.points = pts;
    eo.table_size = 0;
    eo.rays = 0;
    const EquivalenceReport e = verify_equivalence(sys, sys2, G, eo);
    r.at_most("gauge.relations", e.relations.max(), kRelationTolerance);
    r.at_most("gauge.boundary_metric", e.boundary_metric, kBoundaryDataTol);
    r.at_most("gauge.boundary_potential", e.boundary_potential, kBoundaryDataTol);
    r.at_most("gauge.boundary_one_form", e.boundary_one_form, kBoundaryDataTol);

    const Boundary b1 = boundary_data(run, sys, "original");
    const Boundary b2 = boundary_data(run, sys2, "gauged");
    report_boundary(run, "gauge", compare_boundary(b1, b2));
    write_boundary(run, b1, "original");
    write_boundary(run, b2, "gauged");

    // Not equivalent: U' + eps rho^2 keeps the boundary values but changes
    // the interior dynamics.
    MPSystem bad = sys2;
    const ScalarFn U = sys2.fields.potential;
    const ScalarFn rho = sys.domain.rho;
    const double eps = run.cfg.perturbation;
    bad.fields.potential = [U, rho, eps](const Vec& x) { return U(x) + eps * rho(x) * rho(x); };
    bad.fields.jet = {};
    bad.fields.mode = DerivativeMode::FiniteDifference;
    bad.label = sys2.label + "+perturbed";
    if (!(estimate_max_potential(bad.domain, bad.fields, 101) + kPotentialMargin < bad.k)) {
        run.fail("control perturbation reaches k; control skipped");
        return;
    }
    r.above("control.relations", relation_residuals(sys, bad, G, pts).max(), kControlTol);
    if (run.cfg.resolution.table > 0 || run.cfg.resolution.rays > 0) {
        const BoundaryDiff d = compare_boundary(b1, boundary_data(run, bad, "control"));
        r.above("control.boundary_difference", std::max({d.table, d.point, d.velocity, d.action}), kControlTol);
    }
}

void flows_compare(Run& run) {
    const MPSystem& sys = run.sys;
    Report& r = run.report();
    const int samples = std::max(2, run.cfg.resolution.samples);
    const auto rays = ray_fan(sys.domain, run.cfg.resolution.rays);
    if (!rays.empty()) {
        CsvTable csv;
        csv.meta = run.meta();
        csv.header = {"ray", "tau", "lagrangian", "tangent_hamiltonian", "twisted_cotangent", "canonical_cotangent"};
        const ScalarField mus[3] = {constant_scalar(2.0), hat_factor(sys), reduced_factor(sys)};
        const char* names[3] = {"h_tilde.mu_2", "h_tilde.mu_hat", "h_tilde.mu_reduced"};
        double four = 0.0, hdrift = 0.0, tilde[3] = {0, 0, 0};
        int failed = 0;
        for (std::size_t i = 0; i < rays.size(); ++i) {
            try {
                const PhaseState s0 = lifted(sys, rays[i]);
                const FormulationComparison fc = compare_formulations(sys, s0, samples, run.io);
                four = std::max(four, fc.max_deviation);
                csv.rows.push_back({double(i), fc.tau, fc.deviation[0], fc.deviation[1], fc.deviation[2], fc.deviation[3]});

                const PhaseState sc = convert(sys, s0, Representation::CanonicalMomentum);
                const Trajectory h = integrate(sys, Formulation::CanonicalCotangent, sc, 0.0, run.io);
                hdrift = std::max(hdrift, h.max_energy_drift(sys.k));
                for (int m = 0; m < 3; ++m) {
                    auto tt = std::make_shared<const Trajectory>(integrate_tilde(sys, mus[m], sc, 0.0, run.io));
                    const RunningIntegral beta = time_change(tt, mus[m]);
                    double dev = std::abs(beta.total() - h.exit.tau);
                    for (int q = 0; q <= samples; ++q) {
                        const double s = tt->t_end() * q / samples;
                        dev = std::max(dev, (tt->position_at(s) - h.position_at(std::min(beta(s), h.t_end()))).norm());
                    }
                    tilde[m] = std::max(tilde[m], dev);
                }
            } catch (const Error& e) {
                ++failed;
                run.fail("ray " + std::to_string(i) + ": " + e.what());
            }
        }
        r.at_most("four_flow.max_deviation", four, kCurveTol);
        r.at_most("four_flow.failed_rays", failed, 0);
        r.at_most("h_flow.energy", hdrift, kHFlowEnergyTol);
        for (int m = 0; m < 3; ++m) r.at_most(names[m], tilde[m], kCurveTol);
        run.out.tables["flows.csv"] = csv;
    }

    const int np = run.cfg.resolution.phase_points;
    if (np > 0) {
        const int n = sys.dim();
        SplitMix64 rng(run.cfg.seed);
        const auto pts = sample_interior(sys.domain, np, run.cfg.seed);
        const HamiltonianChoice H{HamiltonianKind::H, {}};
        const HamiltonianChoice Hhat{HamiltonianKind::HHat, {}};
        const HamiltonianChoice Hr{HamiltonianKind::HReduced, {}};
        const HamiltonianChoice T1{HamiltonianKind::HTilde, constant_scalar(1.0)};
        const HamiltonianChoice Tmus[3] = {{HamiltonianKind::HTilde, constant_scalar(2.0)},
                                         {HamiltonianKind::HTilde, hat_factor(sys)},
                                         {HamiltonianKind::HTilde, reduced_factor(sys)}};
        const double k = sys.k;
        double hhat = 0.0, hr = 0.0, h1 = 0.0, on = 0.0;
        int mismatches = 0;
        auto sgn = [](double x) { return (x > 0) - (x < 0); };
        for (const Vec& x : pts) {
            Vec xi(n), u(n);
            for (int d = 0; d < n; ++d) xi[d] = rng.uniform(-1.0, 1.0);
            for (int d = 0; d < n; ++d) u[d] = rng.uniform(-1.0, 1.0);
            const double h = hamiltonian(sys, H, x, xi);
            hhat = std::max(hhat, std::abs(hamiltonian(sys, Hhat, x, xi) - hamiltonian(sys, Tmus[1], x, xi)));
            hr = std::max(hr, std::abs(hamiltonian(sys, Hr, x, xi) - (hamiltonian(sys, Tmus[2], x, xi) - (k - 0.5))));
            h1 = std::max(h1, std::abs(hamiltonian(sys, T1, x, xi) - h));
            for (const auto& t : Tmus) mismatches += sgn(hamiltonian(sys, t, x, xi) - k) != sgn(h - k);
            mismatches += sgn(hamiltonian(sys, Hhat, x, xi) - k) != sgn(h - k);
            mismatches += sgn(hamiltonian(sys, Hr, x, xi) - 0.5) != sgn(h - k);

            if (u.norm() < 1e-3) u[0] = 1.0;
            const Vec eta = legendre(sys, x, sphere_lift(sys, x, u));
            double res = std::abs(hamiltonian(sys, H, x, eta) - k);
            for (const auto& t : Tmus) res = std::max(res, std::abs(hamiltonian(sys, t, x, eta) - k));
            res = std::max(res, std::abs(hamiltonian(sys, Hhat, x, eta) - k));
            res = std::max(res, std::abs(hamiltonian(sys, Hr, x, eta) - 0.5));
            on = std::max(on, res);
        }
        r.at_most("table.hhat_identity", hhat, kIdentityTol);
        r.at_most("table.hr_identity", hr, kIdentityTol);
        r.at_most("table.unit_factor_identity", h1, kIdentityTol);
        r.at_most("level_set.on_level", on, kIdentityTol);
        r.at_most("level_set.sign_mismatches", mismatches, 0);
    }
}

void convexity(Run& run) {
    const MPSystem& sys = run.sys;
    const int n = sys.dim();
    const int count = run.cfg.resolution.samples;
    std::vector<Vec> pts;
    for (const auto& p : boundary_samples(sys.domain, count)) pts.push_back(boundary_point(sys.domain, p));
    for (const Vec& x : sample_boundary(sys.domain, count, run.cfg.seed)) pts.push_back(x);
    SplitMix64 rng(run.cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    CsvTable csv;
    csv.meta = run.meta();
    csv.header = {"theta", "orientation", "margin"};
    double lo = INFINITY;
    for (const Vec& x : pts) {
        const Mat T = boundary_tangent_basis(sys.domain, x);
        Vec u = T.col(0);
        if (n == 3) {
            const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
            u = std::cos(a) * T.col(0) + std::sin(a) * T.col(1);
        }
        for (double sgn : {1.0, -1.0}) {
            const double m = mp_convexity_margin(sys, x, sphere_lift(sys, x, Vec(sgn * u)));
            lo = std::min(lo, m);
            csv.rows.push_back({boundary_angle(sys.domain, x), sgn, m});
        }
    }
    if (run.cfg.expect_convex) {
        run.report().above("convexity.min_margin", lo, 0.0);
    } else {
        run.report().below("convexity.min_margin", lo, 0.0);
    }
    run.out.tables["convexity.csv"] = csv;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    Run run(cfg);
    switch (cfg.kind) {
        case ExperimentKind::Simulate: simulate(run); break;
        case ExperimentKind::Scatter: scatter(run); break;
        case ExperimentKind::Action: action(run); break;
        case ExperimentKind::ReduceCheck: reduce_check(run); break;
        case ExperimentKind::Gauge: gauge(run); break;
        case ExperimentKind::FlowsCompare: flows_compare(run); break;
        case ExperimentKind::ConvexityCheck: convexity(run); break;
    }
    if (!cfg.out.empty()) write_outputs(run.out, cfg.out);
    return std::move(run.out);
}

}  // namespace mpflow::harness
