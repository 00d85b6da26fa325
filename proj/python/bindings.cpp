#include "mpflow/harness.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mpflow;
namespace hn = mpflow::harness;

namespace {

Vec to_vec(const std::vector<double>& v) {
    if (v.size() < 2 || v.size() > 3) throw Error(ErrorCode::Precondition, "points have 2 or 3 coordinates");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

py::array_t<double> to_array(const Vec& v) {
    py::array_t<double> a(v.size());
    for (int i = 0; i < v.size(); ++i) a.mutable_at(i) = v[i];
    return a;
}

py::array_t<double> to_array(const Mat& m) {
    py::array_t<double> a({m.rows(), m.cols()});
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) a.mutable_at(i, j) = m(i, j);
    }
    return a;
}

IntegratorOptions integrator(double atol, double rtol) {
    IntegratorOptions o;
    o.atol = atol;
    o.rtol = rtol;
    return o;
}

py::dict report_dict(const hn::Report& r) {
    py::list checks;
    for (const auto& c : r.checks) {
        py::dict d;
        d["name"] = c.name;
        d["value"] = c.value;
        d["tol"] = c.tol;
        d["pass"] = c.pass;
        checks.append(d);
    }
    py::dict d;
    d["experiment"] = r.experiment;
    d["scenario"] = r.scenario;
    d["seed"] = r.seed;
    d["pass"] = r.pass();
    d["checks"] = checks;
    d["oracles"] = r.oracles;
    d["failures"] = r.failures;
    d["files"] = r.files;
    return d;
}

py::dict record_dict(const ScatteringRecord& s) {
    py::dict d;
    d["entry_x"] = to_array(s.entry_x);
    d["entry_v"] = to_array(s.entry_v);
    d["exit_x"] = to_array(s.exit_x);
    d["exit_v"] = to_array(s.exit_v);
    d["tau"] = s.tau;
    d["action"] = s.action;
    d["glancing"] = s.glancing;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MP-system flows, scattering, action and gauge tools";
    static py::exception<Error> error(m, "MpflowError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<MPSystem>(m, "System")
        .def_property_readonly("dim", &MPSystem::dim)
        .def_readonly("k", &MPSystem::k)
        .def_readonly("label", &MPSystem::label)
        .def("metric", [](const MPSystem& s, const std::vector<double>& x) { return to_array(s.fields.metric(to_vec(x))); })
        .def("one_form", [](const MPSystem& s, const std::vector<double>& x) { return to_array(s.fields.one_form(to_vec(x))); })
        .def("potential", [](const MPSystem& s, const std::vector<double>& x) { return s.fields.potential(to_vec(x)); })
        .def("rho", [](const MPSystem& s, const std::vector<double>& x) { return s.domain.rho(to_vec(x)); })
        .def("energy", [](const MPSystem& s, const std::vector<double>& x, const std::vector<double>& v) {
            return energy(s, to_vec(x), to_vec(v));
        })
        .def("boundary_point", [](const MPSystem& s, const std::vector<double>& params) {
            return to_array(boundary_point(s.domain, std::span<const double>(params)));
        })
        .def("__repr__", [](const MPSystem& s) { return "<System " + s.label + " k=" + hn::format_number(s.k) + ">"; });

    py::class_<GaugeTransform>(m, "Gauge")
        .def_readonly("label", &GaugeTransform::label)
        .def_readonly("k", &GaugeTransform::k)
        .def("map", [](const GaugeTransform& g, const std::vector<double>& x) { return to_array(g.f->map(to_vec(x))); })
        .def("mu", [](const GaugeTransform& g, const std::vector<double>& x) { return g.mu(to_vec(x)); })
        .def("phi", [](const GaugeTransform& g, const std::vector<double>& x) { return g.phi(to_vec(x)); });

    m.def("scenarios", [] {
        std::vector<std::string> out;
        for (const auto& e : scenario_catalog()) out.push_back(e.key);
        return out;
    });
    m.def("gauges", [] {
        std::vector<std::string> out;
        for (const auto& e : gauge_catalog()) out.push_back(e.key);
        return out;
    });
    m.def("make_scenario", [](const std::string& key, const Params& params, bool analytic) {
        return make_scenario(key, params, analytic ? DerivativeMode::Analytic : DerivativeMode::FiniteDifference);
    }, py::arg("key"), py::arg("params") = Params{}, py::arg("analytic") = true);
    m.def("reduce", &reduce);
    m.def("sphere_lift", [](const MPSystem& s, const std::vector<double>& x, const std::vector<double>& u) {
        return to_array(sphere_lift(s, to_vec(x), to_vec(u)));
    });
    m.def("convexity_margin", [](const MPSystem& s, const std::vector<double>& x, const std::vector<double>& v) {
        return mp_convexity_margin(s, to_vec(x), to_vec(v));
    });
    m.def("trajectory", [](const MPSystem& s, const std::vector<double>& x, const std::vector<double>& v, double t_max,
                           double atol, double rtol) {
        IntegratorOptions o = integrator(atol, rtol);
        o.stop_at_exit = t_max <= 0;
        const Trajectory tr = integrate(s, Formulation::Lagrangian, PhaseState{to_vec(x), to_vec(v)}, t_max, o);
        const auto& states = tr.solution.states();
        const int n = s.dim();
        py::array_t<double> pos({static_cast<py::ssize_t>(states.size()), static_cast<py::ssize_t>(2 * n)});
        for (std::size_t i = 0; i < states.size(); ++i) {
            for (int c = 0; c < 2 * n; ++c) pos.mutable_at(i, c) = states[i][c];
        }
        py::dict d;
        d["t"] = tr.knots();
        d["states"] = pos;
        d["energies"] = tr.energies;
        d["tau"] = tr.exit.tau;
        d["exited"] = tr.exit.exited;
        return d;
    }, py::arg("system"), py::arg("x"), py::arg("v"), py::arg("t_max") = 0.0, py::arg("atol") = 1e-10,
       py::arg("rtol") = 1e-10);
    m.def("scatter", [](const MPSystem& s, const std::vector<double>& p, const std::vector<double>& u, double atol,
                        double rtol) { return record_dict(scattering(s, to_vec(p), to_vec(u), integrator(atol, rtol))); },
          py::arg("system"), py::arg("p"), py::arg("u"), py::arg("atol") = 1e-10, py::arg("rtol") = 1e-10);
    m.def("mane_potential", [](const MPSystem& s, const std::vector<double>& x, const std::vector<double>& y) {
        const ActionValue a = mane_potential(s, to_vec(x), to_vec(y), ShootOptions{}, false);
        py::dict d;
        d["value"] = a.value;
        d["T"] = a.T;
        d["v0"] = to_array(a.v0);
        d["residual"] = a.residual;
        return d;
    });
    m.def("action_table", [](const MPSystem& s, int n) {
        const ActionTable t = boundary_action_table(s, n);
        py::array_t<double> a({n, n});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a.mutable_at(i, j) = t.entries[i][j].value;
        }
        return a;
    });

    m.def("make_gauge", [](const std::string& key, const MPSystem& s, const Params& p) { return make_gauge(key, s, p); },
          py::arg("key"), py::arg("system"), py::arg("params") = Params{});
    m.def("apply_gauge", &apply);
    m.def("compose", &compose);
    m.def("inverse", &inverse);
    m.def("system_difference", [](const MPSystem& a, const MPSystem& b, int points, std::uint64_t seed) {
        const RelationResiduals r = system_difference(a, b, sample_interior(a.domain, points, seed));
        return r.max();
    }, py::arg("a"), py::arg("b"), py::arg("points") = 100, py::arg("seed") = 1);
    m.def("counterexample", [](const Params& p) {
        const CounterexamplePair cp = counterexample_from(p);
        return py::make_tuple(cp.sys1, cp.sys2, cp.gauge);
    }, py::arg("params") = Params{});

    m.def("run_config", [](const std::string& text) {
        hn::ExperimentConfig cfg = hn::parse_config(text);
        hn::ExperimentOutput out;
        {
            py::gil_scoped_release release;
            out = hn::run_experiment(cfg);
        }
        return report_dict(out.report);
    }, py::arg("json_text"));
    m.def("run_config_file", [](const std::string& path) {
        hn::ExperimentConfig cfg = hn::load_config(path);
        hn::ExperimentOutput out;
        {
            py::gil_scoped_release release;
            out = hn::run_experiment(cfg);
        }
        return report_dict(out.report);
    }, py::arg("path"));
    m.def("run_criterion", [](int id, std::uint64_t seed) {
        hn::CriterionResult r;
        {
            py::gil_scoped_release release;
            r = hn::run_criterion(id, seed);
        }
        py::dict d = report_dict(r.report);
        d["title"] = r.title;
        d["seconds"] = r.seconds;
        return d;
    }, py::arg("id"), py::arg("seed") = 1);
}
