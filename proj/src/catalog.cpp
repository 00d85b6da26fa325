#include "mpflow/catalog.hpp"

#include <cmath>

namespace mpflow {

namespace {

Params merged(const CatalogEntry& e, const Params& overrides, const std::string& what) {
    Params p = e.defaults;
    for (const auto& [k, v] : overrides) {
        if (!p.count(k)) throw Error(ErrorCode::Config, what + " '" + e.key + "' has no parameter '" + k + "'");
        p[k] = v;
    }
    return p;
}

const CatalogEntry& find_entry(const std::vector<CatalogEntry>& cat, const std::string& key,
                               const std::string& what) {
    for (const auto& e : cat) {
        if (e.key == key) return e;
    }
    std::string known;
    for (const auto& e : cat) known += (known.empty() ? "" : ", ") + e.key;
    throw Error(ErrorCode::Config, "unknown " + what + " '" + key + "' (known: " + known + ")");
}

int as_dim(double d) {
    const int n = static_cast<int>(std::lround(d));
    if (n != 2 && n != 3) throw Error(ErrorCode::Config, "dim must be 2 or 3");
    return n;
}

Params base_params(double a, double B, double u0) {
    return {{"dim", 2},     {"R", 1.0},   {"k", 0.5},     {"lambda0", 0.0}, {"a", a},
            {"B", B},       {"u0", u0},   {"profile", 0}, {"width", 0.5}};
}

}  // namespace

const std::vector<CatalogEntry>& scenario_catalog() {
    static const std::vector<CatalogEntry> cat = {
        {"flat-disk", "Euclidean disk, no field, no potential", base_params(0.0, 0.0, 0.0)},
        {"conformal-disk", "conformal metric exp(2 lambda) delta on the disk", base_params(0.1, 0.0, 0.0)},
        {"constant-field", "Euclidean disk with constant magnetic field B", base_params(0.0, 0.5, 0.0)},
        {"radial-potential", "Euclidean disk with radial potential", base_params(0.0, 0.0, 0.2)},
        {"counterexample", "(g/(2(3-phi)), alpha, phi) or (g/(2(3-2psi)), alpha, 2psi) at k=3",
         {{"dim", 2}, {"variant", 1}, {"c1", 0.25}, {"c2", 0.125}, {"a", 0.0}, {"B", 0.3}}},
        {"dented-disk", "flat disk with a boundary dent (not convex)",
         {{"dim", 2}, {"k", 0.5}, {"depth", 0.3}, {"width", 0.3}, {"B", 0.0}}},
    };
    return cat;
}

const std::vector<CatalogEntry>& gauge_catalog() {
    static const std::vector<CatalogEntry> cat = {
        {"identity", "f = id, phi = 0, mu = 1", {}},
        {"exact-shift", "f = id, mu = 1, phi = rho (c0 + c1 x + c2 y)", {{"c0", 0.2}, {"c1", 0.1}, {"c2", -0.15}}},
        {"elliptic", "f = id, phi = 0, mu = exp(m rho)", {{"m", 0.3}}},
        {"swirl", "f = closed-form swirl by omega rho^p", {{"omega", 0.4}, {"p", 2}}},
        {"generator", "f = time-1 flow of rho^p (A x + b)",
         {{"a11", 0.0}, {"a12", -0.3}, {"a21", 0.3}, {"a22", 0.1}, {"b1", 0.1}, {"b2", -0.05}, {"p", 1}}},
        {"boundary-compatible", "swirl (p=2) with phi = rho (c0 + c1 x) and mu = exp(m rho)",
         {{"omega", 0.4}, {"c0", 0.2}, {"c1", 0.1}, {"m", 0.3}}},
    };
    return cat;
}

ScenarioFields radial_fields(int dim, double R, const Params& p, DerivativeMode mode) {
    const double lambda0 = p.at("lambda0"), a = p.at("a"), B = p.at("B"), u0 = p.at("u0");
    const int profile = static_cast<int>(std::lround(p.at("profile")));
    const double w = p.at("width");
    if (profile != 0 && profile != 1) throw Error(ErrorCode::Config, "profile must be 0 or 1");
    if (!(w > 0)) throw Error(ErrorCode::Config, "width must be positive");
    const double R2 = R * R;

    ScenarioFields f;
    f.dim = dim;
    auto lam = [=](const Vec& x) { return lambda0 + a * (1.0 - x.squaredNorm() / R2); };
    f.metric = [=](const Vec& x) { return Mat(std::exp(2.0 * lam(x)) * Mat::Identity(dim, dim)); };
    f.one_form = [=](const Vec& x) {
        Vec al = Vec::Zero(dim);
        al[0] = -0.5 * B * x[1];
        al[1] = 0.5 * B * x[0];
        return al;
    };
    auto U = [=](const Vec& x) {
        if (profile == 0) return u0 * (1.0 - x.squaredNorm() / R2);
        return u0 * std::exp(-x.squaredNorm() / (w * w));
    };
    f.potential = U;
    f.metric_derivative = [=](const Vec& x) {
        MatArray d;
        const double e = std::exp(2.0 * lam(x));
        for (int m = 0; m < dim; ++m) {
            d[m] = (2.0 * (-2.0 * a * x[m] / R2) * e) * Mat::Identity(dim, dim);
        }
        return d;
    };
    f.one_form_jacobian = [=](const Vec&) {
        Mat J = Mat::Zero(dim, dim);
        J(0, 1) = 0.5 * B;
        J(1, 0) = -0.5 * B;
        return J;
    };
    f.potential_gradient = [=](const Vec& x) {
        if (profile == 0) return Vec(-2.0 * u0 * x / R2);
        return Vec(-2.0 * x / (w * w) * U(x));
    };
    f.mode = mode;
    return f;
}

ChartDomain dented_disk(int dim, double depth, double width) {
    if (!(depth > 0 && depth < 1)) throw Error(ErrorCode::Config, "dent depth must lie in (0, 1)");
    if (!(width > 0)) throw Error(ErrorCode::Config, "dent width must be positive");
    ChartDomain d = disk_domain(dim, 1.0);
    Vec c = Vec::Zero(dim);
    c[0] = 1.0;
    const double w2 = width * width;
    d.rho = [=](const Vec& x) {
        return 1.0 - x.squaredNorm() - depth * std::exp(-(x - c).squaredNorm() / w2);
    };
    d.rho_gradient = [=](const Vec& x) {
        const double e = depth * std::exp(-(x - c).squaredNorm() / w2);
        return Vec(-2.0 * x + e * 2.0 * (x - c) / w2);
    };
    d.rho_hessian = [=](const Vec& x) {
        const double e = depth * std::exp(-(x - c).squaredNorm() / w2);
        const Vec y = x - c;
        return Mat(-2.0 * Mat::Identity(dim, dim) +
                   e * (2.0 / w2 * Mat::Identity(dim, dim) - 4.0 / (w2 * w2) * y * y.transpose()));
    };
    return d;
}

std::vector<std::string> simple_scenarios() {
    return {"flat-disk", "conformal-disk", "constant-field", "radial-potential", "counterexample"};
}

CounterexamplePair counterexample_from(const Params& overrides, DerivativeMode mode) {
    const Params p = merged(find_entry(scenario_catalog(), "counterexample", "scenario"), overrides, "scenario");
    const ScenarioFields fields = radial_fields(as_dim(p.at("dim")), 1.0, base_params(p.at("a"), p.at("B"), 0.0), mode);
    return counterexample_pair(fields, {p.at("c1"), p.at("c2")});
}

MPSystem make_scenario(const std::string& key, const Params& overrides, DerivativeMode mode) {
    const CatalogEntry& e = find_entry(scenario_catalog(), key, "scenario");
    const Params p = merged(e, overrides, "scenario");
    const int dim = as_dim(p.at("dim"));

    if (key == "counterexample") {
        const CounterexamplePair pair = counterexample_from(overrides, mode);
        const int variant = static_cast<int>(std::lround(p.at("variant")));
        if (variant != 1 && variant != 2) throw Error(ErrorCode::Config, "variant must be 1 or 2");
        MPSystem sys = variant == 1 ? pair.sys1 : pair.sys2;
        sys.label = key + (variant == 1 ? "/1" : "/2");
        return sys;
    }
    if (key == "dented-disk") {
        Params base = base_params(0.0, p.at("B"), 0.0);
        ChartDomain dom = dented_disk(dim, p.at("depth"), p.at("width"));
        return make_system(std::move(dom), radial_fields(dim, 1.0, base, mode), p.at("k"), key);
    }
    const double R = p.at("R");
    if (!(R > 0)) throw Error(ErrorCode::Config, "R must be positive");
    return make_system(disk_domain(dim, R), radial_fields(dim, R, p, mode), p.at("k"), key,
                       dim == 2 ? 201 : 41);
}

GaugeTransform make_gauge(const std::string& key, const MPSystem& sys, const Params& overrides) {
    const CatalogEntry& e = find_entry(gauge_catalog(), key, "gauge");
    const Params p = merged(e, overrides, "gauge");
    const ChartDomain dom = sys.domain;
    const int n = sys.dim();
    GaugeTransform G = identity_gauge(n, sys.k);
    G.label = key;

    auto rho_times_affine = [dom, n](double c0, double c1, double c2) {
        ScalarField phi;
        phi.value = [=](const Vec& x) { return dom.rho(x) * (c0 + c1 * x[0] + c2 * x[1]); };
        phi.gradient = [=](const Vec& x) {
            Vec lin = Vec::Zero(n);
            lin[0] = c1;
            lin[1] = c2;
            return Vec(dom.grad_rho(x) * (c0 + c1 * x[0] + c2 * x[1]) + dom.rho(x) * lin);
        };
        return phi;
    };
    auto exp_rho = [dom](double m) {
        ScalarField mu;
        mu.value = [=](const Vec& x) { return std::exp(m * dom.rho(x)); };
        mu.gradient = [=](const Vec& x) { return Vec(m * std::exp(m * dom.rho(x)) * dom.grad_rho(x)); };
        return mu;
    };

    if (key == "identity") return G;
    if (key == "exact-shift") {
        G.phi = rho_times_affine(p.at("c0"), p.at("c1"), p.at("c2"));
    } else if (key == "elliptic") {
        G.mu = exp_rho(p.at("m"));
    } else if (key == "swirl") {
        G.f = swirl_map(dom, p.at("omega"), static_cast<int>(std::lround(p.at("p"))));
    } else if (key == "generator") {
        Mat A(n, n);
        A.setZero();
        A(0, 0) = p.at("a11");
        A(0, 1) = p.at("a12");
        A(1, 0) = p.at("a21");
        A(1, 1) = p.at("a22");
        Vec b = Vec::Zero(n);
        b[0] = p.at("b1");
        b[1] = p.at("b2");
        G.f = generator_flow(dom, A, b, static_cast<int>(std::lround(p.at("p"))));
    } else if (key == "boundary-compatible") {
        G.f = swirl_map(dom, p.at("omega"), 2);
        G.phi = rho_times_affine(p.at("c0"), p.at("c1"), 0.0);
        G.mu = exp_rho(p.at("m"));
    }
    return G;
}

GaugeTransform random_gauge(const MPSystem& sys, SplitMix64& rng) {
    const int n = sys.dim();
    Mat A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-0.3, 0.3);
    }
    Vec b(n);
    for (int i = 0; i < n; ++i) b[i] = rng.uniform(-0.2, 0.2);
    const int p = rng.uniform() < 0.5 ? 1 : 2;
    Params phi{{"c0", rng.uniform(-0.3, 0.3)}, {"c1", rng.uniform(-0.2, 0.2)}, {"c2", rng.uniform(-0.2, 0.2)}};
    GaugeTransform G = make_gauge("exact-shift", sys, phi);
    G.f = generator_flow(sys.domain, A, b, p);
    const double m = rng.uniform(-0.4, 0.4);
    const ChartDomain dom = sys.domain;
    const double c = rng.uniform(-0.2, 0.2);
    G.mu.value = [dom, m, c](const Vec& x) { return std::exp(dom.rho(x) * (m + c * x[0])); };
    G.mu.gradient = {};
    G.label = "random";
    return G;
}

}  // namespace mpflow
