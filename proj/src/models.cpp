#include "nhj/models.hpp"

#include "nhj/errors.hpp"

#include <cmath>
#include <numbers>

namespace nhj {

const OneFormField& Model::candidate(const std::string& cand) const {
    for (const auto& c : candidates)
        if (c.name == cand) return c.field;
    throw ConfigError("model '" + name + "' has no candidate '" + cand + "'");
}

const VectorField& Model::base_field(const std::string& field) const {
    for (const auto& f : base_fields)
        if (f.name == field) return f.field;
    throw ConfigError("model '" + name + "' has no base field '" + field + "'");
}

std::vector<std::string> Model::display_names() const {
    std::vector<std::string> out;
    for (int idx : display_order) out.push_back(system.chart.coordinate_names[idx]);
    return out;
}

Vec Model::to_internal(const Vec& display) const {
    if (display.size() != dim())
        throw ConfigError("expected " + std::to_string(dim()) + " coordinates for model '" +
                          name + "'");
    Vec out(dim());
    for (int k = 0; k < dim(); ++k) out[display_order[k]] = display[k];
    return out;
}

Vec Model::to_display(const Vec& internal) const {
    Vec out(dim());
    for (int k = 0; k < dim(); ++k) out[k] = internal[display_order[k]];
    return out;
}

SampleGrid Model::grid_to_internal(const SampleGrid& display) const {
    SampleGrid out;
    out.cap = display.cap;
    if (!display.axes.empty()) {
        if (static_cast<int>(display.axes.size()) != dim())
            throw ConfigError("grid needs " + std::to_string(dim()) + " axes for model '" +
                              name + "'");
        out.axes.resize(dim());
        for (int k = 0; k < dim(); ++k) out.axes[display_order[k]] = display.axes[k];
    }
    for (const auto& p : display.explicit_points) out.explicit_points.push_back(to_internal(p));
    return out;
}

namespace {

std::vector<int> identity_order(int n) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    return order;
}

SampleGrid cube(int n, double lo, double hi, int count) {
    SampleGrid g;
    g.axes.assign(n, GridAxis{lo, hi, count});
    return g;
}

MechanicalSystem constant_metric_system(Chart chart, Mat metric, std::function<double(const Vec&)> v,
                                        std::function<Vec(const Vec&)> grad_v) {
    MechanicalSystem sys;
    sys.chart = std::move(chart);
    sys.mass_metric = [metric](const Vec&) { return metric; };
    sys.potential.eval = std::move(v);
    sys.potential.gradient = grad_v;
    // dH/dq = dV/dq when M is constant.
    sys.hamiltonian_dq = [grad_v](const Vec& q, const Vec&) { return grad_v(q); };
    const auto n = metric.rows();
    sys.metric_derivative = [n](const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); };
    return sys;
}

double param(const ParamMap& p, const char* key) { return p.at(key); }

void require_positive(const ParamMap& p) {
    for (const auto& [key, value] : p)
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError("parameter '" + key + "' must be positive, got " +
                              std::to_string(value));
}

Model build_nh_particle(const ParamMap& p) {
    const double c = param(p, "c");
    const double k = param(p, "k");
    if (!std::isfinite(c) || !(k >= 0.0)) throw ConfigError("nh_particle needs finite c and k >= 0");

    Model model;
    model.name = "nh_particle";
    model.params = p;
    model.system = constant_metric_system(
        Chart({"r1", "r2", "s"}), Mat::Identity(3, 3),
        [k](const Vec& q) { return 0.5 * k * (q[0] * q[0] + q[1] * q[1]); },
        [k](const Vec& q) { return Vec((Vec(3) << k * q[0], k * q[1], 0.0).finished()); });

    EhresmannConnection conn;
    conn.base_dim = 2;
    conn.fiber_dim = 1;
    conn.christoffel = [c](const Vec& q) { return Mat((Mat(1, 2) << -c * q[1], 0.0).finished()); };
    model.connection = conn;
    model.constraints = conn.constraints();

    model.candidates = {
        {"zero", {[](const Vec&) { return Vec(Vec::Zero(3)); }}},
        {"lift_Y1", {[c](const Vec& q) { return Vec((Vec(3) << 1.0, 0.0, c * q[1]).finished()); }}},
        {"lift_Y2", {[](const Vec&) { return Vec((Vec(3) << 0.0, 1.0, 0.0).finished()); }}},
        {"exact_dS", {[](const Vec& q) { return Vec(q); }}},
    };
    model.base_fields = {
        {"Y1", {[](const Vec&) { return Vec((Vec(2) << 1.0, 0.0).finished()); }}},
        {"Y2", {[](const Vec&) { return Vec((Vec(2) << 0.0, 1.0).finished()); }}},
    };
    model.default_grid = cube(3, -1.0, 1.0, 5);
    model.default_candidate = "lift_Y1";
    model.default_q0 = (Vec(3) << 0.5, 0.2, 0.0).finished();
    model.display_order = identity_order(3);
    return model;
}

Model build_flat_connection(const ParamMap& p) {
    const double k = param(p, "k");
    const double a = param(p, "a");
    const double b = param(p, "b");
    if (!(k >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw ConfigError("flat_connection needs k >= 0 and finite a, b");

    Model model;
    model.name = "flat_connection";
    model.params = p;
    const Mat metric = Vec((Vec(3) << 1.0, 2.0, 1.5).finished()).asDiagonal();
    model.system = constant_metric_system(
        Chart({"r1", "r2", "s"}), metric,
        [k](const Vec& q) { return 0.5 * k * (q[0] * q[0] + q[1] * q[1]); },
        [k](const Vec& q) { return Vec((Vec(3) << k * q[0], k * q[1], 0.0).finished()); });

    EhresmannConnection conn;
    conn.base_dim = 2;
    conn.fiber_dim = 1;
    conn.christoffel = [a, b](const Vec&) { return Mat((Mat(1, 2) << a, b).finished()); };
    model.connection = conn;
    model.constraints = conn.constraints();

    model.candidates = {
        {"zero", {[](const Vec&) { return Vec(Vec::Zero(3)); }}},
        {"lift_Y1", {[a](const Vec&) { return Vec((Vec(3) << 1.0, 0.0, -1.5 * a).finished()); }}},
        {"lift_Y2", {[b](const Vec&) { return Vec((Vec(3) << 0.0, 2.0, -1.5 * b).finished()); }}},
    };
    model.base_fields = {
        {"Y1", {[](const Vec&) { return Vec((Vec(2) << 1.0, 0.0).finished()); }}},
        {"Y2", {[](const Vec&) { return Vec((Vec(2) << 0.0, 1.0).finished()); }}},
    };
    model.default_grid = cube(3, -1.0, 1.0, 5);
    model.default_candidate = "lift_Y1";
    model.default_q0 = (Vec(3) << 0.3, -0.2, 0.0).finished();
    model.display_order = identity_order(3);
    return model;
}

Model build_harmonic(const ParamMap& p) {
    require_positive(p);
    const double k = param(p, "k");
    const double energy = param(p, "E");
    Model model;
    model.name = "harmonic_oscillator";
    model.params = p;
    model.system = constant_metric_system(
        Chart({"q"}), Mat::Identity(1, 1), [k](const Vec& q) { return 0.5 * k * q[0] * q[0]; },
        [k](const Vec& q) { return Vec((Vec(1) << k * q[0]).finished()); });
    model.candidates = {
        {"energy_shell",
         {[k, energy](const Vec& q) {
             return Vec((Vec(1) << std::sqrt(2.0 * energy - k * q[0] * q[0])).finished());
         }}},
        {"dW_quadratic", {[](const Vec& q) { return Vec((Vec(1) << 2.0 * q[0]).finished()); }}},
    };
    model.default_grid = cube(1, -1.0, 1.0, 5);
    model.default_candidate = "energy_shell";
    model.default_q0 = Vec::Zero(1);
    model.display_order = identity_order(1);
    return model;
}

Model build_constrained_oscillator(const ParamMap& p) {
    require_positive(p);
    const double k = param(p, "k");
    const double energy = param(p, "E");
    Model model;
    model.name = "constrained_oscillator";
    model.params = p;
    model.system = constant_metric_system(
        Chart({"q1", "q2"}), Mat::Identity(2, 2),
        [k](const Vec& q) { return 0.5 * k * q.squaredNorm(); },
        [k](const Vec& q) { return Vec(k * q); });
    model.constraints.m = 1;
    model.constraints.phi = [](const Vec&) { return Mat((Mat(1, 2) << 1.0, 0.0).finished()); };
    model.constraints.phi_derivative = [](const Vec&) {
        return std::vector<Mat>(2, Mat::Zero(1, 2));
    };
    model.candidates = {
        {"shell_q2",
         {[k, energy](const Vec& q) {
             return Vec((Vec(2) << 0.0, std::sqrt(2.0 * energy - k * q[1] * q[1])).finished());
         }}},
        {"free_shell",
         {[k, energy](const Vec& q) {
             return Vec((Vec(2) << 0.5, std::sqrt(2.0 * energy - k * q[1] * q[1])).finished());
         }}},
    };
    model.default_grid = cube(2, -1.0, 1.0, 5);
    model.default_candidate = "shell_q2";
    model.default_q0 = (Vec(2) << 0.5, 0.0).finished();
    model.display_order = identity_order(2);
    return model;
}

Model build_forced_line(const ParamMap& p) {
    require_positive(p);
    const double k = param(p, "k");
    const double force_k = param(p, "force_k");
    Model model;
    model.name = "forced_line";
    model.params = p;
    model.system = constant_metric_system(
        Chart({"q"}), Mat::Identity(1, 1), [](const Vec&) { return 0.0; },
        [](const Vec&) { return Vec(Vec::Zero(1)); });
    SemibasicForce force;
    force.cotangent = [force_k](const Vec&, const Vec&) {
        return Vec((Vec(1) << -force_k).finished());
    };
    model.force = force;
    model.candidates = {
        {"sqrt_2kq",
         {[k](const Vec& q) { return Vec((Vec(1) << std::sqrt(2.0 * k * q[0])).finished()); }}},
    };
    model.default_grid = cube(1, 1.0, 2.0, 5);
    model.default_candidate = "sqrt_2kq";
    model.default_q0 = Vec::Ones(1);
    model.display_order = identity_order(1);
    return model;
}

Model build_free_particle(const ParamMap& p) {
    Model model;
    model.name = "free_particle";
    model.params = p;
    model.system = constant_metric_system(
        Chart({"q1", "q2"}), Mat::Identity(2, 2), [](const Vec&) { return 0.0; },
        [](const Vec&) { return Vec(Vec::Zero(2)); });
    model.candidates = {
        {"constant", {[](const Vec&) { return Vec((Vec(2) << 1.0, 2.0).finished()); }}},
        {"nonclosed", {[](const Vec& q) { return Vec((Vec(2) << q[1], 0.0).finished()); }}},
    };
    model.default_grid = cube(2, -1.0, 1.0, 5);
    model.default_candidate = "constant";
    model.default_q0 = Vec::Zero(2);
    model.display_order = identity_order(2);
    return model;
}

}  // namespace

Model build_robot(double m, double inertia, double wheel_inertia, double radius) {
    require_positive({{"m", m}, {"J", inertia}, {"J_omega", wheel_inertia}, {"R", radius}});
    const double mass = m;
    const double j = inertia;
    const double jw = wheel_inertia;
    const double r = radius;

    Model model;
    model.name = "robot";
    model.params = {{"m", m}, {"J", j}, {"J_omega", jw}, {"R", r}};

    const Mat metric = Vec((Vec(4) << j, 3.0 * jw, mass, mass).finished()).asDiagonal();
    model.system = constant_metric_system(
        Chart({"theta", "psi", "x", "y"}, {true, true, false, false}), metric,
        [](const Vec&) { return 0.0; }, [](const Vec&) { return Vec(Vec::Zero(4)); });

    // mu^1 = sin(theta) dx - cos(theta) dy,  mu^2 = cos(theta) dx + sin(theta) dy - R dpsi
    model.constraints.m = 2;
    model.constraints.phi = [r](const Vec& q) {
        const double s = std::sin(q[0]);
        const double c = std::cos(q[0]);
        Mat phi(2, 4);
        phi << 0.0, 0.0, s, -c,
               0.0, -r, c, s;
        return phi;
    };
    model.constraints.phi_derivative = [](const Vec& q) {
        std::vector<Mat> d(4, Mat::Zero(2, 4));
        const double s = std::sin(q[0]);
        const double c = std::cos(q[0]);
        d[0] << 0.0, 0.0, c, s,
                0.0, 0.0, -s, c;
        return d;
    };

    EhresmannConnection conn;
    conn.base_dim = 2;
    conn.fiber_dim = 2;
    conn.christoffel = [r](const Vec& q) {
        Mat g(2, 2);
        g << 0.0, -r * std::cos(q[0]),
             0.0, -r * std::sin(q[0]);
        return g;
    };
    conn.christoffel_derivative = [r](const Vec& q) {
        std::vector<Mat> d(4, Mat::Zero(2, 2));
        d[0] << 0.0, r * std::sin(q[0]),
                0.0, -r * std::cos(q[0]);
        return d;
    };
    model.connection = conn;

    auto gamma1 = [j](const Vec&) { return Vec((Vec(4) << j, 0.0, 0.0, 0.0).finished()); };
    auto gamma2 = [mass, jw, r](const Vec& q) {
        return Vec((Vec(4) << 0.0, 3.0 * jw, mass * r * std::cos(q[0]), mass * r * std::sin(q[0]))
                       .finished());
    };
    model.candidates = {
        {"gamma1", {gamma1}},
        {"gamma2", {gamma2}},
        {"gamma3", {[gamma1, gamma2](const Vec& q) { return Vec(gamma1(q) + gamma2(q)); }}},
        {"gamma2_perturbed",
         {[gamma2, mass, r](const Vec& q) {
             Vec g = gamma2(q);
             g[2] = 2.0 * mass * r * std::cos(q[0]);
             return g;
         }}},
        {"gamma1_perturbed",
         {[j](const Vec& q) {
             return Vec((Vec(4) << j * (1.0 + 0.5 * q[0]), 0.0, 0.0, 0.0).finished());
         }}},
        {"exact_dS",
         {[](const Vec& q) { return Vec((Vec(4) << q[0], 0.0, 1.0, 0.0).finished()); }}},
    };
    model.base_fields = {
        {"Y1", {[](const Vec&) { return Vec((Vec(2) << 1.0, 0.0).finished()); }}},
        {"Y2", {[](const Vec&) { return Vec((Vec(2) << 0.0, 1.0).finished()); }}},
        {"Y3", {[](const Vec&) { return Vec((Vec(2) << 1.0, 1.0).finished()); }}},
    };

    SampleGrid grid;
    grid.axes = {{0.0, 2.0 * std::numbers::pi, 5}, {-1.0, 1.0, 5}, {-1.0, 1.0, 5}, {-1.0, 1.0, 5}};
    model.default_grid = grid;
    model.default_candidate = "gamma3";
    model.default_q0 = Vec::Zero(4);
    model.display_order = {2, 3, 0, 1};
    return model;
}

const std::vector<ModelDescriptor>& model_registry() {
    static const std::vector<ModelDescriptor> registry{
        {"robot", "mobile robot with fixed orientation (rolling wheels, Caplygin)",
         {{"m", 1.0}, {"J", 1.0}, {"J_omega", 1.0}, {"R", 1.0}},
         [](const ParamMap& p) {
             return build_robot(p.at("m"), p.at("J"), p.at("J_omega"), p.at("R"));
         }},
        {"nh_particle", "nonholonomic particle, sdot = c r2 r1dot (curved connection)",
         {{"c", 1.0}, {"k", 1.0}}, build_nh_particle},
        {"flat_connection", "constant connection on R^3 (flat, alpha* = 0)",
         {{"k", 1.0}, {"a", 0.5}, {"b", -0.3}}, build_flat_connection},
        {"harmonic_oscillator", "1D oscillator, unconstrained", {{"k", 1.0}, {"E", 1.0}},
         build_harmonic},
        {"constrained_oscillator", "2D oscillator with q1dot = 0", {{"k", 1.0}, {"E", 1.0}},
         build_constrained_oscillator},
        {"forced_line", "1D free line with constant force beta = -force_k dq",
         {{"k", 1.0}, {"force_k", 1.0}}, build_forced_line},
        {"free_particle", "2D free particle", {}, build_free_particle},
    };
    return registry;
}

Model build_model(const std::string& name, const ParamMap& overrides) {
    for (const auto& desc : model_registry()) {
        if (desc.name != name) continue;
        ParamMap params = desc.defaults;
        for (const auto& [key, value] : overrides) {
            if (!params.contains(key))
                throw ConfigError("model '" + name + "' has no parameter '" + key + "'");
            params[key] = value;
        }
        return desc.build(params);
    }
    throw ConfigError("unknown model '" + name + "'");
}

}  // namespace nhj
