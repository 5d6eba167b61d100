#include "nhj/app.hpp"

#include "nhj/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace nhj::app {

using Json = nlohmann::ordered_json;

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> read_vector(const Json& j, const char* key) {
    if (!j.is_array()) throw ConfigError(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

SampleGrid read_grid(const Json& j) {
    if (j.is_string()) return SampleGrid::parse(j.get<std::string>());
    if (!j.is_array()) throw ConfigError("'grid' must be a string or an array of [lo, hi, count]");
    SampleGrid grid;
    for (const auto& axis : j) {
        if (!axis.is_array() || axis.size() != 3 || !axis[0].is_number() || !axis[1].is_number() ||
            !axis[2].is_number_integer())
            throw ConfigError("grid axis must be [lo, hi, count]");
        grid.axes.push_back({axis[0].get<double>(), axis[1].get<double>(), axis[2].get<int>()});
    }
    return grid;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

std::string number(double x) { return fmt::format("{:.17g}", x); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Vec initial_q(const Model& model, const RunConfig& cfg) {
    return cfg.q0 ? model.to_internal(to_eigen(*cfg.q0)) : model.default_q0;
}

}  // namespace

void RunConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (tolerance && !(*tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (static_cast<int>(p0.has_value()) + static_cast<int>(v0.has_value()) > 1)
        throw ConfigError("give at most one of initial p and v");
}

RunConfig parse_config(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    RunConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "model") {
                cfg.model = value.get<std::string>();
            } else if (key == "params") {
                for (const auto& [name, x] : value.items()) cfg.params[name] = x.get<double>();
            } else if (key == "initial") {
                for (const auto& [name, x] : value.items()) {
                    if (name == "q") cfg.q0 = read_vector(x, "initial.q");
                    else if (name == "p") cfg.p0 = read_vector(x, "initial.p");
                    else if (name == "v") cfg.v0 = read_vector(x, "initial.v");
                    else if (name == "candidate") cfg.initial_candidate = x.get<std::string>();
                    else throw ConfigError("unknown key 'initial." + name + "'");
                }
            } else if (key == "candidate") {
                cfg.candidate = value.get<std::string>();
            } else if (key == "base_field") {
                cfg.base_field = value.get<std::string>();
            } else if (key == "dt") {
                cfg.dt = value.get<double>();
            } else if (key == "steps") {
                if (!value.is_number_integer()) throw ConfigError("'steps' must be an integer");
                cfg.steps = value.get<int>();
            } else if (key == "grid") {
                cfg.grid = read_grid(value);
            } else if (key == "tolerance") {
                cfg.tolerance = value.get<double>();
            } else if (key == "out") {
                cfg.out_dir = value.get<std::string>();
            } else if (key == "project") {
                cfg.project = value.get<bool>();
            } else if (key == "analytic_gradients") {
                cfg.analytic_gradients = value.get<bool>();
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

Model make_model(const RunConfig& cfg) {
    Model model = build_model(cfg.model, cfg.params);
    if (!cfg.analytic_gradients) {
        model.system.hamiltonian_dq = {};
        model.system.metric_derivative = {};
        model.system.potential.gradient = {};
        model.constraints.phi_derivative = {};
        if (model.connection) model.connection->christoffel_derivative = {};
    }
    return model;
}

// ---------------------------------------------------------------------------
// simulate

void write_trajectory_csv(std::ostream& os, const Model& model, const ConstrainedTrajectory& traj) {
    const auto names = model.display_names();
    std::vector<std::string> header{"t"};
    for (const auto& n : names) header.push_back(n);
    for (const auto& n : names) header.push_back("p_" + n);
    header.push_back("E");
    for (int i = 0; i < model.constraints.m; ++i) header.push_back(fmt::format("residual_{}", i + 1));
    for (int i = 0; i < model.constraints.m; ++i) header.push_back(fmt::format("lambda_{}", i + 1));
    os << fmt::format("{}\n", fmt::join(header, ","));

    std::vector<std::string> row;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        row.clear();
        row.push_back(number(traj.times[k]));
        for (double x : to_std(model.to_display(traj.states[k].q))) row.push_back(number(x));
        for (double x : to_std(model.to_display(traj.states[k].p))) row.push_back(number(x));
        row.push_back(number(traj.energy[k]));
        for (double x : to_std(traj.residuals[k])) row.push_back(number(x));
        for (double x : to_std(traj.multipliers[k])) row.push_back(number(x));
        os << fmt::format("{}\n", fmt::join(row, ","));
    }
}

SimulateSummary run_simulate(const RunConfig& cfg) {
    cfg.validate();
    const Model model = make_model(cfg);
    const Vec q0 = initial_q(model, cfg);

    Vec p0;
    if (cfg.p0) {
        p0 = model.to_internal(to_eigen(*cfg.p0));
    } else if (cfg.v0) {
        p0 = legendre(model.system, {q0, model.to_internal(to_eigen(*cfg.v0))}).p;
    } else {
        const std::string name =
            cfg.initial_candidate.empty() ? model.default_candidate : cfg.initial_candidate;
        p0 = model.candidate(name)(q0);
    }

    NonholonomicOptions options;
    options.project = cfg.project;
    if (model.force) options.force = &*model.force;
    const ConstrainedTrajectory traj =
        integrate_nonholonomic(model.system, model.constraints, {q0, p0}, cfg.dt, cfg.steps, options);

    std::filesystem::create_directories(cfg.out_dir);
    SimulateSummary summary;
    summary.max_constraint_residual = traj.max_residual();
    summary.energy_drift = traj.energy_drift();
    summary.final_q = to_std(model.to_display(traj.states.back().q));
    summary.final_p = to_std(model.to_display(traj.states.back().p));
    summary.warnings = traj.warnings;
    summary.trajectory_path = cfg.out_dir / "trajectory.csv";
    summary.summary_path = cfg.out_dir / "simulate_summary.json";

    std::ostringstream csv;
    write_trajectory_csv(csv, model, traj);
    write_text(summary.trajectory_path, csv.str());

    Json j;
    j["model"] = model.name;
    j["params"] = model.params;
    j["coordinates"] = model.display_names();
    j["dt"] = cfg.dt;
    j["steps"] = cfg.steps;
    j["project"] = cfg.project;
    j["max_constraint_residual"] = summary.max_constraint_residual;
    j["energy_drift"] = summary.energy_drift;
    j["final_q"] = summary.final_q;
    j["final_p"] = summary.final_p;
    j["warnings"] = summary.warnings;
    write_text(summary.summary_path, dump(j));
    return summary;
}

// ---------------------------------------------------------------------------
// verify

std::string report_json(const Model& model, const HJReport& report, const std::string& candidate,
                        std::optional<double> flow_deviation, const std::string& flow_error) {
    Json j;
    j["model"] = model.name;
    j["params"] = model.params;
    j["candidate"] = candidate;
    j["theorem"] = report.theorem;
    j["coordinates"] = model.display_names();
    Json conditions = Json::array();
    for (const auto& c : report.conditions) {
        Json entry;
        entry["condition"] = c.condition;
        entry["residual"] = c.residual;
        entry["raw_residual"] = c.raw_residual;
        // Worst points of base-only reports have fewer coordinates than the model.
        entry["worst_point"] = c.worst_point.size() == model.dim()
                                   ? to_std(model.to_display(c.worst_point))
                                   : to_std(c.worst_point);
        entry["tolerance"] = c.tolerance;
        entry["pass"] = c.pass;
        conditions.push_back(std::move(entry));
    }
    j["conditions"] = std::move(conditions);
    if (flow_deviation) j["flow_deviation"] = *flow_deviation;
    if (!flow_error.empty()) j["flow_error"] = flow_error;
    j["pass"] = report.pass();
    return dump(j);
}

VerifyOutcome run_verify(const RunConfig& cfg) {
    cfg.validate();
    const Model model = make_model(cfg);
    const std::string name = cfg.candidate.empty() ? model.default_candidate : cfg.candidate;
    const OneFormField& gamma = model.candidate(name);
    const SampleGrid grid = cfg.grid ? model.grid_to_internal(*cfg.grid) : model.default_grid;
    const double tol = cfg.tolerance.value_or(default_tolerance(model.system));

    VerifyOutcome out;
    if (model.constraints.m > 0) {
        const auto frame = HorizontalFrame::null_space(model.constraints, model.dim());
        out.report = check_nonholonomic(model.system, model.constraints, gamma, grid, frame, tol);
        try {
            out.flow_deviation = theorem_equivalence_test(model.system, model.constraints, gamma,
                                                          initial_q(model, cfg), cfg.dt, cfg.steps);
        } catch (const NumericalFailure& e) {
            out.flow_error = e.what();
        }
    } else if (model.force) {
        out.report = check_forced(model.system, *model.force, gamma, grid, tol);
    } else {
        out.report = check_unconstrained(model.system, gamma, grid, tol);
    }

    std::filesystem::create_directories(cfg.out_dir);
    out.report_path = cfg.out_dir / "hj_report.json";
    write_text(out.report_path,
               report_json(model, out.report, name, out.flow_deviation, out.flow_error));
    return out;
}

// ---------------------------------------------------------------------------
// reduce

namespace {

Json matrix_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
    return rows;
}

Json conditions_json(const HJReport& report) {
    Json out = Json::array();
    for (const auto& c : report.conditions) {
        Json e;
        e["condition"] = c.condition;
        e["residual"] = c.residual;
        e["raw_residual"] = c.raw_residual;
        e["worst_point"] = to_std(c.worst_point);
        e["tolerance"] = c.tolerance;
        e["pass"] = c.pass;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

ReduceOutcome run_reduce(const RunConfig& cfg) {
    cfg.validate();
    const Model model = make_model(cfg);
    if (!model.connection)
        throw ConfigError("model '" + model.name + "' has no connection to reduce by");
    const EhresmannConnection& conn = *model.connection;
    const int nb = conn.base_dim;
    const SampleGrid grid = cfg.grid ? model.grid_to_internal(*cfg.grid) : model.default_grid;
    const double tol = cfg.tolerance.value_or(default_tolerance(model.system));
    const Vec q0 = initial_q(model, cfg);

    ReduceOptions options;
    options.fiber_ref = conn.fiber(q0);
    const ReducedSystem red = reduce(model.system, conn, options);

    Json j;
    j["model"] = model.name;
    j["params"] = model.params;
    j["base_coordinates"] = red.base.chart.coordinate_names;
    j["fiber_reference"] = to_std(red.fiber_ref);
    j["reduced_metric"] = matrix_json(red.base.mass_metric(conn.base(q0)));

    Json curv = Json::array();
    const Curvature r = curvature(conn, q0);
    for (const auto& comp : r.components) curv.push_back(matrix_json(comp));
    j["curvature_at_q0"] = std::move(curv);

    // alpha* over the base grid and base velocities in {-1, 0, 1}^nb.
    double alpha_max = 0.0;
    std::vector<Vec> velocities;
    const int combos = static_cast<int>(std::pow(3, nb));
    for (int code = 0; code < combos; ++code) {
        Vec v(nb);
        int rest = code;
        for (int a = 0; a < nb; ++a, rest /= 3) v[a] = static_cast<double>(rest % 3) - 1.0;
        velocities.push_back(v);
    }
    const SampleGrid bgrid = base_grid(conn, grid);
    for (const Vec& b : bgrid.points())
        for (const Vec& v : velocities)
            alpha_max = std::max(alpha_max, red.alpha_star.tangent(b, v).cwiseAbs().maxCoeff());
    j["alpha_star_max_abs"] = alpha_max;

    // Equivalence from a horizontal state over q0.
    Vec v0;
    if (cfg.v0) {
        v0 = model.to_internal(to_eigen(*cfg.v0));
    } else {
        v0 = conn.lift_matrix(q0) * Vec::Ones(nb);
    }
    const TangentState s0 = horizontal_project(conn, {q0, v0});
    Json eq;
    eq["initial_v"] = to_std(model.to_display(s0.v));
    eq["dt"] = cfg.dt;
    eq["steps"] = cfg.steps;
    eq["deviation"] = equivalence_test(model.system, conn, s0, cfg.dt, cfg.steps);
    j["equivalence"] = std::move(eq);

    Json fields = Json::array();
    const auto grid_points = grid.points();
    for (const auto& named : model.base_fields) {
        if (!cfg.base_field.empty() && named.name != cfg.base_field) continue;
        const LiftResult lift = lift_hj_solution(model.system, conn, named.field, grid, tol);
        Json f;
        f["field"] = named.name;
        f["lift_pass"] = lift.report.pass();
        f["lift_conditions"] = conditions_json(lift.report);
        try {
            const ProjectResult proj =
                project_hj_solution(model.system, conn, lift.field, grid, tol);
            double roundtrip = 0.0;
            for (const Vec& q : grid_points) {
                const Vec b = conn.base(q);
                roundtrip = std::max(roundtrip, (proj.field(b) - named.field(b)).cwiseAbs().maxCoeff());
            }
            f["project_pass"] = proj.report.pass();
            f["project_conditions"] = conditions_json(proj.report);
            f["roundtrip_error"] = roundtrip;
        } catch (const NotProjectable& e) {
            f["project_error"] = e.what();
        }
        fields.push_back(std::move(f));
    }
    if (!cfg.base_field.empty() && fields.empty())
        throw ConfigError("model '" + model.name + "' has no base field '" + cfg.base_field + "'");
    j["hj_fields"] = std::move(fields);

    std::filesystem::create_directories(cfg.out_dir);
    ReduceOutcome out;
    out.report_path = cfg.out_dir / "reduce_report.json";
    write_text(out.report_path, dump(j));
    return out;
}

void list_models(std::ostream& os) {
    for (const auto& desc : model_registry()) {
        const Model model = desc.build(desc.defaults);
        os << desc.name << ": " << desc.description << "\n";
        os << "  coordinates: " << fmt::format("{}", fmt::join(model.display_names(), ", ")) << "\n";
        std::vector<std::string> params;
        for (const auto& [k, v] : desc.defaults) params.push_back(fmt::format("{}={}", k, v));
        if (!params.empty()) os << "  params: " << fmt::format("{}", fmt::join(params, ", ")) << "\n";
        std::vector<std::string> cands;
        for (const auto& c : model.candidates) cands.push_back(c.name);
        os << "  candidates: " << fmt::format("{}", fmt::join(cands, ", ")) << "\n";
        if (!model.base_fields.empty()) {
            std::vector<std::string> fields;
            for (const auto& f : model.base_fields) fields.push_back(f.name);
            os << "  base fields: " << fmt::format("{}", fmt::join(fields, ", ")) << "\n";
        }
    }
}

}  // namespace nhj::app
