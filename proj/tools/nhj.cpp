// nhj: simulate nonholonomic systems and verify Hamilton-Jacobi candidates.

#include "nhj/app.hpp"
#include "nhj/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> model;
    std::optional<std::string> candidate;
    std::optional<std::string> out;
    std::optional<double> dt;
    std::optional<int> steps;
    std::optional<double> tolerance;
    std::optional<std::string> grid;
    std::vector<std::string> params;
    bool project = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--model", o.model, "model name (see list-models)");
    cmd->add_option("--candidate", o.candidate, "HJ candidate name");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--dt", o.dt, "time step");
    cmd->add_option("--steps", o.steps, "number of steps");
    cmd->add_option("--tolerance", o.tolerance, "residual tolerance");
    cmd->add_option("--grid", o.grid, "sample grid lo:hi:count,... (display order)");
    cmd->add_option("--param", o.params, "model parameter override name=value");
    cmd->add_flag("--project", o.project, "project momenta back onto the constraints each step");
}

nhj::app::RunConfig resolve(const Overrides& o) {
    nhj::app::RunConfig cfg = o.config.empty() ? nhj::app::RunConfig{} : nhj::app::load_config(o.config);
    if (o.model) cfg.model = *o.model;
    if (o.candidate) {
        cfg.candidate = *o.candidate;
        cfg.initial_candidate = *o.candidate;
    }
    if (o.out) cfg.out_dir = *o.out;
    if (o.dt) cfg.dt = *o.dt;
    if (o.steps) cfg.steps = *o.steps;
    if (o.tolerance) cfg.tolerance = *o.tolerance;
    if (o.grid) cfg.grid = nhj::SampleGrid::parse(*o.grid);
    if (o.project) cfg.project = true;
    for (const auto& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw nhj::ConfigError("--param expects name=value");
        try {
            cfg.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw nhj::ConfigError("invalid value in --param " + kv);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Nonholonomic mechanics and Hamilton-Jacobi verification"};
    cli.require_subcommand(1);

    Overrides sim_o, ver_o, red_o;
    auto* simulate = cli.add_subcommand("simulate", "integrate the constrained dynamics to CSV");
    auto* verify = cli.add_subcommand("verify", "check an HJ candidate on a sample grid");
    auto* reduce = cli.add_subcommand("reduce", "Caplygin reduction summary and equivalence");
    auto* list = cli.add_subcommand("list-models", "print registered models");
    add_common(simulate, sim_o);
    add_common(verify, ver_o);
    add_common(reduce, red_o);

    using namespace nhj::app;
    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e) == 0 ? kOk : kConfigFailure;
    }

    try {
        if (list->parsed()) {
            list_models(std::cout);
            return kOk;
        }
        if (simulate->parsed()) {
            const auto summary = run_simulate(resolve(sim_o));
            for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "trajectory: " << summary.trajectory_path.string() << "\n"
                      << "max constraint residual: " << summary.max_constraint_residual << "\n"
                      << "energy drift: " << summary.energy_drift << "\n";
            return kOk;
        }
        if (verify->parsed()) {
            const auto outcome = run_verify(resolve(ver_o));
            for (const auto& c : outcome.report.conditions)
                std::cout << (c.pass ? "pass " : "FAIL ") << c.condition
                          << " residual=" << c.residual << " tol=" << c.tolerance << "\n";
            if (outcome.flow_deviation)
                std::cout << "flow deviation: " << *outcome.flow_deviation << "\n";
            if (!outcome.flow_error.empty())
                std::cout << "flow check skipped: " << outcome.flow_error << "\n";
            std::cout << "report: " << outcome.report_path.string() << "\n";
            return outcome.report.pass() ? kOk : kVerificationFailed;
        }
        if (reduce->parsed()) {
            const auto outcome = run_reduce(resolve(red_o));
            std::cout << "report: " << outcome.report_path.string() << "\n";
            return kOk;
        }
    } catch (const nhj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const nhj::InvarianceViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const nhj::NotProjectable& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const nhj::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
    return kOk;
}
