#pragma once

// Command-level entry points shared by the `nhj` CLI and the tests: run
// configuration, the simulate/verify/reduce runs, and their file outputs.
// All user-facing coordinates are in the model's display order.

#include "nhj/models.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nhj::app {

enum ExitCode : int {
    kOk = 0,
    kVerificationFailed = 1,
    kConfigFailure = 2,
    kNumericalFailure = 3,
};

struct RunConfig {
    std::string model = "robot";
    ParamMap params;
    std::optional<std::vector<double>> q0;
    std::optional<std::vector<double>> p0;
    std::optional<std::vector<double>> v0;
    std::string initial_candidate;  // p0 = gamma(q0) when no p0/v0 given
    std::string candidate;          // verify target
    std::string base_field;         // reduce: restrict lift/project to one field
    double dt = 1e-3;
    int steps = 6283;
    std::optional<SampleGrid> grid;  // display order
    std::optional<double> tolerance;
    std::filesystem::path out_dir = ".";
    bool project = false;
    bool analytic_gradients = true;

    void validate() const;
};

/// Reads a JSON config document. Throws ConfigError on malformed input.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

/// Builds the model named in `cfg`, dropping analytic gradients when disabled.
Model make_model(const RunConfig& cfg);

struct SimulateSummary {
    double max_constraint_residual = 0.0;
    double energy_drift = 0.0;
    std::vector<double> final_q;  // display order
    std::vector<double> final_p;
    std::vector<std::string> warnings;
    std::filesystem::path trajectory_path;
    std::filesystem::path summary_path;
};

SimulateSummary run_simulate(const RunConfig& cfg);

struct VerifyOutcome {
    HJReport report;
    std::optional<double> flow_deviation;
    std::string flow_error;  // set when the candidate flow leaves its domain
    std::filesystem::path report_path;
};

VerifyOutcome run_verify(const RunConfig& cfg);

struct ReduceOutcome {
    std::filesystem::path report_path;
};

ReduceOutcome run_reduce(const RunConfig& cfg);

void list_models(std::ostream& os);

/// CSV writer for constrained trajectories: t, q, p, E, residuals, multipliers.
void write_trajectory_csv(std::ostream& os, const Model& model, const ConstrainedTrajectory& traj);

/// JSON text (newline-terminated) for an HJ report in display order.
std::string report_json(const Model& model, const HJReport& report, const std::string& candidate,
                        std::optional<double> flow_deviation = std::nullopt,
                        const std::string& flow_error = {});

}  // namespace nhj::app
