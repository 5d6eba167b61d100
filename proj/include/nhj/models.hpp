#pragma once

// Model registry: the fixed-orientation mobile robot and a handful of
// synthetic systems used to exercise paths the robot leaves trivial
// (nonzero alpha*, forces, unconstrained HJ).

#include "nhj/caplygin.hpp"
#include "nhj/hamilton_jacobi.hpp"
#include "nhj/mechanics.hpp"
#include "nhj/nonholonomic.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nhj {

using ParamMap = std::map<std::string, double>;

struct NamedOneForm {
    std::string name;
    OneFormField field;
};

struct NamedVectorField {
    std::string name;
    VectorField field;
};

struct Model {
    std::string name;
    ParamMap params;
    MechanicalSystem system;
    ConstraintSet constraints;
    std::optional<EhresmannConnection> connection;
    std::optional<SemibasicForce> force;
    std::vector<NamedOneForm> candidates;   // internal chart order
    std::vector<NamedVectorField> base_fields;  // fields on N (connection models)
    SampleGrid default_grid;                // internal chart order
    std::string default_candidate;
    Vec default_q0;                         // internal chart order
    /// display_order[k] = internal index shown in user-facing column k.
    std::vector<int> display_order;

    [[nodiscard]] int dim() const { return system.dim(); }
    [[nodiscard]] const OneFormField& candidate(const std::string& name) const;
    [[nodiscard]] const VectorField& base_field(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> display_names() const;
    [[nodiscard]] Vec to_internal(const Vec& display) const;
    [[nodiscard]] Vec to_display(const Vec& internal) const;
    [[nodiscard]] SampleGrid grid_to_internal(const SampleGrid& display) const;
};

struct ModelDescriptor {
    std::string name;
    std::string description;
    ParamMap defaults;
    std::function<Model(const ParamMap&)> build;
};

const std::vector<ModelDescriptor>& model_registry();

/// Looks up `name` and applies parameter overrides. Throws ConfigError for
/// unknown models or parameters and for invalid parameter values.
Model build_model(const std::string& name, const ParamMap& overrides = {});

/// Internal chart (theta, psi, x, y); display order (x, y, theta, psi).
/// Throws ConfigError unless all parameters are positive.
Model build_robot(double m, double inertia, double wheel_inertia, double radius);

}  // namespace nhj
