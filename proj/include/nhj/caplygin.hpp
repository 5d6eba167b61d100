#pragma once

// Caplygin systems: Q fibred over N with coordinates ordered (base q^a, fiber
// q^i), constraints given by the horizontal distribution of an Ehresmann
// connection, qdot^i = -Gamma^i_a(q) qdot^a, and a Lagrangian invariant along
// horizontal lifts. Such a system reduces to (L*, alpha*) on N.

#include "nhj/calculus.hpp"
#include "nhj/hamilton_jacobi.hpp"
#include "nhj/mechanics.hpp"
#include "nhj/nonholonomic.hpp"

#include <vector>

namespace nhj {

struct EhresmannConnection {
    int base_dim = 0;
    int fiber_dim = 0;
    std::function<Mat(const Vec&)> christoffel;  // fiber_dim x base_dim, Gamma(i, a)
    /// Optional analytic derivatives: element B is d Gamma / d q^B.
    std::function<std::vector<Mat>(const Vec&)> christoffel_derivative;

    [[nodiscard]] int dim() const { return base_dim + fiber_dim; }
    [[nodiscard]] Mat gamma(const Vec& q) const;

    /// n x base_dim matrix [I; -Gamma(q)] mapping base velocities to horizontal ones.
    [[nodiscard]] Mat lift_matrix(const Vec& q) const;

    /// Phi = [Gamma | I], i.e. mu^i = dq^i + Gamma^i_a dq^a.
    [[nodiscard]] ConstraintSet constraints() const;

    [[nodiscard]] Vec base(const Vec& q) const { return q.head(base_dim); }
    [[nodiscard]] Vec fiber(const Vec& q) const { return q.tail(fiber_dim); }
    [[nodiscard]] Vec join(const Vec& base, const Vec& fiber) const;
};

/// Replaces fiber velocities with -Gamma(q) * base velocities.
TangentState horizontal_project(const EhresmannConnection& conn, const TangentState& s);

/// R^i_{ab} = d_b Gamma^i_a - d_a Gamma^i_b + Gamma^j_a d_j Gamma^i_b - Gamma^j_b d_j Gamma^i_a
struct Curvature {
    std::vector<Mat> components;  // components[i](a, b)

    [[nodiscard]] double operator()(int i, int a, int b) const { return components[i](a, b); }
};

Curvature curvature(const EhresmannConnection& conn, const Vec& q, double h = kDefaultFdStep);

struct ReducedSystem {
    MechanicalSystem base;        // L* on N
    SemibasicForce alpha_star;    // tangent side, alpha*(q^a, qdot^a)
    Vec fiber_ref;
    EhresmannConnection connection;
};

struct ReduceOptions {
    Vec fiber_ref;                    // defaults to zeros
    double invariance_tolerance = 1e-8;
};

/// Builds (L*, alpha*). Throws InvarianceViolation when L* changes between two
/// fiber points at sampled base points.
ReducedSystem reduce(const MechanicalSystem& sys, const EhresmannConnection& conn,
                     const ReduceOptions& options = {});

/// Forced Hamiltonian flow of the reduced system from a base tangent state.
/// States are packed [q^a; p_a].
Trajectory reduced_dynamics(const ReducedSystem& red, const TangentState& s0, double dt,
                            int steps);

/// Integrates the full constrained system from a horizontal state and the
/// reduced system from its projection; returns the sup-distance between base
/// positions and base velocities.
double equivalence_test(const MechanicalSystem& sys, const EhresmannConnection& conn,
                        const TangentState& s0, double dt, int steps);

/// Y^H(q) = (Y(q^a), -Gamma(q) Y(q^a)).
VectorField horizontal_lift(const EhresmannConnection& conn, const VectorField& y);

struct LiftResult {
    VectorField field;
    HJReport report;
};

LiftResult lift_hj_solution(const MechanicalSystem& sys, const EhresmannConnection& conn,
                            const VectorField& y, const SampleGrid& grid, double tolerance);

struct ProjectResult {
    VectorField field;
    HJReport report;
};

/// Requires the base components of X to be independent of the fiber (1e-8 over
/// the grid, else NotProjectable). Checks Y against the forced HJ conditions of
/// (L*, alpha*) on the base projection of the grid.
ProjectResult project_hj_solution(const MechanicalSystem& sys, const EhresmannConnection& conn,
                                  const VectorField& x, const SampleGrid& grid, double tolerance);

/// Base axes of a grid on Q.
SampleGrid base_grid(const EhresmannConnection& conn, const SampleGrid& grid);

}  // namespace nhj
