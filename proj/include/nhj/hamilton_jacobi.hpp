#pragma once

// Sampled verification of Hamilton-Jacobi candidates.
//
// A candidate is a 1-form gamma on Q (or a vector field X with gamma = FL o X).
// Each check evaluates the pointwise conditions of the corresponding theorem
// on a grid and reports the worst residual per condition. Residuals are
// normalized by (1 + |gamma(q)|_inf); the unnormalized value is kept as
// `raw_residual`.

#include "nhj/calculus.hpp"
#include "nhj/mechanics.hpp"
#include "nhj/nonholonomic.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nhj {

struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;
};

struct SampleGrid {
    std::vector<GridAxis> axes;
    std::vector<Vec> explicit_points;
    std::size_t cap = 100000;

    /// Tensor-product points (first axis slowest) followed by explicit points.
    /// count == 1 samples `lo`. Throws ConfigError on invalid axes or too many points.
    [[nodiscard]] std::vector<Vec> points() const;
    [[nodiscard]] int dim() const;

    /// "lo:hi:count,lo:hi:count,..."
    static SampleGrid parse(std::string_view spec);
};

struct ConditionResult {
    std::string condition;
    double residual = 0.0;      // normalized, compared against tolerance
    double raw_residual = 0.0;  // unnormalized value at the same point
    Vec worst_point;
    double tolerance = 0.0;
    bool pass = true;
};

struct HJReport {
    std::string theorem;
    std::vector<ConditionResult> conditions;

    [[nodiscard]] bool pass() const;
    [[nodiscard]] const ConditionResult& condition(std::string_view name) const;
};

/// 1e-6 when the system registers analytic dH/dq, 1e-4 otherwise.
double default_tolerance(const MechanicalSystem& sys);

HJReport check_unconstrained(const MechanicalSystem& sys, const OneFormField& gamma,
                             const SampleGrid& grid, double tolerance);

/// d(H o gamma) = -gamma^* beta, plus closedness of gamma.
HJReport check_forced(const MechanicalSystem& sys, const SemibasicForce& force,
                      const OneFormField& gamma, const SampleGrid& grid, double tolerance);

/// Residuals:
///  image       |Psi(q, gamma(q))|
///  ideal       |d gamma(Z_a, Z_b)| over horizontal pairs; a 2-form lies in
///              I(D^0) iff it vanishes on D x D
///  annihilator |Z_a . d(H o gamma)|
HJReport check_nonholonomic(const MechanicalSystem& sys, const ConstraintSet& cons,
                            const OneFormField& gamma, const SampleGrid& grid,
                            const HorizontalFrame& frame, double tolerance);

/// Transports X through the Legendre map and runs check_nonholonomic, plus a
/// direct residual |Z_a . d(E_L o X)|.
HJReport check_nonholonomic_lagrangian(const MechanicalSystem& sys, const ConstraintSet& cons,
                                       const VectorField& x, const SampleGrid& grid,
                                       const HorizontalFrame& frame, double tolerance);

/// gamma = FL o X. `sys` must outlive the returned field.
OneFormField legendre_of(const MechanicalSystem& sys, const VectorField& x);

/// Integral curve of q -> M(q)^{-1} gamma(q).
Trajectory hj_flow(const MechanicalSystem& sys, const OneFormField& gamma, const Vec& q0,
                   double dt, int steps);

/// sup-distance between gamma o sigma (sigma from hj_flow) and the constrained
/// dynamics started at gamma(q0), over both q and p.
double theorem_equivalence_test(const MechanicalSystem& sys, const ConstraintSet& cons,
                                const OneFormField& gamma, const Vec& q0, double dt, int steps);

/// gamma = dS - lambda_i mu^i with lambda chosen so that gamma(Q) lies in the
/// constraint submanifold. `sys` must outlive the returned field. Not guaranteed to satisfy d gamma in I(D^0).
OneFormField classical_ansatz(const MechanicalSystem& sys, const ConstraintSet& cons,
                              const ScalarField& s);

}  // namespace nhj
