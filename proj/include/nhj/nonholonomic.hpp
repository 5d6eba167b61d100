#pragma once

// Linear velocity constraints Phi(q) qdot = 0 and the constrained Hamiltonian
// dynamics
//
//   qdot = M^{-1} p,   pdot = -dH/dq - beta - Phi^T lambda,
//   lambda = C^{-1} X_H(Psi),   C = Phi M^{-1} Phi^T,   Psi = Phi M^{-1} p.
//
// With this sign choice dPsi/dt = X_H(Psi) - C lambda = 0 identically, so the
// constraint residual is a first integral of the continuous closed loop.

#include "nhj/calculus.hpp"
#include "nhj/mechanics.hpp"

#include <string>
#include <vector>

namespace nhj {

inline constexpr double kRankFloor = 1e-10;
inline constexpr double kConditionCeiling = 1e12;

struct ConstraintSet {
    int m = 0;
    std::function<Mat(const Vec&)> phi;  // m x n, row i = mu^i
    /// Optional analytic derivatives: element B is dPhi/dq^B.
    std::function<std::vector<Mat>(const Vec&)> phi_derivative;

    /// Empty constraint set (m = 0).
    static ConstraintSet none() { return {}; }

    [[nodiscard]] Mat matrix(const Vec& q) const;
};

/// Number of singular values of Phi(q) above the rank floor.
int constraint_rank(const ConstraintSet& cons, const Vec& q);

Vec constraint_residuals(const MechanicalSystem& sys, const ConstraintSet& cons,
                         const CotangentState& s);

/// C = Phi M^{-1} Phi^T. Throws SingularCompatibility when the condition number
/// exceeds 1e12 or C is not positive-definite.
Mat compatibility_matrix(const MechanicalSystem& sys, const ConstraintSet& cons, const Vec& q);

Vec multipliers(const MechanicalSystem& sys, const ConstraintSet& cons, const CotangentState& s,
                const SemibasicForce* force = nullptr);

PhaseVelocity nonholonomic_field(const MechanicalSystem& sys, const ConstraintSet& cons,
                                 const CotangentState& s,
                                 const SemibasicForce* force = nullptr);

/// Metric-orthogonal projection p <- p - Phi^T C^{-1} Psi, which zeroes Psi.
CotangentState project_onto_constraints(const MechanicalSystem& sys, const ConstraintSet& cons,
                                        const CotangentState& s);

struct ConstrainedTrajectory {
    std::vector<double> times;
    std::vector<CotangentState> states;
    std::vector<double> energy;
    std::vector<Vec> residuals;
    std::vector<Vec> multipliers;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const { return states.size(); }
    [[nodiscard]] double max_residual() const;
    [[nodiscard]] double energy_drift() const;
};

struct NonholonomicOptions {
    bool project = false;
    const SemibasicForce* force = nullptr;
};

ConstrainedTrajectory integrate_nonholonomic(const MechanicalSystem& sys,
                                             const ConstraintSet& cons,
                                             const CotangentState& s0, double dt, int steps,
                                             const NonholonomicOptions& options = {});

/// Pointwise basis Z_a (unit columns) of the admissible distribution D.
///
/// Finite-difference operators need smooth fields around each evaluation
/// point, so frames are handed out per base point: `fields_near(q0)` returns
/// vector fields that are smooth in a neighbourhood of q0. The null-space
/// frame fixes its pivot columns at q0 (largest pivot per row) and solves the
/// constraint rows for the pivot components everywhere else.
class HorizontalFrame {
public:
    using Basis = std::function<Mat(const Vec&)>;

    /// User-supplied frame: columns span D at every q.
    explicit HorizontalFrame(Basis basis);

    static HorizontalFrame null_space(ConstraintSet cons, int dim);

    /// Basis at q using the pivot pattern chosen at q.
    [[nodiscard]] Mat at(const Vec& q) const;
    [[nodiscard]] std::vector<VectorField> fields_near(const Vec& q0) const;

    /// Throws FrameError unless mu^i(Z_a) = 0 (1e-10) and rank is n - m.
    void validate(const ConstraintSet& cons, const Vec& q) const;

private:
    using LocalFactory = std::function<Basis(const Vec&)>;
    explicit HorizontalFrame(LocalFactory factory, int /*tag*/);

    LocalFactory local_;
};

}  // namespace nhj
