#pragma once

// Mechanical-type systems L = 1/2 v^T M(q) v - V(q), their Legendre transform,
// Hamiltonian H = 1/2 p^T M(q)^{-1} p + V(q), and semibasic external forces.

#include "nhj/calculus.hpp"

#include <Eigen/Cholesky>

#include <functional>
#include <vector>

namespace nhj {

struct TangentState {
    Vec q;
    Vec v;
};

struct CotangentState {
    Vec q;
    Vec p;
};

/// Time derivative of a cotangent state.
struct PhaseVelocity {
    Vec qdot;
    Vec pdot;
};

struct MechanicalSystem {
    Chart chart;
    std::function<Mat(const Vec&)> mass_metric;
    ScalarField potential;
    /// Optional analytic dH/dq(q, p).
    std::function<Vec(const Vec&, const Vec&)> hamiltonian_dq;
    /// Optional analytic metric derivatives: element B is dM/dq^B.
    std::function<std::vector<Mat>(const Vec&)> metric_derivative;

    [[nodiscard]] int dim() const { return chart.dim; }
    /// dH/dq is available in closed form, either directly or from dM/dq and dV/dq.
    [[nodiscard]] bool has_analytic_gradients() const {
        return static_cast<bool>(hamiltonian_dq) ||
               (static_cast<bool>(metric_derivative) && potential.has_gradient());
    }
};

/// Semibasic force, given on the tangent side alpha(q, v), the cotangent side
/// beta(q, p), or both. A missing side is obtained through the Legendre map.
struct SemibasicForce {
    std::function<Vec(const Vec& q, const Vec& v)> tangent;
    std::function<Vec(const Vec& q, const Vec& p)> cotangent;

    [[nodiscard]] bool empty() const { return !tangent && !cotangent; }
};

/// Cholesky factor of M(q), validated for symmetry (1e-12) and definiteness.
class MetricFactor {
public:
    MetricFactor(const MechanicalSystem& sys, const Vec& q);

    [[nodiscard]] const Mat& metric() const { return metric_; }
    [[nodiscard]] Vec solve(const Vec& rhs) const { return llt_.solve(rhs); }
    [[nodiscard]] Mat solve(const Mat& rhs) const { return llt_.solve(rhs); }
    [[nodiscard]] Mat inverse() const;

private:
    Mat metric_;
    Eigen::LLT<Mat> llt_;
};

CotangentState legendre(const MechanicalSystem& sys, const TangentState& s);
TangentState legendre_inv(const MechanicalSystem& sys, const CotangentState& s);

double hamiltonian(const MechanicalSystem& sys, const CotangentState& s);
double lagrangian_energy(const MechanicalSystem& sys, const TangentState& s);
double lagrangian(const MechanicalSystem& sys, const TangentState& s);

/// dH/dq at s: the registered callback, else
/// -1/2 p^T M^{-1} (dM/dq^B) M^{-1} p + dV/dq^B when dM/dq and dV/dq are known,
/// else central differences of H in q.
Vec hamiltonian_dq(const MechanicalSystem& sys, const CotangentState& s,
                   double h = kDefaultFdStep);

Vec force_cotangent(const MechanicalSystem& sys, const SemibasicForce& force,
                    const CotangentState& s);
Vec force_tangent(const MechanicalSystem& sys, const SemibasicForce& force,
                  const TangentState& s);

/// qdot = M^{-1} p, pdot = -dH/dq - beta(q, p). `force` may be null.
PhaseVelocity hamiltonian_field(const MechanicalSystem& sys, const CotangentState& s,
                                const SemibasicForce* force = nullptr);

// Packed phase-space vectors x = [q; p] for the integrators.
Vec pack(const CotangentState& s);
Vec pack(const PhaseVelocity& d);
CotangentState unpack(const Vec& x, int dim);

}  // namespace nhj
