#include "nhj/mechanics.hpp"

#include "nhj/errors.hpp"

#include <cmath>
#include <string>

namespace nhj {

namespace {

void require_dims(const MechanicalSystem& sys, const Vec& q, const Vec& w, const char* what) {
    if (q.size() != sys.dim() || w.size() != sys.dim())
        throw ConfigError(std::string(what) + ": state dimension does not match chart (" +
                          std::to_string(sys.dim()) + ")");
}

}  // namespace

MetricFactor::MetricFactor(const MechanicalSystem& sys, const Vec& q)
    : metric_(sys.mass_metric(q)) {
    if (metric_.rows() != sys.dim() || metric_.cols() != sys.dim())
        throw MetricError("mass metric has wrong shape");
    if (!metric_.allFinite()) throw MetricError("mass metric is not finite");
    const double scale = std::max(1.0, metric_.cwiseAbs().maxCoeff());
    if ((metric_ - metric_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw MetricError("mass metric is not symmetric");
    llt_.compute(metric_);
    if (llt_.info() != Eigen::Success) throw MetricError("mass metric is not positive-definite");
}

Mat MetricFactor::inverse() const {
    return llt_.solve(Mat::Identity(metric_.rows(), metric_.cols()));
}

CotangentState legendre(const MechanicalSystem& sys, const TangentState& s) {
    require_dims(sys, s.q, s.v, "legendre");
    const MetricFactor metric(sys, s.q);
    return {s.q, metric.metric() * s.v};
}

TangentState legendre_inv(const MechanicalSystem& sys, const CotangentState& s) {
    require_dims(sys, s.q, s.p, "legendre_inv");
    const MetricFactor metric(sys, s.q);
    return {s.q, metric.solve(s.p)};
}

double hamiltonian(const MechanicalSystem& sys, const CotangentState& s) {
    require_dims(sys, s.q, s.p, "hamiltonian");
    const MetricFactor metric(sys, s.q);
    return 0.5 * s.p.dot(metric.solve(s.p)) + sys.potential(s.q);
}

double lagrangian_energy(const MechanicalSystem& sys, const TangentState& s) {
    require_dims(sys, s.q, s.v, "lagrangian_energy");
    const MetricFactor metric(sys, s.q);
    return 0.5 * s.v.dot(metric.metric() * s.v) + sys.potential(s.q);
}

double lagrangian(const MechanicalSystem& sys, const TangentState& s) {
    require_dims(sys, s.q, s.v, "lagrangian");
    const MetricFactor metric(sys, s.q);
    return 0.5 * s.v.dot(metric.metric() * s.v) - sys.potential(s.q);
}

Vec hamiltonian_dq(const MechanicalSystem& sys, const CotangentState& s, double h) {
    if (sys.hamiltonian_dq) {
        Vec g = sys.hamiltonian_dq(s.q, s.p);
        if (!all_finite(g)) throw NumericalFailure("non-finite analytic dH/dq");
        return g;
    }
    if (sys.metric_derivative && sys.potential.has_gradient()) {
        const MetricFactor metric(sys, s.q);
        const Vec v = metric.solve(s.p);
        const std::vector<Mat> dm = sys.metric_derivative(s.q);
        if (static_cast<int>(dm.size()) != sys.dim())
            throw ConfigError("metric derivative needs one matrix per coordinate");
        Vec g = sys.potential.gradient(s.q);
        for (int b = 0; b < sys.dim(); ++b) g[b] -= 0.5 * v.dot(dm[b] * v);
        if (!all_finite(g)) throw NumericalFailure("non-finite analytic dH/dq");
        return g;
    }
    const Vec& p = s.p;
    return fd_gradient([&](const Vec& q) { return hamiltonian(sys, {q, p}); }, s.q, h);
}

Vec force_cotangent(const MechanicalSystem& sys, const SemibasicForce& force,
                    const CotangentState& s) {
    if (force.cotangent) return force.cotangent(s.q, s.p);
    if (force.tangent) return force.tangent(s.q, legendre_inv(sys, s).v);
    return Vec::Zero(sys.dim());
}

Vec force_tangent(const MechanicalSystem& sys, const SemibasicForce& force,
                  const TangentState& s) {
    if (force.tangent) return force.tangent(s.q, s.v);
    if (force.cotangent) return force.cotangent(s.q, legendre(sys, s).p);
    return Vec::Zero(sys.dim());
}

PhaseVelocity hamiltonian_field(const MechanicalSystem& sys, const CotangentState& s,
                                const SemibasicForce* force) {
    require_dims(sys, s.q, s.p, "hamiltonian_field");
    const MetricFactor metric(sys, s.q);
    PhaseVelocity out{metric.solve(s.p), -hamiltonian_dq(sys, s)};
    if (force != nullptr && !force->empty()) out.pdot -= force_cotangent(sys, *force, s);
    if (!all_finite(out.qdot) || !all_finite(out.pdot))
        throw NumericalFailure("non-finite Hamiltonian vector field");
    return out;
}

Vec pack(const CotangentState& s) {
    Vec x(s.q.size() + s.p.size());
    x << s.q, s.p;
    return x;
}

Vec pack(const PhaseVelocity& d) {
    Vec x(d.qdot.size() + d.pdot.size());
    x << d.qdot, d.pdot;
    return x;
}

CotangentState unpack(const Vec& x, int dim) {
    return {x.head(dim), x.segment(dim, dim)};
}

}  // namespace nhj
