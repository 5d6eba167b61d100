#include "nhj/caplygin.hpp"

#include "nhj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace nhj {

Mat EhresmannConnection::gamma(const Vec& q) const {
    if (q.size() != dim()) throw ConfigError("point dimension does not match connection");
    Mat g = christoffel(q);
    if (g.rows() != fiber_dim || g.cols() != base_dim)
        throw ConfigError("Christoffel matrix must be fiber_dim x base_dim");
    if (!g.allFinite()) throw NumericalFailure("non-finite Christoffel components");
    return g;
}

Mat EhresmannConnection::lift_matrix(const Vec& q) const {
    Mat lift(dim(), base_dim);
    lift.topRows(base_dim).setIdentity();
    lift.bottomRows(fiber_dim) = -gamma(q);
    return lift;
}

ConstraintSet EhresmannConnection::constraints() const {
    ConstraintSet cons;
    cons.m = fiber_dim;
    cons.phi = [conn = *this](const Vec& q) {
        Mat phi(conn.fiber_dim, conn.dim());
        phi.leftCols(conn.base_dim) = conn.gamma(q);
        phi.rightCols(conn.fiber_dim).setIdentity();
        return phi;
    };
    if (christoffel_derivative)
        cons.phi_derivative = [conn = *this](const Vec& q) {
            std::vector<Mat> out;
            for (const Mat& dg : conn.christoffel_derivative(q)) {
                Mat d = Mat::Zero(conn.fiber_dim, conn.dim());
                d.leftCols(conn.base_dim) = dg;
                out.push_back(std::move(d));
            }
            return out;
        };
    return cons;
}

Vec EhresmannConnection::join(const Vec& b, const Vec& f) const {
    Vec q(dim());
    q << b, f;
    return q;
}

TangentState horizontal_project(const EhresmannConnection& conn, const TangentState& s) {
    TangentState out = s;
    out.v.tail(conn.fiber_dim) = -conn.gamma(s.q) * s.v.head(conn.base_dim);
    return out;
}

Curvature curvature(const EhresmannConnection& conn, const Vec& q, double h) {
    const int nb = conn.base_dim;
    const int nf = conn.fiber_dim;
    const Mat g = conn.gamma(q);
    // dgamma(i + nf * a, B) = d Gamma^i_a / d q^B  (column-major flattening)
    Mat dgamma(nf * nb, conn.dim());
    if (conn.christoffel_derivative) {
        const std::vector<Mat> parts = conn.christoffel_derivative(q);
        if (static_cast<int>(parts.size()) != conn.dim())
            throw ConfigError("Christoffel derivative needs one matrix per coordinate");
        for (int b = 0; b < conn.dim(); ++b)
            dgamma.col(b) = Eigen::Map<const Vec>(parts[b].data(), parts[b].size());
    } else {
        dgamma = fd_jacobian(
            [&](const Vec& x) {
                const Mat gx = conn.gamma(x);
                return Vec(Eigen::Map<const Vec>(gx.data(), gx.size()));
            },
            q, h);
    }
    auto d = [&](int i, int a, int coord) { return dgamma(i + nf * a, coord); };

    Curvature out;
    out.components.assign(nf, Mat::Zero(nb, nb));
    for (int i = 0; i < nf; ++i)
        for (int a = 0; a < nb; ++a)
            for (int b = 0; b < nb; ++b) {
                double r = d(i, a, b) - d(i, b, a);
                for (int j = 0; j < nf; ++j)
                    r += g(j, a) * d(i, b, nb + j) - g(j, b) * d(i, a, nb + j);
                out.components[i](a, b) = r;
            }
    return out;
}

namespace {

Mat reduced_metric(const MechanicalSystem& sys, const EhresmannConnection& conn, const Vec& q) {
    const Mat lift = conn.lift_matrix(q);
    const Mat m = MetricFactor(sys, q).metric();
    const Mat red = lift.transpose() * m * lift;
    return 0.5 * (red + red.transpose());
}

void check_invariance(const MechanicalSystem& sys, const EhresmannConnection& conn,
                      const Vec& fiber_ref, double tolerance) {
    std::mt19937_64 rng(20070417);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vec> bases{Vec::Zero(conn.base_dim)};
    for (int k = 0; k < 3; ++k) {
        Vec b(conn.base_dim);
        for (auto& x : b) x = unit(rng);
        bases.push_back(b);
    }
    Vec shifted = fiber_ref;
    for (Eigen::Index i = 0; i < shifted.size(); ++i) shifted[i] += (i % 2 == 0 ? 0.7 : -0.4);

    for (const Vec& b : bases) {
        const Vec q1 = conn.join(b, fiber_ref);
        const Vec q2 = conn.join(b, shifted);
        const Mat m1 = reduced_metric(sys, conn, q1);
        const Mat m2 = reduced_metric(sys, conn, q2);
        const double v1 = sys.potential(q1);
        const double v2 = sys.potential(q2);
        const double scale = 1.0 + std::max(m1.cwiseAbs().maxCoeff(), std::abs(v1));
        const double diff = std::max((m1 - m2).cwiseAbs().maxCoeff(), std::abs(v1 - v2));
        if (diff > tolerance * scale)
            throw InvarianceViolation(
                "Lagrangian is not invariant along horizontal lifts (difference " +
                std::to_string(diff) + " between fiber samples)");
    }
}

}  // namespace

ReducedSystem reduce(const MechanicalSystem& sys, const EhresmannConnection& conn,
                     const ReduceOptions& options) {
    if (sys.dim() != conn.dim())
        throw ConfigError("connection dimension does not match the mechanical system");
    const Vec fiber_ref =
        options.fiber_ref.size() == 0 ? Vec(Vec::Zero(conn.fiber_dim)) : options.fiber_ref;
    if (fiber_ref.size() != conn.fiber_dim) throw ConfigError("fiber reference has wrong size");
    check_invariance(sys, conn, fiber_ref, options.invariance_tolerance);

    std::vector<std::string> names(sys.chart.coordinate_names.begin(),
                                   sys.chart.coordinate_names.begin() + conn.base_dim);
    std::vector<bool> periodic(sys.chart.periodic_mask.begin(),
                               sys.chart.periodic_mask.begin() + conn.base_dim);

    ReducedSystem red;
    red.fiber_ref = fiber_ref;
    red.connection = conn;
    red.base.chart = Chart(std::move(names), std::move(periodic));
    red.base.mass_metric = [sys, conn, fiber_ref](const Vec& b) {
        return reduced_metric(sys, conn, conn.join(b, fiber_ref));
    };
    red.base.potential.eval = [sys, conn, fiber_ref](const Vec& b) {
        return sys.potential(conn.join(b, fiber_ref));
    };
    // alpha*_a = (dL/dqdot^i)|_horizontal qdot^b R^i_{ab}
    red.alpha_star.tangent = [sys, conn, fiber_ref](const Vec& b, const Vec& vb) {
        const Vec q = conn.join(b, fiber_ref);
        const Vec vh = conn.lift_matrix(q) * vb;
        const Vec momentum = MetricFactor(sys, q).metric() * vh;
        const Curvature r = curvature(conn, q);
        Vec alpha = Vec::Zero(conn.base_dim);
        for (int i = 0; i < conn.fiber_dim; ++i)
            alpha += momentum[conn.base_dim + i] * (r.components[i] * vb);
        return alpha;
    };
    return red;
}

Trajectory reduced_dynamics(const ReducedSystem& red, const TangentState& s0, double dt,
                            int steps) {
    const int nb = red.base.dim();
    const CotangentState c0 = legendre(red.base, s0);
    const StateDerivative field = [&](const Vec& x) {
        return pack(hamiltonian_field(red.base, unpack(x, nb), &red.alpha_star));
    };
    const std::vector<Observer> observers{
        {"energy", [&](const Vec& x) { return hamiltonian(red.base, unpack(x, nb)); }}};
    return rk4_integrate(field, pack(c0), dt, steps, observers);
}

double equivalence_test(const MechanicalSystem& sys, const EhresmannConnection& conn,
                        const TangentState& s0, double dt, int steps) {
    const TangentState horizontal = horizontal_project(conn, s0);
    if ((horizontal.v - s0.v).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("equivalence test needs a horizontal initial state");

    const ConstraintSet cons = conn.constraints();
    const ConstrainedTrajectory full =
        integrate_nonholonomic(sys, cons, legendre(sys, s0), dt, steps);

    ReduceOptions options;
    options.fiber_ref = conn.fiber(s0.q);
    const ReducedSystem red = reduce(sys, conn, options);
    const int nb = conn.base_dim;
    const Trajectory reduced =
        reduced_dynamics(red, {conn.base(s0.q), s0.v.head(nb)}, dt, steps);

    double deviation = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        const TangentState fs = legendre_inv(sys, full.states[k]);
        const TangentState rs = legendre_inv(red.base, unpack(reduced.states[k], nb));
        deviation = std::max(deviation, (fs.q.head(nb) - rs.q).cwiseAbs().maxCoeff());
        deviation = std::max(deviation, (fs.v.head(nb) - rs.v).cwiseAbs().maxCoeff());
    }
    return deviation;
}

VectorField horizontal_lift(const EhresmannConnection& conn, const VectorField& y) {
    return {[conn, y](const Vec& q) {
        const Vec yb = y(conn.base(q));
        Vec out(conn.dim());
        out << yb, -conn.gamma(q) * yb;
        return out;
    }};
}

LiftResult lift_hj_solution(const MechanicalSystem& sys, const EhresmannConnection& conn,
                            const VectorField& y, const SampleGrid& grid, double tolerance) {
    LiftResult out{horizontal_lift(conn, y), {}};
    const ConstraintSet cons = conn.constraints();
    out.report = check_nonholonomic_lagrangian(
        sys, cons, out.field, grid, HorizontalFrame::null_space(cons, conn.dim()), tolerance);
    out.report.theorem = "caplygin_lift";
    return out;
}

SampleGrid base_grid(const EhresmannConnection& conn, const SampleGrid& grid) {
    SampleGrid out;
    out.cap = grid.cap;
    if (!grid.axes.empty())
        out.axes.assign(grid.axes.begin(), grid.axes.begin() + conn.base_dim);
    for (const auto& p : grid.explicit_points) out.explicit_points.push_back(conn.base(p));
    return out;
}

ProjectResult project_hj_solution(const MechanicalSystem& sys, const EhresmannConnection& conn,
                                  const VectorField& x, const SampleGrid& grid, double tolerance) {
    const int nb = conn.base_dim;
    const ReducedSystem red = reduce(sys, conn);
    for (const Vec& q : grid.points()) {
        if (q.size() != conn.dim()) throw ConfigError("grid dimension does not match Q");
        const Vec here = x(q).head(nb);
        const Vec ref = x(conn.join(conn.base(q), red.fiber_ref)).head(nb);
        if ((here - ref).cwiseAbs().maxCoeff() > 1e-8)
            throw NotProjectable("base components of the field depend on the fiber coordinates");
    }

    ProjectResult out;
    out.field = {[x, conn, fiber = red.fiber_ref](const Vec& b) {
        return Vec(x(conn.join(b, fiber)).head(conn.base_dim));
    }};
    const OneFormField gamma_star = legendre_of(red.base, out.field);
    out.report = check_forced(red.base, red.alpha_star, gamma_star, base_grid(conn, grid),
                              tolerance);
    out.report.theorem = "caplygin_projection";
    return out;
}

}  // namespace nhj
