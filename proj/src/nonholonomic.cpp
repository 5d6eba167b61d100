#include "nhj/nonholonomic.hpp"

#include "nhj/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace nhj {

Mat ConstraintSet::matrix(const Vec& q) const {
    if (m == 0) return Mat(0, q.size());
    Mat out = phi(q);
    if (out.rows() != m || out.cols() != q.size())
        throw ConfigError("constraint matrix has shape " + std::to_string(out.rows()) + "x" +
                          std::to_string(out.cols()) + ", expected " + std::to_string(m) + "x" +
                          std::to_string(q.size()));
    if (!out.allFinite()) throw NumericalFailure("non-finite constraint matrix");
    return out;
}

int constraint_rank(const ConstraintSet& cons, const Vec& q) {
    if (cons.m == 0) return 0;
    const Eigen::JacobiSVD<Mat> svd(cons.matrix(q));
    const auto& sv = svd.singularValues();
    return static_cast<int>((sv.array() > kRankFloor).count());
}

namespace {

Vec residuals_with(const Mat& phi, const MetricFactor& metric, const Vec& p) {
    return phi * metric.solve(p);
}

Mat compatibility_with(const Mat& phi, const MetricFactor& metric) {
    const Mat c = phi * metric.solve(Mat(phi.transpose()));
    const Mat sym = 0.5 * (c + c.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kConditionCeiling)
        throw SingularCompatibility("compatibility matrix is singular (eigenvalues " +
                                    std::to_string(lo) + ", " + std::to_string(hi) + ")");
    return sym;
}

/// (dPsi/dq) w. Closed form when dPhi/dq and dM/dq are registered:
/// dPsi/dq^B = (dPhi/dq^B) v - Phi M^{-1} (dM/dq^B) v with v = M^{-1} p.
Vec psi_q_derivative(const MechanicalSystem& sys, const ConstraintSet& cons,
                     const CotangentState& s, const MetricFactor& metric, const Mat& phi,
                     const Vec& w) {
    if (cons.phi_derivative && sys.metric_derivative) {
        const Vec v = metric.solve(s.p);
        const std::vector<Mat> dphi = cons.phi_derivative(s.q);
        const std::vector<Mat> dm = sys.metric_derivative(s.q);
        if (static_cast<int>(dphi.size()) != sys.dim() || static_cast<int>(dm.size()) != sys.dim())
            throw ConfigError("derivative callbacks need one matrix per coordinate");
        Vec out = Vec::Zero(cons.m);
        for (int b = 0; b < sys.dim(); ++b) {
            if (w[b] == 0.0) continue;
            out += w[b] * (dphi[b] * v - phi * metric.solve(Vec(dm[b] * v)));
        }
        return out;
    }
    const Vec& p = s.p;
    const Mat dpsi_dq = fd_jacobian(
        [&](const Vec& q) {
            const MetricFactor mq(sys, q);
            return Vec(cons.matrix(q) * mq.solve(p));
        },
        s.q);
    return dpsi_dq * w;
}

struct FieldParts {
    PhaseVelocity free;
    Vec lambda;
    Mat phi;
};

FieldParts evaluate_parts(const MechanicalSystem& sys, const ConstraintSet& cons,
                          const CotangentState& s, const SemibasicForce* force) {
    FieldParts parts{hamiltonian_field(sys, s, force), Vec::Zero(cons.m), cons.matrix(s.q)};
    if (cons.m == 0) return parts;

    const MetricFactor metric(sys, s.q);
    const Mat c = compatibility_with(parts.phi, metric);

    // X_H(Psi) by the chain rule: dPsi/dq . qdot + dPsi/dp . pdot_free,
    // with dPsi/dp = Phi M^{-1} exactly.
    const Vec xh_psi =
        psi_q_derivative(sys, cons, s, metric, parts.phi, parts.free.qdot) +
        parts.phi * metric.solve(parts.free.pdot);
    parts.lambda = c.llt().solve(xh_psi);
    if (!all_finite(parts.lambda)) throw NumericalFailure("non-finite Lagrange multipliers");
    return parts;
}

}  // namespace

Vec constraint_residuals(const MechanicalSystem& sys, const ConstraintSet& cons,
                         const CotangentState& s) {
    if (cons.m == 0) return Vec(0);
    const MetricFactor metric(sys, s.q);
    return residuals_with(cons.matrix(s.q), metric, s.p);
}

Mat compatibility_matrix(const MechanicalSystem& sys, const ConstraintSet& cons, const Vec& q) {
    if (cons.m == 0) return Mat(0, 0);
    const MetricFactor metric(sys, q);
    return compatibility_with(cons.matrix(q), metric);
}

Vec multipliers(const MechanicalSystem& sys, const ConstraintSet& cons, const CotangentState& s,
                const SemibasicForce* force) {
    return evaluate_parts(sys, cons, s, force).lambda;
}

PhaseVelocity nonholonomic_field(const MechanicalSystem& sys, const ConstraintSet& cons,
                                 const CotangentState& s, const SemibasicForce* force) {
    FieldParts parts = evaluate_parts(sys, cons, s, force);
    if (cons.m > 0) parts.free.pdot -= parts.phi.transpose() * parts.lambda;
    return parts.free;
}

CotangentState project_onto_constraints(const MechanicalSystem& sys, const ConstraintSet& cons,
                                        const CotangentState& s) {
    if (cons.m == 0) return s;
    const MetricFactor metric(sys, s.q);
    const Mat phi = cons.matrix(s.q);
    const Mat c = compatibility_with(phi, metric);
    const Vec psi = residuals_with(phi, metric, s.p);
    return {s.q, s.p - phi.transpose() * c.llt().solve(psi)};
}

double ConstrainedTrajectory::max_residual() const {
    double worst = 0.0;
    for (const auto& r : residuals)
        if (r.size() > 0) worst = std::max(worst, r.cwiseAbs().maxCoeff());
    return worst;
}

double ConstrainedTrajectory::energy_drift() const {
    double worst = 0.0;
    for (double e : energy) worst = std::max(worst, std::abs(e - energy.front()));
    return worst;
}

ConstrainedTrajectory integrate_nonholonomic(const MechanicalSystem& sys,
                                             const ConstraintSet& cons,
                                             const CotangentState& s0, double dt, int steps,
                                             const NonholonomicOptions& options) {
    const int n = sys.dim();
    ConstrainedTrajectory out;

    const Vec psi0 = constraint_residuals(sys, cons, s0);
    if (psi0.size() > 0 && psi0.cwiseAbs().maxCoeff() > 1e-8)
        out.warnings.push_back("initial state violates the constraints (max |Psi| = " +
                               std::to_string(psi0.cwiseAbs().maxCoeff()) + ")");

    const StateDerivative field = [&](const Vec& x) {
        return pack(nonholonomic_field(sys, cons, unpack(x, n), options.force));
    };
    std::function<Vec(const Vec&)> projector;
    if (options.project && cons.m > 0)
        projector = [&](const Vec& x) {
            return pack(project_onto_constraints(sys, cons, unpack(x, n)));
        };

    const Trajectory raw = rk4_integrate(field, pack(s0), dt, steps, {}, projector);

    out.times = raw.times;
    out.states.reserve(raw.size());
    out.energy.reserve(raw.size());
    out.residuals.reserve(raw.size());
    out.multipliers.reserve(raw.size());
    for (const Vec& x : raw.states) {
        CotangentState s = unpack(x, n);
        out.energy.push_back(hamiltonian(sys, s));
        out.residuals.push_back(constraint_residuals(sys, cons, s));
        out.multipliers.push_back(multipliers(sys, cons, s, options.force));
        out.states.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// HorizontalFrame

namespace {

Mat normalize_columns(Mat z) {
    for (Eigen::Index a = 0; a < z.cols(); ++a) {
        const double norm = z.col(a).norm();
        if (!(norm > kRankFloor)) throw FrameError("horizontal frame has a vanishing column");
        z.col(a) /= norm;
    }
    return z;
}

std::vector<int> choose_pivots(const Mat& phi) {
    Mat u = phi;
    const int m = static_cast<int>(u.rows());
    const int n = static_cast<int>(u.cols());
    const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
    std::vector<int> pivots;
    std::vector<bool> used(n, false);
    for (int i = 0; i < m; ++i) {
        int best = -1;
        double best_abs = 0.0;
        for (int c = 0; c < n; ++c) {
            if (used[c]) continue;
            if (std::abs(u(i, c)) > best_abs) {
                best_abs = std::abs(u(i, c));
                best = c;
            }
        }
        if (best < 0 || best_abs <= kRankFloor * scale)
            throw FrameError("constraint rows are rank deficient; cannot build a frame");
        used[best] = true;
        pivots.push_back(best);
        for (int k = i + 1; k < m; ++k) u.row(k) -= (u(k, best) / u(i, best)) * u.row(i);
    }
    return pivots;
}

}  // namespace

HorizontalFrame::HorizontalFrame(Basis basis)
    : local_([basis = std::move(basis)](const Vec&) {
          return Basis([basis](const Vec& q) { return normalize_columns(basis(q)); });
      }) {}

HorizontalFrame::HorizontalFrame(LocalFactory factory, int) : local_(std::move(factory)) {}

HorizontalFrame HorizontalFrame::null_space(ConstraintSet cons, int dim) {
    auto factory = [cons = std::move(cons), dim](const Vec& q0) -> Basis {
        if (cons.m == 0) return [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
        const std::vector<int> pivots = choose_pivots(cons.matrix(q0));
        std::vector<int> free_cols;
        for (int c = 0; c < dim; ++c)
            if (std::find(pivots.begin(), pivots.end(), c) == pivots.end()) free_cols.push_back(c);

        return [cons, dim, pivots, free_cols](const Vec& q) {
            const Mat phi = cons.matrix(q);
            Mat square(cons.m, cons.m);
            for (int j = 0; j < cons.m; ++j) square.col(j) = phi.col(pivots[j]);
            const Eigen::PartialPivLU<Mat> lu(square);
            Mat z = Mat::Zero(dim, static_cast<Eigen::Index>(free_cols.size()));
            for (std::size_t a = 0; a < free_cols.size(); ++a) {
                const Vec dependent = lu.solve(Vec(-phi.col(free_cols[a])));
                z(free_cols[a], static_cast<Eigen::Index>(a)) = 1.0;
                for (int j = 0; j < cons.m; ++j)
                    z(pivots[j], static_cast<Eigen::Index>(a)) = dependent[j];
            }
            return normalize_columns(std::move(z));
        };
    };
    return HorizontalFrame(LocalFactory(std::move(factory)), 0);
}

Mat HorizontalFrame::at(const Vec& q) const { return local_(q)(q); }

std::vector<VectorField> HorizontalFrame::fields_near(const Vec& q0) const {
    const Basis basis = local_(q0);
    const Eigen::Index count = basis(q0).cols();
    std::vector<VectorField> fields;
    fields.reserve(count);
    for (Eigen::Index a = 0; a < count; ++a)
        fields.push_back({[basis, a](const Vec& q) { return Vec(basis(q).col(a)); }});
    return fields;
}

void HorizontalFrame::validate(const ConstraintSet& cons, const Vec& q) const {
    const Mat z = at(q);
    const auto n = q.size();
    if (z.rows() != n || z.cols() != n - cons.m)
        throw FrameError("horizontal frame must have " + std::to_string(n - cons.m) +
                         " columns of length " + std::to_string(n));
    if (cons.m > 0 && (cons.matrix(q) * z).cwiseAbs().maxCoeff() > 1e-10)
        throw FrameError("frame vectors are not annihilated by the constraint 1-forms");
    if (z.cols() > 0) {
        const Eigen::JacobiSVD<Mat> svd(z);
        if (svd.singularValues().minCoeff() <= kRankFloor)
            throw FrameError("horizontal frame is rank deficient");
    }
}

}  // namespace nhj
