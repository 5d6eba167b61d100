#include "nhj/hamilton_jacobi.hpp"

#include "nhj/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace nhj {

// ---------------------------------------------------------------------------
// SampleGrid

int SampleGrid::dim() const {
    if (!axes.empty()) return static_cast<int>(axes.size());
    if (!explicit_points.empty()) return static_cast<int>(explicit_points.front().size());
    return 0;
}

std::vector<Vec> SampleGrid::points() const {
    std::size_t total = axes.empty() ? 0 : 1;
    for (const auto& axis : axes) {
        if (axis.count < 1) throw ConfigError("grid axis count must be at least 1");
        if (!std::isfinite(axis.lo) || !std::isfinite(axis.hi))
            throw ConfigError("grid axis bounds must be finite");
        if (axis.hi < axis.lo) throw ConfigError("grid axis needs lo <= hi");
        total *= static_cast<std::size_t>(axis.count);
        if (total > cap) break;
    }
    total += explicit_points.size();
    if (total > cap)
        throw ConfigError("grid has more than " + std::to_string(cap) + " points");
    if (total == 0) throw ConfigError("grid is empty");

    std::vector<Vec> out;
    out.reserve(total);
    if (!axes.empty()) {
        const auto d = static_cast<Eigen::Index>(axes.size());
        std::vector<int> index(axes.size(), 0);
        while (true) {
            Vec q(d);
            for (Eigen::Index a = 0; a < d; ++a) {
                const auto& axis = axes[a];
                q[a] = axis.count == 1 ? axis.lo
                                       : axis.lo + (axis.hi - axis.lo) * index[a] / (axis.count - 1);
            }
            out.push_back(std::move(q));
            Eigen::Index a = d - 1;
            while (a >= 0 && ++index[a] == axes[a].count) index[a--] = 0;
            if (a < 0) break;
        }
    }
    for (const auto& p : explicit_points) {
        if (!out.empty() && p.size() != out.front().size())
            throw ConfigError("explicit grid point has wrong dimension");
        out.push_back(p);
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw ConfigError("invalid number in grid spec: '" + std::string(text) + "'");
    return value;
}

}  // namespace

SampleGrid SampleGrid::parse(std::string_view spec) {
    SampleGrid grid;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const std::size_t comma = spec.find(',', start);
        const std::string_view item =
            trim(spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start));
        const std::size_t c1 = item.find(':');
        const std::size_t c2 = c1 == item.npos ? item.npos : item.find(':', c1 + 1);
        if (c1 == item.npos || c2 == item.npos)
            throw ConfigError("grid axis must be lo:hi:count, got '" + std::string(item) + "'");
        GridAxis axis;
        axis.lo = parse_double(item.substr(0, c1));
        axis.hi = parse_double(item.substr(c1 + 1, c2 - c1 - 1));
        const std::string_view count = item.substr(c2 + 1);
        const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), axis.count);
        if (ec != std::errc() || ptr != count.data() + count.size() || axis.count < 1)
            throw ConfigError("grid count must be a positive integer, got '" +
                              std::string(count) + "'");
        if (axis.hi < axis.lo) throw ConfigError("grid axis needs lo <= hi, got '" + std::string(item) + "'");
        grid.axes.push_back(axis);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Reports

bool HJReport::pass() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const ConditionResult& c) { return c.pass; });
}

const ConditionResult& HJReport::condition(std::string_view name) const {
    for (const auto& c : conditions)
        if (c.condition == name) return c;
    throw ConfigError("report has no condition '" + std::string(name) + "'");
}

double default_tolerance(const MechanicalSystem& sys) {
    return sys.has_analytic_gradients() ? 1e-6 : 1e-4;
}

namespace {

bool lexicographically_less(const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
}

/// Running max with a lexicographic tie-break on the worst point.
class Worst {
public:
    Worst(std::string name, double tolerance) {
        result_.condition = std::move(name);
        result_.tolerance = tolerance;
    }

    void update(const Vec& q, double raw, double scale) {
        const double normalized = raw / scale;
        if (!std::isfinite(normalized)) throw NumericalFailure("non-finite HJ residual");
        const bool first = result_.worst_point.size() == 0;
        if (first || normalized > result_.residual ||
            (normalized == result_.residual && lexicographically_less(q, result_.worst_point))) {
            result_.residual = normalized;
            result_.raw_residual = raw;
            result_.worst_point = q;
        }
    }

    ConditionResult finish() {
        result_.pass = result_.residual <= result_.tolerance;
        return result_;
    }

private:
    ConditionResult result_;
};

double scale_of(const Vec& gamma_q) {
    return 1.0 + (gamma_q.size() > 0 ? gamma_q.cwiseAbs().maxCoeff() : 0.0);
}

std::vector<Vec> grid_points_for(const MechanicalSystem& sys, const SampleGrid& grid) {
    std::vector<Vec> pts = grid.points();
    for (const auto& q : pts)
        if (q.size() != sys.dim())
            throw ConfigError("grid dimension " + std::to_string(q.size()) +
                              " does not match system dimension " + std::to_string(sys.dim()));
    return pts;
}

Vec energy_gradient(const MechanicalSystem& sys, const OneFormField& gamma, const Vec& q) {
    return fd_gradient([&](const Vec& x) { return hamiltonian(sys, {x, gamma(x)}); }, q);
}

double closedness_raw(const OneFormField& gamma, const Vec& q) {
    if (q.size() < 2) return 0.0;
    return exterior_derivative(gamma, q).cwiseAbs().maxCoeff();
}

}  // namespace

HJReport check_forced(const MechanicalSystem& sys, const SemibasicForce& force,
                      const OneFormField& gamma, const SampleGrid& grid, double tolerance) {
    Worst closed("closed", tolerance);
    Worst energy("energy", tolerance);
    for (const Vec& q : grid_points_for(sys, grid)) {
        const Vec g = gamma(q);
        const double scale = scale_of(g);
        closed.update(q, closedness_raw(gamma, q), scale);
        Vec balance = energy_gradient(sys, gamma, q);
        if (!force.empty()) balance += force_cotangent(sys, force, {q, g});
        energy.update(q, balance.cwiseAbs().maxCoeff(), scale);
    }
    HJReport report;
    report.theorem = force.empty() ? "unconstrained" : "forced";
    report.conditions = {closed.finish(), energy.finish()};
    return report;
}

HJReport check_unconstrained(const MechanicalSystem& sys, const OneFormField& gamma,
                             const SampleGrid& grid, double tolerance) {
    return check_forced(sys, SemibasicForce{}, gamma, grid, tolerance);
}

HJReport check_nonholonomic(const MechanicalSystem& sys, const ConstraintSet& cons,
                            const OneFormField& gamma, const SampleGrid& grid,
                            const HorizontalFrame& frame, double tolerance) {
    Worst image("image", tolerance);
    Worst ideal("ideal", tolerance);
    Worst annihilator("annihilator", tolerance);
    for (const Vec& q : grid_points_for(sys, grid)) {
        frame.validate(cons, q);
        const Vec g = gamma(q);
        const double scale = scale_of(g);

        const Vec psi = constraint_residuals(sys, cons, {q, g});
        image.update(q, psi.size() > 0 ? psi.cwiseAbs().maxCoeff() : 0.0, scale);

        const std::vector<VectorField> z = frame.fields_near(q);
        double worst_pair = 0.0;
        for (std::size_t a = 0; a < z.size(); ++a)
            for (std::size_t b = a + 1; b < z.size(); ++b)
                worst_pair = std::max(worst_pair, std::abs(d_oneform(gamma, z[a], z[b], q)));
        ideal.update(q, worst_pair, scale);

        const Vec dh = energy_gradient(sys, gamma, q);
        const Mat basis = frame.at(q);
        const double worst_dir = basis.cols() > 0 ? (basis.transpose() * dh).cwiseAbs().maxCoeff()
                                                  : 0.0;
        annihilator.update(q, worst_dir, scale);
    }
    HJReport report;
    report.theorem = "nonholonomic";
    report.conditions = {image.finish(), ideal.finish(), annihilator.finish()};
    return report;
}

OneFormField legendre_of(const MechanicalSystem& sys, const VectorField& x) {
    return {[&sys, x](const Vec& q) { return legendre(sys, {q, x(q)}).p; }};
}

HJReport check_nonholonomic_lagrangian(const MechanicalSystem& sys, const ConstraintSet& cons,
                                       const VectorField& x, const SampleGrid& grid,
                                       const HorizontalFrame& frame, double tolerance) {
    const OneFormField gamma = legendre_of(sys, x);
    HJReport report = check_nonholonomic(sys, cons, gamma, grid, frame, tolerance);
    report.theorem = "nonholonomic_lagrangian";

    Worst direct("lagrangian_energy", tolerance);
    for (const Vec& q : grid_points_for(sys, grid)) {
        const Vec de =
            fd_gradient([&](const Vec& y) { return lagrangian_energy(sys, {y, x(y)}); }, q);
        const Mat basis = frame.at(q);
        const double worst_dir =
            basis.cols() > 0 ? (basis.transpose() * de).cwiseAbs().maxCoeff() : 0.0;
        direct.update(q, worst_dir, scale_of(gamma(q)));
    }
    report.conditions.push_back(direct.finish());
    return report;
}

Trajectory hj_flow(const MechanicalSystem& sys, const OneFormField& gamma, const Vec& q0,
                   double dt, int steps) {
    const StateDerivative field = [&](const Vec& q) {
        return legendre_inv(sys, {q, gamma(q)}).v;
    };
    return rk4_integrate(field, q0, dt, steps);
}

double theorem_equivalence_test(const MechanicalSystem& sys, const ConstraintSet& cons,
                                const OneFormField& gamma, const Vec& q0, double dt, int steps) {
    const Trajectory sigma = hj_flow(sys, gamma, q0, dt, steps);
    const ConstrainedTrajectory nh = integrate_nonholonomic(sys, cons, {q0, gamma(q0)}, dt, steps);
    double deviation = 0.0;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        const Vec& q = sigma.states[k];
        deviation = std::max(deviation, (q - nh.states[k].q).cwiseAbs().maxCoeff());
        deviation = std::max(deviation, (gamma(q) - nh.states[k].p).cwiseAbs().maxCoeff());
    }
    return deviation;
}

OneFormField classical_ansatz(const MechanicalSystem& sys, const ConstraintSet& cons,
                              const ScalarField& s) {
    return {[&sys, cons, s](const Vec& q) {
        const Vec ds = fd_gradient(s, q);
        if (cons.m == 0) return ds;
        const MetricFactor metric(sys, q);
        const Mat phi = cons.matrix(q);
        const Mat c = compatibility_matrix(sys, cons, q);
        const Vec lambda = c.llt().solve(phi * metric.solve(ds));
        return Vec(ds - phi.transpose() * lambda);
    }};
}

}  // namespace nhj
