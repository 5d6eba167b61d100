#include "nhj/calculus.hpp"

#include "nhj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace nhj {

Chart::Chart(std::vector<std::string> names, std::vector<bool> periodic)
    : dim(static_cast<int>(names.size())),
      coordinate_names(std::move(names)),
      periodic_mask(std::move(periodic)) {
    if (dim < 1) throw ConfigError("chart needs at least one coordinate");
    if (periodic_mask.empty()) periodic_mask.assign(dim, false);
    if (static_cast<int>(periodic_mask.size()) != dim)
        throw ConfigError("periodic mask length does not match chart dimension");
    std::set<std::string> unique(coordinate_names.begin(), coordinate_names.end());
    if (static_cast<int>(unique.size()) != dim)
        throw ConfigError("chart coordinate names must be unique");
}

Chart Chart::numbered(int dim) {
    std::vector<std::string> names;
    for (int i = 0; i < dim; ++i) names.push_back("q" + std::to_string(i + 1));
    return Chart(std::move(names));
}

bool all_finite(const Vec& v) { return v.allFinite(); }

double scaled_step(double h, double coordinate) {
    return h * std::max(1.0, std::abs(coordinate));
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& q, double h) {
    if (!(h > 0.0)) throw NumericalFailure("finite-difference step must be positive");
    Vec grad(q.size());
    Vec x = q;
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        const double step = scaled_step(h, q[a]);
        const double hi = q[a] + step;
        const double lo = q[a] - step;
        x[a] = hi;
        const double fp = f(x);
        x[a] = lo;
        const double fm = f(x);
        x[a] = q[a];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericalFailure("non-finite scalar field value in fd_gradient");
        grad[a] = (fp - fm) / (hi - lo);
    }
    return grad;
}

Vec fd_gradient(const ScalarField& f, const Vec& q, double h) {
    if (f.has_gradient()) {
        Vec g = f.gradient(q);
        if (!all_finite(g)) throw NumericalFailure("non-finite analytic gradient");
        return g;
    }
    return fd_gradient(f.eval, q, h);
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& q, double h) {
    if (!(h > 0.0)) throw NumericalFailure("finite-difference step must be positive");
    Vec x = q;
    Mat jac;
    for (Eigen::Index b = 0; b < q.size(); ++b) {
        const double step = scaled_step(h, q[b]);
        const double hi = q[b] + step;
        const double lo = q[b] - step;
        x[b] = hi;
        const Vec fp = f(x);
        x[b] = lo;
        const Vec fm = f(x);
        x[b] = q[b];
        if (!all_finite(fp) || !all_finite(fm))
            throw NumericalFailure("non-finite field value in fd_jacobian");
        if (b == 0) jac.resize(fp.size(), q.size());
        jac.col(b) = (fp - fm) / (hi - lo);
    }
    return jac;
}

Vec lie_bracket(const VectorField& x, const VectorField& y, const Vec& q, double h) {
    const Mat dx = fd_jacobian(x.eval, q, h);
    const Mat dy = fd_jacobian(y.eval, q, h);
    return dy * x(q) - dx * y(q);
}

double d_oneform(const OneFormField& gamma, const VectorField& x, const VectorField& y,
                 const Vec& q, double h) {
    auto pairing = [&](const VectorField& v) {
        return [&](const Vec& p) { return gamma(p).dot(v(p)); };
    };
    const Vec xq = x(q);
    const Vec yq = y(q);
    const double x_gamma_y = fd_gradient(pairing(y), q, h).dot(xq);
    const double y_gamma_x = fd_gradient(pairing(x), q, h).dot(yq);
    const double gamma_bracket = gamma(q).dot(lie_bracket(x, y, q, h));
    const double out = x_gamma_y - y_gamma_x - gamma_bracket;
    if (!std::isfinite(out)) throw NumericalFailure("non-finite exterior derivative");
    return out;
}

Mat exterior_derivative(const OneFormField& gamma, const Vec& q, double h) {
    // jac(B, A) = d_A gamma_B
    const Mat jac = fd_jacobian(gamma.eval, q, h);
    return jac.transpose() - jac;
}

Vec rk4_step(const StateDerivative& f, const Vec& x, double dt) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * dt * k1);
    const Vec k3 = f(x + 0.5 * dt * k2);
    const Vec k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory rk4_integrate(const StateDerivative& f, const Vec& x0, double dt, int steps,
                         const std::vector<Observer>& observers,
                         const std::function<Vec(const Vec&)>& post_step) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (steps < 1) throw ConfigError("step count must be at least 1");
    if (!all_finite(x0)) throw DivergenceError("non-finite initial state", 0);

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    for (const auto& obs : observers) traj.observer_names.push_back(obs.name);

    auto record = [&](int k, const Vec& x) {
        traj.times.push_back(k * dt);
        traj.states.push_back(x);
        if (!observers.empty()) {
            std::vector<double> row;
            row.reserve(observers.size());
            for (const auto& obs : observers) row.push_back(obs.eval(x));
            traj.observations.push_back(std::move(row));
        }
    };

    record(0, x0);
    Vec x = x0;
    for (int k = 1; k <= steps; ++k) {
        Vec next;
        try {
            next = rk4_step(f, x, dt);
            if (post_step && all_finite(next)) next = post_step(next);
        } catch (const NumericalFailure& e) {
            throw DivergenceError(std::string("integration failed: ") + e.what(),
                                  static_cast<std::size_t>(k - 1));
        }
        if (!all_finite(next))
            throw DivergenceError("non-finite state at step " + std::to_string(k),
                                  static_cast<std::size_t>(k - 1));
        x = std::move(next);
        record(k, x);
    }
    return traj;
}

}  // namespace nhj
