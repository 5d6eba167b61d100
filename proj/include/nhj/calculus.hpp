#pragma once

// Chart-level numerical calculus: central-difference derivatives of fields,
// Lie brackets, exterior derivatives of 1-forms and a fixed-step RK4 driver.
// Angle coordinates are plain reals; nothing here wraps modulo 2*pi.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace nhj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDefaultFdStep = 1e-5;

struct Chart {
    int dim = 0;
    std::vector<std::string> coordinate_names;
    std::vector<bool> periodic_mask;  // output metadata only

    Chart() = default;
    Chart(std::vector<std::string> names, std::vector<bool> periodic = {});

    /// Chart with names q1..qn and no periodic coordinates.
    static Chart numbered(int dim);
};

struct ScalarField {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> gradient;  // optional analytic gradient

    double operator()(const Vec& q) const { return eval(q); }
    [[nodiscard]] bool has_gradient() const { return static_cast<bool>(gradient); }
};

struct VectorField {
    std::function<Vec(const Vec&)> eval;
    Vec operator()(const Vec& q) const { return eval(q); }
};

struct OneFormField {
    std::function<Vec(const Vec&)> eval;
    Vec operator()(const Vec& q) const { return eval(q); }
};

/// Step actually used along coordinate A: h * max(1, |q_A|).
double scaled_step(double h, double coordinate);

/// Central-difference gradient (or the analytic gradient when supplied).
/// Throws NumericalFailure on non-finite evaluations.
Vec fd_gradient(const ScalarField& f, const Vec& q, double h = kDefaultFdStep);
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& q,
                double h = kDefaultFdStep);

/// Jacobian J(i, B) = dF^i/dq^B of a vector-valued map by central differences.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& q,
                double h = kDefaultFdStep);

/// [X,Y]^A = X^B d_B Y^A - Y^B d_B X^A.
Vec lie_bracket(const VectorField& x, const VectorField& y, const Vec& q,
                double h = kDefaultFdStep);

/// d(gamma)(X,Y) = X(gamma(Y)) - Y(gamma(X)) - gamma([X,Y]).
double d_oneform(const OneFormField& gamma, const VectorField& x, const VectorField& y,
                 const Vec& q, double h = kDefaultFdStep);

/// Coordinate components (d gamma)_{AB} = d_A gamma_B - d_B gamma_A.
Mat exterior_derivative(const OneFormField& gamma, const Vec& q, double h = kDefaultFdStep);

// ---------------------------------------------------------------------------
// Fixed-step integration

using StateDerivative = std::function<Vec(const Vec&)>;

struct Observer {
    std::string name;
    std::function<double(const Vec&)> eval;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<std::string> observer_names;
    std::vector<std::vector<double>> observations;  // [sample][observer]

    [[nodiscard]] std::size_t size() const { return states.size(); }
    [[nodiscard]] const Vec& final_state() const { return states.back(); }
};

/// One classical RK4 step.
Vec rk4_step(const StateDerivative& f, const Vec& x, double dt);

/// Classical RK4 over `steps` steps; returns steps+1 samples including x0.
/// Sample k has time k*dt. Throws DivergenceError on a non-finite state.
/// `post_step`, when set, is applied to every accepted step (e.g. a projection).
Trajectory rk4_integrate(const StateDerivative& f, const Vec& x0, double dt, int steps,
                         const std::vector<Observer>& observers = {},
                         const std::function<Vec(const Vec&)>& post_step = {});

[[nodiscard]] bool all_finite(const Vec& v);

}  // namespace nhj
