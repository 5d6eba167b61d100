// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "nhj/app.hpp"
#include "nhj/caplygin.hpp"
#include "nhj/errors.hpp"
#include "nhj/hamilton_jacobi.hpp"
#include "nhj/models.hpp"
#include "nhj/nonholonomic.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nhj;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kTrajectoryTol = 1e-6;
constexpr double kHJResidualTol = 1e-6;
constexpr double kNegativeResidualMin = 1e-2;
constexpr double kFlowEquivalenceTol = 1e-5;
constexpr double kNegativeFlowMin = 1e-2;
constexpr double kResidualDriftTol = 1e-7;
constexpr double kEnergyDriftTol = 1e-8;
constexpr double kCompatibilityTol = 1e-10;
constexpr double kReducedMetricTol = 1e-10;
constexpr double kAlphaStarTol = 1e-10;
constexpr double kReducedEquivalenceTol = 1e-6;
constexpr double kCurvatureTol = 1e-6;
constexpr double kAntisymmetryTol = 1e-8;
constexpr double kRoundTripTol = 1e-10;
constexpr double kForcedTol = 1e-6;
constexpr double kForcedNegativeMin = 0.5;
constexpr double kOrderRatioMin = 12.0;

constexpr double kDt = 1e-3;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const int kSteps = static_cast<int>(std::ceil(kTwoPi / kDt));

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

std::string sci(double x) { return fmt::format("{:.3e}", x); }

Model unit_robot() { return build_robot(1.0, 1.0, 1.0, 1.0); }

SampleGrid robot_grid() {
    // internal order (theta, psi, x, y)
    return SampleGrid{{{0.0, kTwoPi, 5}, {-1.0, 1.0, 5}, {-1.0, 1.0, 5}, {-1.0, 1.0, 5}}, {}};
}

double max_residual(const HJReport& r) {
    double w = 0.0;
    for (const auto& c : r.conditions) w = std::max(w, c.residual);
    return w;
}

ConstrainedTrajectory robot_run(const Model& robot, const std::string& candidate, const Vec& q0_display) {
    const Vec q0 = robot.to_internal(q0_display);
    return integrate_nonholonomic(robot.system, robot.constraints, {q0, robot.candidate(candidate)(q0)},
                                  kDt, kSteps);
}

double sup_error(const Model& robot, const ConstrainedTrajectory& t,
                 const std::function<Vec(double)>& oracle) {
    double err = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        err = std::max(err, (robot.to_display(t.states[k].q) - oracle(t.times[k])).cwiseAbs().maxCoeff());
    return err;
}

// Start (x0, y0, theta0, psi0) with theta0 = 0.
const Vec kQ0Display = vec({0.3, -0.2, 0.0, 0.5});

Outcome ac1() {
    const Model robot = unit_robot();
    const double x0 = kQ0Display[0], y0 = kQ0Display[1], th0 = kQ0Display[2], ps0 = kQ0Display[3];
    const double r = 1.0;
    const double e1 = sup_error(robot, robot_run(robot, "gamma1", kQ0Display),
                                [&](double t) { return vec({x0, y0, t + th0, ps0}); });
    const double e2 = sup_error(robot, robot_run(robot, "gamma2", kQ0Display), [&](double t) {
        return vec({t * r * std::cos(th0) + x0, t * r * std::sin(th0) + y0, th0, t + ps0});
    });
    return {e1 <= kTrajectoryTol && e2 <= kTrajectoryTol,
            fmt::format("gamma1 err={} gamma2 err={} (tol {})", sci(e1), sci(e2), sci(kTrajectoryTol))};
}

Outcome ac2() {
    const Model robot = unit_robot();
    const double x0 = kQ0Display[0], y0 = kQ0Display[1], ps0 = kQ0Display[3];
    const double r = 1.0;
    const double e = sup_error(robot, robot_run(robot, "gamma3", kQ0Display), [&](double t) {
        return vec({r * std::sin(t) + x0, -r * std::cos(t) + y0 + r, t, t + ps0});
    });
    return {e <= kTrajectoryTol, fmt::format("gamma3 err={} (tol {})", sci(e), sci(kTrajectoryTol))};
}

Outcome ac3() {
    const Model robot = unit_robot();
    const HorizontalFrame frame = HorizontalFrame::null_space(robot.constraints, robot.dim());
    bool ok = true;
    std::string detail;
    for (const char* name : {"gamma1", "gamma2", "gamma3"}) {
        const HJReport r = check_nonholonomic(robot.system, robot.constraints, robot.candidate(name),
                                              robot_grid(), frame, kHJResidualTol);
        const double w = max_residual(r);
        ok = ok && r.pass() && w <= kHJResidualTol && r.conditions.size() == 3;
        detail += fmt::format("{}={} ", name, sci(w));
    }
    const HJReport neg = check_nonholonomic(robot.system, robot.constraints,
                                            robot.candidate("gamma2_perturbed"), robot_grid(), frame,
                                            kHJResidualTol);
    const double wn = max_residual(neg);
    ok = ok && !neg.pass() && wn >= kNegativeResidualMin;
    detail += fmt::format("perturbed gamma2={} (pass tol {}, negative min {})", sci(wn),
                          sci(kHJResidualTol), sci(kNegativeResidualMin));
    return {ok, detail};
}

Outcome ac4() {
    const Model robot = unit_robot();
    const Vec q0 = robot.to_internal(kQ0Display);
    bool ok = true;
    std::string detail;
    for (const char* name : {"gamma1", "gamma2", "gamma3"}) {
        const double d = theorem_equivalence_test(robot.system, robot.constraints, robot.candidate(name),
                                                  q0, kDt, kSteps);
        ok = ok && d <= kFlowEquivalenceTol;
        detail += fmt::format("{}={} ", name, sci(d));
    }
    // Non-solution: the theta momentum grows with theta, which breaks the
    // annihilator condition along the flow.
    const double dn = theorem_equivalence_test(robot.system, robot.constraints,
                                               robot.candidate("gamma1_perturbed"), q0, kDt, kSteps);
    ok = ok && dn >= kNegativeFlowMin;
    detail += fmt::format("perturbed gamma1={} (tol {}, negative min {})", sci(dn), sci(kFlowEquivalenceTol),
                          sci(kNegativeFlowMin));
    return {ok, detail};
}

Outcome ac5() {
    bool ok = true;
    double worst_psi = 0.0, worst_e = 0.0;
    for (bool analytic : {true, false}) {
        Model robot = unit_robot();
        if (!analytic) {
            robot.system.hamiltonian_dq = {};
            robot.system.metric_derivative = {};
            robot.constraints.phi_derivative = {};
        }
        for (const char* name : {"gamma1", "gamma2", "gamma3"}) {
            const ConstrainedTrajectory t = robot_run(robot, name, kQ0Display);
            worst_psi = std::max(worst_psi, t.max_residual());
            worst_e = std::max(worst_e, t.energy_drift());
        }
    }
    ok = worst_psi <= kResidualDriftTol && worst_e <= kEnergyDriftTol;
    return {ok, fmt::format("max|Psi|={} (tol {}) max|H-H0|={} (tol {}), analytic and FD gradients",
                            sci(worst_psi), sci(kResidualDriftTol), sci(worst_e), sci(kEnergyDriftTol))};
}

Outcome ac6() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> param(0.2, 5.0);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    double err_closed = 0.0, err_product = 0.0;
    for (int set = 0; set < 3; ++set) {
        const double m = param(rng), j = param(rng), jw = param(rng), r = param(rng);
        const Model robot = build_robot(m, j, jw, r);
        const Mat minv = Vec((Vec(4) << 1.0 / j, 1.0 / (3.0 * jw), 1.0 / m, 1.0 / m).finished()).asDiagonal();
        for (int k = 0; k < 100; ++k) {
            const Vec q = vec({coord(rng), coord(rng), coord(rng), coord(rng)});
            const Mat c = compatibility_matrix(robot.system, robot.constraints, q);
            const double s = std::sin(q[0]), co = std::cos(q[0]);
            const Mat phi = (Mat(2, 4) << 0.0, 0.0, s, -co, 0.0, -r, co, s).finished();
            const Mat product = phi * minv * phi.transpose();
            Mat closed = Mat::Zero(2, 2);
            closed(0, 0) = 1.0 / m;
            closed(1, 1) = 1.0 / m + r * r / (3.0 * jw);
            err_product = std::max(err_product, (c - product).cwiseAbs().maxCoeff());
            err_closed = std::max(err_closed, (c - closed).cwiseAbs().maxCoeff());
        }
    }
    return {err_product <= kCompatibilityTol && err_closed <= kCompatibilityTol,
            fmt::format("vs Phi M^-1 Phi^T {} vs diag(1/m, 1/m + R^2/(3Jw)) {} (tol {})", sci(err_product),
                        sci(err_closed), sci(kCompatibilityTol))};
}

Outcome ac7() {
    const double m = 1.0, j = 1.0, jw = 1.0, r = 1.0;
    const Model robot = build_robot(m, j, jw, r);
    const EhresmannConnection& conn = *robot.connection;
    const ReducedSystem red = reduce(robot.system, conn);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> rate(-2.0, 2.0);
    const Mat expected = Vec((Vec(2) << j, m * r * r + 3.0 * jw).finished()).asDiagonal();
    double metric_err = 0.0, alpha_max = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec q = vec({angle(rng), angle(rng)});
        metric_err = std::max(metric_err, (red.base.mass_metric(q) - expected).cwiseAbs().maxCoeff());
        const Vec v = vec({rate(rng), rate(rng)});
        alpha_max = std::max(alpha_max, force_tangent(red.base, red.alpha_star, {q, v}).cwiseAbs().maxCoeff());
    }
    const TangentState s0 = horizontal_project(conn, {Vec::Zero(4), vec({1.0, 1.0, 0.0, 0.0})});
    const double eq = equivalence_test(robot.system, conn, s0, kDt, kSteps);
    return {metric_err <= kReducedMetricTol && alpha_max <= kAlphaStarTol && eq <= kReducedEquivalenceTol,
            fmt::format("metric err={} (tol {}) max|alpha*|={} (tol {}) equivalence={} (tol {})",
                        sci(metric_err), sci(kReducedMetricTol), sci(alpha_max), sci(kAlphaStarTol), sci(eq),
                        sci(kReducedEquivalenceTol))};
}

Outcome ac8() {
    // Finite-difference path: the analytic Christoffel derivative is dropped.
    const double r = 1.0;
    const Model robot = build_robot(1.0, 1.0, 1.0, r);
    EhresmannConnection conn = *robot.connection;
    conn.christoffel_derivative = {};
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> other(-1.0, 1.0);
    double err_ordered = 0.0, err_swapped = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double th = angle(rng);
        const Curvature c = curvature(conn, vec({th, other(rng), other(rng), other(rng)}));
        // Hand differentiation of Gamma^x_psi = -R cos, Gamma^y_psi = -R sin:
        // R^x_{theta psi} = -R sin(theta), R^y_{theta psi} = R cos(theta).
        err_ordered = std::max({err_ordered, std::abs(c(0, 0, 1) + r * std::sin(th)),
                                std::abs(c(1, 0, 1) - r * std::cos(th))});
        // (R sin, -R cos) sits in the (psi, theta) slot.
        err_swapped = std::max({err_swapped, std::abs(c(0, 1, 0) - r * std::sin(th)),
                                std::abs(c(1, 1, 0) + r * std::cos(th))});
    }

    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double antisym = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(8);
        for (double& x : a) x = coef(rng);
        EhresmannConnection syn;
        syn.base_dim = 2;
        syn.fiber_dim = 2;
        syn.christoffel = [a](const Vec& q) {
            return Mat((Mat(2, 2) << a[0] * std::sin(q[1]) + a[1] * q[2], a[2] * q[0] * q[3],
                        std::cos(a[3] * q[0]) + a[4] * q[3] * q[2], a[5] + a[6] * q[1] * q[1] + a[7] * q[2])
                           .finished());
        };
        const Curvature c = curvature(syn, vec({coef(rng), coef(rng), coef(rng), coef(rng)}));
        for (const Mat& ri : c.components) antisym = std::max(antisym, (ri + ri.transpose()).cwiseAbs().maxCoeff());
    }
    return {err_ordered <= kCurvatureTol && err_swapped <= kCurvatureTol && antisym <= kAntisymmetryTol,
            fmt::format("R^x_(th,psi)=-R sin, R^y_(th,psi)=R cos err={}; R^x_(psi,th)=R sin, "
                        "R^y_(psi,th)=-R cos err={} (tol {}) antisymmetry={} (tol {})",
                        sci(err_ordered), sci(err_swapped), sci(kCurvatureTol), sci(antisym),
                        sci(kAntisymmetryTol))};
}

Outcome ac9() {
    const Model robot = unit_robot();
    const EhresmannConnection& conn = *robot.connection;
    const SampleGrid grid = robot_grid();
    double err = 0.0;
    bool reports = true;
    for (const auto& y : robot.base_fields) {
        const LiftResult lift = lift_hj_solution(robot.system, conn, y.field, grid, kHJResidualTol);
        const ProjectResult proj = project_hj_solution(robot.system, conn, lift.field, grid, kHJResidualTol);
        reports = reports && lift.report.pass() && proj.report.pass();
        for (const Vec& q : grid.points()) {
            const Vec b = conn.base(q);
            err = std::max(err, (proj.field(b) - y.field(b)).cwiseAbs().maxCoeff());
        }
    }
    return {err <= kRoundTripTol && robot.base_fields.size() == 3,
            fmt::format("Y1,Y2,Y3 round trip err={} (tol {}); HJ lift/project verdicts {}", sci(err),
                        sci(kRoundTripTol), reports ? "pass" : "FAIL")};
}

Outcome ac10() {
    const SampleGrid grid{{{1.0, 2.0, 11}}, {}};
    const Model line = build_model("forced_line", {{"k", 1.0}, {"force_k", 1.0}});
    const HJReport good = check_forced(line.system, *line.force, line.candidate("sqrt_2kq"), grid, kForcedTol);
    const double wg = max_residual(good);
    const Model doubled = build_model("forced_line", {{"k", 1.0}, {"force_k", 2.0}});
    const HJReport bad =
        check_forced(doubled.system, *doubled.force, doubled.candidate("sqrt_2kq"), grid, kForcedTol);
    // The unnormalized energy residual equals k; the normalized one is
    // k / (1 + sqrt(2kq)) on this interval.
    const ConditionResult& e = bad.condition("energy");
    return {good.pass() && wg <= kForcedTol && !bad.pass() && e.raw_residual >= kForcedNegativeMin,
            fmt::format("solution={} (tol {}) doubled force raw={} normalized={} (min {})", sci(wg),
                        sci(kForcedTol), sci(e.raw_residual), sci(e.residual), sci(kForcedNegativeMin))};
}

Outcome ac11() {
    auto error = [](double dt) {
        const int steps = static_cast<int>(std::lround(1.0 / dt));
        const Trajectory t = rk4_integrate([](const Vec& x) { return x; }, vec({1.0}), dt, steps);
        return std::abs(t.final_state()[0] - std::numbers::e);
    };
    const double r1 = error(0.1) / error(0.05);
    const double r2 = error(0.05) / error(0.025);
    return {r1 >= kOrderRatioMin && r2 >= kOrderRatioMin,
            fmt::format("ratios {:.3f} {:.3f} (min {})", r1, r2, kOrderRatioMin)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs every applicable subcommand of every shipped config into `out`.
std::vector<fs::path> run_all(const fs::path& out) {
    std::vector<fs::path> produced;
    std::vector<fs::path> configs;
    for (const auto& entry : fs::directory_iterator(NHJ_CONFIG_DIR))
        if (entry.path().extension() == ".json") configs.push_back(entry.path());
    std::sort(configs.begin(), configs.end());
    for (const auto& path : configs) {
        app::RunConfig cfg = app::load_config(path);
        cfg.out_dir = out / path.stem();
        try {
            const auto s = app::run_simulate(cfg);
            produced.push_back(s.trajectory_path);
            produced.push_back(s.summary_path);
        } catch (const ConfigError&) {
        }
        try {
            produced.push_back(app::run_verify(cfg).report_path);
        } catch (const ConfigError&) {
        }
        try {
            produced.push_back(app::run_reduce(cfg).report_path);
        } catch (const ConfigError&) {
        }
    }
    return produced;
}

Outcome ac12() {
    const fs::path root = fs::temp_directory_path() / "nhj_acceptance_determinism";
    fs::remove_all(root);
    const auto a = run_all(root / "a");
    const auto b = run_all(root / "b");
    bool ok = !a.empty() && a.size() == b.size();
    std::size_t bytes = 0;
    std::string mismatch;
    for (std::size_t i = 0; ok && i < a.size(); ++i) {
        const std::string sa = slurp(a[i]), sb = slurp(b[i]);
        bytes += sa.size();
        if (sa.empty() || sa != sb) {
            ok = false;
            mismatch = fs::relative(a[i], root / "a").string();
        }
    }
    fs::remove_all(root);
    return {ok, ok ? fmt::format("{} files, {} bytes identical across two runs", a.size(), bytes)
                   : fmt::format("mismatch in {}", mismatch.empty() ? "file list" : mismatch)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC01 robot closed-form trajectories", ac1},
        {"AC02 robot gamma3 circle", ac2},
        {"AC03 HJ verification", ac3},
        {"AC04 HJ flow equivalence", ac4},
        {"AC05 conservation", ac5},
        {"AC06 compatibility matrix", ac6},
        {"AC07 Caplygin reduction", ac7},
        {"AC08 curvature", ac8},
        {"AC09 lift/project round trip", ac9},
        {"AC10 forced HJ", ac10},
        {"AC11 RK4 order", ac11},
        {"AC12 determinism", ac12},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fmt::print("{} {} | {} | {:.2f}s\n", o.pass ? "PASS" : "FAIL", name, o.detail, secs);
        if (!o.pass) ++failures;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
