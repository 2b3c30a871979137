/**
 * @file trajopt.hpp
 * @brief Penalty-based trajectory optimization over waypoints and durations.
 *
 * The cost couples smoothness (integrated squared jerk), total time, and
 * sampled cubed-hinge penalties for velocity/acceleration limits, static
 * clearance, and predicted moving objects. Gradients are analytic and flow
 * through the spline solver by the adjoint method, so an unconstrained
 * quasi-Newton method drives the whole thing.
 */

#pragma once

#include "dynaplan/core.hpp"
#include "dynaplan/grid_map.hpp"
#include "dynaplan/lbfgs.hpp"
#include "dynaplan/tracking.hpp"
#include "dynaplan/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace dynaplan {

inline constexpr double kMinDuration = 0.01;
inline constexpr double kFeasibilityTol = 1e-4;

struct OptProblem {
    BoundaryState boundary;
    double lambda_f = 1e4;  ///< velocity/acceleration hinge weight
    double lambda_s = 1e4;  ///< static clearance weight
    double lambda_d = 1e4;  ///< dynamic object weight
    double rho = 1.0;       ///< total-time weight
    double v_max = 3.0;
    double a_max = 6.0;
    int kappa = 16;  ///< penalty samples per piece
    double robot_radius = 0.3;
    double clearance = 0.1;
    const DistanceField* static_field = nullptr;
    std::vector<ObjectPrediction> dynamic;
    double t_start = 0.0;  ///< absolute time at which the trajectory begins
};

struct CostGrad {
    double cost = 0.0;
    Eigen::MatrixXd dq;  ///< (M-1)x3
    Eigen::VectorXd dT;  ///< M
    PiecewisePoly traj;
};

struct OptResult {
    PiecewisePoly trajectory;
    double cost = 0.0;
    int iterations = 0;
    bool feasible = false;
    double max_violation = 0.0;
};

/**
 * @brief Cost and analytic gradients at (q, T).
 *
 * Sampled penalties use kappa+1 equally spaced samples per piece, each
 * weighted T_l/kappa. Dynamic-object samples whose absolute time falls
 * outside a prediction's validity window contribute nothing. The duration
 * gradient collects the weight term, the within-piece sample drift, the
 * absolute-time shift of later pieces, and the adjoint of the spline system.
 */
inline CostGrad cost_and_grad(const OptProblem& prob, const Eigen::MatrixXd& q,
                              const Eigen::VectorXd& T, MincoSolver& solver) {
    const int m = static_cast<int>(T.size());
    CostGrad out;
    out.traj = solver.solve(prob.boundary, q, T);

    Eigen::MatrixXd grad_c = Eigen::MatrixXd::Zero(6 * m, 3);
    out.dT = Eigen::VectorXd::Zero(m);

    out.cost = jerk_energy(out.traj) + prob.rho * T.sum();
    jerk_energy_grad(out.traj, grad_c, out.dT);
    out.dT.array() += prob.rho;

    const double ds_threshold = prob.robot_radius + prob.clearance;
    Eigen::VectorXd time_tail = Eigen::VectorXd::Zero(m);

    double cum_t = prob.t_start;
    for (int l = 0; l < m; ++l) {
        const double duration = T[l];
        const double w = duration / prob.kappa;
        for (int tau = 0; tau <= prob.kappa; ++tau) {
            const double s = static_cast<double>(tau) / prob.kappa;
            const double t_local = s * duration;
            const Vec3 pos = out.traj.eval_piece(l, t_local, 0);
            const Vec3 vel = out.traj.eval_piece(l, t_local, 1);
            const Vec3 acc = out.traj.eval_piece(l, t_local, 2);

            double pen = 0.0;
            Vec3 dp = Vec3::Zero(), dv = Vec3::Zero(), da = Vec3::Zero();
            double g_time = 0.0;

            const double ev = vel.squaredNorm() - prob.v_max * prob.v_max;
            if (ev > 0.0) {
                pen += prob.lambda_f * ev * ev * ev;
                dv += prob.lambda_f * 6.0 * ev * ev * vel;
            }
            const double ea = acc.squaredNorm() - prob.a_max * prob.a_max;
            if (ea > 0.0) {
                pen += prob.lambda_f * ea * ea * ea;
                da += prob.lambda_f * 6.0 * ea * ea * acc;
            }

            if (prob.static_field != nullptr && prob.static_field->has_occupied()) {
                Vec3 dgrad;
                const double d_s = prob.static_field->query_distance_gradient(pos, dgrad);
                const double es = ds_threshold - d_s;
                if (es > 0.0) {
                    pen += prob.lambda_s * es * es * es;
                    dp -= prob.lambda_s * 3.0 * es * es * dgrad;
                }
            }

            const double t_abs = cum_t + t_local;
            for (const ObjectPrediction& obj : prob.dynamic) {
                const double dt_pred = t_abs - obj.t_now;
                if (dt_pred < 0.0 || t_abs > obj.valid_until) {
                    continue;
                }
                const Vec3 p_b = obj.origin + obj.velocity * dt_pred;
                const double infl = obj.inflation_at(t_abs);
                const double reach = prob.robot_radius + obj.radius + infl;
                const Vec3 delta = pos - p_b;
                const double h = reach * reach - delta.squaredNorm();
                if (h > 0.0) {
                    pen += prob.lambda_d * h * h * h;
                    dp -= prob.lambda_d * 6.0 * h * h * delta;
                    const double infl_rate = obj.inflation_rate_at(t_abs);
                    g_time += prob.lambda_d * 3.0 * h * h *
                              (2.0 * reach * infl_rate + 2.0 * delta.dot(obj.velocity));
                }
            }

            out.cost += w * pen;
            if (pen != 0.0 || g_time != 0.0) {
                const Vec6 b0 = quintic_basis(t_local, 0);
                const Vec6 b1 = quintic_basis(t_local, 1);
                const Vec6 b2 = quintic_basis(t_local, 2);
                grad_c.block<6, 3>(6 * l, 0) += w * (b0 * dp.transpose() +
                                                     b1 * dv.transpose() +
                                                     b2 * da.transpose());
                const Vec3 jerk = out.traj.eval_piece(l, t_local, 3);
                out.dT[l] += pen / prob.kappa +
                             w * s * (dp.dot(vel) + dv.dot(acc) + da.dot(jerk)) +
                             w * s * g_time;
                time_tail[l] += w * g_time;
            }
        }
        cum_t += duration;
    }

    // absolute-time shift: growing piece j delays every sample in pieces > j
    double suffix = 0.0;
    for (int l = m - 1; l >= 0; --l) {
        out.dT[l] += suffix;
        suffix += time_tail[l];
    }

    solver.propagate(out.traj, grad_c, out.dq, out.dT);
    return out;
}

inline CostGrad cost_and_grad(const OptProblem& prob, const Eigen::MatrixXd& q,
                              const Eigen::VectorXd& T) {
    MincoSolver solver;
    return cost_and_grad(prob, q, T, solver);
}

inline double softplus(double tau) {
    return tau > 30.0 ? tau : std::log1p(std::exp(tau));
}

inline double inv_softplus(double y) {
    return y > 30.0 ? y : std::log(std::expm1(y));
}

inline double sigmoid(double tau) {
    return tau >= 0.0 ? 1.0 / (1.0 + std::exp(-tau))
                      : std::exp(tau) / (1.0 + std::exp(tau));
}

/// Worst constraint violation over a dense resampling of the trajectory.
inline double max_constraint_violation(const OptProblem& prob, const PiecewisePoly& traj,
                                       int samples_per_piece) {
    double worst = 0.0;
    double cum_t = prob.t_start;
    const double ds_threshold = prob.robot_radius + prob.clearance;
    for (int l = 0; l < traj.pieces(); ++l) {
        const double duration = traj.durations()[l];
        for (int s = 0; s <= samples_per_piece; ++s) {
            const double t_local = duration * s / samples_per_piece;
            const Vec3 pos = traj.eval_piece(l, t_local, 0);
            worst = std::max(worst, traj.eval_piece(l, t_local, 1).norm() - prob.v_max);
            worst = std::max(worst, traj.eval_piece(l, t_local, 2).norm() - prob.a_max);
            if (prob.static_field != nullptr && prob.static_field->has_occupied()) {
                worst = std::max(worst, ds_threshold - prob.static_field->query_distance(pos));
            }
            const double t_abs = cum_t + t_local;
            for (const ObjectPrediction& obj : prob.dynamic) {
                const double dt_pred = t_abs - obj.t_now;
                if (dt_pred < 0.0 || t_abs > obj.valid_until) {
                    continue;
                }
                const Vec3 p_b = obj.origin + obj.velocity * dt_pred;
                const double reach = prob.robot_radius + obj.radius + obj.inflation_at(t_abs);
                worst = std::max(worst, reach - (pos - p_b).norm());
            }
        }
        cum_t += duration;
    }
    return worst;
}

/**
 * @brief Quasi-Newton descent over waypoints and unconstrained duration
 *        parameters, with durations kept positive by a softplus bijection.
 *
 * Feasibility is judged only by dense post-hoc resampling: sampled penalty
 * values can alias between samples, the resampled check cannot.
 */
inline OptResult optimize(const OptProblem& prob, const Eigen::MatrixXd& q0,
                          const Eigen::VectorXd& T0, const LbfgsParams& lbfgs_params = {}) {
    const int m = static_cast<int>(T0.size());
    const int nq = 3 * (m - 1);
    Eigen::VectorXd z(nq + m);
    for (int i = 0; i + 1 < m; ++i) {
        z.segment<3>(3 * i) = q0.row(i).transpose();
    }
    for (int l = 0; l < m; ++l) {
        z[nq + l] = inv_softplus(std::max(T0[l], kMinDuration + 1e-9) - kMinDuration);
    }

    MincoSolver solver;
    auto unpack = [&](const Eigen::VectorXd& zv, Eigen::MatrixXd& q, Eigen::VectorXd& T) {
        q.resize(std::max(m - 1, 0), 3);
        for (int i = 0; i + 1 < m; ++i) {
            q.row(i) = zv.segment<3>(3 * i).transpose();
        }
        T.resize(m);
        for (int l = 0; l < m; ++l) {
            T[l] = kMinDuration + softplus(zv[nq + l]);
        }
    };

    auto objective = [&](const Eigen::VectorXd& zv, Eigen::VectorXd& grad) -> double {
        Eigen::MatrixXd q;
        Eigen::VectorXd T;
        unpack(zv, q, T);
        grad.setZero(zv.size());
        try {
            const CostGrad cg = cost_and_grad(prob, q, T, solver);
            for (int i = 0; i + 1 < m; ++i) {
                grad.segment<3>(3 * i) = cg.dq.row(i).transpose();
            }
            for (int l = 0; l < m; ++l) {
                grad[nq + l] = cg.dT[l] * sigmoid(zv[nq + l]);
            }
            return cg.cost;
        } catch (const SolveFailureError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const LbfgsResult lr = lbfgs_minimize(objective, z, lbfgs_params);

    Eigen::MatrixXd q_final;
    Eigen::VectorXd t_final;
    unpack(lr.x, q_final, t_final);

    OptResult out;
    out.trajectory = minco_solve(prob.boundary, q_final, t_final);
    out.cost = lr.cost;
    out.iterations = lr.iterations;
    out.max_violation = std::max(0.0, max_constraint_violation(prob, out.trajectory,
                                                               4 * prob.kappa));
    out.feasible = out.max_violation <= kFeasibilityTol;
    return out;
}

/**
 * @brief Straight-line initial guess: uniform waypoints, durations from a
 *        trapezoidal speed profile cruising at 0.7 v_max.
 */
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> init_guess(const Vec3& start,
                                                              const Vec3& goal, int n_pieces,
                                                              double v_max, double a_max) {
    if (n_pieces < 1) {
        throw InvalidIntervalError("init_guess needs at least one piece");
    }
    const double dist = (goal - start).norm();
    if (dist < 1e-9) {
        return {Eigen::MatrixXd(0, 3), Eigen::VectorXd::Constant(1, kMinDuration)};
    }
    Eigen::MatrixXd q(n_pieces - 1, 3);
    for (int i = 0; i + 1 < n_pieces; ++i) {
        const Vec3 wp = start + (goal - start) * (static_cast<double>(i + 1) / n_pieces);
        q.row(i) = wp.transpose();
    }
    const double cruise = 0.7 * v_max;
    double total;
    if (dist <= cruise * cruise / a_max) {
        total = 2.0 * std::sqrt(dist / a_max);
    } else {
        total = 2.0 * cruise / a_max + (dist - cruise * cruise / a_max) / cruise;
    }
    total = std::max(total, n_pieces * kMinDuration);
    return {q, Eigen::VectorXd::Constant(n_pieces, total / n_pieces)};
}

}  // namespace dynaplan
