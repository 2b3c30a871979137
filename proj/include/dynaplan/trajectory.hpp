/**
 * @file trajectory.hpp
 * @brief Piecewise quintic trajectories, the minimum-jerk spline solver over
 *        waypoints and durations, and adjoint gradient propagation.
 */

#pragma once

#include "dynaplan/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace dynaplan {

using Coeff6x3 = Eigen::Matrix<double, 6, 3>;

/// Natural quintic basis derivative: entry j of d^k/dt^k [1, t, ..., t^5].
inline Vec6 quintic_basis(double t, int order) {
    Vec6 b = Vec6::Zero();
    for (int j = order; j < 6; ++j) {
        double fac = 1.0;
        for (int m = 0; m < order; ++m) {
            fac *= static_cast<double>(j - m);
        }
        b[j] = fac * std::pow(t, j - order);
    }
    return b;
}

struct BoundaryState {
    Vec3 start_pos = Vec3::Zero();
    Vec3 start_vel = Vec3::Zero();
    Vec3 start_acc = Vec3::Zero();
    Vec3 end_pos = Vec3::Zero();
    Vec3 end_vel = Vec3::Zero();
    Vec3 end_acc = Vec3::Zero();
};

class PiecewisePoly {
  public:
    PiecewisePoly() = default;
    PiecewisePoly(std::vector<Coeff6x3> coeffs, std::vector<double> durations)
        : coeffs_(std::move(coeffs)), durations_(std::move(durations)) {
        for (double t : durations_) {
            if (!(t > 0.0)) {
                throw InvalidIntervalError("piece duration must be positive");
            }
        }
        if (coeffs_.size() != durations_.size() || coeffs_.empty()) {
            throw InvalidIntervalError("piece count mismatch");
        }
    }

    int pieces() const { return static_cast<int>(coeffs_.size()); }
    const std::vector<double>& durations() const { return durations_; }
    const Coeff6x3& coeff(int l) const { return coeffs_[l]; }

    double total_duration() const {
        double sum = 0.0;
        for (double t : durations_) {
            sum += t;
        }
        return sum;
    }

    Vec3 eval_piece(int l, double t_local, int order) const {
        return coeffs_[l].transpose() * quintic_basis(t_local, order);
    }

    /// Derivative of the containing piece; junction times use the later piece.
    Vec3 eval(double t, int order = 0) const {
        const double total = total_duration();
        if (t < -1e-9 || t > total + 1e-9) {
            throw InvalidIntervalError("trajectory evaluated at t=" + std::to_string(t) +
                                       " outside [0, " + std::to_string(total) + "]");
        }
        double remaining = std::min(std::max(t, 0.0), total);
        for (int l = 0; l < pieces(); ++l) {
            if (remaining < durations_[l] || l == pieces() - 1) {
                return eval_piece(l, std::min(remaining, durations_[l]), order);
            }
            remaining -= durations_[l];
        }
        return Vec3::Zero();  // unreachable
    }

  private:
    std::vector<Coeff6x3> coeffs_;
    std::vector<double> durations_;
};

/**
 * @brief Minimum-jerk spline through waypoints with fixed piece durations.
 *
 * Per axis the 6M coefficients solve a linear system: three start conditions,
 * six rows per interior junction (placement on both sides plus continuity of
 * derivative orders 1 to 4), and three end conditions. The factorization is
 * retained so cost gradients can be pulled back from coefficient space to the
 * waypoints and durations by one adjoint solve.
 */
class MincoSolver {
  public:
    MincoSolver() = default;

    /// q is (M-1)x3 interior waypoints, T holds M positive durations.
    PiecewisePoly solve(const BoundaryState& boundary, const Eigen::MatrixXd& q,
                        const Eigen::VectorXd& T) {
        const int m = static_cast<int>(T.size());
        if (m < 1 || q.rows() != m - 1) {
            throw InvalidIntervalError("waypoint count must be piece count minus one");
        }
        for (int l = 0; l < m; ++l) {
            if (!(T[l] > 0.0)) {
                throw InvalidIntervalError("piece duration must be positive");
            }
        }
        pieces_ = m;
        const int n = 6 * m;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 3);

        a.block<1, 6>(0, 0) = quintic_basis(0.0, 0).transpose();
        a.block<1, 6>(1, 0) = quintic_basis(0.0, 1).transpose();
        a.block<1, 6>(2, 0) = quintic_basis(0.0, 2).transpose();
        b.row(0) = boundary.start_pos.transpose();
        b.row(1) = boundary.start_vel.transpose();
        b.row(2) = boundary.start_acc.transpose();

        for (int i = 0; i + 1 < m; ++i) {
            const int row = 3 + 6 * i;
            const int left = 6 * i;
            const int right = 6 * (i + 1);
            a.block<1, 6>(row, left) = quintic_basis(T[i], 0).transpose();
            b.row(row) = q.row(i);
            for (int k = 1; k <= 4; ++k) {
                a.block<1, 6>(row + k, left) = quintic_basis(T[i], k).transpose();
                a.block<1, 6>(row + k, right) = -quintic_basis(0.0, k).transpose();
            }
            a.block<1, 6>(row + 5, right) = quintic_basis(0.0, 0).transpose();
            b.row(row + 5) = q.row(i);
        }

        const int tail = n - 3;
        const int last = 6 * (m - 1);
        a.block<1, 6>(tail + 0, last) = quintic_basis(T[m - 1], 0).transpose();
        a.block<1, 6>(tail + 1, last) = quintic_basis(T[m - 1], 1).transpose();
        a.block<1, 6>(tail + 2, last) = quintic_basis(T[m - 1], 2).transpose();
        b.row(tail + 0) = boundary.end_pos.transpose();
        b.row(tail + 1) = boundary.end_vel.transpose();
        b.row(tail + 2) = boundary.end_acc.transpose();

        lu_.compute(a);
        if (!lu_.isInvertible()) {
            throw SolveFailureError("degenerate spline system (near-singular durations)");
        }
        adjoint_lu_.compute(a.transpose());
        coeff_flat_ = lu_.solve(b);

        std::vector<Coeff6x3> coeffs(m);
        std::vector<double> durations(m);
        for (int l = 0; l < m; ++l) {
            coeffs[l] = coeff_flat_.block<6, 3>(6 * l, 0);
            durations[l] = T[l];
        }
        return PiecewisePoly(std::move(coeffs), std::move(durations));
    }

    /**
     * @brief Pull a coefficient-space gradient back to waypoints/durations.
     *
     * grad_c is dJ/dc stacked 6Mx3; grad_T starts as the direct duration
     * dependence of J and receives the implicit dependence through the
     * constraint system. grad_q gets the waypoint rows of the adjoint.
     */
    void propagate(const PiecewisePoly& traj, const Eigen::MatrixXd& grad_c,
                   Eigen::MatrixXd& grad_q, Eigen::VectorXd& grad_T) const {
        const int m = pieces_;
        const Eigen::MatrixXd g = adjoint_lu_.solve(grad_c);
        grad_q.resize(std::max(m - 1, 0), 3);
        for (int i = 0; i + 1 < m; ++i) {
            const int row = 3 + 6 * i;
            grad_q.row(i) = g.row(row) + g.row(row + 5);
        }
        for (int l = 0; l < m; ++l) {
            const double t_end = traj.durations()[l];
            if (l + 1 < m) {
                const int row = 3 + 6 * l;
                for (int k = 0; k <= 4; ++k) {
                    grad_T[l] -= g.row(row + k).dot(traj.eval_piece(l, t_end, k + 1));
                }
            } else {
                const int tail = 6 * m - 3;
                for (int k = 0; k <= 2; ++k) {
                    grad_T[l] -= g.row(tail + k).dot(traj.eval_piece(l, t_end, k + 1));
                }
            }
        }
    }

  private:
    int pieces_ = 0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
    Eigen::FullPivLU<Eigen::MatrixXd> adjoint_lu_;
    Eigen::MatrixXd coeff_flat_;
};

/// Convenience wrapper matching the one-shot solve contract.
inline PiecewisePoly minco_solve(const BoundaryState& boundary, const Eigen::MatrixXd& q,
                                 const Eigen::VectorXd& T) {
    MincoSolver solver;
    return solver.solve(boundary, q, T);
}

/// Closed-form jerk energy: integral of squared jerk over the trajectory.
inline double jerk_energy(const PiecewisePoly& traj) {
    double energy = 0.0;
    for (int l = 0; l < traj.pieces(); ++l) {
        const double t = traj.durations()[l];
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        Mat3 gram;
        gram << 36.0 * t, 72.0 * t2, 120.0 * t3,
                72.0 * t2, 192.0 * t3, 360.0 * t4,
                120.0 * t3, 360.0 * t4, 720.0 * t5;
        const Eigen::Matrix<double, 3, 3> tail = traj.coeff(l).bottomRows<3>();
        energy += (tail.transpose() * gram * tail).trace();
    }
    return energy;
}

/// Adds jerk-energy gradients: dE/dc into grad_c, direct dE/dT into grad_T.
inline void jerk_energy_grad(const PiecewisePoly& traj, Eigen::MatrixXd& grad_c,
                             Eigen::VectorXd& grad_T) {
    for (int l = 0; l < traj.pieces(); ++l) {
        const double t = traj.durations()[l];
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        Mat3 gram;
        gram << 36.0 * t, 72.0 * t2, 120.0 * t3,
                72.0 * t2, 192.0 * t3, 360.0 * t4,
                120.0 * t3, 360.0 * t4, 720.0 * t5;
        const Eigen::Matrix<double, 3, 3> tail = traj.coeff(l).bottomRows<3>();
        grad_c.block<3, 3>(6 * l + 3, 0) += 2.0 * gram * tail;
        grad_T[l] += traj.eval_piece(l, t, 3).squaredNorm();
    }
}

/// Structured text dump: piece count, then duration and 6x3 coefficients per piece.
inline void write_trajectory(std::ostream& os, const PiecewisePoly& traj) {
    os << "PIECES " << traj.pieces() << "\n";
    os.precision(17);
    for (int l = 0; l < traj.pieces(); ++l) {
        os << "T " << traj.durations()[l] << "\n";
        const Coeff6x3& c = traj.coeff(l);
        for (int r = 0; r < 6; ++r) {
            os << c(r, 0) << ' ' << c(r, 1) << ' ' << c(r, 2) << "\n";
        }
    }
}

/// Dense sampling as CSV: time, position, velocity, acceleration, jerk.
inline void sample_trajectory_csv(std::ostream& os, const PiecewisePoly& traj,
                                  int samples_per_piece = 20) {
    os << "t,px,py,pz,vx,vy,vz,ax,ay,az,jx,jy,jz\n";
    double base = 0.0;
    for (int l = 0; l < traj.pieces(); ++l) {
        const double duration = traj.durations()[l];
        for (int s = 0; s <= samples_per_piece; ++s) {
            const double t_local = duration * s / samples_per_piece;
            os << base + t_local;
            for (int order = 0; order <= 3; ++order) {
                const Vec3 v = traj.eval_piece(l, t_local, order);
                os << ',' << v.x() << ',' << v.y() << ',' << v.z();
            }
            os << '\n';
        }
        base += duration;
    }
}

}  // namespace dynaplan
