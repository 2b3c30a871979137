/**
 * @file lbfgs.hpp
 * @brief Limited-memory BFGS with a strong Wolfe line search.
 */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>

namespace dynaplan {

struct LbfgsParams {
    int max_iterations = 200;
    int memory = 8;
    double g_epsilon = 1e-6;     ///< infinity-norm gradient stopping threshold
    double cost_rel_tol = 1e-8;  ///< relative cost-change stopping threshold
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_linesearch = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

/**
 * @brief Minimize f(x, grad) starting from x0.
 *
 * The callable evaluates the cost and fills the gradient. On line-search
 * failure the best iterate found so far is returned with the failure flagged;
 * callers decide what "best effort" means for them.
 */
template <typename F>
LbfgsResult lbfgs_minimize(F&& f, Eigen::VectorXd x0, const LbfgsParams& params = {}) {
    const int n = static_cast<int>(x0.size());
    LbfgsResult result;
    result.x = std::move(x0);

    Eigen::VectorXd g(n);
    double fx = f(result.x, g);
    result.cost = fx;

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
    Eigen::VectorXd d(n), x_new(n), g_new(n);

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        result.iterations = iter;
        if (g.lpNorm<Eigen::Infinity>() < params.g_epsilon) {
            result.converged = true;
            return result;
        }

        // two-loop recursion for d = -H g
        d = -g;
        Eigen::VectorXd alpha_buf(history.size());
        for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
            const auto& [s, y] = history[i];
            const double rho_i = 1.0 / y.dot(s);
            alpha_buf[i] = rho_i * s.dot(d);
            d -= alpha_buf[i] * y;
        }
        if (!history.empty()) {
            const auto& [s, y] = history.back();
            d *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const auto& [s, y] = history[i];
            const double rho_i = 1.0 / y.dot(s);
            const double beta = rho_i * y.dot(d);
            d += (alpha_buf[i] - beta) * s;
        }

        double dg = d.dot(g);
        if (!(dg < 0.0)) {
            history.clear();
            d = -g;
            dg = d.dot(g);
        }

        // strong Wolfe line search (bracket then zoom)
        const double f0 = fx;
        const double dg0 = dg;
        double alpha_prev = 0.0, f_prev = f0;
        double alpha = iter == 0 ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>()))
                                 : 1.0;
        double alpha_lo = 0.0, alpha_hi = 0.0;
        double f_lo = f0;
        bool bracketed = false, found = false;
        double f_alpha = f0, dg_alpha = dg0;

        auto eval_at = [&](double a) {
            x_new = result.x + a * d;
            f_alpha = f(x_new, g_new);
            dg_alpha = g_new.dot(d);
        };

        for (int ls = 0; ls < params.max_linesearch; ++ls) {
            eval_at(alpha);
            if (f_alpha > f0 + params.wolfe_c1 * alpha * dg0 || (ls > 0 && f_alpha >= f_prev)) {
                alpha_lo = alpha_prev;
                f_lo = f_prev;
                alpha_hi = alpha;
                bracketed = true;
                break;
            }
            if (std::abs(dg_alpha) <= -params.wolfe_c2 * dg0) {
                found = true;
                break;
            }
            if (dg_alpha >= 0.0) {
                alpha_lo = alpha;
                f_lo = f_alpha;
                alpha_hi = alpha_prev;
                bracketed = true;
                break;
            }
            alpha_prev = alpha;
            f_prev = f_alpha;
            alpha *= 2.0;
        }

        if (bracketed && !found) {
            for (int z = 0; z < params.max_linesearch; ++z) {
                alpha = 0.5 * (alpha_lo + alpha_hi);
                eval_at(alpha);
                if (f_alpha > f0 + params.wolfe_c1 * alpha * dg0 || f_alpha >= f_lo) {
                    alpha_hi = alpha;
                } else {
                    if (std::abs(dg_alpha) <= -params.wolfe_c2 * dg0) {
                        found = true;
                        break;
                    }
                    if (dg_alpha * (alpha_hi - alpha_lo) >= 0.0) {
                        alpha_hi = alpha_lo;
                    }
                    alpha_lo = alpha;
                    f_lo = f_alpha;
                }
                if (std::abs(alpha_hi - alpha_lo) < 1e-16 * std::max(1.0, std::abs(alpha_lo))) {
                    break;
                }
            }
        }

        if (!found && !(f_alpha < f0)) {
            result.line_search_failed = true;
            return result;
        }

        const Eigen::VectorXd s = x_new - result.x;
        const Eigen::VectorXd y = g_new - g;
        const double f_old = fx;
        result.x = x_new;
        fx = f_alpha;
        g = g_new;
        result.cost = fx;

        if (y.dot(s) > 1e-10 * s.norm() * y.norm()) {
            history.emplace_back(s, y);
            while (static_cast<int>(history.size()) > params.memory) {
                history.pop_front();
            }
        }

        if (std::abs(f_old - fx) <= params.cost_rel_tol * std::max(1.0, std::abs(f_old))) {
            result.converged = true;
            result.iterations = iter + 1;
            return result;
        }
    }
    result.iterations = params.max_iterations;
    return result;
}

}  // namespace dynaplan
