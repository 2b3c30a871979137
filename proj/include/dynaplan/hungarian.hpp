/**
 * @file hungarian.hpp
 * @brief Optimal rectangular assignment (Munkres) for track association.
 */

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace dynaplan {

/**
 * @brief Maximum-score assignment on a rectangular score matrix.
 *
 * Returns row_to_col with -1 for unassigned rows. The matrix is padded to
 * square with zero-score slots internally; pad matches are reported as
 * unassigned. Total assigned score is optimal.
 */
inline std::vector<int> solve_assignment_max(const Eigen::MatrixXd& score) {
    const int rows = static_cast<int>(score.rows());
    const int cols = static_cast<int>(score.cols());
    if (rows == 0 || cols == 0) {
        return std::vector<int>(rows, -1);
    }
    const int n = std::max(rows, cols);

    // Munkres minimizes, so flip sign and shift to keep costs non-negative.
    const double max_entry = score.maxCoeff();
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, max_entry < 0.0 ? -max_entry : 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            cost(r, c) = max_entry - score(r, c);
        }
    }

    for (int r = 0; r < n; ++r) {
        cost.row(r).array() -= cost.row(r).minCoeff();
    }
    for (int c = 0; c < n; ++c) {
        cost.col(c).array() -= cost.col(c).minCoeff();
    }

    constexpr int kNone = 0;
    constexpr int kStar = 1;
    constexpr int kPrime = 2;
    Eigen::MatrixXi mark = Eigen::MatrixXi::Zero(n, n);
    std::vector<bool> row_covered(n, false);
    std::vector<bool> col_covered(n, false);

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (cost(r, c) == 0.0 && !row_covered[r] && !col_covered[c]) {
                mark(r, c) = kStar;
                row_covered[r] = true;
                col_covered[c] = true;
            }
        }
    }
    std::fill(row_covered.begin(), row_covered.end(), false);
    std::fill(col_covered.begin(), col_covered.end(), false);

    auto cover_starred_cols = [&]() {
        int covered = 0;
        for (int c = 0; c < n; ++c) {
            for (int r = 0; r < n; ++r) {
                if (mark(r, c) == kStar) {
                    col_covered[c] = true;
                    break;
                }
            }
            if (col_covered[c]) {
                ++covered;
            }
        }
        return covered;
    };

    auto find_zero = [&](int& zr, int& zc) {
        for (int r = 0; r < n; ++r) {
            if (row_covered[r]) {
                continue;
            }
            for (int c = 0; c < n; ++c) {
                if (!col_covered[c] && cost(r, c) == 0.0) {
                    zr = r;
                    zc = c;
                    return true;
                }
            }
        }
        return false;
    };

    auto star_in_row = [&](int r) {
        for (int c = 0; c < n; ++c) {
            if (mark(r, c) == kStar) {
                return c;
            }
        }
        return -1;
    };

    auto star_in_col = [&](int c) {
        for (int r = 0; r < n; ++r) {
            if (mark(r, c) == kStar) {
                return r;
            }
        }
        return -1;
    };

    while (cover_starred_cols() < n) {
        for (;;) {
            int zr = -1;
            int zc = -1;
            while (!find_zero(zr, zc)) {
                // adjust: subtract the min uncovered value, add it at intersections
                double min_uncovered = std::numeric_limits<double>::infinity();
                for (int r = 0; r < n; ++r) {
                    if (row_covered[r]) {
                        continue;
                    }
                    for (int c = 0; c < n; ++c) {
                        if (!col_covered[c]) {
                            min_uncovered = std::min(min_uncovered, cost(r, c));
                        }
                    }
                }
                for (int r = 0; r < n; ++r) {
                    for (int c = 0; c < n; ++c) {
                        if (row_covered[r]) {
                            cost(r, c) += min_uncovered;
                        }
                        if (!col_covered[c]) {
                            cost(r, c) -= min_uncovered;
                        }
                    }
                }
            }
            mark(zr, zc) = kPrime;
            const int starred_col = star_in_row(zr);
            if (starred_col >= 0) {
                row_covered[zr] = true;
                col_covered[starred_col] = false;
            } else {
                // augmenting path: alternate primes and stars from (zr, zc)
                std::vector<std::pair<int, int>> path{{zr, zc}};
                for (;;) {
                    const int r = star_in_col(path.back().second);
                    if (r < 0) {
                        break;
                    }
                    path.emplace_back(r, path.back().second);
                    int c = -1;
                    for (int cc = 0; cc < n; ++cc) {
                        if (mark(r, cc) == kPrime) {
                            c = cc;
                            break;
                        }
                    }
                    path.emplace_back(r, c);
                }
                for (const auto& [r, c] : path) {
                    mark(r, c) = (mark(r, c) == kStar) ? kNone : kStar;
                }
                for (int r = 0; r < n; ++r) {
                    for (int c = 0; c < n; ++c) {
                        if (mark(r, c) == kPrime) {
                            mark(r, c) = kNone;
                        }
                    }
                }
                std::fill(row_covered.begin(), row_covered.end(), false);
                std::fill(col_covered.begin(), col_covered.end(), false);
                break;
            }
        }
    }

    std::vector<int> row_to_col(rows, -1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < n; ++c) {
            if (mark(r, c) == kStar) {
                row_to_col[r] = (c < cols) ? c : -1;
                break;
            }
        }
    }
    return row_to_col;
}

}  // namespace dynaplan
