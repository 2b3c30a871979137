/**
 * @file grid_map.hpp
 * @brief Occupancy grid over static points and the Euclidean distance field
 *        queried by the static-obstacle penalty.
 */

#pragma once

#include "dynaplan/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

namespace dynaplan {

struct GridParams {
    double resolution = 0.2;
    int occ_hits = 1;  ///< hits required before a cell counts as occupied
};

class OccupancyGrid {
  public:
    OccupancyGrid(const Vec3& origin, double resolution, int nx, int ny, int nz,
                  int occ_hits = 1)
        : origin_(origin), resolution_(resolution), nx_(nx), ny_(ny), nz_(nz),
          occ_hits_(occ_hits), hits_(static_cast<std::size_t>(nx) * ny * nz, 0) {
        if (nx <= 0 || ny <= 0 || nz <= 0 || resolution <= 0.0) {
            throw ConfigError("occupancy grid needs positive dims and resolution");
        }
    }

    const Vec3& origin() const { return origin_; }
    double resolution() const { return resolution_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    std::size_t cell_count() const { return hits_.size(); }

    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * ny_ + iy) * nx_ + ix;
    }

    bool in_bounds(int ix, int iy, int iz) const {
        return ix >= 0 && ix < nx_ && iy >= 0 && iy < ny_ && iz >= 0 && iz < nz_;
    }

    /// Cell containing p, or false if p lies outside the grid.
    bool locate(const Vec3& p, int& ix, int& iy, int& iz) const {
        const Vec3 local = (p - origin_) / resolution_;
        ix = static_cast<int>(std::floor(local.x()));
        iy = static_cast<int>(std::floor(local.y()));
        iz = static_cast<int>(std::floor(local.z()));
        return in_bounds(ix, iy, iz);
    }

    Vec3 cell_center(int ix, int iy, int iz) const {
        return origin_ + resolution_ * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
    }

    void integrate(const PointCloud& static_points) {
        for (const Vec3& p : static_points.points) {
            integrate_point(p);
        }
    }

    void integrate_point(const Vec3& p) {
        int ix, iy, iz;
        if (locate(p, ix, iy, iz)) {
            hits_[index(ix, iy, iz)] += 1;
        }
    }

    bool occupied(int ix, int iy, int iz) const {
        return hits_[index(ix, iy, iz)] >= occ_hits_;
    }

    int hits(int ix, int iy, int iz) const { return hits_[index(ix, iy, iz)]; }

    void clear() { std::fill(hits_.begin(), hits_.end(), 0); }

    /// Occupied cell centers as CSV rows (x,y,z) for offline visualization.
    void export_occupied_csv(std::ostream& os) const {
        os << "x,y,z\n";
        for (int iz = 0; iz < nz_; ++iz) {
            for (int iy = 0; iy < ny_; ++iy) {
                for (int ix = 0; ix < nx_; ++ix) {
                    if (occupied(ix, iy, iz)) {
                        const Vec3 c = cell_center(ix, iy, iz);
                        os << c.x() << ',' << c.y() << ',' << c.z() << '\n';
                    }
                }
            }
        }
    }

  private:
    Vec3 origin_;
    double resolution_;
    int nx_, ny_, nz_;
    int occ_hits_;
    std::vector<int> hits_;
};

namespace detail {

/**
 * @brief 1-D squared-distance transform via the lower-envelope-of-parabolas
 *        method. Handles +infinity sources by skipping them.
 */
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    d.assign(n, std::numeric_limits<double>::infinity());
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) {
            continue;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -std::numeric_limits<double>::infinity();
            z[1] = std::numeric_limits<double>::infinity();
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) /
                (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
                if (k < 0) {
                    break;
                }
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) {
        return;  // no finite sources in this scanline
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) {
            ++j;
        }
        const int p = v[j];
        d[q] = (q - p) * static_cast<double>(q - p) + f[p];
    }
}

}  // namespace detail

/**
 * @brief Exact Euclidean distances (between cell centers) to the nearest
 *        occupied cell, with trilinear interpolation for continuous queries.
 */
class DistanceField {
  public:
    explicit DistanceField(const OccupancyGrid& grid)
        : origin_(grid.origin()), resolution_(grid.resolution()), nx_(grid.nx()),
          ny_(grid.ny()), nz_(grid.nz()) {
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> sq(static_cast<std::size_t>(nx_) * ny_ * nz_, inf);
        bool any = false;
        for (int iz = 0; iz < nz_; ++iz) {
            for (int iy = 0; iy < ny_; ++iy) {
                for (int ix = 0; ix < nx_; ++ix) {
                    if (grid.occupied(ix, iy, iz)) {
                        sq[index(ix, iy, iz)] = 0.0;
                        any = true;
                    }
                }
            }
        }
        if (any) {
            transform_axis(sq, 0);
            transform_axis(sq, 1);
            transform_axis(sq, 2);
        }
        distance_.resize(sq.size());
        for (std::size_t i = 0; i < sq.size(); ++i) {
            distance_[i] = std::isfinite(sq[i]) ? resolution_ * std::sqrt(sq[i]) : inf;
        }
        has_occupied_ = any;
    }

    bool has_occupied() const { return has_occupied_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    double resolution() const { return resolution_; }

    double cell_distance(int ix, int iy, int iz) const {
        return distance_[index(ix, iy, iz)];
    }

    /// Trilinear interpolation over cell centers; outside queries clamp.
    double query_distance(const Vec3& p) const {
        if (!has_occupied_) {
            return std::numeric_limits<double>::infinity();
        }
        double w[3][2];
        int base[3];
        interp_setup(p, base, w);
        double value = 0.0;
        for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    value += w[0][dx] * w[1][dy] * w[2][dz] * corner(base, dx, dy, dz);
                }
            }
        }
        return value;
    }

    /// Distance and its spatial gradient (zero where clamped or unoccupied).
    double query_distance_gradient(const Vec3& p, Vec3& grad) const {
        grad = Vec3::Zero();
        if (!has_occupied_) {
            return std::numeric_limits<double>::infinity();
        }
        double w[3][2];
        int base[3];
        const std::array<bool, 3> interior = interp_setup(p, base, w);
        double value = 0.0;
        Vec3 dvalue = Vec3::Zero();
        for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const double d = corner(base, dx, dy, dz);
                    value += w[0][dx] * w[1][dy] * w[2][dz] * d;
                    dvalue.x() += (dx ? 1.0 : -1.0) * w[1][dy] * w[2][dz] * d;
                    dvalue.y() += (dy ? 1.0 : -1.0) * w[0][dx] * w[2][dz] * d;
                    dvalue.z() += (dz ? 1.0 : -1.0) * w[0][dx] * w[1][dy] * d;
                }
            }
        }
        for (int a = 0; a < 3; ++a) {
            grad[a] = interior[a] ? dvalue[a] / resolution_ : 0.0;
        }
        return value;
    }

  private:
    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * ny_ + iy) * nx_ + ix;
    }

    /// Corner lookup for interpolation, safe for single-cell axes.
    double corner(const int base[3], int dx, int dy, int dz) const {
        return distance_[index(std::min(base[0] + dx, nx_ - 1),
                               std::min(base[1] + dy, ny_ - 1),
                               std::min(base[2] + dz, nz_ - 1))];
    }

    /// Base cell and axis weights for trilinear interpolation, clamped to
    /// the valid range; returns which axes are interior (unclamped).
    std::array<bool, 3> interp_setup(const Vec3& p, int base[3], double w[3][2]) const {
        const int dims[3] = {nx_, ny_, nz_};
        std::array<bool, 3> interior{};
        for (int a = 0; a < 3; ++a) {
            const double local = (p[a] - origin_[a]) / resolution_ - 0.5;
            int c = static_cast<int>(std::floor(local));
            double frac = local - c;
            interior[a] = c >= 0 && c <= dims[a] - 2;
            if (dims[a] == 1 || c < 0) {
                c = 0;
                frac = 0.0;
                interior[a] = false;
            } else if (c > dims[a] - 2) {
                c = dims[a] - 2;
                frac = 1.0;
                interior[a] = false;
            }
            base[a] = c;
            w[a][0] = 1.0 - frac;
            w[a][1] = frac;
        }
        return interior;
    }

    /// Run the 1-D transform along one axis over the whole volume.
    void transform_axis(std::vector<double>& sq, int axis) {
        const int dims[3] = {nx_, ny_, nz_};
        const int n = dims[axis];
        std::vector<double> line(n);
        std::vector<double> out(n);
        int other[2];
        int oi = 0;
        for (int a = 0; a < 3; ++a) {
            if (a != axis) {
                other[oi++] = a;
            }
        }
        for (int u = 0; u < dims[other[0]]; ++u) {
            for (int v = 0; v < dims[other[1]]; ++v) {
                int idx[3];
                idx[other[0]] = u;
                idx[other[1]] = v;
                for (int t = 0; t < n; ++t) {
                    idx[axis] = t;
                    line[t] = sq[index(idx[0], idx[1], idx[2])];
                }
                detail::edt_1d(line, out);
                for (int t = 0; t < n; ++t) {
                    idx[axis] = t;
                    sq[index(idx[0], idx[1], idx[2])] = out[t];
                }
            }
        }
    }

    Vec3 origin_;
    double resolution_;
    int nx_, ny_, nz_;
    bool has_occupied_ = false;
    std::vector<double> distance_;
};

}  // namespace dynaplan
