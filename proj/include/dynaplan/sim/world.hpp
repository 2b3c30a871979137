#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dynaplan/core.hpp"
#include "dynaplan/mission.hpp"
#include "dynaplan/sim/scripts.hpp"

namespace dynaplan::sim {

/// Axis-aligned static box.
struct Box {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
};

/// Vertical static cylinder spanning z0..z1.
struct Cylinder {
    double x = 0.0;
    double y = 0.0;
    double z0 = 0.0;
    double z1 = 1.0;
    double radius = 0.3;
};

/// Spinning-lidar style sensor: rays on a fixed azimuth/elevation lattice.
struct SensorModel {
    double rate = 15.0;          ///< scans per second
    double range = 30.0;         ///< max return distance, meters
    double az_step_deg = 1.5;    ///< azimuth spacing
    double el_step_deg = 2.0;    ///< elevation spacing
    double az_span_deg = 360.0;  ///< total azimuth coverage, centered on +x
    double el_min_deg = -90.0;
    double el_max_deg = 90.0;
    double noise_sigma = 0.0;    ///< additive Gaussian noise per axis, meters
};

struct VehicleModel {
    double radius = 0.3;
    double v_max = 3.0;
    double a_max = 6.0;
    Vec3 start = Vec3::Zero();
    Vec3 goal = Vec3::Zero();
};

enum class ControlMode {
    Full,  ///< perception + mission + planner drive the vehicle
    Hold   ///< vehicle sits at start; perception still runs
};

/// Convergence-metric bookkeeping for single-mover scenarios.
struct MetricsSpec {
    bool track_convergence = false;
    double reference_time = 0.0;   ///< motion-change instant t_con is measured from
    double reference_speed = 1.0;  ///< convergence band = band_fraction * reference_speed
    double band_fraction = 0.1;
    double dwell = 0.3;            ///< seconds the error must stay in band
};

struct Scenario {
    std::string name = "scenario";
    Vec3 bounds_min = Vec3(-15.0, -15.0, 0.0);
    Vec3 bounds_max = Vec3(15.0, 15.0, 3.0);
    std::vector<Box> boxes;
    std::vector<Cylinder> cylinders;
    std::vector<MotionScript> movers;
    SensorModel sensor;
    VehicleModel vehicle;
    std::uint64_t seed = 0;
    double timeout = 30.0;
    double t_delay = 0.01277;  ///< perception publish delay seen by the planner
    ControlMode control = ControlMode::Full;
    MissionMode initial_mode = MissionMode::Navigating;
    MetricsSpec metrics;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ stream);
}

/// Nearest positive ray parameter t with origin o, unit direction d; nullopt if missed.
inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Box& b) {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (o[a] < b.min[a] || o[a] > b.max[a]) {
                return std::nullopt;
            }
            continue;
        }
        double lo = (b.min[a] - o[a]) / d[a];
        double hi = (b.max[a] - o[a]) / d[a];
        if (lo > hi) {
            std::swap(lo, hi);
        }
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (t0 > t1) {
            return std::nullopt;
        }
    }
    if (t0 <= 1e-9) {
        return std::nullopt;  // origin inside or surface behind
    }
    return t0;
}

/// Intersection with a capped vertical cylinder.
inline std::optional<double> ray_vcyl(const Vec3& o, const Vec3& d, double cx, double cy,
                                      double z0, double z1, double r) {
    double best = std::numeric_limits<double>::infinity();
    const double ox = o.x() - cx;
    const double oy = o.y() - cy;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-12) {
        const double b = 2.0 * (ox * d.x() + oy * d.y());
        const double c = ox * ox + oy * oy - r * r;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t > 1e-9 && t < best) {
                    const double z = o.z() + t * d.z();
                    if (z >= z0 && z <= z1) {
                        best = t;
                    }
                }
            }
        }
    }
    if (std::abs(d.z()) > 1e-12) {
        for (double zc : {z0, z1}) {
            const double t = (zc - o.z()) / d.z();
            if (t > 1e-9 && t < best) {
                const double hx = ox + t * d.x();
                const double hy = oy + t * d.y();
                if (hx * hx + hy * hy <= r * r) {
                    best = t;
                }
            }
        }
    }
    if (!std::isfinite(best)) {
        return std::nullopt;
    }
    return best;
}

inline std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
    const Vec3 oc = o - c;
    const double b = 2.0 * oc.dot(d);
    const double cc = oc.squaredNorm() - r * r;
    const double disc = b * b - 4.0 * cc;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double sq = std::sqrt(disc);
    const double t0 = (-b - sq) / 2.0;
    if (t0 > 1e-9) {
        return t0;
    }
    const double t1 = (-b + sq) / 2.0;
    if (t1 > 1e-9) {
        return t1;
    }
    return std::nullopt;
}

inline double point_box_distance(const Vec3& p, const Box& b) {
    double sq = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double d = std::max({b.min[a] - p[a], 0.0, p[a] - b.max[a]});
        sq += d * d;
    }
    return std::sqrt(sq);
}

inline double point_vcyl_distance(const Vec3& p, double cx, double cy, double z0, double z1,
                                  double r) {
    const double radial = std::hypot(p.x() - cx, p.y() - cy);
    const double dr = radial - r;
    const double dz = std::max({z0 - p.z(), 0.0, p.z() - z1});
    if (dr <= 0.0) {
        if (dz > 0.0) {
            return dz;
        }
        return -std::min({-dr, p.z() - z0, z1 - p.z()});  // negative: inside the volume
    }
    return std::hypot(dr, dz);
}

}  // namespace detail

/// Surface distance from a point to a mover at time t (negative inside).
inline double mover_surface_distance(const MotionScript& m, const Vec3& p, double t) {
    if (!m.active(t)) {
        return std::numeric_limits<double>::infinity();
    }
    const Vec3 base = m.state(t).position;
    if (m.shape == MoverShape::Sphere) {
        return (p - base).norm() - m.radius;
    }
    return detail::point_vcyl_distance(p, base.x(), base.y(), base.z(), base.z() + m.height,
                                       m.radius);
}

/// Surface distance from a point to the nearest static obstacle (negative inside).
inline double static_surface_distance(const Scenario& sc, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const Box& b : sc.boxes) {
        const bool inside = (p.array() >= b.min.array()).all() && (p.array() <= b.max.array()).all();
        if (inside) {
            double depth = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 3; ++a) {
                depth = std::min({depth, p[a] - b.min[a], b.max[a] - p[a]});
            }
            best = std::min(best, -depth);
        } else {
            best = std::min(best, detail::point_box_distance(p, b));
        }
    }
    for (const Cylinder& c : sc.cylinders) {
        best = std::min(best, detail::point_vcyl_distance(p, c.x, c.y, c.z0, c.z1, c.radius));
    }
    return best;
}

/// Smallest surface distance from p to any obstacle, static or moving, at time t.
inline double min_clearance(const Scenario& sc, const Vec3& p, double t) {
    double best = static_surface_distance(sc, p);
    for (const MotionScript& m : sc.movers) {
        best = std::min(best, mover_surface_distance(m, p, t));
    }
    return best;
}

/**
 * @brief Synthesize one scan at time t from a sensor at `origin`.
 *
 * Rays are cast over the sensor's angular lattice; each keeps only the nearest
 * surface within range, so nearer objects occlude farther ones exactly. Labels
 * carry ground truth: 0 for static surfaces, 1 + mover index otherwise. Noise
 * is seeded by (scenario seed, frame id) only.
 */
inline PointCloud synth_scan(const Scenario& sc, const Vec3& origin, double t, int frame_id) {
    PointCloud cloud;
    cloud.timestamp = t;
    cloud.frame_id = frame_id;

    const double deg = std::numbers::pi / 180.0;
    const double az_step = sc.sensor.az_step_deg * deg;
    const double el_step = sc.sensor.el_step_deg * deg;
    const double az_span = sc.sensor.az_span_deg * deg;
    const double el_min = sc.sensor.el_min_deg * deg;
    const double el_max = sc.sensor.el_max_deg * deg;
    const int n_az = std::max(1, static_cast<int>(std::round(az_span / az_step)));
    const int n_el = 1 + std::max(0, static_cast<int>(std::round((el_max - el_min) / el_step)));
    const bool full_circle = sc.sensor.az_span_deg >= 360.0 - 1e-9;

    std::mt19937_64 rng(detail::mix_seed(sc.seed, 0x5ca40000ULL + std::uint64_t(frame_id)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<ScriptState> mover_state(sc.movers.size());
    std::vector<bool> mover_on(sc.movers.size(), false);
    for (std::size_t i = 0; i < sc.movers.size(); ++i) {
        if (sc.movers[i].active(t)) {
            mover_on[i] = true;
            mover_state[i] = sc.movers[i].state(t);
        }
    }

    for (int ia = 0; ia < n_az; ++ia) {
        const double az = full_circle ? ia * az_step : -0.5 * az_span + ia * az_step;
        for (int ie = 0; ie < n_el; ++ie) {
            const double el = el_min + ie * el_step;
            const Vec3 d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
            double best = sc.sensor.range;
            int label = -1;
            for (const Box& b : sc.boxes) {
                if (auto hit = detail::ray_box(origin, d, b); hit && *hit < best) {
                    best = *hit;
                    label = 0;
                }
            }
            for (const Cylinder& c : sc.cylinders) {
                if (auto hit = detail::ray_vcyl(origin, d, c.x, c.y, c.z0, c.z1, c.radius);
                    hit && *hit < best) {
                    best = *hit;
                    label = 0;
                }
            }
            for (std::size_t i = 0; i < sc.movers.size(); ++i) {
                if (!mover_on[i]) {
                    continue;
                }
                const MotionScript& m = sc.movers[i];
                const Vec3& base = mover_state[i].position;
                std::optional<double> hit;
                if (m.shape == MoverShape::Sphere) {
                    hit = detail::ray_sphere(origin, d, base, m.radius);
                } else {
                    hit = detail::ray_vcyl(origin, d, base.x(), base.y(), base.z(),
                                           base.z() + m.height, m.radius);
                }
                if (hit && *hit < best) {
                    best = *hit;
                    label = 1 + static_cast<int>(i);
                }
            }
            if (label >= 0) {
                Vec3 p = origin + best * d;
                if (sc.sensor.noise_sigma > 0.0) {
                    p += sc.sensor.noise_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
                }
                cloud.points.push_back(p);
                cloud.labels.push_back(label);
            }
        }
    }
    return cloud;
}

/// Time-parameterized view of a scenario; all object states are closed form.
struct World {
    const Scenario* scenario = nullptr;
    double t = 0.0;
};

inline World step_world(World w, double dt) {
    if (dt <= 0.0) {
        throw InvalidIntervalError("step_world: dt must be positive");
    }
    w.t += dt;
    return w;
}

}  // namespace dynaplan::sim
