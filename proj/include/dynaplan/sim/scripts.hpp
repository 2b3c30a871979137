#pragma once

#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

#include "dynaplan/core.hpp"

namespace dynaplan::sim {

/// Kinematic state of a scripted object at one instant.
struct ScriptState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
};

/// Straight-line motion at a fixed velocity.
struct ConstantVelocity {
    Vec3 velocity = Vec3::Zero();
};

struct AccelSegment {
    double duration = 0.0;
    Vec3 accel = Vec3::Zero();
};

/// Piecewise-constant acceleration; after the last segment the object keeps
/// whatever velocity it reached.
struct PiecewiseAccel {
    Vec3 v0 = Vec3::Zero();
    std::vector<AccelSegment> segments;
};

/// v(t) = base + axis * amplitude * sin(2 pi t / period).
struct Sinusoid {
    Vec3 base_velocity = Vec3::Zero();
    Vec3 axis = Vec3::UnitX();
    double amplitude = 1.0;
    double period = 1.0;
};

/// Constant-speed travel around a closed loop of waypoints.
struct WaypointLoop {
    std::vector<Vec3> waypoints;
    double speed = 1.0;
};

enum class MoverShape { Sphere, Cylinder };

/**
 * @brief Closed-form moving-object script.
 *
 * Positions are evaluated analytically from the elapsed time since spawn, so
 * stepping a world by any sequence of increments lands on the exact same
 * states. An object does not exist before its spawn time. Cylinders are
 * vertical, extend `height` upward from the scripted position, and report
 * their mid-height point as the object center.
 */
struct MotionScript {
    std::variant<ConstantVelocity, PiecewiseAccel, Sinusoid, WaypointLoop> motion =
        ConstantVelocity{};
    Vec3 spawn_position = Vec3::Zero();
    double spawn_time = 0.0;
    double radius = 0.3;
    MoverShape shape = MoverShape::Sphere;
    double height = 1.7;

    bool active(double t) const { return t >= spawn_time - 1e-12; }

    ScriptState state(double t) const {
        const double tau = std::max(0.0, t - spawn_time);
        ScriptState s;
        std::visit([&](const auto& m) { s = eval(m, tau); }, motion);
        s.position += spawn_position;
        return s;
    }

    /// Object center used for ground-truth matching and collision checks.
    Vec3 center(double t) const {
        Vec3 c = state(t).position;
        if (shape == MoverShape::Cylinder) {
            c.z() += 0.5 * height;
        }
        return c;
    }

  private:
    static ScriptState eval(const ConstantVelocity& m, double tau) {
        return {m.velocity * tau, m.velocity};
    }

    static ScriptState eval(const PiecewiseAccel& m, double tau) {
        Vec3 p = Vec3::Zero();
        Vec3 v = m.v0;
        double left = tau;
        for (const AccelSegment& seg : m.segments) {
            const double h = std::min(left, seg.duration);
            p += v * h + 0.5 * h * h * seg.accel;
            v += seg.accel * h;
            left -= h;
            if (left <= 0.0) {
                return {p, v};
            }
        }
        p += v * left;
        return {p, v};
    }

    static ScriptState eval(const Sinusoid& m, double tau) {
        const double w = 2.0 * std::numbers::pi / m.period;
        const Vec3 p = m.base_velocity * tau + m.axis * (m.amplitude / w) * (1.0 - std::cos(w * tau));
        const Vec3 v = m.base_velocity + m.axis * m.amplitude * std::sin(w * tau);
        return {p, v};
    }

    ScriptState eval(const WaypointLoop& m, double tau) const {
        if (m.waypoints.size() < 2 || m.speed <= 0.0) {
            const Vec3 p = m.waypoints.empty() ? Vec3::Zero() : m.waypoints.front() - spawn_position;
            return {p, Vec3::Zero()};
        }
        const std::size_t n = m.waypoints.size();
        std::vector<double> leg(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            leg[i] = (m.waypoints[(i + 1) % n] - m.waypoints[i]).norm();
            total += leg[i];
        }
        if (total <= 1e-12) {
            return {m.waypoints.front() - spawn_position, Vec3::Zero()};
        }
        double s = std::fmod(m.speed * tau, total);
        for (std::size_t i = 0; i < n; ++i) {
            if (leg[i] <= 1e-12) {
                continue;
            }
            if (s <= leg[i]) {
                const Vec3 dir = (m.waypoints[(i + 1) % n] - m.waypoints[i]) / leg[i];
                return {m.waypoints[i] + dir * s - spawn_position, dir * m.speed};
            }
            s -= leg[i];
        }
        return {m.waypoints.front() - spawn_position, Vec3::Zero()};
    }
};

}  // namespace dynaplan::sim
