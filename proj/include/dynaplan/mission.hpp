/**
 * @file mission.hpp
 * @brief Collision monitoring, navigating/hovering state machine, and the
 *        repulsion-based temporary target used when the goal is unreachable.
 */

#pragma once

#include "dynaplan/core.hpp"
#include "dynaplan/grid_map.hpp"
#include "dynaplan/tracking.hpp"
#include "dynaplan/trajectory.hpp"
#include "dynaplan/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dynaplan {

struct MissionParams {
    double t_check = 1.5;        ///< look-ahead horizon for collision checks
    double clear_delay = 1.0;    ///< threats must stay clear this long before returning home
    double repulse_h = 2.0;      ///< distance of the temporary target
    double retry_interval = 0.5; ///< goal retry cadence while on a temporary target
    int retry_budget = 3;        ///< consecutive infeasible plans before emergency hold
    double repulse_radius = 6.0; ///< objects beyond this do not steer escapes
    double robot_radius = 0.3;
    double clearance = 0.1;
    double goal_tol = 0.3;
    int check_samples = 100;
    bool replan = true;          ///< false: goal plans only, no temporary-target fallback
};

struct PerceptionSnapshot {
    double t_snapshot = 0.0;
    const DistanceField* field = nullptr;
    std::vector<ObjectPrediction> predictions;
};

/// Scan positions(t) over [t_now, t_now + t_check] for clearance violations.
template <typename PosFn>
std::optional<double> scan_collision(PosFn&& position, double t_now, double t_check,
                                     const DistanceField* field,
                                     const std::vector<ObjectPrediction>& predictions,
                                     double robot_radius, double clearance, int samples) {
    if (!(t_check > 0.0)) {
        throw InvalidIntervalError("collision check horizon must be positive");
    }
    const double ds_threshold = robot_radius + clearance;
    for (int s = 0; s <= samples; ++s) {
        const double t = t_now + t_check * s / samples;
        const Vec3 p = position(t);
        if (field != nullptr && field->has_occupied() &&
            field->query_distance(p) < ds_threshold) {
            return t;
        }
        for (const ObjectPrediction& obj : predictions) {
            if (t < obj.t_now || t > obj.valid_until) {
                continue;
            }
            const Vec3 p_b = obj.origin + obj.velocity * (t - obj.t_now);
            const double reach = robot_radius + obj.radius + obj.inflation_at(t);
            if ((p - p_b).norm() < reach) {
                return t;
            }
        }
    }
    return std::nullopt;
}

/// Earliest predicted collision along a trajectory, if any.
inline std::optional<double> check_collision(const PiecewisePoly& traj, double traj_start,
                                             double t_now, double t_check,
                                             const DistanceField* field,
                                             const std::vector<ObjectPrediction>& predictions,
                                             double robot_radius, double clearance,
                                             int samples = 100) {
    const double total = traj.total_duration();
    auto position = [&](double t) {
        const double local = std::clamp(t - traj_start, 0.0, total);
        return traj.eval(local, 0);
    };
    return scan_collision(position, t_now, t_check, field, predictions, robot_radius,
                          clearance, samples);
}

struct RepulsionSource {
    Vec3 velocity = Vec3::Zero();  ///< object velocity v_s
    Vec3 offset = Vec3::Zero();    ///< r_s, pointing from the object to the vehicle
};

/**
 * @brief Temporary target pushed away from approaching objects.
 *
 * Each object contributes its velocity projected onto the object-to-vehicle
 * direction; the sum, normalized and scaled by h, displaces the target from
 * the current position. Throws when the net direction vanishes.
 */
inline Vec3 repulsion_target(const Vec3& p_now, const std::vector<RepulsionSource>& objects,
                             double h) {
    Vec3 n_total = Vec3::Zero();
    bool any = false;
    for (const RepulsionSource& obj : objects) {
        const double r2 = obj.offset.squaredNorm();
        if (r2 <= 0.0) {
            continue;
        }
        any = true;
        n_total += (obj.velocity.dot(obj.offset) / r2) * obj.offset;
    }
    if (!any || n_total.norm() < 1e-9) {
        throw DegenerateRepulsionError("net repulsion direction undefined");
    }
    return p_now + h * n_total.normalized();
}

/**
 * @brief Deterministic escape direction for the degenerate case: horizontal
 *        perpendicular (right-hand side) of the fastest object's velocity.
 */
inline Vec3 perpendicular_escape(const std::vector<RepulsionSource>& objects) {
    Vec3 v = Vec3::Zero();
    double best = -1.0;
    for (const RepulsionSource& obj : objects) {
        const double speed = obj.velocity.norm();
        if (speed > best) {
            best = speed;
            v = obj.velocity;
        }
    }
    Vec3 dir = v.cross(Vec3::UnitZ());
    if (dir.norm() < 1e-9) {
        dir = v.cross(Vec3::UnitX());
    }
    if (dir.norm() < 1e-9) {
        dir = Vec3::UnitX();
    }
    return dir.normalized();
}

enum class MissionMode { Navigating, Hovering };

enum class CommandKind { Hold, Continue, PlanGoal, PlanTemporary, PlanReturn, EmergencyHold };

inline const char* to_string(MissionMode mode) {
    return mode == MissionMode::Navigating ? "navigating" : "hovering";
}

inline const char* to_string(CommandKind kind) {
    switch (kind) {
        case CommandKind::Hold: return "hold";
        case CommandKind::Continue: return "continue";
        case CommandKind::PlanGoal: return "plan_goal";
        case CommandKind::PlanTemporary: return "plan_temporary";
        case CommandKind::PlanReturn: return "plan_return";
        case CommandKind::EmergencyHold: return "emergency_hold";
    }
    return "unknown";
}

struct MissionCommand {
    double t = 0.0;
    MissionMode mode = MissionMode::Navigating;
    CommandKind kind = CommandKind::Hold;
    Vec3 target = Vec3::Zero();
    bool feasible = true;
};

struct ActiveTrajectory {
    PiecewisePoly traj;
    double start_time = 0.0;
    Vec3 goal = Vec3::Zero();
};

/**
 * @brief Tick-driven mission logic with an injected planner.
 *
 * Navigating flies the active trajectory, replans toward the goal when the
 * look-ahead check predicts a collision, and falls back to a repulsion-based
 * temporary target when the goal is momentarily unreachable, retrying the
 * goal on a timer. Hovering guards a point, escapes along the repulsion
 * direction when threatened, and plans back home once threats stay clear.
 */
class MissionController {
  public:
    using PlanFn =
        std::function<OptResult(const BoundaryState& boundary, const Vec3& goal, double t_start)>;

    MissionController(MissionParams params, const Vec3& home, const Vec3& goal,
                      MissionMode initial_mode, PlanFn planner)
        : params_(std::move(params)), home_(home), goal_(goal), mode_(initial_mode),
          hover_point_(home), planner_(std::move(planner)) {}

    MissionMode mode() const { return mode_; }
    bool goal_reached() const { return goal_reached_; }
    bool emergency_hold() const { return emergency_; }
    const std::vector<MissionCommand>& log() const { return log_; }
    const std::optional<ActiveTrajectory>& active() const { return active_; }

    Vec3 position(double t) const { return commanded(t, 0); }
    Vec3 velocity(double t) const { return commanded(t, 1); }
    Vec3 acceleration(double t) const { return commanded(t, 2); }

    MissionCommand tick(const PerceptionSnapshot& snap, double t_now) {
        MissionCommand cmd;
        cmd.t = t_now;
        cmd.mode = mode_;
        if (emergency_) {
            cmd.kind = CommandKind::Hold;
            cmd.target = hover_point_;
            log_.push_back(cmd);
            return cmd;
        }
        if (mode_ == MissionMode::Navigating) {
            cmd = navigate_tick(snap, t_now);
        } else {
            cmd = hover_tick(snap, t_now);
        }
        log_.push_back(cmd);
        return cmd;
    }

  private:
    Vec3 commanded(double t, int order) const {
        if (!active_) {
            return order == 0 ? hover_point_ : Vec3::Zero();
        }
        const double total = active_->traj.total_duration();
        const double local = t - active_->start_time;
        if (local <= 0.0) {
            return order == 0 ? active_->traj.eval(0.0, 0) : active_->traj.eval(0.0, order);
        }
        if (local >= total) {
            return order == 0 ? active_->traj.eval(total, 0) : Vec3::Zero();
        }
        return active_->traj.eval(local, order);
    }

    BoundaryState boundary_from(double t_now, const Vec3& goal) const {
        BoundaryState b;
        b.start_pos = position(t_now);
        b.start_vel = velocity(t_now);
        b.start_acc = acceleration(t_now);
        b.end_pos = goal;
        return b;
    }

    bool try_plan(double t_now, const Vec3& goal) {
        const OptResult result = planner_(boundary_from(t_now, goal), goal, t_now);
        if (result.feasible) {
            active_ = ActiveTrajectory{result.trajectory, t_now, goal};
            strikes_ = 0;
            return true;
        }
        strikes_ += 1;
        return false;
    }

    std::vector<RepulsionSource> repulsion_sources(const PerceptionSnapshot& snap,
                                                   const Vec3& p_now, double t_now) const {
        std::vector<RepulsionSource> sources;
        for (const ObjectPrediction& obj : snap.predictions) {
            if (t_now < obj.t_now || t_now > obj.valid_until) {
                continue;
            }
            const Vec3 p_b = obj.origin + obj.velocity * (t_now - obj.t_now);
            const Vec3 offset = p_now - p_b;
            const double dist = offset.norm();
            if (dist > 1e-9 && dist <= params_.repulse_radius) {
                sources.push_back(RepulsionSource{obj.velocity, offset});
            }
        }
        return sources;
    }

    std::optional<Vec3> temporary_target(const PerceptionSnapshot& snap, const Vec3& p_now,
                                         double t_now) const {
        const std::vector<RepulsionSource> sources = repulsion_sources(snap, p_now, t_now);
        if (sources.empty()) {
            return std::nullopt;
        }
        try {
            return repulsion_target(p_now, sources, params_.repulse_h);
        } catch (const DegenerateRepulsionError&) {
            return p_now + params_.repulse_h * perpendicular_escape(sources);
        }
    }

    std::optional<double> trajectory_collision(const PerceptionSnapshot& snap,
                                               double t_now) const {
        if (!active_) {
            return std::nullopt;
        }
        return check_collision(active_->traj, active_->start_time, t_now, params_.t_check,
                               snap.field, snap.predictions, params_.robot_radius,
                               params_.clearance, params_.check_samples);
    }

    std::optional<double> point_collision(const PerceptionSnapshot& snap, const Vec3& p,
                                          double t_now, double horizon) const {
        auto position = [&](double) { return p; };
        return scan_collision(position, t_now, horizon, snap.field, snap.predictions,
                              params_.robot_radius, params_.clearance, params_.check_samples);
    }

    MissionCommand enter_emergency(double t_now, const Vec3& p_now) {
        emergency_ = true;
        active_.reset();
        hover_point_ = p_now;
        mode_ = MissionMode::Hovering;
        MissionCommand cmd;
        cmd.t = t_now;
        cmd.mode = MissionMode::Navigating;
        cmd.kind = CommandKind::EmergencyHold;
        cmd.target = p_now;
        cmd.feasible = false;
        return cmd;
    }

    MissionCommand navigate_tick(const PerceptionSnapshot& snap, double t_now) {
        MissionCommand cmd;
        cmd.t = t_now;
        cmd.mode = MissionMode::Navigating;
        const Vec3 p_now = position(t_now);

        const bool traj_done =
            active_ && t_now >= active_->start_time + active_->traj.total_duration() - 1e-9;
        if ((p_now - goal_).norm() <= params_.goal_tol && (!active_ || traj_done)) {
            goal_reached_ = true;
            mode_ = MissionMode::Hovering;
            hover_point_ = p_now;
            home_ = goal_;
            active_.reset();
            temp_target_.reset();
            cmd.kind = CommandKind::Hold;
            cmd.target = p_now;
            return cmd;
        }

        if (!active_) {
            cmd.kind = CommandKind::PlanGoal;
            cmd.target = goal_;
            cmd.feasible = try_plan(t_now, goal_);
            if (!cmd.feasible && strikes_ > params_.retry_budget) {
                return enter_emergency(t_now, p_now);
            }
            return cmd;
        }

        if (trajectory_collision(snap, t_now)) {
            if (try_plan(t_now, goal_)) {
                temp_target_.reset();
                cmd.kind = CommandKind::PlanGoal;
                cmd.target = goal_;
                return cmd;
            }
            std::optional<Vec3> temp;
            if (params_.replan) {
                temp = temporary_target(snap, p_now, t_now);
                if (temp && try_plan(t_now, *temp)) {
                    temp_target_ = *temp;
                    next_retry_ = t_now + params_.retry_interval;
                    cmd.kind = CommandKind::PlanTemporary;
                    cmd.target = *temp;
                    return cmd;
                }
            }
            if (strikes_ > params_.retry_budget) {
                return enter_emergency(t_now, p_now);
            }
            cmd.kind = temp ? CommandKind::PlanTemporary : CommandKind::PlanGoal;
            cmd.target = temp ? *temp : goal_;
            cmd.feasible = false;
            return cmd;
        }

        if ((temp_target_ && t_now >= next_retry_) || (traj_done && !goal_reached_)) {
            if (try_plan(t_now, goal_)) {
                temp_target_.reset();
                cmd.kind = CommandKind::PlanGoal;
                cmd.target = goal_;
                return cmd;
            }
            next_retry_ = t_now + params_.retry_interval;
            if (strikes_ > params_.retry_budget) {
                return enter_emergency(t_now, p_now);
            }
            cmd.kind = CommandKind::PlanGoal;
            cmd.target = goal_;
            cmd.feasible = false;
            return cmd;
        }

        cmd.kind = CommandKind::Continue;
        cmd.target = active_->goal;
        return cmd;
    }

    MissionCommand hover_tick(const PerceptionSnapshot& snap, double t_now) {
        MissionCommand cmd;
        cmd.t = t_now;
        cmd.mode = MissionMode::Hovering;
        const Vec3 p_now = position(t_now);

        const bool home_threat =
            point_collision(snap, home_, t_now, params_.clear_delay).has_value();
        if (home_threat) {
            last_threat_ = t_now;
        }

        if (active_) {
            if (t_now >= active_->start_time + active_->traj.total_duration() - 1e-9) {
                hover_point_ = active_->traj.eval(active_->traj.total_duration(), 0);
                active_.reset();
            } else if (params_.replan && trajectory_collision(snap, t_now)) {
                last_threat_ = t_now;
                const std::optional<Vec3> temp = temporary_target(snap, p_now, t_now);
                cmd.kind = CommandKind::PlanTemporary;
                cmd.target = temp.value_or(p_now);
                cmd.feasible = temp && try_plan(t_now, *temp);
                if (!cmd.feasible && strikes_ > params_.retry_budget) {
                    return enter_emergency(t_now, p_now);
                }
                return cmd;
            } else {
                cmd.kind = CommandKind::Continue;
                cmd.target = active_->goal;
                return cmd;
            }
        }

        const bool here_threat =
            point_collision(snap, hover_point_, t_now, params_.clear_delay).has_value();
        if (here_threat) {
            last_threat_ = t_now;
            if (params_.replan) {
                const std::optional<Vec3> temp = temporary_target(snap, p_now, t_now);
                cmd.kind = CommandKind::PlanTemporary;
                cmd.target = temp.value_or(p_now);
                cmd.feasible = temp && try_plan(t_now, *temp);
                if (!cmd.feasible && strikes_ > params_.retry_budget) {
                    return enter_emergency(t_now, p_now);
                }
                return cmd;
            }
        }

        if ((hover_point_ - home_).norm() > params_.goal_tol &&
            t_now - last_threat_ >= params_.clear_delay) {
            cmd.kind = CommandKind::PlanReturn;
            cmd.target = home_;
            cmd.feasible = try_plan(t_now, home_);
            if (!cmd.feasible && strikes_ > params_.retry_budget) {
                return enter_emergency(t_now, p_now);
            }
            return cmd;
        }

        cmd.kind = CommandKind::Hold;
        cmd.target = hover_point_;
        return cmd;
    }

    MissionParams params_;
    Vec3 home_;
    Vec3 goal_;
    MissionMode mode_;
    Vec3 hover_point_;
    PlanFn planner_;
    std::optional<ActiveTrajectory> active_;
    std::optional<Vec3> temp_target_;
    double next_retry_ = 0.0;
    double last_threat_ = -1e9;
    int strikes_ = 0;
    bool goal_reached_ = false;
    bool emergency_ = false;
    std::vector<MissionCommand> log_;
};

inline void write_command_csv_header(std::ostream& os) {
    os << "t,mode,kind,tx,ty,tz,feasible\n";
}

inline void append_command_csv(std::ostream& os, const MissionCommand& cmd) {
    os << cmd.t << ',' << to_string(cmd.mode) << ',' << to_string(cmd.kind) << ','
       << cmd.target.x() << ',' << cmd.target.y() << ',' << cmd.target.z() << ','
       << (cmd.feasible ? 1 : 0) << '\n';
}

}  // namespace dynaplan
