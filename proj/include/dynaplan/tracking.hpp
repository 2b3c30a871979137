/**
 * @file tracking.hpp
 * @brief Constant-velocity Kalman tracking with innovation-driven process
 *        noise adaptation, Mahalanobis association, and track lifecycle.
 */

#pragma once

#include "dynaplan/core.hpp"
#include "dynaplan/hungarian.hpp"
#include "dynaplan/segment.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>
#include <vector>

namespace dynaplan {

enum class UncertaintyMode { verbatim, rss_std };

struct TrackerParams {
    int window = 10;           ///< innovation window W for adaptation
    int max_misses = 5;        ///< frames a track may coast before deletion
    double th_min = 0.25;      ///< association score floor
    double spawn_gate = 1.0;   ///< max distance for frame-differenced spawn velocity
    double radius_alpha = 0.3; ///< smoothing weight for new radius measurements
    bool adapt = true;         ///< innovation-based Q adaptation on/off
    double t_pred_max = 2.0;   ///< forward prediction horizon in seconds
    UncertaintyMode uncertainty = UncertaintyMode::verbatim;
    Vec6 p0_diag = (Vec6() << 0.1, 0.1, 0.1, 1.0, 1.0, 1.0).finished();
    Vec6 q0_diag = (Vec6() << 0.01, 0.01, 0.01, 0.01, 0.01, 0.01).finished();
    Vec6 r_diag = (Vec6() << 0.0025, 0.0025, 0.0025, 0.04, 0.04, 0.04).finished();
};

/// Block transition for the constant-velocity model: position += velocity * dt.
inline Mat6 cv_transition(double dt) {
    Mat6 a = Mat6::Identity();
    a.topRightCorner<3, 3>() = dt * Mat3::Identity();
    return a;
}

struct TrackState {
    Vec6 x = Vec6::Zero();    ///< [position; velocity]
    Mat6 P = Mat6::Identity();
    Mat6 Q = Mat6::Identity();
    Mat6 R = Mat6::Identity();
    std::deque<Vec6> innovations;
    int window = 10;

    // bookkeeping for adaptation: transition of the last predict and the
    // posterior covariance that preceded it
    Mat6 last_A = Mat6::Identity();
    Mat6 prev_posterior_P = Mat6::Zero();
    bool predicted = false;
};

inline void kf_predict(TrackState& state, double dt) {
    if (!(dt > 0.0)) {
        throw InvalidIntervalError("kf_predict requires dt > 0, got " + std::to_string(dt));
    }
    const Mat6 a = cv_transition(dt);
    state.prev_posterior_P = state.P;
    state.last_A = a;
    state.x = a * state.x;
    state.P = a * state.P * a.transpose() + state.Q;
    state.predicted = true;
}

/// Full-state measurement update. Returns the innovation. The innovation is
/// recorded for adaptation unless the caller marks it as an initialization
/// transient (e.g. the first update after a track spawns without velocity).
inline Vec6 kf_update(TrackState& state, const Vec6& z, bool record_innovation = true) {
    const Mat6 s = state.P + state.R;
    Eigen::LDLT<Mat6> ldlt(s);
    if (!s.allFinite() || ldlt.info() != Eigen::Success ||
        (ldlt.vectorD().array() <= 0.0).any()) {
        throw NumericalFailureError("singular innovation covariance in kf_update");
    }
    const Vec6 gamma = z - state.x;
    const Mat6 k = ldlt.solve(state.P.transpose()).transpose();
    state.x += k * gamma;
    const Mat6 ik = Mat6::Identity() - k;
    state.P = ik * state.P * ik.transpose() + k * state.R * k.transpose();
    state.P = 0.5 * (state.P + state.P.transpose()).eval();

    if (record_innovation) {
        state.innovations.push_back(gamma);
        while (static_cast<int>(state.innovations.size()) > state.window) {
            state.innovations.pop_front();
        }
    }
    return gamma;
}

/**
 * @brief Covariance-matching process noise update.
 *
 * Estimates the innovation covariance over the window and subtracts the
 * modeled contribution A P A' + R; what remains is attributed to process
 * noise. Diagonal entries are clamped at zero so Q stays positive
 * semidefinite. No-op until the window is full or before the first predict.
 */
inline void adapt_Q(TrackState& state) {
    if (static_cast<int>(state.innovations.size()) < state.window || !state.predicted) {
        return;
    }
    Mat6 c = Mat6::Zero();
    for (const Vec6& g : state.innovations) {
        c += g * g.transpose();
    }
    c /= static_cast<double>(state.innovations.size());
    const Mat6 q_hat =
        c - state.last_A * state.prev_posterior_P * state.last_A.transpose() - state.R;
    Mat6 q = Mat6::Zero();
    for (int j = 0; j < 6; ++j) {
        q(j, j) = std::max(0.0, q_hat(j, j));
    }
    state.Q = q;
}

struct Track {
    int id = -1;
    TrackState state;
    double radius = 0.0;
    int age = 0;
    int misses = 0;
    int updates = 0;  ///< measured updates received (excludes the spawn frame)
    Vec3 last_centroid = Vec3::Zero();
    bool confirmed = false;  ///< tentative until first association with a moving cluster

    Vec3 position() const { return state.x.head<3>(); }
    Vec3 velocity() const { return state.x.tail<3>(); }
};

/**
 * @brief Score matrix for detections vs predicted tracks.
 *
 * Mahalanobis distance of the centroid residual under the position block of
 * the innovation covariance, squashed to (0, 1] by 1 - (2/pi) atan.
 */
inline Eigen::MatrixXd association_scores(const std::vector<SegmentedCluster>& detections,
                                          const std::vector<Track>& tracks) {
    Eigen::MatrixXd scores(detections.size(), tracks.size());
    for (int i = 0; i < static_cast<int>(tracks.size()); ++i) {
        const TrackState& st = tracks[i].state;
        Mat3 sigma = (st.P + st.R).topLeftCorner<3, 3>();
        Eigen::LLT<Mat3> llt(sigma);
        if (llt.info() != Eigen::Success) {
            sigma += 1e-6 * Mat3::Identity();
            llt.compute(sigma);
        }
        const Vec3 predicted = st.x.head<3>();
        for (int d = 0; d < static_cast<int>(detections.size()); ++d) {
            const Vec3 r = detections[d].cluster.centroid - predicted;
            const double omega = std::sqrt(r.dot(llt.solve(r)));
            scores(d, i) = 1.0 - (2.0 / std::numbers::pi) * std::atan(omega);
        }
    }
    return scores;
}

struct Assignment {
    std::vector<std::pair<int, int>> matches;  ///< (detection, track)
    std::vector<int> unmatched_detections;
    std::vector<int> unmatched_tracks;
};

/// Optimal one-to-one assignment; matches scoring below th_min are dropped.
inline Assignment assign(const Eigen::MatrixXd& scores, double th_min) {
    Assignment out;
    const int d_count = static_cast<int>(scores.rows());
    const int t_count = static_cast<int>(scores.cols());
    const std::vector<int> row_to_col = solve_assignment_max(scores);
    std::vector<bool> track_used(t_count, false);
    for (int d = 0; d < d_count; ++d) {
        const int t = row_to_col[d];
        if (t >= 0 && scores(d, t) >= th_min) {
            out.matches.emplace_back(d, t);
            track_used[t] = true;
        } else {
            out.unmatched_detections.push_back(d);
        }
    }
    for (int t = 0; t < t_count; ++t) {
        if (!track_used[t]) {
            out.unmatched_tracks.push_back(t);
        }
    }
    return out;
}

struct ObjectPrediction {
    Vec3 origin = Vec3::Zero();    ///< estimated position at t_now
    Vec3 velocity = Vec3::Zero();
    Mat6 covariance = Mat6::Zero();
    double radius = 0.0;
    double t_now = 0.0;
    double valid_until = 0.0;
    UncertaintyMode mode = UncertaintyMode::verbatim;

    void check_horizon(double t_query) const {
        if (t_query < t_now - 1e-12 || t_query > valid_until + 1e-12) {
            throw PredictionExpiredError("prediction queried at t=" + std::to_string(t_query) +
                                         " outside [" + std::to_string(t_now) + ", " +
                                         std::to_string(valid_until) + "]");
        }
    }

    Vec3 position_at(double t_query) const {
        check_horizon(t_query);
        return origin + velocity * (t_query - t_now);
    }

    /// Diagonal of the position block of A(dt) cov A(dt)' per axis.
    Vec3 propagated_variances(double dt) const {
        Vec3 s;
        for (int j = 0; j < 3; ++j) {
            s[j] = covariance(j, j) + 2.0 * dt * covariance(j, j + 3) +
                   dt * dt * covariance(j + 3, j + 3);
        }
        return s;
    }

    double inflation_at(double t_query) const {
        check_horizon(t_query);
        const Vec3 s = propagated_variances(t_query - t_now);
        if (mode == UncertaintyMode::rss_std) {
            return std::sqrt(std::max(0.0, s.sum()));
        }
        return std::sqrt(s.squaredNorm());
    }

    /// Time derivative of the inflation, for penalty gradients.
    double inflation_rate_at(double t_query) const {
        check_horizon(t_query);
        const double dt = t_query - t_now;
        const Vec3 s = propagated_variances(dt);
        Vec3 sdot;
        for (int j = 0; j < 3; ++j) {
            sdot[j] = 2.0 * covariance(j, j + 3) + 2.0 * dt * covariance(j + 3, j + 3);
        }
        if (mode == UncertaintyMode::rss_std) {
            const double e = std::sqrt(std::max(0.0, s.sum()));
            return e > 1e-12 ? sdot.sum() / (2.0 * e) : 0.0;
        }
        const double e = std::sqrt(s.squaredNorm());
        return e > 1e-12 ? s.dot(sdot) / e : 0.0;
    }
};

inline ObjectPrediction make_prediction(const Track& track, double t_now,
                                        const TrackerParams& params) {
    ObjectPrediction p;
    p.origin = track.position();
    p.velocity = track.velocity();
    p.covariance = track.state.P;
    p.radius = track.radius;
    p.t_now = t_now;
    p.valid_until = t_now + params.t_pred_max;
    p.mode = params.uncertainty;
    return p;
}

inline ObjectPrediction predict_object(const Track& track, double t_query, double t_now,
                                       const TrackerParams& params = {}) {
    ObjectPrediction p = make_prediction(track, t_now, params);
    p.check_horizon(t_query);
    return p;
}

/**
 * @brief Frame-to-frame multi-object tracker.
 *
 * Moving clusters associate to existing tracks; unmatched moving clusters
 * spawn confirmed tracks and unknown clusters spawn tentative ones, promoted
 * on their first moving association. Tentative tracks are withheld from
 * reporting so one-frame artifacts never reach the planner.
 */
class MultiObjectTracker {
  public:
    explicit MultiObjectTracker(TrackerParams params = {}) : params_(std::move(params)) {}

    const TrackerParams& params() const { return params_; }
    const std::vector<Track>& tracks() const { return tracks_; }

    std::vector<Track> confirmed_tracks() const {
        std::vector<Track> out;
        for (const Track& t : tracks_) {
            if (t.confirmed) {
                out.push_back(t);
            }
        }
        return out;
    }

    void step(const SegmentedFrame& segmented, double dt) {
        if (!(dt > 0.0)) {
            throw InvalidIntervalError("tracker step requires dt > 0");
        }
        std::vector<bool> dead(tracks_.size(), false);
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            kf_predict(tracks_[i].state, dt);
        }

        const std::vector<SegmentedCluster>& detections = segmented.dynamic_clusters;
        const Eigen::MatrixXd scores = association_scores(detections, tracks_);
        const Assignment assignment = assign(scores, params_.th_min);

        for (const auto& [d, i] : assignment.matches) {
            Track& track = tracks_[i];
            const Vec3 centroid = detections[d].cluster.centroid;
            Vec6 z;
            z.head<3>() = centroid;
            z.tail<3>() = (centroid - track.last_centroid) / dt;
            try {
                kf_update(track.state, z, track.updates > 0);
            } catch (const NumericalFailureError&) {
                dead[i] = true;
                continue;
            }
            track.updates += 1;
            track.last_centroid = centroid;
            track.misses = 0;
            track.age += 1;
            track.radius += params_.radius_alpha * (detections[d].cluster.bounding_radius -
                                                    track.radius);
            track.confirmed = true;
            if (params_.adapt) {
                adapt_Q(track.state);
            }
        }

        for (int i : assignment.unmatched_tracks) {
            tracks_[i].misses += 1;
            tracks_[i].age += 1;
        }

        std::vector<Track> next;
        next.reserve(tracks_.size() + detections.size() + segmented.unknown_clusters.size());
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (!dead[i] && tracks_[i].misses <= params_.max_misses) {
                next.push_back(std::move(tracks_[i]));
            }
        }
        for (int d : assignment.unmatched_detections) {
            next.push_back(spawn(detections[d], dt, true));
        }
        for (const SegmentedCluster& sc : segmented.unknown_clusters) {
            next.push_back(spawn(sc, dt, false));
        }
        tracks_ = std::move(next);

        prev_centroids_.clear();
        for (const auto* group : {&segmented.static_clusters, &segmented.dynamic_clusters,
                                  &segmented.unknown_clusters}) {
            for (const SegmentedCluster& sc : *group) {
                prev_centroids_.push_back(sc.cluster.centroid);
            }
        }
    }

  private:
    Track spawn(const SegmentedCluster& sc, double dt, bool confirmed) {
        Track t;
        t.id = next_id_++;
        t.state.x.head<3>() = sc.cluster.centroid;
        t.state.x.tail<3>() = spawn_velocity(sc.cluster.centroid, dt);
        t.state.P = params_.p0_diag.asDiagonal();
        t.state.Q = params_.q0_diag.asDiagonal();
        t.state.R = params_.r_diag.asDiagonal();
        t.state.window = params_.window;
        t.radius = sc.cluster.bounding_radius;
        t.age = 1;
        t.last_centroid = sc.cluster.centroid;
        t.confirmed = confirmed;
        return t;
    }

    /// Frame-differenced velocity against the closest centroid of the previous frame.
    Vec3 spawn_velocity(const Vec3& centroid, double dt) const {
        double best_sq = params_.spawn_gate * params_.spawn_gate;
        Vec3 best = centroid;
        bool found = false;
        for (const Vec3& prev : prev_centroids_) {
            const double d2 = (centroid - prev).squaredNorm();
            if (d2 <= best_sq) {
                best_sq = d2;
                best = prev;
                found = true;
            }
        }
        return found ? Vec3((centroid - best) / dt) : Vec3::Zero();
    }

    TrackerParams params_;
    std::vector<Track> tracks_;
    std::vector<Vec3> prev_centroids_;
    int next_id_ = 0;
};

inline void write_track_csv_header(std::ostream& os) {
    os << "frame,id,px,py,pz,vx,vy,vz,trace_P,q00,q11,q22,q33,q44,q55\n";
}

inline void append_track_csv(std::ostream& os, int frame, const std::vector<Track>& tracks) {
    for (const Track& t : tracks) {
        os << frame << ',' << t.id;
        for (int j = 0; j < 6; ++j) {
            os << ',' << t.state.x[j];
        }
        os << ',' << t.state.P.trace();
        for (int j = 0; j < 6; ++j) {
            os << ',' << t.state.Q(j, j);
        }
        os << '\n';
    }
}

}  // namespace dynaplan
