/**
 * @file perception.hpp
 * @brief Per-frame perception pipeline: sliding-window history, clustering,
 *        motion segmentation, tracking, and the static map rebuild.
 */

#pragma once

#include "dynaplan/cluster.hpp"
#include "dynaplan/core.hpp"
#include "dynaplan/grid_map.hpp"
#include "dynaplan/segment.hpp"
#include "dynaplan/sliding_window.hpp"
#include "dynaplan/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <vector>

namespace dynaplan {

struct PerceptionParams {
    SlidingWindowParams window;
    DbscanParams dbscan;
    SegmentationThresholds segment;
    TrackerParams tracker;
    double grid_resolution = 0.2;
    int occ_hits = 1;
    double grid_half_span = 15.0;    ///< horizontal half-extent of the local grid
    double grid_z_half_span = 15.0;  ///< vertical half-extent of the local grid
    int insert_lag = 0;   ///< frames to hold a scan back before it joins the history
    int static_history = 5;  ///< recent static-point frames fused into the grid
    bool build_field = true;
};

struct PerceptionOutput {
    SegmentedFrame segmented;
    std::vector<Track> tracks;  ///< confirmed tracks only
    std::vector<ObjectPrediction> predictions;
    std::shared_ptr<const DistanceField> field;
    double timestamp = 0.0;
    int frame_id = 0;
};

/**
 * @brief Sequential per-scan pipeline.
 *
 * Each world-frame scan is segmented against the point history, fed to the
 * tracker, and then enqueued for history insertion. With insert_lag L the
 * history always trails the current frame by L+1 scans, stretching the
 * displacement baseline so slow movers still clear the motion threshold at
 * high scan rates. The static map is rebuilt each frame from the last few
 * frames of static-classified points around the vehicle.
 */
class PerceptionPipeline {
  public:
    explicit PerceptionPipeline(PerceptionParams params)
        : params_(params), window_(params.window), tracker_(params.tracker) {}

    const PerceptionParams& params() const { return params_; }
    const MultiObjectTracker& tracker() const { return tracker_; }
    const SlidingWindowPointSet& window() const { return window_; }

    PerceptionOutput process(const PointCloud& world_cloud, const Vec3& vehicle_pos,
                             double dt) {
        PerceptionOutput out;
        out.timestamp = world_cloud.timestamp;
        out.frame_id = world_cloud.frame_id;

        out.segmented = segment_frame(world_cloud, window_, params_.dbscan, params_.segment);
        tracker_.step(out.segmented, dt);
        out.tracks = tracker_.confirmed_tracks();
        out.predictions.reserve(out.tracks.size());
        for (const Track& t : out.tracks) {
            out.predictions.push_back(
                make_prediction(t, world_cloud.timestamp, params_.tracker));
        }

        pending_.push_back(world_cloud);
        while (static_cast<int>(pending_.size()) > params_.insert_lag) {
            window_.insert(pending_.front());
            pending_.pop_front();
        }

        static_frames_.push_back(out.segmented.static_points);
        while (static_cast<int>(static_frames_.size()) > params_.static_history) {
            static_frames_.pop_front();
        }
        if (params_.build_field) {
            out.field = build_field(vehicle_pos);
        }
        return out;
    }

  private:
    std::shared_ptr<const DistanceField> build_field(const Vec3& vehicle_pos) const {
        const double res = params_.grid_resolution;
        const double half = params_.grid_half_span;
        const double half_z = params_.grid_z_half_span;
        // snap the origin to the grid lattice so results don't jitter with pose
        Vec3 origin(std::floor((vehicle_pos.x() - half) / res) * res,
                    std::floor((vehicle_pos.y() - half) / res) * res,
                    std::floor((vehicle_pos.z() - half_z) / res) * res);
        const int nx = static_cast<int>(std::ceil(2.0 * half / res)) + 1;
        const int nz = static_cast<int>(std::ceil(2.0 * half_z / res)) + 1;
        OccupancyGrid grid(origin, res, nx, nx, nz, params_.occ_hits);
        for (const PointCloud& frame : static_frames_) {
            grid.integrate(frame);
        }
        return std::make_shared<const DistanceField>(grid);
    }

    PerceptionParams params_;
    SlidingWindowPointSet window_;
    MultiObjectTracker tracker_;
    std::deque<PointCloud> pending_;
    std::deque<PointCloud> static_frames_;
};

/**
 * @brief Object-level detection/tracking accuracy accumulator.
 *
 * Per frame, ground-truth moving objects are matched to reported tracks by
 * nearest distance under a gate. Unmatched truths count as misses, unmatched
 * tracks as false positives, and a truth whose matched track id changed
 * since its previous match counts as a mismatch. Velocity error averages
 * over matched pairs when the truth carries a velocity.
 */
class MotaAccumulator {
  public:
    struct Truth {
        int object_id = 0;
        Vec3 position = Vec3::Zero();
        Vec3 velocity = Vec3::Zero();
        bool has_velocity = false;
    };

    explicit MotaAccumulator(double gate = 1.5) : gate_(gate) {}

    void add_frame(const std::vector<Truth>& truths, const std::vector<Track>& tracks) {
        total_truths_ += truths.size();
        std::vector<bool> track_used(tracks.size(), false);
        for (const Truth& truth : truths) {
            int best = -1;
            double best_d = gate_;
            for (std::size_t i = 0; i < tracks.size(); ++i) {
                if (track_used[i]) {
                    continue;
                }
                const double d = (tracks[i].position() - truth.position).norm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(i);
                }
            }
            if (best < 0) {
                misses_ += 1;
                continue;
            }
            track_used[best] = true;
            const int track_id = tracks[best].id;
            auto it = last_match_.find(truth.object_id);
            if (it != last_match_.end() && it->second != track_id) {
                mismatches_ += 1;
            }
            last_match_[truth.object_id] = track_id;
            if (truth.has_velocity) {
                vel_err_sum_ += (tracks[best].velocity() - truth.velocity).norm();
                vel_err_count_ += 1;
            }
        }
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            if (!track_used[i]) {
                false_positives_ += 1;
            }
        }
    }

    double f_n() const { return total_truths_ ? static_cast<double>(misses_) / total_truths_ : 0.0; }
    double f_p() const {
        return total_truths_ ? static_cast<double>(false_positives_) / total_truths_ : 0.0;
    }
    double f_m() const {
        return total_truths_ ? static_cast<double>(mismatches_) / total_truths_ : 0.0;
    }
    double e_vel() const { return vel_err_count_ ? vel_err_sum_ / vel_err_count_ : 0.0; }
    long total_truths() const { return total_truths_; }

  private:
    double gate_;
    long total_truths_ = 0;
    long misses_ = 0;
    long false_positives_ = 0;
    long mismatches_ = 0;
    double vel_err_sum_ = 0.0;
    long vel_err_count_ = 0;
    std::map<int, int> last_match_;
};

}  // namespace dynaplan
