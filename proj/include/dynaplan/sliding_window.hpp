/**
 * @file sliding_window.hpp
 * @brief Voxel-downsampled union of the last F world-frame scans.
 *
 * The window is the reference set for motion classification: each incoming
 * frame is scored against it before being inserted. Retention is one point
 * per voxel cell, first writer wins; a cell is released when its owning
 * frame falls out of the window.
 */

#pragma once

#include "dynaplan/core.hpp"
#include "dynaplan/kdtree.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

namespace dynaplan {

struct SlidingWindowParams {
    int window_frames = 5;    ///< F: frames retained
    double voxel_size = 0.1;  ///< meters per downsampling cell
};

class SlidingWindowPointSet {
public:
    explicit SlidingWindowPointSet(SlidingWindowParams params = {}) : params_(params) {}

    /**
     * @brief Insert a world-frame cloud and evict frames older than F.
     *
     * Points landing in an already-claimed voxel are dropped. An empty
     * cloud is a no-op (no eviction either).
     */
    void insert(const PointCloud& cloud) {
        if (cloud.points.empty()) {
            return;
        }
        evict_older_than(cloud.frame_id - params_.window_frames);

        Frame frame;
        frame.id = cloud.frame_id;
        std::vector<Vec3> retained;
        for (const Vec3& p : cloud.points) {
            const std::uint64_t key = voxel_key(p);
            auto [it, inserted] = cells_.emplace(key, cloud.frame_id);
            if (inserted) {
                retained.push_back(p);
                frame.cells.push_back(key);
            }
        }
        frame.tree.build(std::move(retained));
        frames_.push_back(std::move(frame));
    }

    /// Exact distance from p to the closest retained point.
    double nearest_distance(const Vec3& p) const {
        if (empty()) {
            throw EmptyMapError("nearest_distance: sliding window is empty");
        }
        double best = std::numeric_limits<double>::infinity();
        for (const Frame& f : frames_) {
            if (f.tree.empty()) {
                continue;
            }
            best = std::min(best, f.tree.nearest(p).sq_dist);
        }
        return std::sqrt(best);
    }

    bool empty() const { return size() == 0; }

    std::size_t size() const {
        std::size_t n = 0;
        for (const Frame& f : frames_) {
            n += f.tree.size();
        }
        return n;
    }

    int frames_retained() const { return static_cast<int>(frames_.size()); }

    std::vector<Vec3> all_points() const {
        std::vector<Vec3> out;
        out.reserve(size());
        for (const Frame& f : frames_) {
            out.insert(out.end(), f.tree.points().begin(), f.tree.points().end());
        }
        return out;
    }

    const SlidingWindowParams& params() const { return params_; }

private:
    struct Frame {
        std::int64_t id = 0;
        KdTree3 tree;
        std::vector<std::uint64_t> cells;
    };

    void evict_older_than(std::int64_t min_id_exclusive) {
        while (!frames_.empty() && frames_.front().id <= min_id_exclusive) {
            for (std::uint64_t key : frames_.front().cells) {
                cells_.erase(key);
            }
            frames_.pop_front();
        }
    }

    std::uint64_t voxel_key(const Vec3& p) const {
        const auto ix = static_cast<std::int64_t>(std::floor(p.x() / params_.voxel_size));
        const auto iy = static_cast<std::int64_t>(std::floor(p.y() / params_.voxel_size));
        const auto iz = static_cast<std::int64_t>(std::floor(p.z() / params_.voxel_size));
        // 21 bits per axis, offset to keep coordinates positive
        const std::uint64_t mask = (1ull << 21) - 1;
        return ((static_cast<std::uint64_t>(ix + (1ll << 20)) & mask) << 42) |
               ((static_cast<std::uint64_t>(iy + (1ll << 20)) & mask) << 21) |
               (static_cast<std::uint64_t>(iz + (1ll << 20)) & mask);
    }

    SlidingWindowParams params_;
    std::deque<Frame> frames_;
    std::unordered_map<std::uint64_t, std::int64_t> cells_;
};

}  // namespace dynaplan
