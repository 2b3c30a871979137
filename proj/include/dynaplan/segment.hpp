/**
 * @file segment.hpp
 * @brief Two-statistic motion classification of clusters against the sliding
 *        window history, and frame splitting into dynamic and static parts.
 */

#pragma once

#include "dynaplan/cluster.hpp"
#include "dynaplan/core.hpp"
#include "dynaplan/sliding_window.hpp"

#include <algorithm>
#include <ostream>
#include <vector>

namespace dynaplan {

enum class MotionClass { Static, Moving, Unknown };

inline const char* to_string(MotionClass motion) {
    switch (motion) {
        case MotionClass::Static: return "static";
        case MotionClass::Moving: return "moving";
        case MotionClass::Unknown: return "unknown";
    }
    return "unknown";
}

struct ClusterScore {
    double t1 = 0.0;  ///< mean nearest-neighbor distance to the history, meters
    double t2 = 0.0;  ///< variance of those distances normalized by t1^2
};

struct SegmentationThresholds {
    double h1 = 0.3;  ///< meters; displacement floor for motion evidence
    double h2 = 1.0;  ///< dimensionless; coherence ceiling on the spread
};

/**
 * @brief Displacement statistics of one cluster against the history.
 *
 * t1 averages each member point's nearest-neighbor distance d_n to the
 * history; t2 is the mean of (d_n - t1)^2 / t1^2. A rigidly translated
 * cluster has large t1 and small t2; partial overlap or newly revealed
 * structure spreads d_n and raises t2. When t1 is exactly zero all d_n are
 * zero too and t2 is defined as zero.
 */
inline ClusterScore score_cluster(const std::vector<Vec3>& points, const Cluster& cluster,
                                  const SlidingWindowPointSet& history) {
    ClusterScore score;
    if (cluster.point_indices.empty() || history.empty()) {
        return score;
    }
    std::vector<double> dist;
    dist.reserve(cluster.point_indices.size());
    double sum = 0.0;
    for (int idx : cluster.point_indices) {
        dist.push_back(history.nearest_distance(points[idx]));
        sum += dist.back();
    }
    const double n = static_cast<double>(dist.size());
    score.t1 = sum / n;
    if (score.t1 > 0.0) {
        double var = 0.0;
        for (double d : dist) {
            var += (d - score.t1) * (d - score.t1);
        }
        score.t2 = var / n / (score.t1 * score.t1);
    }
    return score;
}

/**
 * @brief Case rules on (t1, t2). Boundary values resolve conservatively
 *        toward non-moving: t1 == h1 is static, t2 == h2 is unknown.
 */
inline MotionClass classify(const ClusterScore& score, const SegmentationThresholds& th) {
    if (score.t1 <= th.h1) {
        return MotionClass::Static;
    }
    return score.t2 < th.h2 ? MotionClass::Moving : MotionClass::Unknown;
}

struct SegmentedCluster {
    Cluster cluster;
    ClusterScore score;
    MotionClass motion = MotionClass::Unknown;
};

struct SegmentedFrame {
    std::vector<SegmentedCluster> dynamic_clusters;
    std::vector<SegmentedCluster> unknown_clusters;
    std::vector<SegmentedCluster> static_clusters;
    PointCloud static_points;  ///< frame minus dynamic-cluster points; keeps unknowns and noise
};

/**
 * @brief Partition a frame given per-cluster labels.
 *
 * Only points of Moving clusters leave the static cloud; Unknown clusters
 * are reported separately but their points stay, as does clustering noise.
 */
inline SegmentedFrame split_frame(const PointCloud& frame,
                                  const std::vector<SegmentedCluster>& labeled) {
    SegmentedFrame out;
    std::vector<bool> dynamic_point(frame.points.size(), false);
    for (const SegmentedCluster& sc : labeled) {
        switch (sc.motion) {
            case MotionClass::Moving:
                for (int idx : sc.cluster.point_indices) {
                    dynamic_point[idx] = true;
                }
                out.dynamic_clusters.push_back(sc);
                break;
            case MotionClass::Unknown:
                out.unknown_clusters.push_back(sc);
                break;
            case MotionClass::Static:
                out.static_clusters.push_back(sc);
                break;
        }
    }
    out.static_points.timestamp = frame.timestamp;
    out.static_points.frame_id = frame.frame_id;
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
        if (!dynamic_point[i]) {
            out.static_points.points.push_back(frame.points[i]);
            if (frame.has_labels()) {
                out.static_points.labels.push_back(frame.labels[i]);
            }
        }
    }
    return out;
}

/**
 * @brief Cluster, score, classify, and split one frame. With an empty
 *        history (first frame) every cluster is unknown by definition.
 */
inline SegmentedFrame segment_frame(const PointCloud& frame,
                                    const SlidingWindowPointSet& history,
                                    const DbscanParams& dbscan_params,
                                    const SegmentationThresholds& thresholds) {
    const DbscanResult clustered = dbscan(frame.points, dbscan_params);
    std::vector<SegmentedCluster> labeled;
    labeled.reserve(clustered.clusters.size());
    for (const Cluster& c : clustered.clusters) {
        SegmentedCluster sc;
        sc.cluster = c;
        if (history.empty()) {
            sc.motion = MotionClass::Unknown;
        } else {
            sc.score = score_cluster(frame.points, c, history);
            sc.motion = classify(sc.score, thresholds);
        }
        labeled.push_back(std::move(sc));
    }
    return split_frame(frame, labeled);
}

inline void write_segmentation_csv_header(std::ostream& os) {
    os << "frame,cluster,t1,t2,label,points\n";
}

inline void append_segmentation_csv(std::ostream& os, int frame, const SegmentedFrame& seg) {
    int id = 0;
    for (const auto* group : {&seg.static_clusters, &seg.dynamic_clusters,
                              &seg.unknown_clusters}) {
        for (const SegmentedCluster& sc : *group) {
            os << frame << ',' << id++ << ',' << sc.score.t1 << ',' << sc.score.t2 << ','
               << to_string(sc.motion) << ',' << sc.cluster.point_indices.size() << '\n';
        }
    }
}

}  // namespace dynaplan
