/**
 * @file cluster.hpp
 * @brief Density-based clustering of one frame into candidate objects.
 */

#pragma once

#include "dynaplan/core.hpp"
#include "dynaplan/kdtree.hpp"

#include <algorithm>
#include <deque>
#include <vector>

namespace dynaplan {

struct Cluster {
    std::vector<int> point_indices;  ///< sorted indices into the frame
    Vec3 centroid = Vec3::Zero();
    double bounding_radius = 0.0;
};

struct DbscanParams {
    double eps = 0.5;
    int min_pts = 5;
};

struct DbscanResult {
    std::vector<Cluster> clusters;
    std::vector<int> noise;  ///< sorted indices assigned to no cluster
};

/**
 * @brief Classic DBSCAN with density-reachability semantics.
 *
 * A point is core when its eps-ball (itself included) holds at least
 * min_pts points. Expansion proceeds in ascending index order, so border
 * points always join the first core point that reaches them and the
 * partition is independent of input permutation after canonicalization.
 */
inline DbscanResult dbscan(const std::vector<Vec3>& points, const DbscanParams& params) {
    DbscanResult result;
    const int n = static_cast<int>(points.size());
    if (n == 0) {
        return result;
    }

    KdTree3 tree(points);
    std::vector<std::vector<int>> neighbors(n);
    std::vector<bool> core(n, false);
    for (int i = 0; i < n; ++i) {
        neighbors[i] = tree.radius_search(points[i], params.eps);
        core[i] = static_cast<int>(neighbors[i].size()) >= params.min_pts;
    }

    constexpr int kUnvisited = -2;
    constexpr int kNoise = -1;
    std::vector<int> label(n, kUnvisited);
    int next_cluster = 0;

    for (int i = 0; i < n; ++i) {
        if (label[i] != kUnvisited || !core[i]) {
            continue;
        }
        const int cid = next_cluster++;
        label[i] = cid;
        std::deque<int> frontier(neighbors[i].begin(), neighbors[i].end());
        while (!frontier.empty()) {
            const int j = frontier.front();
            frontier.pop_front();
            if (label[j] == kNoise) {
                label[j] = cid;  // border point reclaimed from noise
            }
            if (label[j] != kUnvisited) {
                continue;
            }
            label[j] = cid;
            if (core[j]) {
                frontier.insert(frontier.end(), neighbors[j].begin(), neighbors[j].end());
            }
        }
    }

    std::vector<std::vector<int>> members(next_cluster);
    for (int i = 0; i < n; ++i) {
        if (label[i] == kUnvisited || label[i] == kNoise) {
            result.noise.push_back(i);
        } else {
            members[label[i]].push_back(i);
        }
    }

    for (auto& m : members) {
        Cluster c;
        c.point_indices = std::move(m);  // already ascending
        Vec3 sum = Vec3::Zero();
        for (int idx : c.point_indices) {
            sum += points[idx];
        }
        c.centroid = sum / static_cast<double>(c.point_indices.size());
        for (int idx : c.point_indices) {
            c.bounding_radius = std::max(c.bounding_radius, (points[idx] - c.centroid).norm());
        }
        result.clusters.push_back(std::move(c));
    }
    // canonical order: by smallest member index
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  return a.point_indices.front() < b.point_indices.front();
              });
    return result;
}

}  // namespace dynaplan
