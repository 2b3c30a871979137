/**
 * @file kdtree.hpp
 * @brief Balanced 3-d tree for exact nearest-neighbor and radius queries.
 */

#pragma once

#include "dynaplan/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace dynaplan {

/**
 * @brief Static kd-tree over a fixed point array.
 *
 * Built once per frame; queries are exact (branch-and-bound with squared
 * distances, no approximation). Median split on the widest axis keeps the
 * tree balanced regardless of input order.
 */
class KdTree3 {
public:
    KdTree3() = default;

    explicit KdTree3(std::vector<Vec3> points) { build(std::move(points)); }

    void build(std::vector<Vec3> points) {
        points_ = std::move(points);
        nodes_.clear();
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!points_.empty()) {
            nodes_.reserve(points_.size());
            root_ = build_range(0, static_cast<int>(points_.size()));
        } else {
            root_ = -1;
        }
    }

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// Index and squared distance of the closest stored point.
    struct NearestResult {
        int index = -1;
        double sq_dist = std::numeric_limits<double>::infinity();
    };

    NearestResult nearest(const Vec3& q) const {
        NearestResult best;
        if (root_ >= 0) {
            search_nearest(root_, q, best);
        }
        return best;
    }

    double nearest_distance(const Vec3& q) const {
        return std::sqrt(nearest(q).sq_dist);
    }

    /// Indices of all points within `radius` of q, ascending order.
    std::vector<int> radius_search(const Vec3& q, double radius) const {
        std::vector<int> hits;
        if (root_ >= 0) {
            search_radius(root_, q, radius * radius, hits);
        }
        std::sort(hits.begin(), hits.end());
        return hits;
    }

private:
    struct Node {
        int point = -1;
        int left = -1;
        int right = -1;
        int axis = 0;
    };

    int build_range(int lo, int hi) {
        if (lo >= hi) {
            return -1;
        }
        Vec3 mn = points_[order_[lo]];
        Vec3 mx = mn;
        for (int i = lo + 1; i < hi; ++i) {
            mn = mn.cwiseMin(points_[order_[i]]);
            mx = mx.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (mx - mn).maxCoeff(&axis);

        const int mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) {
                             if (points_[a][axis] != points_[b][axis]) {
                                 return points_[a][axis] < points_[b][axis];
                             }
                             return a < b;  // stable tie-break for determinism
                         });

        Node node;
        node.point = order_[mid];
        node.axis = axis;
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build_range(lo, mid);
        const int right = build_range(mid + 1, hi);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void search_nearest(int idx, const Vec3& q, NearestResult& best) const {
        const Node& node = nodes_[idx];
        const Vec3& p = points_[node.point];
        const double d2 = (p - q).squaredNorm();
        if (d2 < best.sq_dist) {
            best.sq_dist = d2;
            best.index = node.point;
        }
        const double delta = q[node.axis] - p[node.axis];
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        if (near >= 0) {
            search_nearest(near, q, best);
        }
        if (far >= 0 && delta * delta < best.sq_dist) {
            search_nearest(far, q, best);
        }
    }

    void search_radius(int idx, const Vec3& q, double r2, std::vector<int>& hits) const {
        const Node& node = nodes_[idx];
        const Vec3& p = points_[node.point];
        if ((p - q).squaredNorm() <= r2) {
            hits.push_back(node.point);
        }
        const double delta = q[node.axis] - p[node.axis];
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        if (near >= 0) {
            search_radius(near, q, r2, hits);
        }
        if (far >= 0 && delta * delta <= r2) {
            search_radius(far, q, r2, hits);
        }
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace dynaplan
