/**
 * @file scan_log.hpp
 * @brief Text replay format for scan sequences.
 *
 * One record per frame:
 *
 *     FRAME <frame_id> <timestamp>
 *     POSE r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
 *     POINTS <count> [labeled]
 *     x y z [label]
 *     ...
 *
 * Poses map the recorded sensor-frame points into the world frame. Lines
 * starting with '#' are comments. Labels are the optional ground-truth
 * channel (-1 static, >=0 moving object index).
 */

#pragma once

#include "dynaplan/core.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dynaplan {

struct ScanRecord {
    PointCloud cloud;  // sensor frame
    Pose pose;
};

inline void write_scan_log(std::ostream& os, const std::vector<ScanRecord>& records) {
    os << std::setprecision(17);
    for (const ScanRecord& rec : records) {
        os << "FRAME " << rec.cloud.frame_id << ' ' << rec.cloud.timestamp << '\n';
        os << "POSE";
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                os << ' ' << rec.pose.rotation(r, c);
            }
        }
        for (int i = 0; i < 3; ++i) {
            os << ' ' << rec.pose.translation[i];
        }
        os << '\n';
        const bool labeled = rec.cloud.has_labels();
        os << "POINTS " << rec.cloud.points.size() << (labeled ? " labeled" : "") << '\n';
        for (std::size_t i = 0; i < rec.cloud.points.size(); ++i) {
            const Vec3& p = rec.cloud.points[i];
            os << p.x() << ' ' << p.y() << ' ' << p.z();
            if (labeled) {
                os << ' ' << rec.cloud.labels[i];
            }
            os << '\n';
        }
    }
}

inline void write_scan_log(const std::string& path, const std::vector<ScanRecord>& records) {
    std::ofstream file(path);
    if (!file) {
        throw Error("write_scan_log: cannot open " + path);
    }
    write_scan_log(file, records);
}

inline std::vector<ScanRecord> read_scan_log(std::istream& is) {
    std::vector<ScanRecord> records;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw Error("scan log parse error at line " + std::to_string(line_no) + ": " + what +
                    (records.empty() ? "" : " (frame index " + std::to_string(records.size()) + ")"));
    };
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty() && line[0] != '#') {
                return true;
            }
        }
        return false;
    };

    while (next_line()) {
        std::istringstream head(line);
        std::string tag;
        ScanRecord rec;
        head >> tag >> rec.cloud.frame_id >> rec.cloud.timestamp;
        if (tag != "FRAME" || head.fail()) {
            fail("expected FRAME header");
        }
        if (!next_line()) {
            fail("missing POSE");
        }
        std::istringstream pose_line(line);
        pose_line >> tag;
        if (tag != "POSE") {
            fail("expected POSE");
        }
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                pose_line >> rec.pose.rotation(r, c);
            }
        }
        for (int i = 0; i < 3; ++i) {
            pose_line >> rec.pose.translation[i];
        }
        if (pose_line.fail()) {
            fail("malformed POSE row");
        }
        if (!next_line()) {
            fail("missing POINTS");
        }
        std::istringstream pts_line(line);
        std::size_t count = 0;
        std::string labeled_tag;
        pts_line >> tag >> count;
        if (tag != "POINTS" || pts_line.fail()) {
            fail("expected POINTS");
        }
        pts_line >> labeled_tag;
        const bool labeled = labeled_tag == "labeled";
        rec.cloud.points.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (!next_line()) {
                fail("truncated point list");
            }
            std::istringstream pt(line);
            Vec3 p;
            pt >> p.x() >> p.y() >> p.z();
            if (pt.fail()) {
                fail("malformed point");
            }
            if (labeled) {
                int label = 0;
                pt >> label;
                if (pt.fail()) {
                    fail("missing label");
                }
                rec.cloud.labels.push_back(label);
            }
            rec.cloud.points.push_back(p);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<ScanRecord> read_scan_log(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw Error("read_scan_log: cannot open " + path);
    }
    return read_scan_log(file);
}

}  // namespace dynaplan
