#pragma once
#include <cmath>
#include <vector>

namespace pointdc {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double point_dist(const Point& a, const Point& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Ground-truth nucleus centroid with a 1-based class id.
struct PointAnnotation {
    Point p;
    int cls = 1;
};

struct Detection {
    Point p;
    double score = 0.0;
};

// One classified detection; cls is 1-based.
struct Prediction {
    Point p;
    int cls = 1;
    double det_score = 0.0;
    double cls_prob = 0.0;
};

using PredictionSet = std::vector<Prediction>;

}  // namespace pointdc
