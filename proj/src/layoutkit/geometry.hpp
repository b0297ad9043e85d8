#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace layoutkit {

// Number of quantization bins per axis. Coordinates are kept both as [0,1]
// fractions and as integer bins in [0, kCoordBins].
inline constexpr int kCoordBins = 1000;

// Axis-aligned box in normalized page coordinates, corners (x1,y1)-(x2,y2).
struct BBox {
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

    bool operator==(const BBox&) const = default;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }

    bool valid_unit() const {
        return x1 <= x2 && y1 <= y2 && x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0;
    }

    static BBox join(const BBox& a, const BBox& b) {
        return {std::min(a.x1, b.x1), std::min(a.y1, b.y1),
                std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
    }
};

// Same box expressed as integer bins in [0, kCoordBins].
struct QuantBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool operator==(const QuantBox&) const = default;
};

inline int quantize_coord(double v) {
    int q = static_cast<int>(std::llround(v * kCoordBins));
    return std::clamp(q, 0, kCoordBins);
}

inline QuantBox quantize(const BBox& b) {
    return {quantize_coord(b.x1), quantize_coord(b.y1),
            quantize_coord(b.x2), quantize_coord(b.y2)};
}

inline BBox dequantize(const QuantBox& q) {
    const double s = 1.0 / kCoordBins;
    return {q.x1 * s, q.y1 * s, q.x2 * s, q.y2 * s};
}

// Overlap length of [a1,a2] and [b1,b2]; 0 when disjoint.
inline double interval_overlap(double a1, double a2, double b1, double b2) {
    return std::max(0.0, std::min(a2, b2) - std::max(a1, b1));
}

// Two boxes sit on the same text line when their vertical intervals overlap
// by more than half of the smaller interval.
inline bool same_line(const BBox& a, const BBox& b) {
    const double ov = interval_overlap(a.y1, a.y2, b.y1, b.y2);
    const double smaller = std::min(a.height(), b.height());
    return ov > 0.5 * smaller;
}

}  // namespace layoutkit
