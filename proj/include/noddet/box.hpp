#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noddet {

// Axis-aligned rectangle in pixel coordinates, corner form.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }

    bool valid() const { return x1 < x2 && y1 < y2; }

    void require_valid(const char* who = "Box") const {
        if (!valid()) throw std::invalid_argument(std::string(who) + ": requires x1 < x2 and y1 < y2");
    }

    static Box from_center(double cx, double cy, double w, double h) {
        return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
    }
};

inline Box clip_box(const Box& b, double width, double height) {
    return Box{std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height),
               std::clamp(b.x2, 0.0, width), std::clamp(b.y2, 0.0, height)};
}

}  // namespace noddet
