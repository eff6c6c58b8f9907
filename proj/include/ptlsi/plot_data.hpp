#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptlsi {

struct PlotPoint {
    double x = 0.0;
    std::string series;
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct Figure {
    std::string name; // file stem
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotPoint> points;
};

/// Long format: x,series,value,ci_lo,ci_hi (header only when empty).
void write_plot_csv(std::ostream& out, const Figure& fig);

/// Static line chart, one polyline per series in first-appearance order,
/// with CI whiskers. The y axis spans [0, 1] unless values exceed it.
void write_plot_svg(std::ostream& out, const Figure& fig);

/// Series names in first-appearance order.
std::vector<std::string> series_names(const Figure& fig);

} // namespace ptlsi
