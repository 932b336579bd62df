#pragma once

#include <string>
#include <vector>

#include "qbatt/errors.hpp"

namespace qbatt {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Standalone SVG line chart: axes with tick labels, one polyline per series,
// a legend, and the resolved config embedded in <desc>. No external assets.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, const std::string& config_echo);

}  // namespace qbatt
