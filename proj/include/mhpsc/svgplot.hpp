#pragma once

#include <string>
#include <vector>

namespace mhpsc::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;  // same length as x
};

// Self-contained SVG line chart: axes with ticks, one polyline per series,
// legend with one entry per series. No external renderer or fonts required.
std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace mhpsc::svg
