#pragma once

#include <string>
#include <vector>

namespace gemmix {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> spread;  // optional +/- band, same length as y
};

// Minimal standalone SVG line chart: axes with ticks, a legend, optional log
// axes. Non-positive values are dropped from log axes.
struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;

    std::string render() const;
};

void write_text_file(const std::string& path, const std::string& text);

}  // namespace gemmix
