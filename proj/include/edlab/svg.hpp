#pragma once

#include <string>
#include <utility>
#include <vector>

namespace edlab {

struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series);

// two-class scatter of n x 2 points, label 0/1 per point
void write_scatter(const std::string& path, const std::string& title,
                   const std::vector<double>& xy_flat, const std::vector<int>& labels);

}  // namespace edlab
