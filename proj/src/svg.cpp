#include "edlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edlab/errors.hpp"

namespace edlab {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
    double lo = 0.0, hi = 1.0;
    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span() const { return hi - lo == 0.0 ? 1.0 : hi - lo; }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void open_svg(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("svg: cannot open for writing: " + path);

    Range xr, yr;
    bool any = false;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!any) {
                xr = {x, x};
                yr = {y, y};
                any = true;
            } else {
                xr.include(x);
                yr.include(y);
            }
        }
    }
    if (!any) {
        xr = {0, 1};
        yr = {0, 1};
    }
    const double px = (kWidth - kLeft - kRight) / xr.span();
    const double py = (kHeight - kTop - kBottom) / yr.span();
    auto sx = [&](double x) { return kLeft + (x - xr.lo) * px; };
    auto sy = [&](double y) { return kHeight - kBottom - (y - yr.lo) * py; };

    open_svg(out, title);
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kHeight - kBottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << kWidth - kRight << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fy = yr.lo + yr.span() * tick / 4.0;
        const double y = sy(fy);
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\""
            << y << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fy)
            << "</text>\n";
        const double fx = xr.lo + xr.span() * tick / 4.0;
        const double x = sx(fx);
        out << "<line x1=\"" << x << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << x
            << "\" y2=\"" << kHeight - kBottom + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << kHeight - kBottom + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fx)
            << "</text>\n";
    }
    out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
        << "</text>\n"
        << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 "
        << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (const auto& [x, y] : series[s].points) out << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
        out << "\"/>\n";
        for (const auto& [x, y] : series[s].points)
            out << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << kTop + 16 * (s + 1)
            << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
            << color << "\">" << series[s].name << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("svg: write failed: " + path);
}

void write_scatter(const std::string& path, const std::string& title,
                   const std::vector<double>& xy_flat, const std::vector<int>& labels) {
    if (xy_flat.size() != 2 * labels.size()) throw DimensionError("svg scatter: size mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("svg: cannot open for writing: " + path);

    Range xr, yr;
    bool any = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!any) {
            xr = {xy_flat[2 * i], xy_flat[2 * i]};
            yr = {xy_flat[2 * i + 1], xy_flat[2 * i + 1]};
            any = true;
        } else {
            xr.include(xy_flat[2 * i]);
            yr.include(xy_flat[2 * i + 1]);
        }
    }
    if (!any) {
        xr = {0, 1};
        yr = {0, 1};
    }
    const double px = (kWidth - kLeft - kRight) / xr.span();
    const double py = (kHeight - kTop - kBottom) / yr.span();

    open_svg(out, title);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double x = kLeft + (xy_flat[2 * i] - xr.lo) * px;
        const double y = kHeight - kBottom - (xy_flat[2 * i + 1] - yr.lo) * py;
        out << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3\" fill=\""
            << (labels[i] ? kColors[1] : kColors[0]) << "\" fill-opacity=\"0.7\"/>\n";
    }
    out << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << kTop + 16
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
        << kColors[0] << "\">original</text>\n"
        << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << kTop + 32
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
        << kColors[1] << "\">edited</text>\n</svg>\n";
    if (!out) throw IoError("svg: write failed: " + path);
}

}  // namespace edlab
