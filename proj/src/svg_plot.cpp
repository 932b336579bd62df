#include "qbatt/svg_plot.hpp"

#include "qbatt/version.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace qbatt {

namespace {

std::string fmt(double v, int precision = 2) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

std::string fmt_tick(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
    return std::string(buf, res.ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr const char* kPalette[] = {"#1f6fb2", "#d1495b", "#2e933c", "#8338ec",
                                    "#f18f01", "#474954"};

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, const std::string& config_echo) {
    if (series.empty()) throw InsufficientDataError("svg: no series");
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw InvalidDimensionError("svg: series x/y size mismatch");
        if (s.x.size() < 2) throw InsufficientDataError("svg: series needs >= 2 samples");
    }

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double width = 720, height = 440;
    const double ml = 72, mr = 24, mt = 40, mb = 56;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, 0) +
           "\" height=\"" + fmt(height, 0) + "\" viewBox=\"0 0 " + fmt(width, 0) + " " +
           fmt(height, 0) + "\">\n";
    svg += "<desc>engine: " + std::string(kEngineVersion) + "; config: " +
           xml_escape(config_echo) + "</desc>\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + xml_escape(title) + "</text>\n";

    // frame
    svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) +
           "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";

    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double xv = xmin + (xmax - xmin) * i / nticks;
        const double yv = ymin + (ymax - ymin) * i / nticks;
        svg += "<line x1=\"" + fmt(px(xv)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
               fmt(px(xv)) + "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"#333\"/>\n";
        svg += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(mt + ph + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt_tick(xv) + "</text>\n";
        svg += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(py(yv)) + "\" x2=\"" + fmt(ml) +
               "\" y2=\"" + fmt(py(yv)) + "\" stroke=\"#333\"/>\n";
        svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(py(yv) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt_tick(yv) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           xml_escape(x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " + fmt(mt + ph / 2) + ")\">" + xml_escape(y_label) +
           "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        const double ly = mt + 16 + 16 * static_cast<double>(si);
        svg += "<line x1=\"" + fmt(ml + pw - 130) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
               fmt(ml + pw - 110) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(ml + pw - 104) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(s.label) +
               "</text>\n";
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open for writing: " + path);
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) throw FileError("write failed: " + path);
}

}  // namespace qbatt
