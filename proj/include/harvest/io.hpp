#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "harvest/errors.hpp"

namespace harvest::io {

/// Shortest decimal that round-trips to the same double.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw ContractError("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t columns_;
    std::ostringstream out_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path);
}

// --------------------------------------------------------------------------
// SVG line plots

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    int width = 720;
    int height = 480;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

inline std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace detail

inline std::string line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    const double left = 70, right = 150, top = 40, bottom = 55;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y) || (spec.log_x && x <= 0)) continue;
            x0 = std::min(x0, tx(x));
            x1 = std::max(x1, tx(x));
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 < x1)) x0 -= 0.5, x1 += 0.5;
    if (!(y0 < y1)) y0 -= 0.5, y1 += 0.5;
    y0 = std::min(y0, 0.0);
    const double ypad = 0.05 * (y1 - y0);
    y1 += ypad;
    auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::escape_xml(spec.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = x0 + (x1 - x0) * k / 5.0, fy = y0 + (y1 - y0) * k / 5.0;
        const double sx = left + pw * k / 5.0, sy = top + ph * (1.0 - k / 5.0);
        const double xv = spec.log_x ? std::pow(10.0, fx) : fx;
        o << "<line x1=\"" << detail::fixed(sx) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::fixed(sx)
          << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>";
        o << "<text x=\"" << detail::fixed(sx) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << detail::tick_label(xv) << "</text>\n";
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::fixed(sy) << "\" x2=\"" << left << "\" y2=\""
          << detail::fixed(sy) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << left - 8 << "\" y=\"" << detail::fixed(sy + 4) << "\" text-anchor=\"end\">"
          << detail::tick_label(fy) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 12 << "\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.y_label) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* colour = palette[i % (sizeof palette / sizeof *palette)];
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (auto [x, y] : series[i].points) {
            if (!std::isfinite(x) || !std::isfinite(y) || (spec.log_x && x <= 0)) continue;
            if (!first) o << ' ';
            o << detail::fixed(px(x)) << ',' << detail::fixed(py(y));
            first = false;
        }
        o << "\"/>\n";
        if (!series[i].label.empty()) {
            const double ly = top + 16 + 18.0 * static_cast<double>(i);
            o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 36
              << "\" y2=\"" << ly - 4 << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>";
            o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly << "\">" << detail::escape_xml(series[i].label)
              << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace harvest::io
