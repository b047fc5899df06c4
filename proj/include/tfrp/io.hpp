#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tfrp/errors.hpp"

namespace tfrp {

// CSV / SVG emission. Numbers print with %.17g so re-reading and re-running
// reproduce files byte for byte.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw NumericError("cannot open " + path.string() + " for writing");
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << "\n";
    }

    void row_raw(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

/// Minimal log2-scale polyline plot for the decay experiments.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_series(std::string label, std::vector<double> xs, std::vector<double> ys) {
        series_.push_back({std::move(label), std::move(xs), std::move(ys)});
    }

    void write(const std::filesystem::path& path) const {
        const double W = 640, H = 440, L = 70, R = 20, T = 40, B = 50;
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto& s : series_)
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                x0 = std::min(x0, s.xs[i]);
                x1 = std::max(x1, s.xs[i]);
                y0 = std::min(y0, s.ys[i]);
                y1 = std::max(y1, s.ys[i]);
            }
        if (!(x1 > x0)) x1 = x0 + 1;
        if (!(y1 > y0)) y1 = y0 + 1;
        auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
        auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
        std::ofstream out(path);
        if (!out) throw NumericError("cannot open " + path.string() + " for writing");
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
            << "' viewBox='0 0 " << W << " " << H << "'>\n";
        out << "<rect width='100%' height='100%' fill='white'/>\n";
        out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title_
            << "</text>\n";
        out << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
            << "' stroke='black'/>\n";
        out << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
            << "' stroke='black'/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double xv = x0 + (x1 - x0) * i / 4.0;
            const double yv = y0 + (y1 - y0) * i / 4.0;
            out << "<text x='" << px(xv) << "' y='" << H - B + 18
                << "' text-anchor='middle' font-size='11'>" << format_double(std::round(xv * 100) / 100)
                << "</text>\n";
            out << "<text x='" << L - 8 << "' y='" << py(yv) + 4
                << "' text-anchor='end' font-size='11'>" << format_double(std::round(yv * 100) / 100)
                << "</text>\n";
        }
        out << "<text x='" << W / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='12'>"
            << xlabel_ << "</text>\n";
        out << "<text x='16' y='" << H / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
            << H / 2 << ")'>" << ylabel_ << "</text>\n";
        static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
        for (std::size_t s = 0; s < series_.size(); ++s) {
            out << "<polyline fill='none' stroke='" << colors[s % 5] << "' stroke-width='1.6' points='";
            for (std::size_t i = 0; i < series_[s].xs.size(); ++i)
                out << px(series_[s].xs[i]) << "," << py(series_[s].ys[i]) << " ";
            out << "'/>\n";
            out << "<text x='" << W - R - 150 << "' y='" << T + 16 * double(s + 1)
                << "' font-size='12' fill='" << colors[s % 5] << "'>" << series_[s].label
                << "</text>\n";
        }
        out << "</svg>\n";
    }

  private:
    struct Series {
        std::string label;
        std::vector<double> xs, ys;
    };
    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
};

}  // namespace tfrp
