#pragma once

#include "phonon_uq/geometry.hpp"
#include "phonon_uq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq::svg {

inline const std::vector<std::string>& palette()
{
    static const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    return colors;
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v)
    {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish(double pad = 0.05)
    {
        if (!std::isfinite(lo)) { lo = 0; hi = 1; }
        if (hi <= lo) { lo -= 0.5; hi += 0.5; }
        const double d = (hi - lo) * pad;
        lo -= d;
        hi += d;
    }
};

/// One plotting panel with axes; coordinates are mapped into its box.
class Panel {
public:
    Panel(double x, double y, double w, double h, Range xr, Range yr) : x_(x), y_(y), w_(w), h_(h), xr_(xr), yr_(yr) {}

    double px(double v) const { return x_ + (v - xr_.lo) / (xr_.hi - xr_.lo) * w_; }
    double py(double v) const { return y_ + h_ - (v - yr_.lo) / (yr_.hi - yr_.lo) * h_; }

    void axes(std::ostringstream& os, const std::string& xlabel, const std::string& ylabel, const std::string& title) const
    {
        os << "<rect x=\"" << num(x_) << "\" y=\"" << num(y_) << "\" width=\"" << num(w_) << "\" height=\"" << num(h_)
           << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double xv = xr_.lo + (xr_.hi - xr_.lo) * i / 4;
            const double yv = yr_.lo + (yr_.hi - yr_.lo) * i / 4;
            os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(y_ + h_ + 14) << "\" font-size=\"10\" text-anchor=\"middle\">"
               << label(xv) << "</text>\n";
            os << "<text x=\"" << num(x_ - 4) << "\" y=\"" << num(py(yv) + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
               << label(yv) << "</text>\n";
        }
        os << "<text x=\"" << num(x_ + w_ / 2) << "\" y=\"" << num(y_ + h_ + 30) << "\" font-size=\"12\" text-anchor=\"middle\">"
           << escape(xlabel) << "</text>\n";
        os << "<text x=\"" << num(x_ - 48) << "\" y=\"" << num(y_ + h_ / 2) << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
           << num(x_ - 48) << ' ' << num(y_ + h_ / 2) << ")\">" << escape(ylabel) << "</text>\n";
        os << "<text x=\"" << num(x_ + w_ / 2) << "\" y=\"" << num(y_ - 8) << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(title)
           << "</text>\n";
    }

    void polyline(std::ostringstream& os, const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                  double width = 1.5) const
    {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width) << "\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::isfinite(xs[i]) && std::isfinite(ys[i])) os << num(px(xs[i])) << ',' << num(py(ys[i])) << ' ';
        os << "\"/>\n";
    }

    void hband(std::ostringstream& os, double y0, double y1, const std::string& color, double opacity) const
    {
        os << "<rect x=\"" << num(x_) << "\" y=\"" << num(py(y1)) << "\" width=\"" << num(w_) << "\" height=\"" << num(py(y0) - py(y1))
           << "\" fill=\"" << color << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
    }

    void bar(std::ostringstream& os, double x0, double x1, double y, const std::string& color, double opacity) const
    {
        os << "<rect x=\"" << num(px(x0)) << "\" y=\"" << num(py(y)) << "\" width=\"" << num(px(x1) - px(x0)) << "\" height=\""
           << num(py(yr_.lo) - py(y)) << "\" fill=\"" << color << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
    }

    void legend(std::ostringstream& os, const std::vector<std::string>& names) const
    {
        for (std::size_t i = 0; i < names.size(); ++i) {
            const double ly = y_ + 14 + 14 * static_cast<double>(i);
            os << "<line x1=\"" << num(x_ + w_ - 150) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(x_ + w_ - 130) << "\" y2=\""
               << num(ly - 4) << "\" stroke=\"" << palette()[i % palette().size()] << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << num(x_ + w_ - 125) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(names[i]) << "</text>\n";
        }
    }

private:
    double x_, y_, w_, h_;
    Range xr_, yr_;
};

inline std::string header(double w, double h)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + ' ' +
           num(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string line_chart(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<std::pair<double, double>>& shaded = {})
{
    Range xr, yr;
    for (const auto& s : series) {
        for (double v : s.x) xr.include(v);
        for (double v : s.y) yr.include(v);
    }
    for (const auto& [lo, hi] : shaded) {
        yr.include(lo);
        yr.include(hi);
    }
    xr.finish(0.0);
    yr.finish();
    std::ostringstream os;
    os << header(720, 480);
    Panel p(80, 40, 600, 380, xr, yr);
    for (const auto& [lo, hi] : shaded) p.hband(os, lo, hi, "#ffd54f", 0.45);
    for (std::size_t i = 0; i < series.size(); ++i) p.polyline(os, series[i].x, series[i].y, palette()[i % palette().size()]);
    p.axes(os, xlabel, ylabel, title);
    std::vector<std::string> names;
    for (const auto& s : series)
        if (!s.name.empty()) names.push_back(s.name);
    if (names.size() == series.size() && series.size() <= 8) p.legend(os, names);
    os << "</svg>\n";
    return os.str();
}

/// Density-normalized histogram of `samples` with KDE curves overlaid.
inline std::string histogram_with_kdes(const std::vector<double>& samples, int bins, const std::vector<std::pair<std::string, KDEModel>>& kdes,
                                       const std::string& title, const std::string& xlabel)
{
    Range xr;
    for (double v : samples) xr.include(v);
    for (const auto& k : kdes) {
        std::vector<double> s = k.second.samples;
        std::sort(s.begin(), s.end());
        if (!s.empty()) {
            xr.include(sorted_quantile(s, 0.001));
            xr.include(sorted_quantile(s, 0.999));
        }
    }
    xr.finish();
    const Histogram h = histogram(samples, bins, xr.lo, xr.hi);
    const double width = (xr.hi - xr.lo) / bins;
    std::vector<double> dens;
    Range yr;
    yr.include(0);
    for (auto c : h.counts) {
        dens.push_back(static_cast<double>(c) / (static_cast<double>(std::max<std::size_t>(1, samples.size())) * width));
        yr.include(dens.back());
    }
    std::vector<std::vector<double>> curves;
    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(xr.lo + (xr.hi - xr.lo) * i / 200);
    for (const auto& k : kdes) {
        std::vector<double> ys;
        for (double x : xs) {
            ys.push_back(k.second.density(x));
            yr.include(ys.back());
        }
        curves.push_back(std::move(ys));
    }
    yr.finish(0.0);
    yr.lo = 0;
    std::ostringstream os;
    os << header(720, 480);
    Panel p(80, 40, 600, 380, xr, yr);
    for (int b = 0; b < bins; ++b) p.bar(os, h.edges[b], h.edges[b + 1], dens[b], "#9e9e9e", 0.6);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        p.polyline(os, xs, curves[i], palette()[i % palette().size()], 2.0);
        names.push_back(kdes[i].first);
    }
    p.axes(os, xlabel, "density", title);
    p.legend(os, names);
    os << "</svg>\n";
    return os.str();
}

struct HeatmapPanel {
    std::string title;
    Histogram2D hist;
};

/// Grid of 2D histograms sharing axes (e.g. ground truth next to surrogates).
inline std::string heatmap_grid(const std::vector<HeatmapPanel>& panels, int columns, const std::string& xlabel, const std::string& ylabel)
{
    const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
    const double pw = 300, ph = 260, gap = 90;
    std::ostringstream os;
    os << header(columns * (pw + gap) + 40, rows * (ph + gap) + 20);
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const auto& hp = panels[i];
        const int r = static_cast<int>(i) / columns, c = static_cast<int>(i) % columns;
        Range xr{hp.hist.x_edges.front(), hp.hist.x_edges.back()};
        Range yr{hp.hist.y_edges.front(), hp.hist.y_edges.back()};
        Panel p(gap + c * (pw + gap), 40 + r * (ph + gap), pw, ph, xr, yr);
        std::size_t peak = 1;
        for (auto n : hp.hist.counts) peak = std::max(peak, n);
        for (int xb = 0; xb < hp.hist.x_bins; ++xb)
            for (int yb = 0; yb < hp.hist.y_bins; ++yb) {
                const auto n = hp.hist.at(xb, yb);
                if (!n) continue;
                const double x0 = p.px(hp.hist.x_edges[xb]), x1 = p.px(hp.hist.x_edges[xb + 1]);
                const double y0 = p.py(hp.hist.y_edges[yb]), y1 = p.py(hp.hist.y_edges[yb + 1]);
                os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\"" << num(y0 - y1)
                   << "\" fill=\"#0d47a1\" fill-opacity=\"" << num(0.1 + 0.9 * static_cast<double>(n) / static_cast<double>(peak)) << "\"/>\n";
            }
        p.axes(os, xlabel, ylabel, hp.title);
    }
    os << "</svg>\n";
    return os.str();
}

/// Bitmaps side by side; hard pixels dark. Row 0 is drawn at the bottom.
inline std::string bitmap_strip(const std::vector<UnitCellBitmap>& bitmaps, const std::vector<std::string>& titles, double cell_px = 160)
{
    std::ostringstream os;
    os << header(bitmaps.size() * (cell_px + 20) + 20, cell_px + 50);
    for (std::size_t i = 0; i < bitmaps.size(); ++i) {
        const auto& b = bitmaps[i];
        const double x0 = 20 + static_cast<double>(i) * (cell_px + 20), y0 = 30;
        const double s = cell_px / b.resolution();
        os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(cell_px) << "\" height=\"" << num(cell_px)
           << "\" fill=\"#eeeeee\" stroke=\"#333\"/>\n";
        for (int r = 0; r < b.resolution(); ++r)
            for (int c = 0; c < b.resolution(); ++c)
                if (b.at(r, c))
                    os << "<rect x=\"" << num(x0 + c * s) << "\" y=\"" << num(y0 + (b.resolution() - 1 - r) * s) << "\" width=\"" << num(s)
                       << "\" height=\"" << num(s) << "\" fill=\"#37474f\"/>\n";
        if (i < titles.size())
            os << "<text x=\"" << num(x0 + cell_px / 2) << "\" y=\"20\" font-size=\"12\" text-anchor=\"middle\">" << escape(titles[i]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace phonon_uq::svg
