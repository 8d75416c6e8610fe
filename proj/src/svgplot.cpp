#include "mhpsc/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mhpsc/detail/wire.hpp"

namespace mhpsc::svg {
namespace {

constexpr int kWidth = 720, kHeight = 460;
constexpr int kLeft = 70, kRight = 200, kTop = 50, kBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// Round the raw range out to nice tick positions.
std::vector<double> ticks(double lo, double hi) {
    double span = hi - lo;
    if (span <= 0.0) span = std::fabs(lo) > 0 ? std::fabs(lo) : 1.0;
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    std::vector<double> out;
    double t = std::ceil(lo / step) * step;
    for (; t <= hi + 1e-9 * span; t += step) out.push_back(t);
    return out;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
    if (series.empty()) throw std::invalid_argument("line_chart: no series");
    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("line_chart: x/y length mismatch");
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xlo = xhi = s.x[i];
                ylo = yhi = s.y[i];
                first = false;
            }
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    }
    if (first) throw std::invalid_argument("line_chart: all series empty");
    if (xhi - xlo < 1e-12) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (yhi - ylo < 1e-12) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    double ypad = 0.06 * (yhi - ylo);
    ylo -= ypad;
    yhi += ypad;

    double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double v) { return kTop + ph - (v - ylo) / (yhi - ylo) * ph; };

    std::string s;
    char buf[512];
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\">\n",
                  kWidth, kHeight, kWidth, kHeight);
    s += buf;
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">%s</text>\n",
                  kLeft + static_cast<int>(pw) / 2, escape(title).c_str());
    s += buf;

    // axes + grid + tick labels
    for (double t : ticks(xlo, xhi)) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                      px(t), py(ylo), px(t), py(yhi));
        s += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%s</text>\n",
                      px(t), kTop + ph + 18.0, fmt(t).c_str());
        s += buf;
    }
    for (double t : ticks(ylo, yhi)) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                      px(xlo), py(t), px(xhi), py(t));
        s += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%s</text>\n",
                      kLeft - 8.0, py(t) + 4.0, fmt(t).c_str());
        s += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                  "stroke=\"black\"/>\n",
                  kLeft, kTop, pw, ph);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                  kLeft + static_cast<int>(pw) / 2, kHeight - 12, escape(x_label).c_str());
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"18\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 18 %d)\">%s</text>\n",
                  kTop + static_cast<int>(ph) / 2, kTop + static_cast<int>(ph) / 2,
                  escape(y_label).c_str());
    s += buf;

    // one polyline + legend row per series
    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string pts;
        for (size_t i = 0; i < series[si].x.size(); ++i) {
            char p[64];
            std::snprintf(p, sizeof(p), "%.2f,%.2f ", px(series[si].x[i]), py(series[si].y[i]));
            pts += p;
        }
        std::snprintf(buf, sizeof(buf),
                      "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"2\" points=\"%s\"/>\n",
                      color, pts.c_str());
        s += buf;
        for (size_t i = 0; i < series[si].x.size(); ++i) {
            char p[128];
            std::snprintf(p, sizeof(p), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                          px(series[si].x[i]), py(series[si].y[i]), color);
            s += p;
        }
        double ly = kTop + 10.0 + 20.0 * static_cast<double>(si);
        std::snprintf(buf, sizeof(buf),
                      "<line class=\"legend\" x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"%s\" stroke-width=\"2\"/>\n",
                      kLeft + pw + 14.0, ly, kLeft + pw + 38.0, ly, color);
        s += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text class=\"legend\" x=\"%.1f\" y=\"%.1f\" font-size=\"12\">%s</text>\n",
                      kLeft + pw + 44.0, ly + 4.0, escape(series[si].label).c_str());
        s += buf;
    }
    s += "</svg>\n";
    return s;
}

void write_svg(const std::string& path, const std::string& svg) {
    wire::write_file(path, std::vector<uint8_t>(svg.begin(), svg.end()));
}

}  // namespace mhpsc::svg
