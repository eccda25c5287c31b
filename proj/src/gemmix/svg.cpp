#include "gemmix/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gemmix {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
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

std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(4) << v;
    return o.str();
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double map(double v) const {
        const double t = log ? std::log10(v) : v;
        return (t - lo) / (hi - lo);
    }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && v <= 0.0)) continue;
        const double t = log ? std::log10(v) : v;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    a.lo = lo - pad;
    a.hi = hi + pad;
    return a;
}

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

}  // namespace

std::string LineChart::render() const {
    std::vector<double> xs, ys;
    for (const auto& s : series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            ys.push_back(s.y[i]);
            if (!s.spread.empty()) {
                ys.push_back(s.y[i] + s.spread[i]);
                if (!log_y) ys.push_back(s.y[i] - s.spread[i]);
            }
        }
    }
    const Axis ax = make_axis(xs, log_x);
    const Axis ay = make_axis(ys, log_y);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

    std::ostringstream o;
    o << std::fixed << std::setprecision(2);
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double f = k / 4.0;
        const double tx = ax.lo + f * (ax.hi - ax.lo);
        const double ty = ay.lo + f * (ay.hi - ay.lo);
        const double xpos = kLeft + f * pw;
        const double ypos = kTop + (1.0 - f) * ph;
        o << "<line x1=\"" << xpos << "\" y1=\"" << kTop + ph << "\" x2=\"" << xpos << "\" y2=\"" << kTop + ph + 5
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << xpos << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\" "
          << "font-family=\"sans-serif\" font-size=\"11\">" << fmt(log_x ? std::pow(10.0, tx) : tx) << "</text>\n";
        o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << ypos << "\" x2=\"" << kLeft << "\" y2=\"" << ypos
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << kLeft - 8 << "\" y=\"" << ypos + 4 << "\" text-anchor=\"end\" "
          << "font-family=\"sans-serif\" font-size=\"11\">" << fmt(log_y ? std::pow(10.0, ty) : ty) << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << (log_x ? " (log)" : "") << "</text>\n";
    o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 16 " << kTop + ph / 2 << ")\">" << escape(y_label)
      << (log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (!ser.spread.empty()) {
            std::ostringstream upper, lower;
            upper << std::fixed << std::setprecision(2);
            lower << std::fixed << std::setprecision(2);
            std::vector<std::pair<double, double>> top, bottom;
            for (std::size_t i = 0; i < ser.y.size(); ++i) {
                const double hi = ser.y[i] + ser.spread[i];
                const double lo = ser.y[i] - ser.spread[i];
                if (!usable(ser.x[i], log_x) || !usable(hi, log_y) || !usable(lo, log_y)) continue;
                top.emplace_back(px(ser.x[i]), py(hi));
                bottom.emplace_back(px(ser.x[i]), py(lo));
            }
            if (!top.empty()) {
                o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
                for (const auto& [x, y] : top) o << x << ',' << y << ' ';
                for (auto it = bottom.rbegin(); it != bottom.rend(); ++it) o << it->first << ',' << it->second << ' ';
                o << "\"/>\n";
            }
        }
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (!usable(ser.x[i], log_x) || !usable(ser.y[i], log_y)) continue;
            o << px(ser.x[i]) << ',' << py(ser.y[i]) << ' ';
        }
        o << "\"/>\n";
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (!usable(ser.x[i], log_x) || !usable(ser.y[i], log_y)) continue;
            o << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i]) << "\" r=\"2\" fill=\"" << color
              << "\"/>\n";
        }
        const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
        const double lx = kWidth - kRight + 12.0;
        o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly << "\" stroke=\""
          << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << lx + 26 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
          << escape(ser.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace gemmix
