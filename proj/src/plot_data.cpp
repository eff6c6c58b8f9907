#include "ptlsi/plot_data.hpp"

#include "ptlsi/csv_io.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace ptlsi {

namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

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

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

} // namespace

std::vector<std::string> series_names(const Figure& fig) {
    std::vector<std::string> names;
    for (const auto& p : fig.points) {
        if (std::find(names.begin(), names.end(), p.series) == names.end()) names.push_back(p.series);
    }
    return names;
}

void write_plot_csv(std::ostream& out, const Figure& fig) {
    CsvTable t;
    t.header = {"x", "series", "value", "ci_lo", "ci_hi"};
    for (const auto& p : fig.points) {
        t.rows.push_back({format_number(p.x), p.series, format_number(p.value), format_number(p.ci_lo),
                          format_number(p.ci_hi)});
    }
    write_csv(out, t);
}

void write_plot_svg(std::ostream& out, const Figure& fig) {
    const double width = 640, height = 420;
    const double left = 70, right = 150, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_lo = 0.0, x_hi = 1.0, y_hi = 1.0;
    if (!fig.points.empty()) {
        x_lo = x_hi = fig.points.front().x;
        for (const auto& p : fig.points) {
            x_lo = std::min(x_lo, p.x);
            x_hi = std::max(x_hi, p.x);
            y_hi = std::max({y_hi, p.value, p.ci_hi});
        }
    }
    if (x_hi == x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return top + ph - y / y_hi * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(fig.title) << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double y = y_hi * i / 5.0;
        out << "<line x1=\"" << left - 4 << "\" y1=\"" << fixed(sy(y)) << "\" x2=\"" << left << "\" y2=\""
            << fixed(sy(y)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << fixed(sy(y) + 4) << "\" text-anchor=\"end\">" << fixed(y)
            << "</text>\n";
    }
    std::vector<double> xs;
    for (const auto& p : fig.points) xs.push_back(p.x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) {
        out << "<line x1=\"" << fixed(sx(x)) << "\" y1=\"" << top + ph << "\" x2=\"" << fixed(sx(x)) << "\" y2=\""
            << top + ph + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fixed(sx(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << escape(format_number(x)) << "</text>\n";
    }
    out << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
        << escape(fig.x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << fixed(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << fixed(top + ph / 2) << ")\">" << escape(fig.y_label) << "</text>\n";

    const auto names = series_names(fig);
    for (std::size_t s = 0; s < names.size(); ++s) {
        const char* colour = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        std::vector<PlotPoint> pts;
        for (const auto& p : fig.points) {
            if (p.series == names[s]) pts.push_back(p);
        }
        std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out << (i ? " " : "") << fixed(sx(pts[i].x)) << ',' << fixed(sy(pts[i].value));
        }
        out << "\"/>\n";
        for (const auto& p : pts) {
            out << "<line x1=\"" << fixed(sx(p.x)) << "\" y1=\"" << fixed(sy(p.ci_lo)) << "\" x2=\"" << fixed(sx(p.x))
                << "\" y2=\"" << fixed(sy(p.ci_hi)) << "\" stroke=\"" << colour << "\"/>\n";
            out << "<circle cx=\"" << fixed(sx(p.x)) << "\" cy=\"" << fixed(sy(p.value)) << "\" r=\"3\" fill=\""
                << colour << "\"/>\n";
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << left + pw + 35
            << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 40 << "\" y=\"" << fixed(ly + 4) << "\">" << escape(names[s])
            << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace ptlsi
