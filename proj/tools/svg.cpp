#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cids::app {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 260.0;
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 30.0, kBottom = 40.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v))
            return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-12) {
            const double pad = std::max(0.5, 0.1 * std::abs(lo));
            lo -= pad;
            hi += pad;
        }
    }
};

bool is_header(const std::vector<std::string>& h, const std::vector<std::string>& expected) { return h == expected; }

} // namespace

std::vector<Panel> panels_from_tables(const std::vector<std::pair<std::string, CsvTable>>& labelled) {
    std::vector<Panel> panels;
    for (const auto& [label, table] : labelled) {
        if (!is_header(table.header, kCurveColumns) && !is_header(table.header, kRegretColumns))
            throw CsvParseError(label + ": unrecognised CSV header");
        for (std::size_t col = 1; col < table.header.size(); ++col) {
            const std::string& metric = table.header[col];
            auto it = std::find_if(panels.begin(), panels.end(), [&](const Panel& p) { return p.title == metric; });
            if (it == panels.end()) {
                panels.push_back({metric, table.header[0], {}});
                it = panels.end() - 1;
            }
            Series s{label, {}, {}};
            for (const auto& row : table.rows) {
                s.x.push_back(row[0]);
                s.y.push_back(row[col]);
            }
            it->series.push_back(std::move(s));
        }
    }
    return panels;
}

std::string render_svg(const std::vector<Panel>& panels) {
    const double height = kPanelHeight * static_cast<double>(std::max<std::size_t>(1, panels.size()));
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kWidth) << "\" height=\"" << fixed(height)
       << "\" viewBox=\"0 0 " << fixed(kWidth) << ' ' << fixed(height) << "\" font-family=\"sans-serif\" "
       << "font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double top = kPanelHeight * static_cast<double>(p);
        const double x0 = kLeft, x1 = kWidth - kRight;
        const double y0 = top + kTop, y1 = top + kPanelHeight - kBottom;

        Range rx, ry;
        for (const auto& s : panel.series)
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i])) {
                    rx.add(s.x[i]);
                    ry.add(s.y[i]);
                }
        rx.finish();
        ry.finish();
        auto px = [&](double v) { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); };
        auto py = [&](double v) { return y1 - (v - ry.lo) / (ry.hi - ry.lo) * (y1 - y0); };

        os << "<g>\n";
        os << "<text x=\"" << fixed(x0) << "\" y=\"" << fixed(top + 18.0) << "\" font-size=\"13\">"
           << escape(panel.title) << "</text>\n";
        os << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y0) << "\" width=\"" << fixed(x1 - x0)
           << "\" height=\"" << fixed(y1 - y0) << "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double fx = rx.lo + (rx.hi - rx.lo) * t / 4.0;
            const double fy = ry.lo + (ry.hi - ry.lo) * t / 4.0;
            os << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(py(fy)) << "\" x2=\"" << fixed(x1) << "\" y2=\""
               << fixed(py(fy)) << "\" stroke=\"#ddd\"/>\n";
            os << "<text x=\"" << fixed(x0 - 6.0) << "\" y=\"" << fixed(py(fy) + 4.0)
               << "\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
            os << "<text x=\"" << fixed(px(fx)) << "\" y=\"" << fixed(y1 + 16.0) << "\" text-anchor=\"middle\">"
               << tick_label(fx) << "</text>\n";
        }
        os << "<text x=\"" << fixed((x0 + x1) / 2.0) << "\" y=\"" << fixed(y1 + 32.0)
           << "\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";

        for (std::size_t s = 0; s < panel.series.size(); ++s) {
            const Series& series = panel.series[s];
            const char* colour = kPalette[s % std::size(kPalette)];
            std::ostringstream pts;
            std::size_t n = 0;
            double last_x = 0.0, last_y = 0.0;
            for (std::size_t i = 0; i < series.x.size(); ++i) {
                if (!std::isfinite(series.x[i]) || !std::isfinite(series.y[i]))
                    continue;
                last_x = px(series.x[i]);
                last_y = py(series.y[i]);
                pts << (n++ ? " " : "") << fixed(last_x) << ',' << fixed(last_y);
            }
            if (n > 1)
                os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\""
                   << pts.str() << "\"/>\n";
            else if (n == 1)
                os << "<circle cx=\"" << fixed(last_x) << "\" cy=\"" << fixed(last_y) << "\" r=\"3\" fill=\""
                   << colour << "\"/>\n";
            const double ly = y0 + 12.0 + 16.0 * static_cast<double>(s);
            os << "<line x1=\"" << fixed(x1 + 10.0) << "\" y1=\"" << fixed(ly - 4.0) << "\" x2=\"" << fixed(x1 + 28.0)
               << "\" y2=\"" << fixed(ly - 4.0) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << fixed(x1 + 32.0) << "\" y=\"" << fixed(ly) << "\">" << escape(series.label)
               << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace cids::app
