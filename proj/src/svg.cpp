#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "fnucb/config.hpp"

namespace fnucb {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string threshold_token(double d) {
    if (std::isinf(d)) return "inf";
    std::ostringstream ss;
    ss << d;
    return ss.str();
}

struct Series {
    std::string label;
    std::vector<long> t;
    std::vector<double> mean;
    std::vector<double> se;
};

}  // namespace

void emit_plot(const std::vector<SummaryRow>& rows, std::ostream& os) {
    if (rows.empty()) throw ConfigError("emit_plot: empty summary");

    // Group rows in first-appearance order.
    std::map<std::string, std::size_t> index;
    std::vector<Series> series;
    for (const SummaryRow& r : rows) {
        const std::string key = r.policy + " N=" + std::to_string(r.agents) +
                                " D=" + threshold_token(r.sync_threshold) + " (" + r.env + ")";
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, series.size()).first;
            series.push_back(Series{key, {}, {}, {}});
        }
        Series& s = series[it->second];
        s.t.push_back(r.t);
        s.mean.push_back(r.mean_cum_regret);
        s.se.push_back(r.stderr_cum_regret);
    }

    long tmax = 1;
    double ymax = 0.0;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            tmax = std::max(tmax, s.t[i]);
            ymax = std::max(ymax, s.mean[i] + s.se[i]);
        }
    }
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto px = [&](double t) { return kLeft + plot_w * (t / static_cast<double>(tmax)); };
    const auto py = [&](double y) { return kTop + plot_h * (1.0 - y / ymax); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes with five ticks per side.
    os << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
       << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
       << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
    os << "</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double tv = static_cast<double>(tmax) * k / 5.0;
        const double yv = ymax * k / 5.0;
        os << "<text x=\"" << num(px(tv)) << "\" y=\"" << num(kTop + plot_h + 18.0)
           << "\" text-anchor=\"middle\">" << static_cast<long>(tv) << "</text>\n";
        os << "<text x=\"" << num(kLeft - 8.0) << "\" y=\"" << num(py(yv) + 4.0)
           << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    }
    os << "<text x=\"" << num(kLeft + plot_w / 2.0) << "\" y=\"" << num(kHeight - 12.0)
       << "\" text-anchor=\"middle\">iteration</text>\n";
    os << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2.0) << "\" text-anchor=\"middle\" "
       << "transform=\"rotate(-90 16 " << num(kTop + plot_h / 2.0)
       << ")\">mean per-agent cumulative regret</text>\n";
    os << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];

        bool has_band = false;
        for (const double v : s.se) has_band |= v > 0.0;
        if (has_band) {
            os << "<path fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" d=\"";
            for (std::size_t i = 0; i < s.t.size(); ++i)
                os << (i == 0 ? "M" : "L") << num(px(static_cast<double>(s.t[i]))) << " "
                   << num(py(s.mean[i] + s.se[i]));
            for (std::size_t i = s.t.size(); i-- > 0;)
                os << "L" << num(px(static_cast<double>(s.t[i]))) << " "
                   << num(py(std::max(0.0, s.mean[i] - s.se[i])));
            os << "Z\"/>\n";
        }

        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (i) os << ' ';
            os << num(px(static_cast<double>(s.t[i]))) << ',' << num(py(s.mean[i]));
        }
        os << "\"/>\n";
    }

    // Legend.
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const double y = kTop + 14.0 + 16.0 * static_cast<double>(si);
        os << "<line x1=\"" << num(kLeft + 10.0) << "\" y1=\"" << num(y - 4.0) << "\" x2=\""
           << num(kLeft + 34.0) << "\" y2=\"" << num(y - 4.0) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(kLeft + 40.0) << "\" y=\"" << num(y) << "\" fill=\"#333\">"
           << series[si].label << "</text>\n";
    }
    os << "</g>\n";
    os << "</svg>\n";
}

}  // namespace fnucb
