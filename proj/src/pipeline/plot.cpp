#include "voltcast/pipeline/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "voltcast/errors.hpp"

namespace voltcast::pipeline {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                     const char* color) {
    std::ostringstream p;
    p << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i) p << num(xs[i]) << ',' << num(ys[i]) << ' ';
    p << "\"/>\n";
    return p.str();
}

}  // namespace

std::string forecast_chart_svg(const std::string& model,
                               const std::vector<eval::ForecastRecord>& records) {
    if (records.empty()) throw DataError("forecast chart over an empty record set");
    constexpr double width = 960, height = 380;
    constexpr double ml = 70, mr = 20, mt = 40, mb = 40;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    double lo = records.front().actual, hi = lo;
    for (const auto& r : records) {
        lo = std::min({lo, r.actual, r.prediction});
        hi = std::max({hi, r.actual, r.prediction});
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto xpos = [&](size_t i) {
        return ml + plot_w * (records.size() > 1 ? double(i) / double(records.size() - 1) : 0.5);
    };
    auto ypos = [&](double v) { return mt + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::vector<double> xs, actual_y, pred_y;
    for (size_t i = 0; i < records.size(); ++i) {
        xs.push_back(xpos(i));
        actual_y.push_back(ypos(records[i].actual));
        pred_y.push_back(ypos(records[i].prediction));
    }

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << model << " - out-of-sample forecast vs actual</text>\n";

    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + (hi - lo) * tick / 4.0;
        const double y = ypos(v);
        svg << "<text x=\"6\" y=\"" << num(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
        svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << ml << "\" y2=\""
            << num(y) << "\" stroke=\"black\"/>\n";
    }
    svg << "<text x=\"" << ml << "\" y=\"" << height - 10
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_date(records.front().day)
        << "</text>\n";
    svg << "<text x=\"" << ml + plot_w - 70 << "\" y=\"" << height - 10
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_date(records.back().day)
        << "</text>\n";

    svg << polyline(xs, actual_y, "#e08214");   // actual
    svg << polyline(xs, pred_y, "#2166ac");     // prediction
    svg << "<text x=\"" << ml + plot_w - 180 << "\" y=\"" << mt + 14
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#e08214\">actual</text>\n";
    svg << "<text x=\"" << ml + plot_w - 110 << "\" y=\"" << mt + 14
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#2166ac\">prediction</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string heatmap_svg(const eval::RejectionHeatmap& hm) {
    const size_t k = hm.models.size();
    constexpr double cell = 110, label = 130, mt = 60;
    const double width = label + cell * k + 20, height = mt + cell * k + 20;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << label << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
        << "DM rejection counts (row more accurate than column), " << hm.segments
        << " segments of " << hm.segment_size << "</text>\n";

    for (size_t b = 0; b < k; ++b)
        svg << "<text x=\"" << label + cell * b + cell / 2 << "\" y=\"" << mt - 8
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << hm.models[b] << "</text>\n";

    for (size_t a = 0; a < k; ++a) {
        svg << "<text x=\"" << label - 8 << "\" y=\"" << mt + cell * a + cell / 2 + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << hm.models[a] << "</text>\n";
        for (size_t b = 0; b < k; ++b) {
            const int count = hm.counts[a][b];
            const double frac = hm.segments > 0 ? double(count) / hm.segments : 0.0;
            const int red = 255;
            const int other = int(255 - 160 * frac);
            svg << "<rect x=\"" << label + cell * b << "\" y=\"" << mt + cell * a
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << red
                << ',' << other << ',' << other << ")\" stroke=\"#555\"/>\n";
            svg << "<text x=\"" << label + cell * b + cell / 2 << "\" y=\""
                << mt + cell * a + cell / 2 + 5
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
                << count << '/' << hm.segments << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace voltcast::pipeline
