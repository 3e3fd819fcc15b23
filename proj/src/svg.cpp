#include "aee/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "aee/errors.hpp"

namespace aee::svg {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 320.0;
constexpr double kMargin = 40.0;

// Fixed precision keeps the files byte-stable across runs.
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    return s == "-0.00" ? "0.00" : s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

std::string open(double w, double h, const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" +
           num(h) + "\" viewBox=\"0 0 " + num(w) + ' ' + num(h) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           "<text x=\"" + num(w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" + escape(title) + "</text>\n";
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range range_of(std::span<const double> a, std::span<const double> b = {}) {
    Range r{0.0, 0.0};
    bool any = false;
    for (auto span : {a, b}) {
        for (double v : span) {
            if (!std::isfinite(v)) throw NumericalError("cannot plot a non-finite value");
            if (!any) {
                r.lo = r.hi = v;
                any = true;
            }
            r.lo = std::min(r.lo, v);
            r.hi = std::max(r.hi, v);
        }
    }
    if (r.hi == r.lo) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    return r;
}

std::string polyline(std::span<const double> values, Range r, const char* color) {
    const double n = static_cast<double>(std::max<std::size_t>(values.size() - 1, 1));
    std::string pts;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / n;
        const double y = kHeight - kMargin - (kHeight - 2 * kMargin) * (values[i] - r.lo) / (r.hi - r.lo);
        if (i) pts += ' ';
        pts += num(x) + ',' + num(y);
    }
    return std::string("<polyline fill=\"none\" stroke=\"") + color +
           "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

}  // namespace

std::string heatmap(std::span<const double> series, std::span<const double> importance,
                    const std::string& title) {
    if (series.size() != importance.size() || series.empty()) {
        throw DimensionError("heatmap needs one importance value per time step");
    }
    std::string out = open(kWidth, kHeight, title);
    const Range imp = range_of(importance);
    const double step = (kWidth - 2 * kMargin) / static_cast<double>(series.size());
    for (std::size_t i = 0; i < importance.size(); ++i) {
        const double a = (importance[i] - imp.lo) / (imp.hi - imp.lo);
        if (a <= 0.0) continue;
        out += "<rect x=\"" + num(kMargin + step * static_cast<double>(i)) + "\" y=\"" + num(kMargin) +
               "\" width=\"" + num(step + 0.01) + "\" height=\"" + num(kHeight - 2 * kMargin) +
               "\" fill=\"red\" fill-opacity=\"" + num(a) + "\"/>\n";
    }
    out += polyline(series, range_of(series), "black");
    out += "</svg>\n";
    return out;
}

std::string boxplot(const std::vector<QMSummary>& summaries, const std::string& title) {
    if (summaries.empty()) throw ParameterError("nothing to plot");
    const double group = (kWidth - 2 * kMargin) / static_cast<double>(summaries.size());
    const double box_w = group / 6.0;
    auto y_of = [](double v) {
        v = std::clamp(v, 0.0, 1.0);
        return kHeight - kMargin - (kHeight - 2 * kMargin) * v;
    };
    std::string out = open(kWidth, kHeight, title);
    out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(y_of(0)) + "\" x2=\"" + num(kWidth - kMargin) +
           "\" y2=\"" + num(y_of(0)) + "\" stroke=\"gray\"/>\n";
    for (std::size_t g = 0; g < summaries.size(); ++g) {
        const double gx = kMargin + group * static_cast<double>(g);
        out += "<text x=\"" + num(gx + group / 2) + "\" y=\"" + num(kHeight - 12) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               to_string(summaries[g].method) + "</text>\n";
        std::size_t slot = 0;
        for (Label label : {Label::ok, Label::nok}) {
            for (Condition cond : {Condition::noise, Condition::xai}) {
                const auto& st = summaries[g].at(label, cond);
                const double x = gx + box_w * (0.5 + static_cast<double>(slot) * 1.25);
                ++slot;
                if (st.empty) continue;
                const char* color = cond == Condition::noise ? "green" : "red";
                const double cx = x + box_w / 2;
                const auto& s = st.stats;
                out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(y_of(s.lower_fence)) + "\" x2=\"" +
                       num(cx) + "\" y2=\"" + num(y_of(s.upper_fence)) + "\" stroke=\"" + color + "\"/>\n";
                out += "<rect x=\"" + num(x) + "\" y=\"" + num(y_of(s.q3)) + "\" width=\"" + num(box_w) +
                       "\" height=\"" + num(y_of(s.q1) - y_of(s.q3)) + "\" fill=\"" + color +
                       "\" fill-opacity=\"0.35\" stroke=\"" + color + "\"/>\n";
                out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y_of(s.median)) + "\" x2=\"" +
                       num(x + box_w) + "\" y2=\"" + num(y_of(s.median)) + "\" stroke=\"black\"/>\n";
                out += "<text x=\"" + num(cx) + "\" y=\"" + num(kHeight - kMargin + 14) +
                       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" +
                       (label == Label::ok ? "OK" : "NOK") + "</text>\n";
            }
        }
    }
    out += "</svg>\n";
    return out;
}

std::string scatter(const std::vector<ScatterPoint>& points, const std::vector<bool>& nok,
                    const std::string& title) {
    if (!nok.empty() && nok.size() != points.size()) {
        throw DimensionError("one label per scatter point is required");
    }
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    const Range rx = range_of(xs);
    const Range ry = range_of(ys);
    const double side = kHeight * 2;
    std::string out = open(side, side, title);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double x = kMargin + (side - 2 * kMargin) * (points[i].x - rx.lo) / (rx.hi - rx.lo);
        const double y = side - kMargin - (side - 2 * kMargin) * (points[i].y - ry.lo) / (ry.hi - ry.lo);
        const char* color = "steelblue";
        if (points[i].tag == ScatterTag::outlier) color = "red";
        if (points[i].tag == ScatterTag::ok_deviating) color = "orange";
        const bool is_nok = !nok.empty() && nok[i];
        out += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + (is_nok ? "4" : "2") +
               "\" fill=\"" + color + "\"" + (is_nok ? " stroke=\"black\"" : "") + "/>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string reconstruction(std::span<const double> original, std::span<const double> reconstructed,
                           const std::string& title) {
    if (original.size() != reconstructed.size() || original.empty()) {
        throw DimensionError("reconstruction and original differ in length");
    }
    const Range r = range_of(original, reconstructed);
    std::string out = open(kWidth, kHeight, title);
    out += polyline(original, r, "black");
    out += polyline(reconstructed, r, "red");
    out += "</svg>\n";
    return out;
}

}  // namespace aee::svg
