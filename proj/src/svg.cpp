#include "uncattr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uncattr/errors.hpp"

namespace uncattr {
namespace {

constexpr double kWidth = 640.0;
constexpr double kRowHeight = 40.0;
constexpr double kMarginLeft = 150.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 30.0;

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

void open_svg(std::ostringstream& out, double w, double h) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h)
        << "\">\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s,
          const std::string& anchor = "start", int size = 13) {
    out << "  <text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << esc(s)
        << "</text>\n";
}

}  // namespace

UncertaintyStyle uncertainty_style_from_string(const std::string& s) {
    if (s == "none") return UncertaintyStyle::none;
    if (s == "ci") return UncertaintyStyle::ci;
    if (s == "violin") return UncertaintyStyle::violin;
    throw ArgumentError("unknown uncertainty style '" + s + "' (use none, ci, violin)");
}

std::string tornado_svg(const TornadoInput& input, UncertaintyStyle style) {
    const Eigen::Index d = input.attributions.size();
    if (d == 0) throw ArgumentError("tornado chart needs at least one feature");
    if (static_cast<Eigen::Index>(input.feature_names.size()) != d)
        throw ArgumentError("feature name count does not match attribution count");
    const bool has_ci = input.ci_halfwidth.size() == d;
    const bool has_violin = static_cast<Eigen::Index>(input.density.size()) == d;

    double limit = input.axis_limit;
    if (limit <= 0.0) {
        limit = input.attributions.cwiseAbs().maxCoeff();
        if (has_ci) limit = std::max(limit, (input.attributions.cwiseAbs() +
                                             input.ci_halfwidth).maxCoeff());
        if (limit <= 0.0) limit = 1.0;
        limit *= 1.1;
    }

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double height = kMarginTop + d * kRowHeight + kMarginBottom;
    const double x0 = kMarginLeft + plot_w / 2.0;  // zero axis
    const double scale = plot_w / (2.0 * limit);

    std::ostringstream out;
    open_svg(out, kWidth, height);
    text(out, kWidth / 2.0, 22, input.title, "middle", 15);

    // zero axis
    out << "  <line class=\"axis\" x1=\"" << num(x0) << "\" y1=\"" << num(kMarginTop)
        << "\" x2=\"" << num(x0) << "\" y2=\"" << num(height - kMarginBottom)
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    for (Eigen::Index i = 0; i < d; ++i) {
        const double a = input.attributions(i);
        const double y = kMarginTop + i * kRowHeight;
        const double cy = y + kRowHeight / 2.0;
        const double bar_h = kRowHeight * 0.5;
        const double w = std::abs(a) * scale;
        const double bx = a >= 0 ? x0 : x0 - w;
        const std::string fill = a >= 0 ? "#4c72b0" : "#dd8452";

        text(out, kMarginLeft - 8, cy + 4, input.feature_names[static_cast<std::size_t>(i)],
             "end");
        out << "  <rect class=\"bar\" x=\"" << num(bx) << "\" y=\""
            << num(cy - bar_h / 2.0) << "\" width=\"" << num(w) << "\" height=\""
            << num(bar_h) << "\" fill=\"" << fill << "\"/>\n";

        if (style == UncertaintyStyle::ci && has_ci &&
            input.ci_halfwidth(i) > 0.0) {
            const double lo = x0 + (a - input.ci_halfwidth(i)) * scale;
            const double hi = x0 + (a + input.ci_halfwidth(i)) * scale;
            out << "  <line class=\"ci\" x1=\"" << num(lo) << "\" y1=\"" << num(cy)
                << "\" x2=\"" << num(hi) << "\" y2=\"" << num(cy)
                << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
            for (double xw : {lo, hi})
                out << "  <line class=\"ci-cap\" x1=\"" << num(xw) << "\" y1=\""
                    << num(cy - 5) << "\" x2=\"" << num(xw) << "\" y2=\"" << num(cy + 5)
                    << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
        }

        if (style == UncertaintyStyle::violin && has_violin) {
            const auto& den = input.density[static_cast<std::size_t>(i)];
            if (den.degenerate || den.grid.size() < 2) {
                // no spread: a point mark on the bar tip
                out << "  <circle class=\"violin-point\" cx=\"" << num(x0 + a * scale)
                    << "\" cy=\"" << num(cy) << "\" r=\"3\" fill=\"#222\"/>\n";
            } else {
                const double dmax = den.density.maxCoeff();
                const double half = kRowHeight * 0.42;
                std::ostringstream pts;
                for (Eigen::Index g = 0; g < den.grid.size(); ++g)
                    pts << num(x0 + den.grid(g) * scale) << ','
                        << num(cy - half * den.density(g) / dmax) << ' ';
                for (Eigen::Index g = den.grid.size() - 1; g >= 0; --g)
                    pts << num(x0 + den.grid(g) * scale) << ','
                        << num(cy + half * den.density(g) / dmax) << ' ';
                out << "  <polygon class=\"violin\" points=\"" << pts.str()
                    << "\" fill=\"rgba(60,60,60,0.25)\" stroke=\"#222\" "
                       "stroke-width=\"1\"/>\n";
            }
        }
    }

    // x-axis end labels
    text(out, kMarginLeft, height - 8, num(-limit), "middle", 11);
    text(out, x0, height - 8, "0", "middle", 11);
    text(out, kWidth - kMarginRight, height - 8, num(limit), "middle", 11);
    out << "</svg>\n";
    return out.str();
}

std::string curve_svg(const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<CurveSeries>& series) {
    if (series.empty()) throw ArgumentError("curve chart needs at least one series");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.size() < 1)
            throw ArgumentError("curve series needs matching nonempty x/y");
        xmin = std::min(xmin, s.x.minCoeff());
        xmax = std::max(xmax, s.x.maxCoeff());
        const bool band = s.se.size() == s.y.size();
        ymin = std::min(ymin, band ? (s.y - s.se).minCoeff() : s.y.minCoeff());
        ymax = std::max(ymax, band ? (s.y + s.se).maxCoeff() : s.y.maxCoeff());
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;

    const double w = 640.0, h = 420.0;
    const double ml = 70.0, mr = 25.0, mt = 45.0, mb = 55.0;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::ostringstream out;
    open_svg(out, w, h);
    text(out, w / 2.0, 24, title, "middle", 15);
    out << "  <rect class=\"frame\" x=\"" << num(ml) << "\" y=\"" << num(mt)
        << "\" width=\"" << num(w - ml - mr) << "\" height=\"" << num(h - mt - mb)
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    text(out, (ml + w - mr) / 2.0, h - 12, x_label, "middle");
    out << "  <text x=\"18\" y=\"" << num((mt + h - mb) / 2.0)
        << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 "
        << num((mt + h - mb) / 2.0) << ")\">" << esc(y_label) << "</text>\n";

    // corner tick labels
    text(out, ml, h - mb + 16, num(xmin), "middle", 11);
    text(out, w - mr, h - mb + 16, num(xmax), "middle", 11);
    text(out, ml - 6, h - mb + 4, num(ymin), "end", 11);
    text(out, ml - 6, mt + 4, num(ymax), "end", 11);

    int legend_row = 0;
    for (const auto& s : series) {
        if (s.se.size() == s.y.size() && s.x.size() >= 2) {
            std::ostringstream pts;
            for (Eigen::Index i = 0; i < s.x.size(); ++i)
                pts << num(px(s.x(i))) << ',' << num(py(s.y(i) + s.se(i))) << ' ';
            for (Eigen::Index i = s.x.size() - 1; i >= 0; --i)
                pts << num(px(s.x(i))) << ',' << num(py(s.y(i) - s.se(i))) << ' ';
            out << "  <polygon class=\"band\" points=\"" << pts.str() << "\" fill=\""
                << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        }
        std::ostringstream pts;
        for (Eigen::Index i = 0; i < s.x.size(); ++i)
            pts << num(px(s.x(i))) << ',' << num(py(s.y(i))) << ' ';
        out << "  <polyline class=\"series\" points=\"" << pts.str()
            << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        for (Eigen::Index i = 0; i < s.x.size(); ++i)
            out << "  <circle class=\"marker\" cx=\"" << num(px(s.x(i))) << "\" cy=\""
                << num(py(s.y(i))) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        if (!s.label.empty()) {
            const double ly = mt + 16 + 18.0 * legend_row++;
            out << "  <line x1=\"" << num(ml + 10) << "\" y1=\"" << num(ly - 4)
                << "\" x2=\"" << num(ml + 34) << "\" y2=\"" << num(ly - 4)
                << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            text(out, ml + 40, ly, s.label, "start", 12);
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace uncattr
