#include "mte/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mte/common.hpp"

namespace mte {

namespace {

constexpr double kWidth = 720.0, kHeight = 460.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string curve_to_svg(const MTECurve& curve, const std::string& title) {
    if (curve.f.empty()) throw ConfigError("svg: empty curve");
    double ymin = 0.0, ymax = 0.0;
    auto widen = [&](const std::vector<double>& v) {
        for (double y : v) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    };
    widen(curve.mte);
    widen(curve.lo95);
    widen(curve.hi95);
    if (ymax - ymin < 1e-9) { ymax += 1.0; ymin -= 1.0; }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double xmin = curve.f.front(), xmax = curve.f.back();

    auto px = [&](double f) { return kLeft + (f - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight); };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * (kHeight - kTop - kBottom); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

    if (!curve.lo95.empty() && curve.lo95.size() == curve.f.size()) {
        s << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < curve.f.size(); ++i)
            s << num(px(curve.f[i])) << ',' << num(py(curve.hi95[i])) << ' ';
        for (std::size_t i = curve.f.size(); i-- > 0;)
            s << num(px(curve.f[i])) << ',' << num(py(curve.lo95[i])) << ' ';
        s << "\"/>\n";
    }

    // zero line and axes
    if (ymin < 0.0 && ymax > 0.0) {
        s << "<line x1=\"" << num(px(xmin)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(xmax))
          << "\" y2=\"" << num(py(0)) << "\" stroke=\"#999\" stroke-dasharray=\"4,4\"/>\n";
    }
    s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\"" << num(kWidth - kRight)
      << "\" y2=\"" << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double f = xmin + (xmax - xmin) * k / 4.0;
        const double y = ymin + (ymax - ymin) * k / 4.0;
        s << "<text x=\"" << num(px(f)) << "\" y=\"" << num(kHeight - kBottom + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(f) << "</text>\n";
        s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(y) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(y) << "</text>\n";
    }
    s << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">participation probability F</text>\n";

    s << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.f.size(); ++i)
        s << num(px(curve.f[i])) << ',' << num(py(curve.mte[i])) << ' ';
    s << "\"/>\n</svg>\n";
    return s.str();
}

}  // namespace mte
