#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehub/format.hpp"

namespace ehub::cli {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 570, kTop = 30, kBottom = 340;

std::string num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

}  // namespace

std::string sweep_svg(const std::vector<SweepPoint>& points) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"black\" points=\"" << num(kLeft) << ',' << num(kTop) << ' ' << num(kLeft)
      << ',' << num(kBottom) << ' ' << num(kRight) << ',' << num(kBottom) << ' ' << num(kRight) << ',' << num(kTop)
      << "\"/>\n";
  if (points.empty()) {
    svg << "</svg>\n";
    return svg.str();
  }

  double s_min = points.front().segments, s_max = s_min, t_max = 0, e_min = HUGE_VAL, e_max = 0;
  for (const auto& p : points) {
    s_min = std::min<double>(s_min, p.segments);
    s_max = std::max<double>(s_max, p.segments);
    t_max = std::max(t_max, p.wall_time);
    if (p.relative_error > 0) {
      e_min = std::min(e_min, p.relative_error);
      e_max = std::max(e_max, p.relative_error);
    }
  }
  if (s_max == s_min) s_max = s_min + 1;
  if (t_max <= 0) t_max = 1;
  if (e_max <= 0) e_min = e_max = 1;
  const int decade_lo = static_cast<int>(std::floor(std::log10(e_min)));
  const int decade_hi = std::max(decade_lo + 1, static_cast<int>(std::ceil(std::log10(e_max))));

  auto x_of = [&](double s) { return kLeft + (s - s_min) / (s_max - s_min) * (kRight - kLeft); };
  auto y_err = [&](double e) {
    const double clamped = std::max(e, std::pow(10.0, decade_lo));
    return kBottom - (std::log10(clamped) - decade_lo) / (decade_hi - decade_lo) * (kBottom - kTop);
  };
  auto y_time = [&](double t) { return kBottom - t / t_max * (kBottom - kTop); };

  for (int d = decade_lo; d <= decade_hi; ++d) {
    const double y = y_err(std::pow(10.0, d));
    svg << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(y)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << d
        << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double t = t_max * k / 4.0, y = y_time(t);
    svg << "<text x=\"" << num(kRight + 6) << "\" y=\"" << num(y + 4) << "\">" << num(t) << "</text>\n";
  }
  for (const auto& p : points)
    svg << "<text x=\"" << num(x_of(p.segments)) << "\" y=\"" << num(kBottom + 16) << "\" text-anchor=\"middle\">"
        << p.segments << "</text>\n";

  svg << "<polyline id=\"relative-error\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i)
    svg << (i ? " " : "") << num(x_of(points[i].segments)) << ',' << num(y_err(points[i].relative_error));
  svg << "\"/>\n";
  svg << "<polyline id=\"wall-time\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"5,3\" "
         "points=\"";
  for (std::size_t i = 0; i < points.size(); ++i)
    svg << (i ? " " : "") << num(x_of(points[i].segments)) << ',' << num(y_time(points[i].wall_time));
  svg << "\"/>\n";

  svg << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"" << num(kHeight - 20)
      << "\" text-anchor=\"middle\">segments s</text>\n";
  svg << "<text x=\"16\" y=\"" << num((kTop + kBottom) / 2) << "\" transform=\"rotate(-90 16 "
      << num((kTop + kBottom) / 2) << ")\" text-anchor=\"middle\" fill=\"#1f77b4\">relative error (%)</text>\n";
  svg << "<text x=\"" << num(kWidth - 12) << "\" y=\"" << num((kTop + kBottom) / 2) << "\" transform=\"rotate(90 "
      << num(kWidth - 12) << ' ' << num((kTop + kBottom) / 2)
      << ")\" text-anchor=\"middle\" fill=\"#d62728\">solve time (s)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ehub::cli
