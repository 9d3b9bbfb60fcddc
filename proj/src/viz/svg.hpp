#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

namespace aif::viz::svg {

/// Fixed three-decimal output; negative zero prints as 0.000.
inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline constexpr const char* kBlue = "#2166ac";
inline constexpr const char* kYellow = "#e6b800";

/// Three-stop ramp (dark violet, teal, yellow) over t in [0, 1].
inline std::string ramp(double t) {
  static constexpr double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0);
  const int seg = t < 0.5 ? 0 : 1;
  const double u = seg == 0 ? t * 2.0 : (t - 0.5) * 2.0;
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) {
    rgb[k] = static_cast<int>(std::lround(stops[seg][k] + u * (stops[seg + 1][k] - stops[seg][k])));
  }
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

/// Maps [lo, hi] onto [a, b]; a degenerate range maps to the midpoint.
struct Axis {
  double lo, hi, a, b;
  double operator()(double v) const {
    if (!(hi > lo)) return 0.5 * (a + b);
    return a + (v - lo) / (hi - lo) * (b - a);
  }
};

inline Axis padded_axis(double lo, double hi, double a, double b) {
  const double pad = hi > lo ? 0.05 * (hi - lo) : 0.0;
  return {lo - pad, hi + pad, a, b};
}

inline void open(std::ostringstream& out, int width, int height, std::string_view title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n"
      << "<text class=\"title\" x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << escape(title) << "</text>\n";
}

inline void close(std::ostringstream& out) { out << "</svg>\n"; }

/// Vertical colour bar from 0 (bottom) to 1 (top).
inline void colour_bar(std::ostringstream& out, double x, double y, double h, std::string_view label) {
  constexpr int kSteps = 10;
  const double step = h / kSteps;
  for (int i = 0; i < kSteps; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / kSteps;
    out << "<rect class=\"colourbar\" x=\"" << num(x) << "\" y=\"" << num(y + h - (i + 1) * step)
        << "\" width=\"12.000\" height=\"" << num(step) << "\" fill=\"" << ramp(t) << "\"/>\n";
  }
  out << "<text x=\"" << num(x + 16) << "\" y=\"" << num(y + 8) << "\" font-size=\"10\">high</text>\n"
      << "<text x=\"" << num(x + 16) << "\" y=\"" << num(y + h) << "\" font-size=\"10\">low</text>\n"
      << "<text x=\"" << num(x) << "\" y=\"" << num(y - 6) << "\" font-size=\"10\">"
      << escape(label) << "</text>\n";
}

}  // namespace aif::viz::svg
