#include "aacc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace aacc {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 616.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 372.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("SvgPlot: series size mismatch");
  }
  series_.push_back(Series{name, x, y});
}

void SvgPlot::add_marks(const std::vector<double>& x,
                        const std::vector<double>& y) {
  marks_.push_back(Series{"", x, y});
}

void SvgPlot::add_bar_groups(const std::vector<std::string>& group_labels,
                             const std::vector<std::string>& series_names,
                             const std::vector<std::vector<double>>& values) {
  bar_groups_ = group_labels;
  bar_series_ = series_names;
  bar_values_ = values;
}

std::string SvgPlot::render() const {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -y_min;
  for (const auto& s : series_) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  for (const auto& s : marks_) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!bar_values_.empty()) {
    y_min = 0.0;
    for (const auto& col : bar_values_) {
      for (double v : col) {
        y_max = std::max(y_max, v);
      }
    }
    x_min = 0.0;
    x_max = 1.0;
  }
  if (!(x_min < x_max)) {
    x_max = x_min + 1.0;
  }
  if (!(y_min < y_max)) {
    y_max = y_min + 1.0;
  }
  const double y_pad = 0.06 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const auto px = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  };
  const auto py = [&](double y) {
    return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
     << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">"
     << title_ << "</text>\n";
  // Axes.
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
     << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\">"
     << x_label_ << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kTop + kBottom) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
        " transform=\"rotate(-90 16 "
     << (kTop + kBottom) / 2 << ")\">" << y_label_ << "</text>\n";

  // Ticks.
  for (int i = 0; i <= 5; ++i) {
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(py(fy)) << "\" x2=\""
       << kLeft << "\" y2=\"" << num(py(fy)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(fy) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"10\">"
       << tick(fy) << "</text>\n";
    if (bar_values_.empty()) {
      const double fx = x_min + (x_max - x_min) * i / 5.0;
      os << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << kBottom << "\" x2=\""
         << num(px(fx)) << "\" y2=\"" << kBottom + 4 << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << num(px(fx)) << "\" y=\"" << kBottom + 16
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"10\">"
         << tick(fx) << "</text>\n";
    }
  }

  // Line series.
  for (size_t si = 0; si < series_.size(); ++si) {
    const auto& s = series_[si];
    os << "<polyline fill=\"none\" stroke=\"" << kColors[si % 6]
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << kRight - 8 << "\" y=\"" << kTop + 16 + 14.0 * si
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\""
          " fill=\""
       << kColors[si % 6] << "\">" << s.name << "</text>\n";
  }
  for (size_t si = 0; si < marks_.size(); ++si) {
    const auto& s = marks_[si];
    for (size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
         << "\" r=\"3\" fill=\"" << kColors[si % 6] << "\"/>\n";
    }
  }

  // Bars.
  if (!bar_values_.empty()) {
    const size_t n_groups = bar_groups_.size();
    const size_t n_series = bar_series_.size();
    const double group_w = (kRight - kLeft) / n_groups;
    for (size_t g = 0; g < n_groups; ++g) {
      for (size_t s = 0; s < n_series; ++s) {
        const double v = bar_values_[g][s];
        const double bw = group_w * 0.7 / n_series;
        const double x0 =
            kLeft + g * group_w + group_w * 0.15 + s * bw;
        os << "<rect x=\"" << num(x0) << "\" y=\"" << num(py(v))
           << "\" width=\"" << num(bw) << "\" height=\""
           << num(py(0.0) - py(v)) << "\" fill=\"" << kColors[s % 6]
           << "\"/>\n";
      }
      os << "<text x=\"" << num(kLeft + (g + 0.5) * group_w) << "\" y=\""
         << kBottom + 16
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"11\">"
         << bar_groups_[g] << "</text>\n";
    }
    for (size_t s = 0; s < n_series; ++s) {
      os << "<text x=\"" << kRight - 8 << "\" y=\"" << kTop + 16 + 14.0 * s
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            "font-size=\"11\" fill=\""
         << kColors[s % 6] << "\">" << bar_series_[s] << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

void SvgPlot::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("SvgPlot: cannot write " + path);
  }
  out << render();
}

}  // namespace aacc
