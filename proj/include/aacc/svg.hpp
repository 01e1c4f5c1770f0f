#pragma once

#include <string>
#include <vector>

namespace aacc {

/// Deterministic static-SVG builder for line series and bar groups. Output
/// is byte-stable for identical inputs.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_series(const std::string& name, const std::vector<double>& x,
                  const std::vector<double>& y);
  void add_marks(const std::vector<double>& x, const std::vector<double>& y);

  /// Grouped bars: one group per label, one bar per series.
  void add_bar_groups(const std::vector<std::string>& group_labels,
                      const std::vector<std::string>& series_names,
                      const std::vector<std::vector<double>>& values);

  std::string render() const;
  void save(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
  };
  std::string title_;
  std::string x_label_;
  std::string y_label_;
  std::vector<Series> series_;
  std::vector<Series> marks_;
  std::vector<std::string> bar_groups_;
  std::vector<std::string> bar_series_;
  std::vector<std::vector<double>> bar_values_;
};

}  // namespace aacc
