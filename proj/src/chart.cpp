#include "fairaudit/chart.hpp"

#include <stdexcept>

namespace fairaudit {

namespace {

constexpr int kBarMax = 200;     // pixel height of a 1.00 bar
constexpr int kBarWidth = 28;
constexpr int kPairGap = 10;
constexpr int kGroupGap = 34;
constexpr int kMarginLeft = 50;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 46;

std::string rect(int x, int y, int w, int h, const std::string& fill) {
  return "  <rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
         "\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" fill=\"" + fill + "\"/>\n";
}

std::string text(int x, int y, const std::string& s, int size,
                 const std::string& anchor) {
  return "  <text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
         "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

}  // namespace

std::string render_gap_chart_svg(
    const std::string& title, const std::vector<std::string>& metric_names,
    const std::vector<std::optional<int>>& original_hundredths,
    const std::vector<std::optional<int>>& adjusted_hundredths) {
  if (metric_names.size() != original_hundredths.size() ||
      metric_names.size() != adjusted_hundredths.size())
    throw std::invalid_argument("chart inputs must have the same length");

  const int n = static_cast<int>(metric_names.size());
  const int group_width = 2 * kBarWidth + kPairGap;
  const int width =
      kMarginLeft + n * (group_width + kGroupGap) + 20;
  const int height = kMarginTop + kBarMax + kMarginBottom;
  const int baseline = kMarginTop + kBarMax;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\">\n";
  svg += rect(0, 0, width, height, "#ffffff");
  svg += text(kMarginLeft, 22, title, 14, "start");

  // y axis ticks at 0, 0.25, 0.5, 0.75, 1.0
  for (int tick = 0; tick <= 4; ++tick) {
    const int value = tick * 25;
    const int y = baseline - value * kBarMax / 100;
    svg += "  <line x1=\"" + std::to_string(kMarginLeft - 6) + "\" y1=\"" +
           std::to_string(y) + "\" x2=\"" + std::to_string(width - 10) +
           "\" y2=\"" + std::to_string(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    const std::string label =
        value == 0 ? "0" : value == 100 ? "1.0" : "0." + std::to_string(value);
    svg += text(kMarginLeft - 10, y + 4, label, 10, "end");
  }

  for (int i = 0; i < n; ++i) {
    const int x0 = kMarginLeft + i * (group_width + kGroupGap);
    const auto bar = [&](std::optional<int> hundredths, int x,
                         const std::string& fill) {
      if (!hundredths) {
        svg += text(x + kBarWidth / 2, baseline - 6, "n/a", 9, "middle");
        return;
      }
      const int h = *hundredths * kBarMax / 100;
      svg += rect(x, baseline - h, kBarWidth, h, fill);
    };
    bar(original_hundredths[static_cast<std::size_t>(i)], x0, "#c0504d");
    bar(adjusted_hundredths[static_cast<std::size_t>(i)],
        x0 + kBarWidth + kPairGap, "#4f81bd");
    svg += text(x0 + group_width / 2, baseline + 16,
                metric_names[static_cast<std::size_t>(i)], 11, "middle");
  }

  // legend
  const int ly = height - 14;
  svg += rect(kMarginLeft, ly - 10, 12, 12, "#c0504d");
  svg += text(kMarginLeft + 18, ly, "original", 11, "start");
  svg += rect(kMarginLeft + 90, ly - 10, 12, 12, "#4f81bd");
  svg += text(kMarginLeft + 108, ly, "adjusted", 11, "start");

  svg += "</svg>\n";
  return svg;
}

}  // namespace fairaudit
