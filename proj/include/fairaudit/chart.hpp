#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fairaudit {

/// Static SVG bar chart comparing original vs adjusted gap values.
/// Values are hundredths (0..100) so the geometry is integer-exact and the
/// output byte-deterministic; nullopt renders as an "n/a" label.
std::string render_gap_chart_svg(
    const std::string& title, const std::vector<std::string>& metric_names,
    const std::vector<std::optional<int>>& original_hundredths,
    const std::vector<std::optional<int>>& adjusted_hundredths);

}  // namespace fairaudit
