#pragma once

#include <string>
#include <vector>

namespace arit::cli {

// Minimal deterministic PNG charts: white canvas, black axes, 3x5 pixel font.
// No timestamps or other environment-dependent bytes unless `stamp` is set,
// so identical inputs always produce identical files.

void write_bar_chart(const std::string& path, const std::vector<double>& values,
                     const std::vector<std::string>& labels, const std::string& title,
                     const std::string& stamp = "");

void write_scatter_chart(const std::string& path, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::string& x_label,
                         const std::string& y_label, const std::string& title,
                         const std::string& stamp = "");

} // namespace arit::cli
