#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ergocov {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<PlotSeries>& series);

/// Row-major grayscale image of a grid field, `scale` pixels per cell, each
/// pixel the cell value divided by the field maximum (0 for a zero field).
/// Cells with mask 0 are painted as 0.
std::vector<double> rasterize(const std::vector<double>& values, const std::vector<int>& mask, int width,
                              int height, int scale);

/// Side-by-side heatmaps with a shared color scale per panel.
std::string heatmap_triptych_svg(const std::vector<std::string>& titles,
                                 const std::vector<std::vector<double>>& fields, const std::vector<int>& mask,
                                 int width, int height);

/// Renders every recognized artifact (metrics.csv, curves.csv,
/// final_maps.csv) under `dir`, recursively, next to its source. All images
/// are built before any is written; a tree with nothing to plot is an error
/// and leaves no files behind. Returns the written paths.
std::vector<std::filesystem::path> plot_directory(const std::filesystem::path& dir);

}  // namespace ergocov
