#include "ergocov/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "ergocov/error.hpp"
#include "ergocov/experiment.hpp"

namespace ergocov {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Viridis-like ramp from 5 anchors.
std::string color_of(double t) {
  static const double anchors[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(t), 3);
  const double f = t - i;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(anchors[i][0] + f * (anchors[i + 1][0] - anchors[i][0]))),
                static_cast<int>(std::lround(anchors[i][1] + f * (anchors[i + 1][1] - anchors[i][1]))),
                static_cast<int>(std::lround(anchors[i][2] + f * (anchors[i + 1][2] - anchors[i][2]))));
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw Error(ErrorCode::kIo, path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

double parse_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kIo, path.string() + ": bad number \"" + s + "\"");
}

struct Pending {
  fs::path path;
  std::string text;
};

const std::vector<std::pair<std::string, std::string>>& metric_titles() {
  static const std::vector<std::pair<std::string, std::string>> t = {
      {"regret_running", "Regret"},
      {"empirical_error", "Empirical error"},
      {"belief_error", "Belief error"},
      {"kl_alignment", "KL belief alignment"},
  };
  return t;
}

void plot_metrics(const fs::path& csv, std::vector<Pending>& out) {
  const Table t = read_csv(csv);
  const int kc = t.column("k");
  if (kc < 0 || t.rows.empty()) return;
  for (const auto& [column, title] : metric_titles()) {
    const int c = t.column(column);
    if (c < 0) continue;
    PlotSeries s{column, {}, {}};
    for (const auto& row : t.rows) {
      s.x.push_back(parse_double(row[static_cast<std::size_t>(kc)], csv));
      s.y.push_back(parse_double(row[static_cast<std::size_t>(c)], csv));
    }
    out.push_back({csv.parent_path() / (column + ".svg"), line_chart_svg(title, column, {s})});
  }
}

void plot_curves(const fs::path& csv, std::vector<Pending>& out) {
  const Table t = read_csv(csv);
  const int kc = t.column("k");
  if (kc < 0 || t.rows.empty() || t.header.empty()) return;
  const std::size_t key = 0;
  for (const auto& [column, title] : metric_titles()) {
    const int c = t.column(column);
    if (c < 0) continue;
    std::vector<PlotSeries> series;
    std::map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
      auto [it, fresh] = index.try_emplace(row[key], series.size());
      if (fresh) series.push_back({t.header[key] + " " + row[key], {}, {}});
      series[it->second].x.push_back(parse_double(row[static_cast<std::size_t>(kc)], csv));
      series[it->second].y.push_back(parse_double(row[static_cast<std::size_t>(c)], csv));
    }
    out.push_back({csv.parent_path() / ("curves_" + column + ".svg"), line_chart_svg(title, column, series)});
  }
}

void plot_maps(const fs::path& csv, std::vector<Pending>& out) {
  const Table t = read_csv(csv);
  const int cc = t.column("col"), rc = t.column("row"), ac = t.column("accessible");
  const int tc = t.column("true_target"), bc = t.column("team_belief"), ec = t.column("team_empirical");
  if (cc < 0 || rc < 0 || ac < 0 || tc < 0 || bc < 0 || ec < 0 || t.rows.empty()) return;
  int width = 0, height = 0;
  for (const auto& row : t.rows) {
    width = std::max(width, static_cast<int>(parse_double(row[static_cast<std::size_t>(cc)], csv)) + 1);
    height = std::max(height, static_cast<int>(parse_double(row[static_cast<std::size_t>(rc)], csv)) + 1);
  }
  if (width * height != static_cast<int>(t.rows.size())) return;
  std::vector<std::vector<double>> fields(3, std::vector<double>(t.rows.size(), 0.0));
  std::vector<int> mask(t.rows.size(), 0);
  for (const auto& row : t.rows) {
    const int c = static_cast<int>(parse_double(row[static_cast<std::size_t>(cc)], csv));
    const int r = static_cast<int>(parse_double(row[static_cast<std::size_t>(rc)], csv));
    const auto i = static_cast<std::size_t>(r * width + c);
    mask[i] = parse_double(row[static_cast<std::size_t>(ac)], csv) != 0.0 ? 1 : 0;
    fields[0][i] = parse_double(row[static_cast<std::size_t>(tc)], csv);
    fields[1][i] = parse_double(row[static_cast<std::size_t>(bc)], csv);
    fields[2][i] = parse_double(row[static_cast<std::size_t>(ec)], csv);
  }
  out.push_back({csv.parent_path() / "heatmaps.svg",
                 heatmap_triptych_svg({"True target", "Team belief", "Team empirical"}, fields, mask, width,
                                      height)});
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
  const double w = 640, h = 400, left = 70, right = 30, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) {
      if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = w - left - right, ph = h - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  os << "<g stroke=\"#ccc\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 + (y1 - y0) * i / 4.0;
    os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(sy(y)) << "\" y2=\""
       << num(sy(y)) << "\"/>\n";
  }
  os << "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 + (y1 - y0) * i / 4.0;
    const double x = x0 + (x1 - x0) * i / 4.0;
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(y) + 4) << "\" text-anchor=\"end\">" << tick(y)
       << "</text>\n";
    os << "<text x=\"" << num(sx(x)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
       << tick(x) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 10) << "\" text-anchor=\"middle\">k</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < s.x.size() && p < s.y.size(); ++p) {
      if (!std::isfinite(s.y[p])) continue;
      os << num(sx(s.x[p])) << ',' << num(sy(s.y[p])) << ' ';
    }
    os << "\"/>\n";
    if (series.size() > 1) {
      const double ly = top + 14 + 16 * static_cast<double>(i);
      os << "<line x1=\"" << num(left + pw - 150) << "\" x2=\"" << num(left + pw - 130) << "\" y1=\"" << num(ly)
         << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << num(left + pw - 125) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
         << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<double> rasterize(const std::vector<double>& values, const std::vector<int>& mask, int width,
                              int height, int scale) {
  double peak = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) peak = std::max(peak, values[i]);
  }
  const int pw = width * scale;
  std::vector<double> px(static_cast<std::size_t>(pw * height * scale), 0.0);
  for (int y = 0; y < height * scale; ++y) {
    for (int x = 0; x < pw; ++x) {
      const auto cell = static_cast<std::size_t>((y / scale) * width + x / scale);
      if (mask[cell] && peak > 0.0) px[static_cast<std::size_t>(y * pw + x)] = values[cell] / peak;
    }
  }
  return px;
}

std::string heatmap_triptych_svg(const std::vector<std::string>& titles,
                                 const std::vector<std::vector<double>>& fields, const std::vector<int>& mask,
                                 int width, int height) {
  const double cell = std::max(8.0, std::min(40.0, 360.0 / std::max(width, height)));
  const double panel_w = cell * width, panel_h = cell * height, gap = 30, top = 40;
  const double total_w = gap + fields.size() * (panel_w + gap);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(total_w) << "\" height=\""
     << num(panel_h + top + 20) << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const double ox = gap + f * (panel_w + gap);
    const auto px = rasterize(fields[f], mask, width, height, 1);
    os << "<text x=\"" << num(ox + panel_w / 2) << "\" y=\"24\" text-anchor=\"middle\">"
       << escape(f < titles.size() ? titles[f] : "") << "</text>\n";
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const auto i = static_cast<std::size_t>(r * width + c);
        const std::string fill = mask[i] ? color_of(px[i]) : "#c0392b";
        // Row 0 at the bottom, matching the grid's coordinate frame.
        os << "<rect x=\"" << num(ox + c * cell) << "\" y=\"" << num(top + (height - 1 - r) * cell)
           << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << fill << "\"/>\n";
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<fs::path> plot_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> sources;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file()) sources.push_back(it->path());
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(sources.begin(), sources.end());

  std::vector<Pending> pending;
  for (const auto& p : sources) {
    const auto name = p.filename().string();
    if (name == "metrics.csv") plot_metrics(p, pending);
    if (name == "curves.csv") plot_curves(p, pending);
    if (name == "final_maps.csv") plot_maps(p, pending);
  }
  if (pending.empty()) throw Error(ErrorCode::kIo, "nothing to plot under " + dir.string());
  std::vector<fs::path> written;
  for (const auto& p : pending) {
    write_text_file(p.path, p.text);
    written.push_back(p.path);
  }
  return written;
}

}  // namespace ergocov
