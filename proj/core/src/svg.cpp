#include "claimsift/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace claimsift {

namespace {

constexpr const char* kTrainColor = "#1f77b4";
constexpr const char* kValColor = "#ff7f0e";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// One chart panel: axis lines, a few ticks, series drawn as <polyline>.
void draw_panel(std::ostringstream& out, double x0, double y0, double w, double h,
                const std::string& title, const std::vector<std::vector<double>>& series,
                const std::vector<const char*>& colors, double lo, double hi) {
  out << "<line x1='" << x0 << "' y1='" << y0 + h << "' x2='" << x0 + w << "' y2='" << y0 + h
      << "' stroke='black'/>\n";
  out << "<line x1='" << x0 << "' y1='" << y0 << "' x2='" << x0 << "' y2='" << y0 + h
      << "' stroke='black'/>\n";
  out << "<text x='" << x0 + w / 2 << "' y='" << y0 - 8
      << "' text-anchor='middle' font-size='13'>" << title << "</text>\n";
  for (int tick = 0; tick <= 2; ++tick) {
    const double v = lo + (hi - lo) * tick / 2.0;
    const double y = y0 + h - (v - lo) / (hi - lo) * h;
    out << "<text x='" << x0 - 6 << "' y='" << y + 4
        << "' text-anchor='end' font-size='10'>" << fmt(v) << "</text>\n";
  }
  const size_t n = series.empty() ? 0 : series[0].size();
  for (size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill='none' stroke='" << colors[s] << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < series[s].size(); ++i) {
      const double x = n > 1 ? x0 + w * static_cast<double>(i) / (n - 1) : x0 + w / 2;
      const double frac = (series[s][i] - lo) / (hi - lo);
      const double y = y0 + h - std::clamp(frac, 0.0, 1.0) * h;
      out << x << "," << y << " ";
    }
    out << "'/>\n";
  }
}

}  // namespace

std::string render_curves_svg(const std::vector<double>& train_acc,
                              const std::vector<double>& val_acc,
                              const std::vector<double>& train_loss,
                              const std::vector<double>& val_loss) {
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='760' height='300'>\n";
  double loss_hi = 1e-6;
  for (double v : train_loss) loss_hi = std::max(loss_hi, v);
  for (double v : val_loss) loss_hi = std::max(loss_hi, v);
  draw_panel(out, 60, 40, 280, 210, "accuracy", {train_acc, val_acc},
             {kTrainColor, kValColor}, 0.0, 1.0);
  draw_panel(out, 440, 40, 280, 210, "loss", {train_loss, val_loss},
             {kTrainColor, kValColor}, 0.0, loss_hi * 1.05);
  out << "<text x='60' y='285' font-size='11' fill='" << kTrainColor << "'>train</text>\n";
  out << "<text x='110' y='285' font-size='11' fill='" << kValColor << "'>validation</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_confusion_svg(const ConfusionMatrix& matrix, const std::string& title) {
  const double cell = 90, x0 = 110, y0 = 70;
  long long max_count = 1;
  for (const auto& row : matrix.counts) {
    for (long long v : row) max_count = std::max(max_count, v);
  }
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='460' height='420'>\n";
  out << "<text x='230' y='28' text-anchor='middle' font-size='14'>" << title << "</text>\n";
  for (int r = 0; r < kNumClasses; ++r) {
    for (int c = 0; c < kNumClasses; ++c) {
      const double shade = static_cast<double>(matrix.counts[r][c]) / max_count;
      const int blue = static_cast<int>(255 - 155 * shade);
      const int rg = static_cast<int>(245 - 190 * shade);
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", rg, rg, blue);
      const double x = x0 + c * cell, y = y0 + r * cell;
      out << "<rect x='" << x << "' y='" << y << "' width='" << cell << "' height='" << cell
          << "' fill='" << color << "' stroke='white'/>\n";
      out << "<text x='" << x + cell / 2 << "' y='" << y + cell / 2 + 5
          << "' text-anchor='middle' font-size='15'"
          << (shade > 0.6 ? " fill='white'" : "") << ">" << matrix.counts[r][c] << "</text>\n";
    }
  }
  for (int i = 0; i < kNumClasses; ++i) {
    const char* name = label_name(label_from_code(i));
    out << "<text x='" << x0 + i * cell + cell / 2 << "' y='" << y0 + 3 * cell + 22
        << "' text-anchor='middle' font-size='11'>" << name << "</text>\n";
    out << "<text x='" << x0 - 10 << "' y='" << y0 + i * cell + cell / 2 + 4
        << "' text-anchor='end' font-size='11'>" << name << "</text>\n";
  }
  out << "<text x='" << x0 + 1.5 * cell << "' y='" << y0 + 3 * cell + 44
      << "' text-anchor='middle' font-size='12'>predicted</text>\n";
  out << "<text x='22' y='" << y0 + 1.5 * cell
      << "' font-size='12' transform='rotate(-90 22 " << y0 + 1.5 * cell << ")'>true</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_accuracy_bars_svg(const std::vector<std::pair<std::string, double>>& bars) {
  const double bar_w = 90, gap = 30, x0 = 70, y0 = 40, h = 220;
  const double width = x0 + bars.size() * (bar_w + gap) + 30;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='340'>\n";
  out << "<line x1='" << x0 - 10 << "' y1='" << y0 + h << "' x2='" << width - 20 << "' y2='"
      << y0 + h << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    out << "<text x='" << x0 - 16 << "' y='" << y0 + h - v * h + 4
        << "' text-anchor='end' font-size='10'>" << fmt(v) << "</text>\n";
  }
  for (size_t i = 0; i < bars.size(); ++i) {
    const double x = x0 + i * (bar_w + gap);
    const double bh = std::clamp(bars[i].second, 0.0, 1.0) * h;
    out << "<rect x='" << x << "' y='" << y0 + h - bh << "' width='" << bar_w << "' height='"
        << bh << "' fill='" << kTrainColor << "'/>\n";
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.4f", bars[i].second);
    out << "<text x='" << x + bar_w / 2 << "' y='" << y0 + h - bh - 6
        << "' text-anchor='middle' font-size='11'>" << acc << "</text>\n";
    out << "<text x='" << x + bar_w / 2 << "' y='" << y0 + h + 18
        << "' text-anchor='middle' font-size='11'>" << bars[i].first << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace claimsift
