#include "nertag/plot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "nertag/errors.hpp"

namespace nertag {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

constexpr double kWidth = 480;
constexpr double kHeight = 360;
constexpr double kMargin = 48;

std::string svg_header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
         "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) +
         " " + fmt(kHeight) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw Error("IoError", "failed writing '" + path + "'");
}

std::string axis_box(const std::string& x_label, const std::string& y_label) {
  std::string s;
  s += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" +
       fmt(kWidth - 2 * kMargin) + "\" height=\"" + fmt(kHeight - 2 * kMargin) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"" + fmt(kHeight - 12) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + x_label + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(kHeight / 2) +
       "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 " +
       fmt(kHeight / 2) + ")\">" + y_label + "</text>\n";
  return s;
}

void plot_pr_curve(const nlohmann::json& report, const std::string& path) {
  if (!report.contains("points") || !report["points"].is_array() ||
      report["points"].empty()) {
    throw Error("MissingSeries", "sweep report has no 'points' series");
  }
  struct Pt {
    double bias, precision, recall;
  };
  std::vector<Pt> pts;
  for (const auto& pj : report["points"]) {
    if (!pj.contains("precision") || !pj.contains("recall"))
      throw Error("MissingSeries", "sweep point lacks precision/recall");
    pts.push_back({pj.value("bias", 0.0), pj["precision"].get<double>(),
                   pj["recall"].get<double>()});
  }

  auto sx = [](double recall) {
    return kMargin + recall * (kWidth - 2 * kMargin);
  };
  auto sy = [](double precision) {
    return kHeight - kMargin - precision * (kHeight - 2 * kMargin);
  };

  std::string body = svg_header() + axis_box("recall", "precision");
  std::string poly = "<polyline fill=\"none\" stroke=\"#1f6fb4\" "
                     "stroke-width=\"2\" points=\"";
  for (const Pt& p : pts) poly += fmt(sx(p.recall)) + "," + fmt(sy(p.precision)) + " ";
  poly += "\"/>\n";
  body += poly;
  for (const Pt& p : pts) {
    body += "<circle cx=\"" + fmt(sx(p.recall)) + "\" cy=\"" +
            fmt(sy(p.precision)) + "\" r=\"3.5\" fill=\"#1f6fb4\"/>\n";
    body += "<text x=\"" + fmt(sx(p.recall) + 6) + "\" y=\"" +
            fmt(sy(p.precision) - 6) + "\" font-size=\"11\">bias " +
            fmt(p.bias) + "</text>\n";
  }
  body += "</svg>\n";
  write_file(path, body);
}

void plot_seq_length(const nlohmann::json& report, const std::string& path) {
  if (!report.contains("summary") || !report["summary"].is_object()) {
    throw Error("MissingSeries", "sequence-length report has no 'summary'");
  }
  const auto& summary = report["summary"];
  struct Bar {
    std::string name;
    double mean;
  };
  std::vector<Bar> bars;
  for (const char* scheme : {"plain", "span", "bio"}) {
    if (!summary.contains(scheme)) continue;
    const auto& s = summary[scheme];
    if (!s.contains("mean")) continue;
    if (s.contains("n") && s["n"].get<std::size_t>() == 0) continue;
    bars.push_back({scheme, s["mean"].get<double>()});
  }
  if (bars.empty()) {
    throw Error("MissingSeries",
                "sequence-length summary has no plottable scheme");
  }

  double top = 0;
  for (const Bar& b : bars) top = std::max(top, b.mean);
  if (top <= 0) top = 1;

  std::string body = svg_header() + axis_box("scheme", "mean tokens");
  const double slot = (kWidth - 2 * kMargin) / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = bars[i].mean / top * (kHeight - 2 * kMargin);
    const double x = kMargin + slot * static_cast<double>(i) + slot * 0.2;
    const double y = kHeight - kMargin - h;
    body += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" +
            fmt(slot * 0.6) + "\" height=\"" + fmt(h) +
            "\" fill=\"#5a9bd5\" stroke=\"black\"/>\n";
    body += "<text x=\"" + fmt(x + slot * 0.3) + "\" y=\"" +
            fmt(kHeight - kMargin + 16) +
            "\" text-anchor=\"middle\" font-size=\"12\">" + bars[i].name +
            "</text>\n";
    body += "<text x=\"" + fmt(x + slot * 0.3) + "\" y=\"" + fmt(y - 5) +
            "\" text-anchor=\"middle\" font-size=\"11\">" + fmt(bars[i].mean) +
            "</text>\n";
  }
  body += "</svg>\n";
  write_file(path, body);
}

}  // namespace

void emit_plot(const nlohmann::json& report, PlotKind kind,
               const std::string& path) {
  switch (kind) {
    case PlotKind::PrCurve:
      plot_pr_curve(report, path);
      return;
    case PlotKind::SeqLength:
      plot_seq_length(report, path);
      return;
  }
}

}  // namespace nertag
