#include "claimsift/metrics.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace claimsift {

using nlohmann::json;

long long ConfusionMatrix::total() const {
  long long n = 0;
  for (const auto& row : counts) {
    for (long long v : row) n += v;
  }
  return n;
}

long long ConfusionMatrix::trace() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

long long ConfusionMatrix::row_sum(int r) const {
  return counts[r][0] + counts[r][1] + counts[r][2];
}

long long ConfusionMatrix::col_sum(int c) const {
  return counts[0][c] + counts[1][c] + counts[2][c];
}

ConfusionMatrix confusion_matrix(const std::vector<int32_t>& y_true,
                                 const std::vector<int32_t>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion_matrix: length mismatch, " + std::to_string(y_true.size()) +
                    " true vs " + std::to_string(y_pred.size()) + " predicted");
  }
  ConfusionMatrix m;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const int32_t t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) {
      throw DataError("confusion_matrix: code outside {0,1,2} at index " + std::to_string(i));
    }
    m.counts[t][p] += 1;
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  const long long total = m.total();
  if (total == 0) throw DataError("accuracy: empty matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

ClassMetrics class_metrics(const ConfusionMatrix& m, int cls) {
  if (cls < 0 || cls >= kNumClasses) {
    throw DataError("class_metrics: class " + std::to_string(cls) + " outside {0,1,2}");
  }
  ClassMetrics out;
  const long long tp = m.counts[cls][cls];
  const long long predicted = m.col_sum(cls);
  const long long actual = m.row_sum(cls);
  out.support = actual;
  if (predicted == 0) {
    out.precision = 0.0;
    out.degenerate = true;
  } else {
    out.precision = static_cast<double>(tp) / static_cast<double>(predicted);
  }
  if (actual == 0) {
    out.recall = 0.0;
    out.degenerate = true;
  } else {
    out.recall = static_cast<double>(tp) / static_cast<double>(actual);
  }
  const double pr = out.precision + out.recall;
  out.f1 = pr == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / pr;
  return out;
}

MetricsReport classification_report(const std::vector<int32_t>& y_true,
                                    const std::vector<int32_t>& y_pred) {
  MetricsReport report;
  report.matrix = confusion_matrix(y_true, y_pred);
  report.accuracy = accuracy(report.matrix);
  for (int c = 0; c < kNumClasses; ++c) {
    report.per_class[c] = class_metrics(report.matrix, c);
    report.macro_precision += report.per_class[c].precision;
    report.macro_recall += report.per_class[c].recall;
    report.macro_f1 += report.per_class[c].f1;
  }
  report.macro_precision /= kNumClasses;
  report.macro_recall /= kNumClasses;
  report.macro_f1 /= kNumClasses;
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  json per_class = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& cm = report.per_class[c];
    per_class.push_back({{"label", label_name(label_from_code(c))},
                         {"precision", cm.precision},
                         {"recall", cm.recall},
                         {"f1", cm.f1},
                         {"support", cm.support},
                         {"degenerate", cm.degenerate}});
  }
  json matrix = json::array();
  for (int r = 0; r < kNumClasses; ++r) {
    matrix.push_back(report.matrix.counts[r]);
  }
  json doc = {
      {"accuracy", report.accuracy},
      {"per_class", std::move(per_class)},
      {"macro",
       {{"precision", report.macro_precision},
        {"recall", report.macro_recall},
        {"f1", report.macro_f1}}},
      {"matrix", std::move(matrix)},
  };
  return doc.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  MetricsReport report;
  report.accuracy = doc.at("accuracy").get<double>();
  report.macro_precision = doc.at("macro").at("precision").get<double>();
  report.macro_recall = doc.at("macro").at("recall").get<double>();
  report.macro_f1 = doc.at("macro").at("f1").get<double>();
  const auto& per_class = doc.at("per_class");
  for (int c = 0; c < kNumClasses; ++c) {
    report.per_class[c].precision = per_class.at(c).at("precision").get<double>();
    report.per_class[c].recall = per_class.at(c).at("recall").get<double>();
    report.per_class[c].f1 = per_class.at(c).at("f1").get<double>();
    report.per_class[c].support = per_class.at(c).at("support").get<long long>();
    report.per_class[c].degenerate = per_class.at(c).value("degenerate", false);
  }
  const auto& matrix = doc.at("matrix");
  for (int r = 0; r < kNumClasses; ++r) {
    for (int c = 0; c < kNumClasses; ++c) {
      report.matrix.counts[r][c] = matrix.at(r).at(c).get<long long>();
    }
  }
  return report;
}

std::string report_to_markdown_row(const std::string& name, const MetricsReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "| %s | %.4f | %.2f | %.2f | %.2f |", name.c_str(),
                report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1);
  return buf;
}

std::string matrix_to_csv(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "true\\predicted";
  for (int c = 0; c < kNumClasses; ++c) out << "," << label_name(label_from_code(c));
  out << "\n";
  for (int r = 0; r < kNumClasses; ++r) {
    out << label_name(label_from_code(r));
    for (int c = 0; c < kNumClasses; ++c) out << "," << m.counts[r][c];
    out << "\n";
  }
  return out.str();
}

}  // namespace claimsift
