#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "claimsift/corpus.hpp"

namespace claimsift {

// 3x3 counts, rows = true class, columns = predicted class, both in the
// fixed (Factual, Misleading, Persuasive) order.
struct ConfusionMatrix {
  std::array<std::array<long long, kNumClasses>, kNumClasses> counts{};

  long long total() const;
  long long trace() const;
  long long row_sum(int r) const;
  long long col_sum(int c) const;
};

ConfusionMatrix confusion_matrix(const std::vector<int32_t>& y_true,
                                 const std::vector<int32_t>& y_pred);

// trace / total; throws on an empty matrix.
double accuracy(const ConfusionMatrix& m);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
  // Set when a zero denominator forced precision or recall to 0.
  bool degenerate = false;
};

ClassMetrics class_metrics(const ConfusionMatrix& m, int cls);

struct MetricsReport {
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix matrix;
};

MetricsReport classification_report(const std::vector<int32_t>& y_true,
                                    const std::vector<int32_t>& y_pred);

// Report JSON schema:
// {accuracy, per_class:[{label,precision,recall,f1,support,degenerate}],
//  macro:{precision,recall,f1}, matrix:[[..]]}
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

// Rendered table: accuracy to 4 decimals, precision/recall/f1 to 2.
std::string report_to_markdown_row(const std::string& name, const MetricsReport& report);
std::string matrix_to_csv(const ConfusionMatrix& m);

}  // namespace claimsift
