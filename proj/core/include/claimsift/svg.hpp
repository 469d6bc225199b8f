#pragma once

#include <string>
#include <vector>

#include "claimsift/metrics.hpp"

namespace claimsift {

// Two-panel training-curve figure (accuracy left, loss right). Exactly four
// polylines: train/validation per panel.
std::string render_curves_svg(const std::vector<double>& train_acc,
                              const std::vector<double>& val_acc,
                              const std::vector<double>& train_loss,
                              const std::vector<double>& val_loss);

// 3x3 confusion-matrix heat map with cell counts.
std::string render_confusion_svg(const ConfusionMatrix& matrix, const std::string& title);

// Accuracy bar chart across runs.
std::string render_accuracy_bars_svg(const std::vector<std::pair<std::string, double>>& bars);

}  // namespace claimsift
