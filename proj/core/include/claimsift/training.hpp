#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "claimsift/models.hpp"
#include "claimsift/tokenizer.hpp"

namespace claimsift {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 32;
  int max_epochs = 10;
  int patience = 3;
  uint64_t seed = 0;
};

// Published per-architecture learning rate; the other defaults are shared.
double default_learning_rate(ArchKind kind);
TrainConfig default_train_config(ArchKind kind, uint64_t seed);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
  bool stopped_early = false;
  int best_epoch = 0;  // 1-based index of max val_accuracy; 0 if no epochs ran
  long long optimizer_steps = 0;

  double best_val_accuracy() const;
};

// Early stopping on validation loss (strict improvement, min-delta 0) plus
// independent best-checkpoint selection on validation accuracy (earliest
// epoch wins ties). Kept separate from the training loop so the rule can be
// traced against scripted sequences.
class EpochMonitor {
 public:
  explicit EpochMonitor(int patience) : patience_(patience) {}

  // Feeds one epoch's validation metrics; returns true when training should
  // stop (val_loss has not improved for `patience` consecutive epochs).
  bool observe(double val_loss, double val_accuracy);

  int best_epoch() const { return best_epoch_; }          // by accuracy, 1-based
  double best_accuracy() const { return best_accuracy_; }
  int epochs_without_improvement() const { return stale_; }
  bool accuracy_improved() const { return accuracy_improved_; }  // on last observe

 private:
  int patience_;
  int epoch_ = 0;
  double best_loss_ = 0.0;
  bool has_loss_ = false;
  int stale_ = 0;
  double best_accuracy_ = 0.0;
  int best_epoch_ = 0;
  bool accuracy_improved_ = false;
};

struct TrainData {
  IdMatrix train_x;
  std::vector<int32_t> train_y;
  IdMatrix val_x;
  std::vector<int32_t> val_y;
};

// Frozen-forward loss and accuracy over a full matrix. Loss is the mean
// categorical cross-entropy; accuracy breaks argmax ties toward the lowest
// class index.
std::pair<double, double> evaluate_epoch(const Model& model, const IdMatrix& x,
                                         const std::vector<int32_t>& y);

// Same accounting applied to an already-computed probability matrix.
std::pair<double, double> metrics_from_probs(const std::vector<float>& probs, int classes,
                                             const std::vector<int32_t>& y);

// Argmax predictions (lowest index wins ties), batched frozen forward.
std::vector<int32_t> predict_classes(const Model& model, const IdMatrix& x);

// Runs the training regime: per-epoch seeded reshuffle, Adam step per batch
// of `batch_size` (final partial batch included), early stopping on val_loss,
// and restoration of the best-val-accuracy parameters at completion. Throws
// DataError on an empty validation set and Error on divergence (NaN loss).
TrainingHistory train(Model& model, const TrainData& data, const TrainConfig& config);

// History CSV: header + one row per epoch (epoch,train_loss,train_acc,
// val_loss,val_acc), floats at round-trip precision.
std::string history_to_csv(const TrainingHistory& history);
TrainingHistory history_from_csv(const std::string& text);

// Writes the CSV and the two-panel SVG next to each other.
void emit_curves(const TrainingHistory& history, const std::string& csv_path,
                 const std::string& svg_path);

}  // namespace claimsift
