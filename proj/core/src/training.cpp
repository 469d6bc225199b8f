#include "claimsift/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "claimsift/adam.hpp"
#include "claimsift/io.hpp"
#include "claimsift/ops.hpp"
#include "claimsift/svg.hpp"

namespace claimsift {

double default_learning_rate(ArchKind kind) {
  switch (kind) {
    case ArchKind::SimpleLstm:
    case ArchKind::AdvancedLstm:
    case ArchKind::Cnn:
      return 0.001;
    case ArchKind::CustomAttention:
      return 0.0005;
    case ArchKind::Transformer:
      return 0.0001;
  }
  return 0.001;
}

TrainConfig default_train_config(ArchKind kind, uint64_t seed) {
  TrainConfig config;
  config.learning_rate = default_learning_rate(kind);
  config.seed = seed;
  return config;
}

double TrainingHistory::best_val_accuracy() const {
  double best = 0.0;
  for (const auto& r : records) best = std::max(best, r.val_accuracy);
  return best;
}

bool EpochMonitor::observe(double val_loss, double val_accuracy) {
  ++epoch_;
  accuracy_improved_ = best_epoch_ == 0 || val_accuracy > best_accuracy_;
  if (accuracy_improved_) {
    best_accuracy_ = val_accuracy;
    best_epoch_ = epoch_;
  }
  if (!has_loss_ || val_loss < best_loss_) {
    best_loss_ = val_loss;
    has_loss_ = true;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

std::pair<double, double> metrics_from_probs(const std::vector<float>& probs, int classes,
                                             const std::vector<int32_t>& y) {
  const size_t n = y.size();
  double loss_sum = 0.0;
  long long correct = 0;
  const float lo = static_cast<float>(kProbClip);
  const float hi = 1.0f - static_cast<float>(kProbClip);
  for (size_t i = 0; i < n; ++i) {
    const float* row = probs.data() + i * classes;
    loss_sum -= std::log(std::clamp(row[y[i]], lo, hi));
    int arg = 0;
    for (int c = 1; c < classes; ++c) {
      if (row[c] > row[arg]) arg = c;  // ties keep the lowest index
    }
    if (arg == y[i]) ++correct;
  }
  return {n == 0 ? 0.0 : loss_sum / static_cast<double>(n),
          n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n)};
}

namespace {

IdMatrix gather_rows(const IdMatrix& x, const std::vector<size_t>& order, size_t from, size_t to) {
  IdMatrix batch(static_cast<int>(to - from), x.cols);
  for (size_t i = from; i < to; ++i) {
    std::copy(x.row(static_cast<int>(order[i])), x.row(static_cast<int>(order[i])) + x.cols,
              batch.row(static_cast<int>(i - from)));
  }
  return batch;
}

// Full-matrix frozen forward in fixed-size slices, collecting probabilities.
std::vector<float> forward_probs(const Model& model, const IdMatrix& x) {
  NoGradGuard no_grad;
  const int eval_batch = 128;
  std::vector<float> probs(static_cast<size_t>(x.rows) * kNumClasses);
  for (int start = 0; start < x.rows; start += eval_batch) {
    const int count = std::min(eval_batch, x.rows - start);
    IdMatrix slice(count, x.cols);
    std::copy(x.row(start), x.row(start) + static_cast<size_t>(count) * x.cols, slice.ids.data());
    Tensor out = model.forward(slice, /*training=*/false);
    std::copy(out.values().begin(), out.values().end(),
              probs.begin() + static_cast<size_t>(start) * kNumClasses);
  }
  return probs;
}

}  // namespace

std::pair<double, double> evaluate_epoch(const Model& model, const IdMatrix& x,
                                         const std::vector<int32_t>& y) {
  if (x.rows != static_cast<int>(y.size())) {
    throw DataError("evaluate_epoch: matrix rows " + std::to_string(x.rows) +
                    " vs labels " + std::to_string(y.size()));
  }
  return metrics_from_probs(forward_probs(model, x), kNumClasses, y);
}

std::vector<int32_t> predict_classes(const Model& model, const IdMatrix& x) {
  const std::vector<float> probs = forward_probs(model, x);
  std::vector<int32_t> preds(x.rows);
  for (int i = 0; i < x.rows; ++i) {
    const float* row = probs.data() + static_cast<size_t>(i) * kNumClasses;
    int arg = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (row[c] > row[arg]) arg = c;
    }
    preds[i] = arg;
  }
  return preds;
}

TrainingHistory train(Model& model, const TrainData& data, const TrainConfig& config) {
  if (data.val_x.rows == 0) throw DataError("train: validation set is empty");
  if (data.train_x.rows != static_cast<int>(data.train_y.size()) ||
      data.val_x.rows != static_cast<int>(data.val_y.size())) {
    throw DataError("train: matrix/label size mismatch");
  }
  if (config.batch_size < 1) {
    throw DataError("train: batch size must be >= 1, got " + std::to_string(config.batch_size));
  }

  TrainingHistory history;
  if (config.max_epochs <= 0) return history;

  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  Adam optimizer(adam_config);
  std::vector<Tensor*> param_tensors;
  for (auto& p : model.parameters()) {
    if (p.trainable) param_tensors.push_back(&p.tensor);
  }

  Rng dropout_rng(derive_seed(config.seed, 0x64726f70ULL));
  EpochMonitor monitor(config.patience);
  std::vector<std::vector<float>> best_snapshot;

  const int n_train = data.train_x.rows;
  std::vector<size_t> order(n_train);
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(config.seed, 0x65706f63ULL + static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    for (int start = 0; start < n_train; start += config.batch_size) {
      const size_t end = std::min<size_t>(start + config.batch_size, n_train);
      IdMatrix batch = gather_rows(data.train_x, order, start, end);
      Tensor onehot = Tensor::zeros({batch.rows, kNumClasses});
      for (size_t i = start; i < end; ++i) {
        onehot.values()[(i - start) * kNumClasses + data.train_y[order[i]]] = 1.0f;
      }
      Tensor probs = model.forward(batch, /*training=*/true, &dropout_rng);
      Tensor loss = categorical_crossentropy(probs, onehot);
      if (!std::isfinite(loss.item())) {
        throw Error("train: loss diverged (non-finite) at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(start / config.batch_size));
      }
      loss.backward();
      optimizer.step(param_tensors);
      model.zero_grads();
      history.optimizer_steps += 1;
    }

    EpochRecord record;
    record.epoch = epoch;
    std::tie(record.train_loss, record.train_accuracy) =
        evaluate_epoch(model, data.train_x, data.train_y);
    std::tie(record.val_loss, record.val_accuracy) =
        evaluate_epoch(model, data.val_x, data.val_y);
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    history.records.push_back(record);

    const bool stop = monitor.observe(record.val_loss, record.val_accuracy);
    if (monitor.accuracy_improved()) best_snapshot = model.snapshot_values();
    if (stop) {
      history.stopped_early = true;
      break;
    }
  }

  history.best_epoch = monitor.best_epoch();
  if (!best_snapshot.empty()) model.restore_values(best_snapshot);
  return history;
}

std::string history_to_csv(const TrainingHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[256];
  for (const auto& r : history.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                  r.train_accuracy, r.val_loss, r.val_accuracy);
    out << buf;
  }
  return out.str();
}

TrainingHistory history_from_csv(const std::string& text) {
  TrainingHistory history;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("history CSV: empty");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &r.epoch, &r.train_loss,
                    &r.train_accuracy, &r.val_loss, &r.val_accuracy) != 5) {
      throw DataError("history CSV: malformed row \"" + line + "\"");
    }
    history.records.push_back(r);
  }
  return history;
}

void emit_curves(const TrainingHistory& history, const std::string& csv_path,
                 const std::string& svg_path) {
  if (history.records.empty()) throw DataError("emit_curves: empty history");
  write_text_file(csv_path, history_to_csv(history));
  std::vector<double> ta, va, tl, vl;
  for (const auto& r : history.records) {
    ta.push_back(r.train_accuracy);
    va.push_back(r.val_accuracy);
    tl.push_back(r.train_loss);
    vl.push_back(r.val_loss);
  }
  write_text_file(svg_path, render_curves_svg(ta, va, tl, vl));
}

}  // namespace claimsift
