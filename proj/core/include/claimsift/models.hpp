#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimsift/rng.hpp"
#include "claimsift/tensor.hpp"
#include "claimsift/tokenizer.hpp"

namespace claimsift {

enum class ArchKind {
  SimpleLstm,
  AdvancedLstm,
  CustomAttention,
  Transformer,
  Cnn,
};

// CLI names: simple-lstm, advanced-lstm, custom-attention, transformer, cnn.
const char* arch_name(ArchKind kind);
ArchKind arch_from_name(const std::string& name);
std::vector<ArchKind> all_arch_kinds();

// Every dimension is fixed; there are no free hyperparameters at build time.
struct ArchitectureSpec {
  ArchKind kind;
  int vocab_size = kVocabularyCap;
  int sequence_length = kSequenceLength;
  int classes = kNumClasses;
};

struct Parameter {
  std::string name;  // path-style, e.g. "bilstm1.fwd.kernel"
  Tensor tensor;
  bool trainable = true;
};

// Expected trainable-parameter total from the closed-form per-layer
// accounting of the fixed stacks.
long long closed_form_param_count(ArchKind kind);
// Parameter totals reported for the original implementations of these
// stacks. SimpleLstm, AdvancedLstm, and Cnn match our closed forms exactly;
// CustomAttention and Transformer differ (see `model inspect`).
long long reference_param_count(ArchKind kind);

// One built architecture: named parameters plus the forward function.
class Model {
 public:
  static Model build(ArchKind kind, uint64_t seed, uint64_t vocab_fingerprint);

  ArchKind kind() const { return spec_.kind; }
  const ArchitectureSpec& spec() const { return spec_; }
  uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;

  long long parameter_count() const;

  // batch (N, 100) of token ids -> (N, 3) class probabilities. Rows sum to 1.
  // `rng` drives dropout and is required when training with a dropout
  // architecture; inference is deterministic.
  Tensor forward(const IdMatrix& batch, bool training = false, Rng* rng = nullptr) const;

  void zero_grads();
  std::vector<std::vector<float>> snapshot_values() const;
  void restore_values(const std::vector<std::vector<float>>& snapshot);

 private:
  Model() = default;
  Tensor& add_param(const std::string& name, Shape shape);

  Tensor forward_simple_lstm(const Tensor& embedded, bool training, Rng* rng) const;
  Tensor forward_advanced_lstm(const Tensor& embedded, bool training, Rng* rng) const;
  Tensor forward_custom_attention(const Tensor& embedded, bool training, Rng* rng) const;
  Tensor forward_transformer(const Tensor& embedded, bool training, Rng* rng) const;
  Tensor forward_cnn(const Tensor& embedded, bool training, Rng* rng) const;

  ArchitectureSpec spec_{};
  uint64_t vocab_fingerprint_ = 0;
  std::vector<Parameter> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Checkpoint = JSON manifest at <path> plus a raw little-endian float32 blob
// at <path>.bin, parameters concatenated in manifest order.
void save_checkpoint(const Model& model, const std::string& path);

// Loads and verifies the manifest; a truncated blob names the first
// unreadable parameter. When `expected_vocab` is given its fingerprint must
// match the checkpoint's.
Model load_checkpoint(const std::string& path, const Vocabulary* expected_vocab = nullptr);

}  // namespace claimsift
