#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "claimsift/error.hpp"

namespace claimsift {

inline constexpr int kNumClasses = 3;

// The three target classes. Codes are fixed: Factual=0, Misleading=1,
// Persuasive=2; checkpoints, reports, and confusion matrices all use this
// order.
enum class Label : int {
  Factual = 0,
  Misleading = 1,
  Persuasive = 2,
};

inline int label_code(Label l) { return static_cast<int>(l); }
Label label_from_code(int code);
const char* label_name(Label l);
// Case-insensitive; throws DataError on unknown names.
Label label_from_name(const std::string& name);

struct Document {
  std::string id;
  std::string text;
  std::optional<Label> label;
};

// Ordered labeled documents with per-class counts (indexed by label code).
struct LabeledCorpus {
  std::vector<Document> documents;
  std::array<long long, kNumClasses> counts{0, 0, 0};

  long long total() const { return counts[0] + counts[1] + counts[2]; }
  void add(Document doc);
};

enum class CorpusFormat { Jsonl, Csv };

// Infers Jsonl for ".jsonl"/".json", Csv for ".csv"; throws DataError
// otherwise.
CorpusFormat corpus_format_from_path(const std::string& path);

// Strict loader: any malformed row, unknown label, or empty text aborts the
// load with the offending record named. Documents keep file order; missing
// ids are generated as doc-<index>.
LabeledCorpus load_corpus(const std::string& path, CorpusFormat format);
void save_corpus_jsonl(const LabeledCorpus& corpus, const std::string& path);

struct ClassShare {
  Label label;
  long long count = 0;
  double percentage = 0.0;  // of total, in [0, 100]
};

// Per-label counts and percentages. Throws on an empty corpus.
std::array<ClassShare, kNumClasses> class_distribution(const LabeledCorpus& corpus);

struct SplitPair {
  LabeledCorpus train;
  LabeledCorpus validation;
  double ratio = 0.0;
  uint64_t seed = 0;
};

// Stratified split. Per-class train counts start at floor(count * ratio);
// leftover slots up to round(total * ratio) go to the classes with the
// largest remainders (ties by class code). Shuffling within a class is
// seeded; output partitions keep the corpus document order.
SplitPair stratified_split(const LabeledCorpus& corpus, double ratio, uint64_t seed);

}  // namespace claimsift
