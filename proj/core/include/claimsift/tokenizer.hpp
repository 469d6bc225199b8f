#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimsift/corpus.hpp"
#include "claimsift/preprocess.hpp"
#include "claimsift/tensor.hpp"

namespace claimsift {

inline constexpr int kVocabularyCap = 10000;
inline constexpr int kSequenceLength = 100;
inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kOovId = 1;

// Frequency-ranked word index capped at kVocabularyCap ids. Id 0 is padding,
// id 1 the out-of-vocabulary token; content words occupy 2..cap-1 in
// descending corpus frequency, ties broken by first occurrence.
class Vocabulary {
 public:
  Vocabulary() = default;

  int32_t id_for(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? kOovId : it->second;
  }

  // Content words only (excludes the two reserved ids).
  size_t word_count() const { return word_to_id_.size(); }
  const std::unordered_map<std::string, int32_t>& word_to_id() const { return word_to_id_; }
  // Word for a content id (2..); reserved ids have no word.
  const std::string& word_for(int32_t id) const { return id_to_word_.at(id - 2); }

  // Stable 64-bit digest over the id-ordered word list and the reserved-id
  // header; checkpoints carry it to pin the vocabulary they were trained on.
  uint64_t fingerprint() const;

  void save_json(const std::string& path) const;
  static Vocabulary load_json(const std::string& path);

  static Vocabulary fit(const std::vector<NormalizedText>& texts);

 private:
  std::unordered_map<std::string, int32_t> word_to_id_;
  std::vector<std::string> id_to_word_;  // index 0 holds id 2
};

// Fits a vocabulary on normalized texts. Throws on an empty text list.
Vocabulary fit_vocabulary(const std::vector<NormalizedText>& texts);

struct TokenSequence {
  std::array<int32_t, kSequenceLength> ids{};
};

// Maps words to ids (unknown -> OOV), truncates to the first 100 tokens, and
// pads the tail with id 0.
TokenSequence text_to_sequence(const Vocabulary& vocab, const NormalizedText& text);

struct EncodedCorpus {
  IdMatrix sequences;           // N x 100
  std::vector<int32_t> labels;  // N label codes
};

// Row i of the matrix is document i; labels use the Label codec.
EncodedCorpus encode_corpus(const Vocabulary& vocab, const LabeledCorpus& corpus);

}  // namespace claimsift
