#include "claimsift/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace claimsift {

using nlohmann::json;

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(uint64_t& h, const void* data, size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

}  // namespace

Vocabulary Vocabulary::fit(const std::vector<NormalizedText>& texts) {
  if (texts.empty()) throw DataError("fit_vocabulary: empty text list");

  struct Entry {
    long long count = 0;
    long long first_seen = 0;
  };
  std::unordered_map<std::string, Entry> freq;
  long long position = 0;
  for (const auto& text : texts) {
    for (auto& word : split_words(text.value)) {
      auto [it, inserted] = freq.try_emplace(std::move(word));
      if (inserted) it->second.first_seen = position;
      it->second.count += 1;
      ++position;
    }
  }

  std::vector<const std::pair<const std::string, Entry>*> ranked;
  ranked.reserve(freq.size());
  for (const auto& kv : freq) ranked.push_back(&kv);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->second.count != b->second.count) return a->second.count > b->second.count;
    return a->second.first_seen < b->second.first_seen;
  });

  Vocabulary vocab;
  const size_t capacity = kVocabularyCap - 2;  // ids 0 and 1 are reserved
  const size_t keep = std::min(capacity, ranked.size());
  vocab.id_to_word_.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    vocab.word_to_id_.emplace(ranked[i]->first, static_cast<int32_t>(i + 2));
    vocab.id_to_word_.push_back(ranked[i]->first);
  }
  return vocab;
}

Vocabulary fit_vocabulary(const std::vector<NormalizedText>& texts) {
  return Vocabulary::fit(texts);
}

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = kFnvOffset;
  const int32_t header[3] = {kVocabularyCap, kPadId, kOovId};
  fnv_mix(h, header, sizeof(header));
  for (size_t i = 0; i < id_to_word_.size(); ++i) {
    const int32_t id = static_cast<int32_t>(i + 2);
    fnv_mix(h, id_to_word_[i].data(), id_to_word_[i].size());
    fnv_mix(h, &id, sizeof(id));
  }
  return h;
}

void Vocabulary::save_json(const std::string& path) const {
  json words = json::object();
  for (size_t i = 0; i < id_to_word_.size(); ++i) {
    words[id_to_word_[i]] = static_cast<int32_t>(i + 2);
  }
  json doc = {
      {"max_size", kVocabularyCap},
      {"pad_id", kPadId},
      {"oov_id", kOovId},
      {"words", std::move(words)},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << doc.dump(2) << "\n";
  if (!out) throw Error("write failed for \"" + path + "\"");
}

Vocabulary Vocabulary::load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary \"" + path + "\"");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed vocabulary JSON: " + e.what());
  }
  if (doc.value("max_size", -1) != kVocabularyCap || doc.value("pad_id", -1) != kPadId ||
      doc.value("oov_id", -1) != kOovId) {
    throw DataError(path + ": unexpected vocabulary header");
  }
  Vocabulary vocab;
  const auto& words = doc.at("words");
  std::vector<std::pair<int32_t, std::string>> by_id;
  by_id.reserve(words.size());
  for (auto it = words.begin(); it != words.end(); ++it) {
    by_id.emplace_back(it.value().get<int32_t>(), it.key());
  }
  std::sort(by_id.begin(), by_id.end());
  for (auto& [id, word] : by_id) {
    if (id != static_cast<int32_t>(vocab.id_to_word_.size()) + 2) {
      throw DataError(path + ": non-contiguous word ids");
    }
    vocab.word_to_id_.emplace(word, id);
    vocab.id_to_word_.push_back(std::move(word));
  }
  return vocab;
}

TokenSequence text_to_sequence(const Vocabulary& vocab, const NormalizedText& text) {
  TokenSequence seq;  // zero-initialized: all padding
  int at = 0;
  size_t i = 0;
  const std::string& s = text.value;
  while (i < s.size() && at < kSequenceLength) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) seq.ids[at++] = vocab.id_for(s.substr(start, i - start));
  }
  return seq;
}

EncodedCorpus encode_corpus(const Vocabulary& vocab, const LabeledCorpus& corpus) {
  const int n = static_cast<int>(corpus.documents.size());
  EncodedCorpus encoded;
  encoded.sequences = IdMatrix(n, kSequenceLength);
  encoded.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& doc = corpus.documents[i];
    TokenSequence seq = text_to_sequence(vocab, NormalizedText{doc.text});
    std::copy(seq.ids.begin(), seq.ids.end(), encoded.sequences.row(i));
    encoded.labels[i] = static_cast<int32_t>(label_code(*doc.label));
  }
  return encoded;
}

}  // namespace claimsift
