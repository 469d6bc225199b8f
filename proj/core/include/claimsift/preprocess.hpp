#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "claimsift/corpus.hpp"

namespace claimsift {

// Space-separated lowercase letter tokens; produced only by normalize().
struct NormalizedText {
  std::string value;

  bool empty() const { return value.empty(); }
};

// Five-stage normalization, applied in order:
//   1. lowercase
//   2. delete substrings matching http\S+, www\S+, https\S+
//   3. delete whole tokens beginning with @ or #
//   4. delete every non-letter character (punctuation, symbols, digits)
//   5. collapse whitespace runs to single spaces and trim
// Any input yields a (possibly empty) result; invalid UTF-8 bytes are
// dropped by stage 4.
NormalizedText normalize(const std::string& raw);

struct DropReport {
  long long input_documents = 0;
  long long kept = 0;
  long long dropped = 0;
  std::vector<std::string> dropped_ids;
};

// Normalizes every document; documents whose text normalizes to empty are
// dropped and recorded in the report.
LabeledCorpus normalize_corpus(const LabeledCorpus& corpus, DropReport* report = nullptr);

// Codepoint classification used by the normalizer. ASCII is exact; beyond
// ASCII the tables cover the common letter scripts and space characters, and
// anything unlisted counts as deletable by stage 4.
namespace uni {

std::vector<uint32_t> decode_utf8(const std::string& s);
std::string encode_utf8(const std::vector<uint32_t>& cps);
bool is_letter(uint32_t cp);
bool is_space(uint32_t cp);
uint32_t to_lower(uint32_t cp);

}  // namespace uni

}  // namespace claimsift
