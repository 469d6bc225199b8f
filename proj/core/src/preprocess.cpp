#include "claimsift/preprocess.hpp"

#include <algorithm>
#include <array>

namespace claimsift {
namespace uni {

namespace {

struct Range {
  uint32_t lo, hi;
};

// Letter ranges (coarse but conservative): Latin, Greek, Cyrillic, Armenian,
// Hebrew, Arabic, Devanagari core, Thai core, Georgian, kana, CJK, Hangul.
// Codepoints outside these ranges are treated as non-letters.
constexpr Range kLetterRanges[] = {
    {0x0041, 0x005A}, {0x0061, 0x007A}, {0x00AA, 0x00AA}, {0x00B5, 0x00B5},
    {0x00BA, 0x00BA}, {0x00C0, 0x00D6}, {0x00D8, 0x00F6}, {0x00F8, 0x02AF},
    {0x0370, 0x037D}, {0x037F, 0x037F}, {0x0386, 0x0386}, {0x0388, 0x03F5},
    {0x03F7, 0x0481}, {0x048A, 0x052F}, {0x0531, 0x0556}, {0x0561, 0x0587},
    {0x05D0, 0x05EA}, {0x05EF, 0x05F2}, {0x0620, 0x064A}, {0x0671, 0x06D3},
    {0x0904, 0x0939}, {0x093D, 0x093D}, {0x0958, 0x0961}, {0x0E01, 0x0E30},
    {0x0E32, 0x0E33}, {0x0E40, 0x0E46}, {0x10A0, 0x10C5}, {0x10D0, 0x10FA},
    {0x1E00, 0x1F15}, {0x1F18, 0x1F1D}, {0x1F20, 0x1F45}, {0x1F48, 0x1F4D},
    {0x1F50, 0x1F7D}, {0x1F80, 0x1FB4}, {0x3041, 0x3096}, {0x30A1, 0x30FA},
    {0x3400, 0x4DBF}, {0x4E00, 0x9FFF}, {0xAC00, 0xD7A3}, {0xF900, 0xFA6D},
};

constexpr Range kSpaceRanges[] = {
    {0x0009, 0x000D}, {0x0020, 0x0020}, {0x0085, 0x0085}, {0x00A0, 0x00A0},
    {0x1680, 0x1680}, {0x2000, 0x200A}, {0x2028, 0x2029}, {0x202F, 0x202F},
    {0x205F, 0x205F}, {0x3000, 0x3000},
};

bool in_ranges(uint32_t cp, const Range* ranges, size_t count) {
  for (size_t i = 0; i < count; ++i) {
    if (cp < ranges[i].lo) return false;  // ranges sorted ascending
    if (cp <= ranges[i].hi) return true;
  }
  return false;
}

}  // namespace

bool is_letter(uint32_t cp) {
  return in_ranges(cp, kLetterRanges, std::size(kLetterRanges));
}

bool is_space(uint32_t cp) {
  return in_ranges(cp, kSpaceRanges, std::size(kSpaceRanges));
}

uint32_t to_lower(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0x80) return cp;
  // Latin-1 supplement (except the multiplication sign).
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
  // Latin Extended-A: alternating pairs in four runs.
  if (cp == 0x0130) return 0x0069;  // dotted capital I
  if (cp == 0x0178) return 0x00FF;  // Y with diaeresis
  if ((cp >= 0x0100 && cp <= 0x0137) || (cp >= 0x014A && cp <= 0x0177)) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if ((cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E)) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  // Greek.
  if (cp == 0x0386) return 0x03AC;
  if (cp >= 0x0388 && cp <= 0x038A) return cp + 0x25;
  if (cp == 0x038C) return 0x03CC;
  if (cp == 0x038E || cp == 0x038F) return cp + 0x3F;
  if ((cp >= 0x0391 && cp <= 0x03A1) || (cp >= 0x03A3 && cp <= 0x03AB)) return cp + 0x20;
  // Cyrillic.
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
  return cp;
}

std::vector<uint32_t> decode_utf8(const std::string& s) {
  std::vector<uint32_t> cps;
  cps.reserve(s.size());
  size_t i = 0;
  const auto* bytes = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    unsigned char b = bytes[i];
    uint32_t cp = 0xFFFD;
    size_t len = 1;
    if (b < 0x80) {
      cp = b;
    } else if ((b & 0xE0) == 0xC0 && i + 1 < s.size() && (bytes[i + 1] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b & 0x1F) << 6) | (bytes[i + 1] & 0x3F);
      len = 2;
    } else if ((b & 0xF0) == 0xE0 && i + 2 < s.size() && (bytes[i + 1] & 0xC0) == 0x80 &&
               (bytes[i + 2] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b & 0x0F) << 12) |
           (static_cast<uint32_t>(bytes[i + 1] & 0x3F) << 6) | (bytes[i + 2] & 0x3F);
      len = 3;
    } else if ((b & 0xF8) == 0xF0 && i + 3 < s.size() && (bytes[i + 1] & 0xC0) == 0x80 &&
               (bytes[i + 2] & 0xC0) == 0x80 && (bytes[i + 3] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b & 0x07) << 18) |
           (static_cast<uint32_t>(bytes[i + 1] & 0x3F) << 12) |
           (static_cast<uint32_t>(bytes[i + 2] & 0x3F) << 6) | (bytes[i + 3] & 0x3F);
      len = 4;
    }
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

std::string encode_utf8(const std::vector<uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace uni

namespace {

using uni::is_letter;
using uni::is_space;

bool starts_with(const std::vector<uint32_t>& cps, size_t at, const char* prefix) {
  for (size_t i = 0; prefix[i]; ++i) {
    if (at + i >= cps.size() || cps[at + i] != static_cast<uint32_t>(prefix[i])) return false;
  }
  return true;
}

// Stage 2: delete every substring matching http\S+ or www\S+ (https\S+ is
// subsumed by http\S+). Matches require at least one non-space character
// after the prefix, like the regex's \S+.
std::vector<uint32_t> delete_urls(const std::vector<uint32_t>& cps) {
  std::vector<uint32_t> out;
  out.reserve(cps.size());
  size_t i = 0;
  while (i < cps.size()) {
    size_t prefix = 0;
    if (starts_with(cps, i, "http")) {
      prefix = 4;
    } else if (starts_with(cps, i, "www")) {
      prefix = 3;
    }
    if (prefix > 0 && i + prefix < cps.size() && !is_space(cps[i + prefix])) {
      i += prefix;
      while (i < cps.size() && !is_space(cps[i])) ++i;
      continue;
    }
    out.push_back(cps[i]);
    ++i;
  }
  return out;
}

// Stage 3: delete whole whitespace-delimited tokens beginning with @ or #.
std::vector<uint32_t> delete_tagged_tokens(const std::vector<uint32_t>& cps) {
  std::vector<uint32_t> out;
  out.reserve(cps.size());
  size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i])) {
      out.push_back(cps[i]);
      ++i;
      continue;
    }
    size_t end = i;
    while (end < cps.size() && !is_space(cps[end])) ++end;
    if (cps[i] != '@' && cps[i] != '#') {
      out.insert(out.end(), cps.begin() + static_cast<long>(i), cps.begin() + static_cast<long>(end));
    }
    i = end;
  }
  return out;
}

}  // namespace

NormalizedText normalize(const std::string& raw) {
  std::vector<uint32_t> cps = uni::decode_utf8(raw);
  for (auto& cp : cps) cp = uni::to_lower(cp);
  cps = delete_urls(cps);
  cps = delete_tagged_tokens(cps);

  // Stage 4 keeps letters and whitespace only; stage 5 collapses whitespace.
  std::vector<uint32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (uint32_t cp : cps) {
    if (is_space(cp)) {
      pending_space = !out.empty();
    } else if (is_letter(cp)) {
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
      out.push_back(cp);
    }
  }
  return NormalizedText{uni::encode_utf8(out)};
}

LabeledCorpus normalize_corpus(const LabeledCorpus& corpus, DropReport* report) {
  LabeledCorpus out;
  DropReport local;
  local.input_documents = static_cast<long long>(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    NormalizedText text = normalize(doc.text);
    if (text.empty()) {
      local.dropped += 1;
      local.dropped_ids.push_back(doc.id);
      continue;
    }
    Document copy = doc;
    copy.text = text.value;
    out.add(std::move(copy));
    local.kept += 1;
  }
  if (report) *report = std::move(local);
  return out;
}

}  // namespace claimsift
