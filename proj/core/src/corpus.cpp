#include "claimsift/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "claimsift/rng.hpp"

namespace claimsift {

using nlohmann::json;

Label label_from_code(int code) {
  if (code < 0 || code >= kNumClasses) {
    throw DataError("label code " + std::to_string(code) + " outside {0,1,2}");
  }
  return static_cast<Label>(code);
}

const char* label_name(Label l) {
  switch (l) {
    case Label::Factual:
      return "Factual";
    case Label::Misleading:
      return "Misleading";
    case Label::Persuasive:
      return "Persuasive";
  }
  return "?";
}

Label label_from_name(const std::string& name) {
  std::string lower;
  lower.reserve(name.size());
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "factual") return Label::Factual;
  if (lower == "misleading") return Label::Misleading;
  if (lower == "persuasive") return Label::Persuasive;
  throw DataError("unknown label \"" + name + "\" (expected Factual, Misleading, or Persuasive)");
}

void LabeledCorpus::add(Document doc) {
  if (!doc.label) throw DataError("document \"" + doc.id + "\" has no label");
  counts[label_code(*doc.label)] += 1;
  documents.push_back(std::move(doc));
}

CorpusFormat corpus_format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "jsonl" || ext == "json") return CorpusFormat::Jsonl;
  if (ext == "csv") return CorpusFormat::Csv;
  throw DataError("cannot infer corpus format from \"" + path + "\" (use .jsonl or .csv)");
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

LabeledCorpus load_jsonl(std::istream& in, const std::string& path) {
  LabeledCorpus corpus;
  std::string line;
  long long line_no = 0;
  long long record = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!row.is_object() || !row.contains("text") || !row.contains("label")) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": record must be an object with text and label fields");
    }
    Document doc;
    doc.id = row.value("id", "doc-" + std::to_string(record));
    doc.text = row["text"].get<std::string>();
    if (blank(doc.text)) {
      throw DataError(path + ": record " + std::to_string(record) + " has empty text");
    }
    try {
      doc.label = label_from_name(row["label"].get<std::string>());
    } catch (const DataError& e) {
      throw DataError(path + ": record " + std::to_string(record) + ": " + e.what());
    }
    corpus.add(std::move(doc));
    ++record;
  }
  return corpus;
}

// Minimal RFC-4180 row reader: quoted fields, doubled quotes, embedded
// newlines inside quotes.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, long long& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

LabeledCorpus load_csv(std::istream& in, const std::string& path) {
  std::vector<std::string> header;
  long long line_no = 0;
  if (!read_csv_row(in, header, line_no)) throw DataError(path + ": no records");
  int id_col = -1, text_col = -1, label_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    std::string h = header[i];
    std::transform(h.begin(), h.end(), h.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (h == "id") id_col = static_cast<int>(i);
    if (h == "text") text_col = static_cast<int>(i);
    if (h == "label") label_col = static_cast<int>(i);
  }
  if (text_col < 0 || label_col < 0) {
    throw DataError(path + ":1: header must contain text and label columns");
  }
  LabeledCorpus corpus;
  std::vector<std::string> fields;
  long long record = 0;
  while (true) {
    long long row_line = line_no + 1;
    if (!read_csv_row(in, fields, line_no)) break;
    if (fields.size() == 1 && blank(fields[0])) continue;
    if (static_cast<int>(fields.size()) <= std::max(text_col, label_col)) {
      throw DataError(path + ":" + std::to_string(row_line) + ": malformed row, expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Document doc;
    doc.id = (id_col >= 0 && !fields[id_col].empty()) ? fields[id_col]
                                                      : "doc-" + std::to_string(record);
    doc.text = fields[text_col];
    if (blank(doc.text)) {
      throw DataError(path + ": record " + std::to_string(record) + " has empty text");
    }
    try {
      doc.label = label_from_name(fields[label_col]);
    } catch (const DataError& e) {
      throw DataError(path + ": record " + std::to_string(record) + ": " + e.what());
    }
    corpus.add(std::move(doc));
    ++record;
  }
  return corpus;
}

}  // namespace

LabeledCorpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file \"" + path + "\"");
  LabeledCorpus corpus =
      format == CorpusFormat::Jsonl ? load_jsonl(in, path) : load_csv(in, path);
  if (corpus.documents.empty()) throw DataError(path + ": no records");
  return corpus;
}

void save_corpus_jsonl(const LabeledCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  for (const auto& doc : corpus.documents) {
    json row = {{"id", doc.id}, {"text", doc.text}, {"label", label_name(*doc.label)}};
    out << row.dump() << "\n";
  }
  if (!out) throw Error("write failed for \"" + path + "\"");
}

std::array<ClassShare, kNumClasses> class_distribution(const LabeledCorpus& corpus) {
  const long long total = corpus.total();
  if (total == 0) throw DataError("class_distribution: empty corpus");
  std::array<ClassShare, kNumClasses> shares;
  for (int c = 0; c < kNumClasses; ++c) {
    shares[c].label = label_from_code(c);
    shares[c].count = corpus.counts[c];
    shares[c].percentage = 100.0 * static_cast<double>(corpus.counts[c]) / total;
  }
  return shares;
}

SplitPair stratified_split(const LabeledCorpus& corpus, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("stratified_split: ratio must be in (0,1), got " + std::to_string(ratio));
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (corpus.counts[c] > 0 && corpus.counts[c] < 2) {
      throw DataError(std::string("stratified_split: class ") +
                      label_name(label_from_code(c)) + " has fewer than 2 instances");
    }
  }
  if (corpus.total() == 0) throw DataError("stratified_split: empty corpus");

  // Per-class train quota: floor(count*ratio), then top up the classes with
  // the largest fractional remainders until the global round(total*ratio)
  // target is met.
  const long long train_target =
      std::llround(static_cast<double>(corpus.total()) * ratio);
  std::array<long long, kNumClasses> take{0, 0, 0};
  std::array<double, kNumClasses> remainder{0.0, 0.0, 0.0};
  long long assigned = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double exact = static_cast<double>(corpus.counts[c]) * ratio;
    take[c] = static_cast<long long>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(take[c]);
    assigned += take[c];
  }
  std::array<int, kNumClasses> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  for (int i = 0; assigned < train_target && i < kNumClasses; ++i) {
    const int c = order[i];
    if (take[c] < corpus.counts[c]) {
      take[c] += 1;
      assigned += 1;
    }
  }

  // Seeded shuffle per class decides membership; emission order stays the
  // corpus order so outputs are reproducible byte for byte.
  std::vector<char> in_train(corpus.documents.size(), 0);
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<size_t> members;
    for (size_t i = 0; i < corpus.documents.size(); ++i) {
      if (label_code(*corpus.documents[i].label) == c) members.push_back(i);
    }
    Rng rng(derive_seed(seed, static_cast<uint64_t>(c)));
    rng.shuffle(members);
    for (long long i = 0; i < take[c]; ++i) in_train[members[static_cast<size_t>(i)]] = 1;
  }

  SplitPair split;
  split.ratio = ratio;
  split.seed = seed;
  for (size_t i = 0; i < corpus.documents.size(); ++i) {
    (in_train[i] ? split.train : split.validation).add(corpus.documents[i]);
  }
  return split;
}

}  // namespace claimsift
