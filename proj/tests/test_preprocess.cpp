#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "claimsift/preprocess.hpp"
#include "claimsift/rng.hpp"

using namespace claimsift;

namespace {

// Generator mixing words, urls, mentions, digits, punctuation, unicode, and
// odd whitespace.
std::string random_raw_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "Hello",     "WORLD",   "profit",    "Q3",        "12%",     "#tag",
      "@user",     "http://x.co/a", "www.example.com", "https://deep.link/x?y=1",
      "döner",     "ΚΑΛΟ",    "Москва",    "東京",       "...",     "!!!",
      "(note)",    "$1,000",  "a-b",       "co.",       "e.g.",    "2025",
      "“quote”",   "—",       "plain",     "text",      "N/A",     "C++",
  };
  static const std::vector<std::string> gaps = {" ", "  ", "\t", "\n", "   ", "   "};
  std::string out;
  const int n = 1 + static_cast<int>(rng.below(12));
  for (int i = 0; i < n; ++i) {
    if (i) out += gaps[rng.below(gaps.size())];
    out += pieces[rng.below(pieces.size())];
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("preprocess");

TEST_CASE("normalize hand-traced example") {
  CHECK(normalize("Check https://x.co NOW!! @user #deal 50% off").value == "check now off");
}

TEST_CASE("normalize fixed point and full deletion") {
  CHECK(normalize("hello world").value == "hello world");
  CHECK(normalize("@a #b 123 !!!").value == "");
  CHECK(normalize("").value == "");
}

TEST_CASE("stage order is fixed: digits and punctuation both vanish") {
  CHECK(normalize("50%").value == "");
  CHECK(normalize("50% off").value == "off");
}

TEST_CASE("urls require at least one character after the prefix") {
  CHECK(normalize("check www").value == "check www");
  CHECK(normalize("check wwww").value == "check");
  CHECK(normalize("the http protocol").value == "the http protocol");
}

TEST_CASE("golden file pairs") {
  std::ifstream in(std::string(CLAIMSIFT_TEST_DATA_DIR) + "/normalize_golden.jsonl");
  REQUIRE(in.good());
  std::string line;
  int pairs = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = nlohmann::json::parse(line);
    const std::string raw = row.at("raw").get<std::string>();
    const std::string expected = row.at("expected").get<std::string>();
    CAPTURE(raw);
    CHECK(normalize(raw).value == expected);
    ++pairs;
  }
  CHECK(pairs >= 20);
}

TEST_CASE("idempotence and output alphabet over random inputs") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const std::string raw = random_raw_text(rng);
    CAPTURE(raw);
    const NormalizedText once = normalize(raw);
    CHECK(normalize(once.value).value == once.value);
    // Every output character is a lowercase letter or a single space.
    auto cps = uni::decode_utf8(once.value);
    for (size_t j = 0; j < cps.size(); ++j) {
      const bool space = cps[j] == ' ';
      CHECK((space || uni::is_letter(cps[j])));
      CHECK(uni::to_lower(cps[j]) == cps[j]);
      if (space) {
        CHECK(j > 0);
        CHECK(j + 1 < cps.size());
        CHECK(cps[j - 1] != ' ');
      }
    }
  }
}

TEST_CASE("normalize_corpus drops empty results and reports them") {
  LabeledCorpus corpus;
  corpus.add(Document{"keep-1", "Solid numbers in Q3", Label::Factual});
  corpus.add(Document{"drop-1", "@mention 42 !!!", Label::Misleading});
  corpus.add(Document{"keep-2", "join our program", Label::Persuasive});
  DropReport report;
  LabeledCorpus out = normalize_corpus(corpus, &report);
  CHECK(out.documents.size() == 2);
  CHECK(report.input_documents == 3);
  CHECK(report.kept == 2);
  CHECK(report.dropped == 1);
  REQUIRE(report.dropped_ids.size() == 1);
  CHECK(report.dropped_ids[0] == "drop-1");

  // An already-normalized corpus passes through unchanged.
  DropReport again;
  LabeledCorpus twice = normalize_corpus(out, &again);
  CHECK(again.dropped == 0);
  REQUIRE(twice.documents.size() == out.documents.size());
  for (size_t i = 0; i < out.documents.size(); ++i) {
    CHECK(twice.documents[i].text == out.documents[i].text);
  }
}

TEST_SUITE_END();
