#include <doctest.h>

#include <string>
#include <vector>

#include "claimsift/rng.hpp"
#include "claimsift/tokenizer.hpp"
#include "support/tempdir.hpp"

using namespace claimsift;
using testsupport::TempDir;

namespace {

std::vector<NormalizedText> texts(std::initializer_list<const char*> list) {
  std::vector<NormalizedText> out;
  for (const char* s : list) out.push_back(NormalizedText{s});
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("tokenizer");

TEST_CASE("frequency ranking with first-occurrence tie break") {
  Vocabulary vocab = fit_vocabulary(texts({"a b a", "b c"}));
  // a and b tie at 2 occurrences; a occurs first.
  CHECK(vocab.id_for("a") == 2);
  CHECK(vocab.id_for("b") == 3);
  CHECK(vocab.id_for("c") == 4);
  CHECK(vocab.id_for("zz") == kOovId);
  CHECK(vocab.word_count() == 3);
}

TEST_CASE("vocabulary cap leaves room for the reserved ids") {
  std::vector<NormalizedText> many;
  std::string text;
  for (int i = 0; i < 10001; ++i) {
    text += "w" + std::to_string(i) + " ";
  }
  many.push_back(NormalizedText{text});
  Vocabulary vocab = fit_vocabulary(many);
  CHECK(vocab.word_count() == 9998);
}

TEST_CASE("refit determinism and empty input") {
  auto corpus = texts({"alpha beta beta", "gamma alpha", "delta"});
  Vocabulary a = fit_vocabulary(corpus);
  Vocabulary b = fit_vocabulary(corpus);
  CHECK(a.word_to_id() == b.word_to_id());
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK_THROWS_AS(fit_vocabulary({}), DataError);
}

TEST_CASE("text_to_sequence pads, truncates, and maps OOV") {
  Vocabulary vocab = fit_vocabulary(texts({"a a b"}));
  REQUIRE(vocab.id_for("a") == 2);
  REQUIRE(vocab.id_for("b") == 3);

  TokenSequence seq = text_to_sequence(vocab, NormalizedText{"a b zz"});
  CHECK(seq.ids[0] == 2);
  CHECK(seq.ids[1] == 3);
  CHECK(seq.ids[2] == kOovId);
  for (int i = 3; i < kSequenceLength; ++i) CHECK(seq.ids[i] == kPadId);

  std::string longtext;
  for (int i = 0; i < 150; ++i) longtext += (i % 2 == 0 ? "a " : "b ");
  TokenSequence truncated = text_to_sequence(vocab, NormalizedText{longtext});
  for (int i = 0; i < kSequenceLength; ++i) {
    CHECK(truncated.ids[i] == (i % 2 == 0 ? 2 : 3));
  }

  TokenSequence empty = text_to_sequence(vocab, NormalizedText{""});
  for (int i = 0; i < kSequenceLength; ++i) CHECK(empty.ids[i] == kPadId);
}

TEST_CASE("encode_corpus composes with text_to_sequence row-wise") {
  LabeledCorpus corpus;
  corpus.add(Document{"d0", "a b", Label::Factual});
  corpus.add(Document{"d1", "b c c", Label::Misleading});
  corpus.add(Document{"d2", "a zzz", Label::Persuasive});
  Vocabulary vocab = fit_vocabulary(texts({"a b", "b c c"}));

  EncodedCorpus encoded = encode_corpus(vocab, corpus);
  CHECK(encoded.sequences.rows == 3);
  CHECK(encoded.sequences.cols == kSequenceLength);
  CHECK(encoded.labels == std::vector<int32_t>{0, 1, 2});
  for (int i = 0; i < 3; ++i) {
    TokenSequence expected = text_to_sequence(vocab, NormalizedText{corpus.documents[i].text});
    for (int j = 0; j < kSequenceLength; ++j) {
      CHECK(encoded.sequences.at(i, j) == expected.ids[j]);
    }
  }
}

TEST_CASE("sequence invariants over random texts") {
  Rng rng(31);
  std::vector<NormalizedText> fit_texts;
  for (int i = 0; i < 40; ++i) {
    std::string text;
    const int words = 1 + static_cast<int>(rng.below(140));
    for (int w = 0; w < words; ++w) {
      if (w) text += ' ';
      text += "w" + std::to_string(rng.below(300));
    }
    fit_texts.push_back(NormalizedText{text});
  }
  Vocabulary vocab = fit_vocabulary(fit_texts);
  for (const auto& text : fit_texts) {
    TokenSequence seq = text_to_sequence(vocab, text);
    bool in_padding = false;
    for (int i = 0; i < kSequenceLength; ++i) {
      CHECK(seq.ids[i] >= 0);
      CHECK(seq.ids[i] < kVocabularyCap);
      if (seq.ids[i] == kPadId) in_padding = true;
      // Padding appears only as a contiguous suffix.
      if (in_padding) CHECK(seq.ids[i] == kPadId);
    }
  }
}

TEST_CASE("vocabulary JSON round trip preserves ids and fingerprint") {
  TempDir tmp("vocab");
  Vocabulary vocab = fit_vocabulary(texts({"alpha beta beta gamma", "alpha delta"}));
  vocab.save_json(tmp.file("vocab.json"));
  Vocabulary loaded = Vocabulary::load_json(tmp.file("vocab.json"));
  CHECK(loaded.word_to_id() == vocab.word_to_id());
  CHECK(loaded.fingerprint() == vocab.fingerprint());

  Vocabulary other = fit_vocabulary(texts({"different words entirely"}));
  CHECK(other.fingerprint() != vocab.fingerprint());
}

TEST_SUITE_END();
