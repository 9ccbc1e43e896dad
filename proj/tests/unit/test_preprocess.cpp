#include <string>
#include <vector>

#include "deid/preprocess.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace deid;

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) out.push_back(t.text);
  return out;
}

std::vector<std::size_t> sentence_sizes(const std::string& text, const SentenceSplitter& splitter = RuleSentenceSplitter()) {
  auto tokens = tokenize(text);
  std::vector<std::size_t> sizes;
  for (const auto& s : split_sentences(tokens, text, splitter)) sizes.push_back(s.size());
  return sizes;
}

}  // namespace

TEST_CASE("tokenizer splits glued clinical text") {
  using V = std::vector<std::string>;
  CHECK(words("a26 yo man") == V{"a", "26", "yo", "man"});
  CHECK(words("09/14/2067CPT") == V{"09/14/2067", "CPT"});
  CHECK(words("10/6/2098SOS") == V{"10/6/2098", "SOS"});
  CHECK(words("hcuutaj@bdd.comOther") == V{"hcuutaj@bdd.com", "Other"});
  CHECK(words("USMeaningful") == V{"US", "Meaningful"});
  CHECK(words("WhalenChief") == V{"Whalen", "Chief"});
  CHECK(words("109 121 1400Prior") == V{"109", "121", "1400", "Prior"});
  CHECK(words("").empty());
  CHECK(words("  \n\t ").empty());
}

TEST_CASE("punctuation becomes separate tokens") {
  using V = std::vector<std::string>;
  CHECK(words("Dr. Vincent, (MRN)") == V{"Dr", ".", "Vincent", ",", "(", "MRN", ")"});
  CHECK(words("x-ray") == V{"x", "-", "ray"});
}

TEST_CASE("phone numbers stay whole") {
  const auto w = words("call 617-555-1234 now");
  CHECK(std::find(w.begin(), w.end(), "617-555-1234") != w.end());
}

TEST_CASE("digit followed by one letter is not split") {
  using V = std::vector<std::string>;
  CHECK(words("5mg") == V{"5", "mg"});
  CHECK(words("3x") == V{"3x"});
}

TEST_CASE("token offsets slice back to the token text") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const std::string text = oracle::random_sentence(rng, 1 + rng.below(20));
    const std::u32string cps = decode_utf8(text);
    for (const auto& t : tokenize(text)) {
      CHECK(encode_utf8(cps.substr(t.start, t.end - t.start)) == t.text);
    }
  }
}

TEST_CASE("non-ASCII text keeps character offsets") {
  const auto tokens = tokenize(std::string_view("naïve État"));
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[1].start == 6);
  CHECK(tokens[1].end == 10);
}

TEST_CASE("sentence splitting") {
  CHECK(sentence_sizes("Dr. Vincent arrived.") == std::vector<std::size_t>{5});
  CHECK(sentence_sizes("He left. She stayed.") == std::vector<std::size_t>{3, 3});
  CHECK(sentence_sizes("first line\nsecond line") == std::vector<std::size_t>{2, 2});
  CHECK(sentence_sizes("Seen by J. Smith today.") == std::vector<std::size_t>{7});
  CHECK(sentence_sizes("Is it? yes it is.") == std::vector<std::size_t>{7});
}

TEST_CASE("long sentences are cut at the cap") {
  std::string text;
  for (int i = 0; i < 450; ++i) text += (i ? " w" : "w");
  CHECK(sentence_sizes(text) == std::vector<std::size_t>{200, 200, 50});
  CHECK(sentence_sizes(text, RuleSentenceSplitter(AbbreviationList::defaults(), 100)) ==
        std::vector<std::size_t>{100, 100, 100, 100, 50});
}

TEST_CASE("preprocess assigns sentence indices that partition the tokens") {
  Document doc;
  doc.id = "x";
  doc.text = "Pt seen. Dr. Whalen called\n09/14/2067CPT done.";
  preprocess(doc);
  REQUIRE(!doc.sentences.empty());
  std::size_t next = 0;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& sent = doc.sentences[s];
    CHECK(sent.first == next);
    for (std::size_t t = sent.first; t <= sent.last; ++t) CHECK(doc.tokens[t].sentence_index == s);
    CHECK(sent.start == doc.tokens[sent.first].start);
    CHECK(sent.end == doc.tokens[sent.last].end);
    next = sent.last + 1;
  }
  CHECK(next == doc.tokens.size());
  CHECK(dump_tokens(doc).rfind("ID x\n0 0 2 Pt\n", 0) == 0);
}

TEST_CASE("abbreviation list loads and skips comments") {
  const auto path = std::filesystem::temp_directory_path() / "deid_unit_abbrev.txt";
  write_file(path.string(), "# comment\n\nfoo.\nBar.\n");
  const auto list = AbbreviationList::load(path);
  CHECK(list.size() == 2);
  CHECK(list.contains("foo."));
  CHECK(list.contains("bar."));
  CHECK(sentence_sizes("See foo. Next", RuleSentenceSplitter(list)) == std::vector<std::size_t>{4});
}
