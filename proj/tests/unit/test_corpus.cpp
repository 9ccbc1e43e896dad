#include <filesystem>
#include <set>
#include <sstream>

#include "deid/common.hpp"
#include "deid/corpus.hpp"
#include "deid/preprocess.hpp"
#include "doctest.h"

using namespace deid;
namespace fs = std::filesystem;

namespace {

std::string record(const std::string& text, const std::string& spans) {
  return "ID d1\nTEXT " + std::to_string(text.size()) + "\n" + text + "\n" + spans;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("deid_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal record parses") {
  const auto doc = parse_record(record("ZIP 02138", "SPAN 4 9 LOCATION ZIP\n"));
  CHECK(doc.id == "d1");
  CHECK(doc.text == "ZIP 02138");
  REQUIRE(doc.gold.size() == 1);
  CHECK(doc.gold[0] == PhiSpan{4, 9, Subcategory::Zip});
  CHECK(doc.slice(4, 9) == "02138");
}

TEST_CASE("span past the end of the text is rejected") {
  CHECK_THROWS_AS(parse_record(record("ZIP 02138", "SPAN 4 10 LOCATION ZIP\n")), SpanBoundsError);
}

TEST_CASE("overlapping spans are rejected") {
  CHECK_THROWS_AS(parse_record(record("abcdefghij", "SPAN 0 5 NAME PATIENT\nSPAN 3 8 NAME DOCTOR\n")), OverlapError);
}

TEST_CASE("category must agree with subcategory") {
  CHECK_THROWS_AS(parse_record(record("ZIP 02138", "SPAN 4 9 NAME ZIP\n")), DataError);
}

TEST_CASE("offsets count characters, not bytes") {
  const std::string text = "État Boston";
  const auto doc = parse_record(record(text, "SPAN 5 11 LOCATION CITY\n"));
  CHECK(doc.char_length() == 11);
  CHECK(doc.slice(5, 11) == "Boston");
}

TEST_CASE("text may contain newlines and keyword-like lines") {
  const std::string text = "line one\nSPAN 0 1 NAME PATIENT\nend";
  const auto doc = parse_record(record(text, ""));
  CHECK(doc.text == text);
  CHECK(doc.gold.empty());
}

TEST_CASE("SYS lines are read only for system output") {
  const std::string contents = record("ZIP 02138", "SYS 4 9 LOCATION ZIP\n");
  CHECK(parse_record(contents, SpanKind::Gold).gold.empty());
  CHECK(parse_record(contents, SpanKind::System).gold.size() == 1);
}

TEST_CASE("header comments are accepted and serialization round-trips") {
  Document doc;
  doc.id = "note-7";
  doc.text = "Dr. Vincent saw Vincent\non 2072 winter";
  doc.gold = {{4, 11, Subcategory::Doctor}, {16, 23, Subcategory::Patient}, {27, 38, Subcategory::Date}};
  const std::string bytes = serialize_record(doc, SpanKind::System, {{"seed", "3"}});
  CHECK(bytes.rfind("# seed=3\n", 0) == 0);
  const auto back = parse_record(bytes, SpanKind::System);
  CHECK(back.id == doc.id);
  CHECK(back.text == doc.text);
  CHECK(back.gold == doc.gold);
  CHECK(serialize_record(back, SpanKind::System, {{"seed", "3"}}) == bytes);
}

TEST_CASE("truncated record is a parse error") {
  CHECK_THROWS_AS(parse_record("ID x\nTEXT 50\nshort\n"), ParseError);
  CHECK_THROWS_AS(parse_record("TEXT 3\nabc\n"), ParseError);
}

TEST_CASE("corpus stats") {
  SUBCASE("empty corpus") { CHECK(corpus_stats({}) == CorpusStats{}); }
  SUBCASE("duplicate surface counts once as unique") {
    Document doc;
    doc.id = "a";
    doc.text = "Dr. Vincent saw Vincent";
    doc.gold = {{4, 11, Subcategory::Doctor}, {16, 23, Subcategory::Patient}};
    preprocess(doc);
    const auto s = corpus_stats({doc});
    CHECK(s.note_count == 1);
    CHECK(s.phi_count == 2);
    CHECK(s.unique_phi_count == 1);
    CHECK(s.token_count == 5);
    CHECK(s.vocabulary_size == 4);
  }
  SUBCASE("unprocessed documents are refused") {
    Document doc;
    doc.id = "a";
    doc.text = "x";
    CHECK_THROWS_AS(corpus_stats({doc}), DataError);
  }
}

TEST_CASE("stats of a generated corpus match a recount of the emitted files") {
  SynthConfig config;
  config.document_count = 50;
  config.seed = 4;
  const fs::path dir = scratch_dir("stats");
  save_corpus(dir, generate_synthetic(config));

  // Recount straight from the files with a line-level reader.
  std::size_t notes = 0, phi = 0, tokens = 0;
  std::set<std::string> surfaces, vocab;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string bytes = read_file(entry.path().string());
    std::istringstream in(bytes);
    std::string line;
    std::getline(in, line);  // ID
    std::getline(in, line);  // TEXT n
    const std::size_t n = std::stoul(line.substr(5));
    const std::size_t body = bytes.find('\n', bytes.find('\n') + 1) + 1;
    const std::u32string text = decode_utf8(bytes.substr(body, n));
    for (const auto& t : tokenize(text)) {
      ++tokens;
      vocab.insert(to_lower_ascii(t.text));
    }
    std::istringstream rest(bytes.substr(body + n + 1));
    while (std::getline(rest, line)) {
      std::istringstream f(line);
      std::string kw;
      std::size_t a, b;
      f >> kw >> a >> b;
      ++phi;
      surfaces.insert(encode_utf8(text.substr(a, b - a)));
    }
    ++notes;
  }
  auto corpus = load_corpus(dir);
  preprocess(corpus);
  const auto s = corpus_stats(corpus);
  CHECK(s.note_count == notes);
  CHECK(s.phi_count == phi);
  CHECK(s.unique_phi_count == surfaces.size());
  CHECK(s.token_count == tokens);
  CHECK(s.vocabulary_size == vocab.size());
  CHECK(format_stats(s, "synth").find("#Unique PHI") != std::string::npos);
}

TEST_CASE("synthetic generator") {
  SUBCASE("zero documents") {
    SynthConfig config;
    CHECK(generate_synthetic(config).empty());
  }
  SUBCASE("deterministic") {
    SynthConfig config;
    config.document_count = 20;
    config.seed = 9;
    const auto a = generate_synthetic(config), b = generate_synthetic(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(serialize_record(a[i]) == serialize_record(b[i]));
  }
  SUBCASE("every weighted subcategory appears in 200 documents") {
    SynthConfig config;
    config.document_count = 200;
    std::set<Subcategory> seen;
    for (const auto& doc : generate_synthetic(config)) {
      for (const auto& s : doc.gold) seen.insert(s.subcategory);
    }
    for (const auto& [sub, w] : SynthConfig::default_weights()) {
      if (w > 0) CHECK_MESSAGE(seen.count(sub), to_string(sub));
    }
  }
  SUBCASE("gold spans fall on token boundaries") {
    SynthConfig config;
    config.document_count = 30;
    config.seed = 12;
    auto corpus = generate_synthetic(config);
    preprocess(corpus);
    for (const auto& doc : corpus) {
      std::set<std::size_t> starts, ends;
      for (const auto& t : doc.tokens) {
        starts.insert(t.start);
        ends.insert(t.end);
      }
      for (const auto& s : doc.gold) {
        CHECK(starts.count(s.start));
        CHECK(ends.count(s.end));
      }
    }
  }
  SUBCASE("unknown template set") {
    SynthConfig config;
    config.document_count = 1;
    config.template_set = "nope";
    CHECK_THROWS_AS(generate_synthetic(config), DataError);
  }
}

TEST_CASE("corpus directory round trip keeps file-name order") {
  const fs::path dir = scratch_dir("roundtrip");
  Corpus corpus(3);
  for (std::size_t i = 0; i < 3; ++i) {
    corpus[i].id = "doc" + std::to_string(i);
    corpus[i].text = "Seen by Dr. Whalen";
    corpus[i].gold = {{12, 18, Subcategory::Doctor}};
  }
  save_corpus(dir, corpus);
  const auto back = load_corpus(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == corpus[i].id);
    CHECK(back[i].gold == corpus[i].gold);
  }
}
