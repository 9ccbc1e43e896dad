#include <algorithm>
#include <map>

#include "deid/common.hpp"
#include "deid/corpus.hpp"
#include "deid/features.hpp"
#include "deid/preprocess.hpp"
#include "doctest.h"

using namespace deid;

namespace {

bool has(const FeatureSet& fs, const std::string& f) { return std::find(fs.begin(), fs.end(), f) != fs.end(); }

std::vector<Token> sentence_of(std::string_view text) { return tokenize(text); }

}  // namespace

TEST_CASE("features of Vincent") {
  const auto gaz = Gazetteers::defaults();
  const auto f = token_features("Vincent", gaz);
  for (const char* want :
       {"lex:lower[0]=vincent", "lex:lemma[0]=vincent", "lex:shape[0]=Aaaaaaa", "lex:len[0]=7",
        "letter:has_letter[0]=1", "letter:has_cap[0]=1", "letter:init_cap[0]=1", "letter:all_caps[0]=0",
        "digit:has_digit[0]=0", "digit:all_digits[0]=0", "digit:has_punct[0]=0", "morph:pre2[0]=Vi",
        "morph:suf2[0]=nt", "morph:pre3[0]=Vin", "morph:suf3[0]=ent", "morph:pre4[0]=Vinc", "morph:suf4[0]=cent",
        "dict:country[0]=1", "dict:profession[0]=0", "dict:city[0]=0", "dict:state[0]=0"}) {
    CHECK_MESSAGE(has(f, want), want);
  }
}

TEST_CASE("single letter has no affix features") {
  const auto f = token_features("a", Gazetteers::defaults());
  CHECK(has(f, "lex:len[0]=1"));
  CHECK(std::none_of(f.begin(), f.end(), [](const std::string& s) { return s.rfind("morph:", 0) == 0; }));
}

TEST_CASE("date-shaped token") {
  const auto f = token_features("09/14/2067", Gazetteers::defaults());
  CHECK(has(f, "digit:has_digit[0]=1"));
  CHECK(has(f, "digit:digit_punct[0]=1"));
  CHECK(has(f, "digit:all_digits[0]=0"));
  CHECK(long_shape("09/14/2067") == "00p00p0000");
}

TEST_CASE("sidecar attributes add POS and chunk") {
  TokenAttributes attrs{"NNP", "B-NP"};
  const auto f = token_features("Vincent", Gazetteers::defaults(), &attrs);
  CHECK(has(f, "lex:pos[0]=NNP"));
  CHECK(has(f, "lex:chunk[0]=B-NP"));
}

TEST_CASE("group mask removes whole groups") {
  const auto f = token_features("Vincent", Gazetteers::defaults(), nullptr,
                                GroupMask::all().without(FeatureGroup::Morphological));
  CHECK(std::none_of(f.begin(), f.end(), [](const std::string& s) { return s.rfind("morph:", 0) == 0; }));
  CHECK(has(f, "lex:lower[0]=vincent"));
  CHECK(GroupMask::parse("lex,dict") == GroupMask::none().with(FeatureGroup::Lexical).with(FeatureGroup::Dictionary));
  CHECK(GroupMask::parse(GroupMask::all().to_string()) == GroupMask::all());
}

TEST_CASE("window features") {
  const auto gaz = Gazetteers::defaults();
  SUBCASE("left context of Vincent") {
    const auto s = sentence_of("Dr. Vincent");
    const auto f = window_features(s, 2, gaz);
    CHECK(has(f, "lex:lower[-2]=dr"));
    CHECK(has(f, "lex:lower[-1]=."));
    CHECK(has(f, "lex:lower[+1]=EOS"));
    CHECK(has(f, "lex:lower[+2]=EOS"));
  }
  SUBCASE("sentence start gets sentinels") {
    const auto s = sentence_of("Vincent saw Boston");
    const auto f = window_features(s, 0, gaz);
    CHECK(has(f, "lex:lower[-1]=BOS"));
    CHECK(has(f, "lex:lower[-2]=BOS"));
  }
  SUBCASE("middle of five long tokens has five times the per-offset count") {
    const auto s = sentence_of("Vincent visited Boston General yesterday");
    const auto f = window_features(s, 2, gaz);
    CHECK(f.size() == 5 * token_features("Boston", gaz).size());
  }
}

TEST_CASE("capital and dictionary codes") {
  const auto gaz = Gazetteers::defaults();
  CHECK(capital_code("Vincent") == "1110");
  CHECK(capital_code("USA") == "1111");
  CHECK(capital_code("2067") == "0000");
  CHECK(capital_bits("Vincent") == 0b1110);
  CHECK(dict_code("Vincent", gaz) == "0010");
  CHECK(dict_code("qwzx", gaz) == "0000");
  CHECK(dict_code("Boston", gaz) == "0100");
  CHECK(dict_code("nurse", gaz) == "1000");
}

TEST_CASE("gazetteers load from a directory") {
  const auto dir = std::filesystem::temp_directory_path() / "deid_unit_gaz";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file((dir / "city.txt").string(), "Springfield\n# comment\n\n");
  const auto gaz = Gazetteers::load_dir(dir);
  CHECK(gaz.contains(GazetteerKind::City, "springfield"));
  CHECK(gaz.size(GazetteerKind::Profession) == 0);
}

TEST_CASE("feature index") {
  Document doc;
  doc.id = "d";
  doc.text = "Vincent saw Vincent. Vincent left.";
  preprocess(doc);
  const Corpus corpus = {doc};
  const auto gaz = Gazetteers::defaults();
  const FeatureExtractor extractor(gaz);

  SUBCASE("cutoff 1 keeps every observed feature") {
    const auto index = build_index(corpus, 1, extractor);
    CHECK(index.size() == index.frequencies().size());
  }
  SUBCASE("a feature seen three times is dropped at cutoff 4") {
    const auto index = build_index(corpus, 4, extractor);
    CHECK(index.frequencies().at("lex:lower[0]=vincent") == 3);
    CHECK(!index.find("lex:lower[0]=vincent"));
    CHECK(build_index(corpus, 3, extractor).find("lex:lower[0]=vincent"));
  }
  SUBCASE("index is deterministic") {
    const auto a = build_index(corpus, 1, extractor), b = build_index(corpus, 1, extractor);
    REQUIRE(a.size() == b.size());
    for (std::uint32_t i = 0; i < a.size(); ++i) CHECK(a.name(i) == b.name(i));
  }
}

TEST_CASE("index size on a synthetic corpus matches a frequency count") {
  SynthConfig config;
  config.document_count = 200;
  auto corpus = generate_synthetic(config);
  preprocess(corpus);
  const auto gaz = Gazetteers::defaults();
  const FeatureExtractor extractor(gaz);
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      const std::span<const Token> tokens(doc.tokens.data() + s.first, s.size());
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        for (const auto& f : window_features(tokens, t, gaz)) ++freq[f];
      }
    }
  }
  const auto kept = std::count_if(freq.begin(), freq.end(), [](const auto& kv) { return kv.second >= 4; });
  CHECK(build_index(corpus, 4, extractor).size() == static_cast<std::size_t>(kept));
}

TEST_CASE("greedy group selection") {
  using G = int;
  SUBCASE("constant score keeps everything") {
    const auto r = greedy_select<G>({1, 2, 3}, [](const std::vector<G>&) { return 0.5; });
    CHECK(r.kept == std::vector<G>{1, 2, 3});
  }
  SUBCASE("only the helpful group survives") {
    const auto r = greedy_select<G>({1, 2, 3}, [](const std::vector<G>& set) {
      double score = 0.5;
      for (G g : set) score += g == 2 ? 0.2 : -0.1;
      return score;
    });
    CHECK(r.kept == std::vector<G>{2});
    CHECK(r.trace.size() == 4);
  }
  SUBCASE("no candidates") {
    const auto r = greedy_select<G>({}, [](const std::vector<G>&) { return 1.0; });
    CHECK(r.kept.empty());
  }
}
