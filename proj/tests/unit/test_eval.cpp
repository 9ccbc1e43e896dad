#include <cmath>

#include "deid/common.hpp"
#include "deid/eval.hpp"
#include "deid/preprocess.hpp"
#include "doctest.h"

using namespace deid;

namespace {

using Spans = std::vector<PhiSpan>;

// One document of `words` four-letter words; word k spans [5k, 5k+4).
Document word_doc(std::size_t words, const std::string& id = "d") {
  Document doc;
  doc.id = id;
  for (std::size_t k = 0; k < words; ++k) doc.text += (k ? " " : "") + std::string("Abcd");
  return doc;
}

PhiSpan word(std::size_t k, Subcategory s) { return {5 * k, 5 * k + 4, s}; }

}  // namespace

TEST_CASE("strict matching") {
  const Spans gold = {{10, 20, Subcategory::Date}, {30, 35, Subcategory::Zip}};
  CHECK(match_strict(gold, gold).total() == Counts{2, 0, 0});
  const auto boundary = match_strict(Spans{{10, 20, Subcategory::Date}}, Spans{{10, 22, Subcategory::Date}});
  CHECK(boundary[Subcategory::Date] == Counts{0, 1, 1});
  const auto type = match_strict(Spans{{0, 7, Subcategory::Patient}}, Spans{{0, 7, Subcategory::Doctor}});
  CHECK(type[Subcategory::Patient] == Counts{0, 0, 1});
  CHECK(type[Subcategory::Doctor] == Counts{0, 1, 0});
}

TEST_CASE("relaxed matching") {
  const Spans gold = {{10, 20, Subcategory::Date}};
  CHECK(match_relaxed(gold, Spans{{10, 22, Subcategory::Date}}).total() == Counts{1, 0, 0});
  CHECK(match_relaxed(gold, Spans{{10, 18, Subcategory::Date}}).total() == Counts{1, 0, 0});
  CHECK(match_relaxed(gold, Spans{{10, 23, Subcategory::Date}}).total() == Counts{0, 1, 1});
  CHECK(match_relaxed(gold, Spans{{11, 20, Subcategory::Date}}).total() == Counts{0, 1, 1});
  CHECK(match_relaxed(gold, Spans{{10, 20, Subcategory::City}}).total() == Counts{0, 1, 1});
}

TEST_CASE("token matching") {
  const std::string text = "seen 2072 winter today";
  const auto tokens = tokenize(text);
  const Spans gold = {{5, 16, Subcategory::Date}};
  const Spans split = {{5, 9, Subcategory::Date}, {10, 16, Subcategory::Date}};
  CHECK(match_token(gold, split, tokens).total() == Counts{2, 0, 0});
  CHECK(match_strict(gold, split).total().tp == 0);
  CHECK(match_token(gold, Spans{}, tokens).total() == Counts{0, 0, 2});
  CHECK(match_token(gold, gold, tokens).total() == Counts{2, 0, 0});
  CHECK(match_token(gold, Spans{{17, 22, Subcategory::Date}}, tokens).total() == Counts{0, 1, 2});
}

TEST_CASE("prf") {
  const Prf patient = prf({597, 61, 240});
  CHECK(std::round(patient.precision * 1e4) / 1e4 == 0.9073);
  CHECK(std::round(patient.recall * 1e4) / 1e4 == 0.7133);
  CHECK(std::round(patient.f1 * 1e4) / 1e4 == 0.7987);
  const Prf zip = prf({17, 0, 0});
  CHECK(zip.precision == 1.0);
  CHECK(zip.recall == 1.0);
  CHECK(zip.f1 == 1.0);
  const Prf none = prf({0, 0, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("aggregation") {
  const std::vector<Counts> one = {{3, 1, 2}};
  CHECK(aggregate(one, Aggregation::Micro).f1 == aggregate(one, Aggregation::Macro).f1);
  const std::vector<Counts> extremes = {{2, 0, 0}, {0, 1, 1}};
  CHECK(aggregate(extremes, Aggregation::Macro).f1 == doctest::Approx(0.5));
  const std::vector<Counts> two = {{1, 1, 0}, {1, 0, 1}};
  const auto micro = aggregate(two, Aggregation::Micro);
  const auto macro = aggregate(two, Aggregation::Macro);
  CHECK(micro.precision == doctest::Approx(2.0 / 3.0));
  CHECK(micro.recall == doctest::Approx(2.0 / 3.0));
  CHECK(micro.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(macro.f1 == doctest::Approx(2.0 / 3.0));
  const std::vector<Counts> with_empty = {{2, 0, 0}, {0, 0, 0}};
  CHECK(aggregate(with_empty, Aggregation::Macro).f1 == 1.0);
}

TEST_CASE("category sets") {
  const Spans spans = {{0, 4, Subcategory::Profession}, {5, 9, Subcategory::Country}, {10, 14, Subcategory::Patient}};
  CHECK(filter_category_set(spans, CategorySet::i2b2()) == spans);
  CHECK(filter_category_set(spans, CategorySet::hipaa()) == Spans{{10, 14, Subcategory::Patient}});
  CHECK(filter_category_set(spans, CategorySet("EMPTY", {})).empty());
  CHECK(CategorySet::i2b2().size() == 22);
  CHECK(CategorySet::hipaa().size() == 16);

  const auto sets = parse_category_sets("# names only\n[names]\nPATIENT\n; doctors too\nDOCTOR\n\n[Ids]\nIDNUM\n");
  CHECK(sets.count("I2B2"));
  const auto names = find_category_set(sets, "Names");
  CHECK(names.size() == 2);
  CHECK(names.contains(Subcategory::Doctor));
  CHECK_THROWS_AS(find_category_set(sets, "missing"), DataError);
  CHECK_THROWS_AS(parse_category_sets("[A]\nNOT_A_TYPE\n"), ParseError);
  CHECK_THROWS_AS(parse_category_sets("PATIENT\n"), ParseError);
}

TEST_CASE("randomization test") {
  SUBCASE("identical systems") {
    const std::vector<double> a = {0.2, 0.9, 0.5};
    const auto r = approx_randomization(a, a, 500, 7);
    CHECK(r.d == 0.0);
    CHECK(r.m == 500);
    CHECK(r.alpha == 1.0);
    CHECK(!r.significant());
  }
  SUBCASE("two records, exhaustive") {
    const std::vector<double> a = {1, 1}, b = {0, 0};
    const auto r = approx_randomization_exhaustive(a, b);
    CHECK(r.trials == 4);
    CHECK(r.m == 2);
    CHECK(r.alpha == doctest::Approx(0.6).epsilon(1e-15));
  }
  SUBCASE("fixed seed is reproducible") {
    const std::vector<double> a = {0.9, 0.8, 0.7, 0.95, 0.6, 0.85}, b = {0.7, 0.75, 0.72, 0.9, 0.4, 0.8};
    const auto x = approx_randomization(a, b, 2000, 3), y = approx_randomization(a, b, 2000, 3);
    CHECK(x.alpha == y.alpha);
    CHECK(x.m == y.m);
  }
  SUBCASE("clear difference is significant") {
    std::vector<double> a(30, 0.9), b(30, 0.1);
    CHECK(approx_randomization(a, b, 999, 1).significant());
  }
  SUBCASE("bad input") {
    const std::vector<double> a = {1, 2}, b = {1};
    CHECK_THROWS_AS(approx_randomization(a, b), std::invalid_argument);
    CHECK_THROWS_AS(approx_randomization(a, a, 0), std::invalid_argument);
  }
}

TEST_CASE("evaluate reproduces per-type rows from their counts") {
  // 837 gold PATIENT, 597 found, 61 spurious PATIENT; 17 ZIP all found.
  Document gold = word_doc(915), sys = word_doc(915);
  for (std::size_t k = 0; k < 837; ++k) gold.gold.push_back(word(k, Subcategory::Patient));
  for (std::size_t k = 0; k < 597; ++k) sys.gold.push_back(word(k, Subcategory::Patient));
  for (std::size_t k = 837; k < 898; ++k) sys.gold.push_back(word(k, Subcategory::Patient));
  for (std::size_t k = 898; k < 915; ++k) {
    gold.gold.push_back(word(k, Subcategory::Zip));
    sys.gold.push_back(word(k, Subcategory::Zip));
  }
  const auto report = evaluate({gold}, {sys}, MatchLevel::Strict, CategorySet::i2b2());
  const auto& patient = report.rows[index_of(Subcategory::Patient)];
  CHECK(patient.gold == 837);
  CHECK(patient.system == 658);
  CHECK(patient.agree == 597);
  CHECK(std::round(patient.scores.f1 * 1e4) / 1e4 == 0.7987);
  const auto& zip = report.rows[index_of(Subcategory::Zip)];
  CHECK(zip.scores.f1 == 1.0);
  const std::string text = format_report(report);
  CHECK(text.find("0.9073") != std::string::npos);
  CHECK(text.find("0.7133") != std::string::npos);
  CHECK(report_csv(report).find("PATIENT,0,837,658,597,") != std::string::npos);
}

TEST_CASE("evaluate edge cases") {
  Document gold = word_doc(4, "a");
  gold.gold = {word(0, Subcategory::Patient), word(2, Subcategory::Profession)};
  Document empty = word_doc(4, "a");

  SUBCASE("no system output") {
    const auto r = evaluate({gold}, {empty}, MatchLevel::Strict, CategorySet::i2b2());
    CHECK(r.micro.precision == 0.0);
    CHECK(r.micro.recall == 0.0);
  }
  SUBCASE("missing system document counts as empty") {
    const auto r = evaluate({gold}, {}, MatchLevel::Strict, CategorySet::i2b2());
    CHECK(r.total == Counts{0, 0, 2});
  }
  SUBCASE("identical output scores 1 at every level") {
    for (auto level : {MatchLevel::Strict, MatchLevel::Relaxed, MatchLevel::Token}) {
      const auto r = evaluate({gold}, {gold}, level, CategorySet::i2b2());
      CHECK(r.micro.f1 == 1.0);
      CHECK(r.macro.f1 == 1.0);
    }
  }
  SUBCASE("category set filters both sides and the rows") {
    const auto r = evaluate({gold}, {gold}, MatchLevel::Strict, CategorySet::hipaa());
    CHECK(r.total == Counts{1, 0, 0});
    CHECK(r.rows.size() == 16);
  }
  SUBCASE("training counts") {
    const auto r = evaluate({gold}, {gold}, MatchLevel::Strict, CategorySet::i2b2());
    CHECK(r.rows[0].train == 0);
    const Corpus train = {gold, gold};
    const auto t = evaluate({gold}, {gold}, MatchLevel::Strict, CategorySet::i2b2(), &train);
    CHECK(t.rows[index_of(Subcategory::Patient)].train == 2);
    CHECK(format_report(t, true).find("#Train") != std::string::npos);
  }
  SUBCASE("per-record scores feed the significance test") {
    Document other = word_doc(4, "b");
    other.gold = {word(1, Subcategory::Date)};
    const auto r = evaluate({gold, other}, {gold}, MatchLevel::Strict, CategorySet::i2b2());
    const auto f = per_record_scores(r, Metric::F1);
    CHECK(f == std::vector<double>{1.0, 0.0});
  }
}

TEST_CASE("overview covers both sets and three levels") {
  Document gold = word_doc(3);
  gold.gold = {word(0, Subcategory::Patient), word(2, Subcategory::Country)};
  Document sys = word_doc(3);
  sys.gold = {word(0, Subcategory::Patient)};
  preprocess(gold);
  const auto sets = parse_category_sets("[HIPAA]\nPATIENT\n");
  const std::string text = format_overview({gold}, {sys}, sets);
  CHECK(text.find("I2B2") != std::string::npos);
  CHECK(text.find("HIPAA") != std::string::npos);
  CHECK(text.find("relaxed") != std::string::npos);
  CHECK(text.find("token") != std::string::npos);
}
