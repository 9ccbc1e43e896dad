#include "deid/error_analysis.hpp"
#include "deid/eval.hpp"
#include "deid/preprocess.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace deid;

namespace {

using Spans = std::vector<PhiSpan>;

PhiSpan find_span(const std::string& text, const std::string& piece, Subcategory sub) {
  const auto t = decode_utf8(text), p = decode_utf8(piece);
  const std::size_t at = t.find(p);
  REQUIRE(at != std::u32string::npos);
  return {at, at + p.size(), sub};
}

ErrorKind only_kind(const Spans& gold, const Spans& sys) {
  const auto r = classify(gold, sys);
  REQUIRE(r.size() == 1);
  return r[0].kind;
}

}  // namespace

TEST_CASE("classification") {
  SUBCASE("correct and type") {
    CHECK(only_kind({{0, 7, Subcategory::Patient}}, {{0, 7, Subcategory::Patient}}) == ErrorKind::Correct);
    CHECK(only_kind({{0, 7, Subcategory::Patient}}, {{0, 7, Subcategory::Doctor}}) == ErrorKind::Type);
  }
  SUBCASE("short: trailing period left out") {
    const std::string text = "from Zenith Uni. today";
    const auto gold = find_span(text, "Zenith Uni.", Subcategory::Organization);
    const auto sys = find_span(text, "Zenith Uni", Subcategory::Organization);
    CHECK(only_kind({gold}, {sys}) == ErrorKind::ExtentShort);
  }
  SUBCASE("long: backslash swallowed") {
    const std::string text = "at Educare-Fargo\\ clinic";
    CHECK(only_kind({find_span(text, "Educare-Fargo", Subcategory::Hospital)},
                    {find_span(text, "Educare-Fargo\\", Subcategory::Hospital)}) == ErrorKind::ExtentLong);
  }
  SUBCASE("short and long across two entities") {
    const std::string text = "female Bob Evans buildings construction worker";
    const Spans gold = {find_span(text, "Bob Evans buildings", Subcategory::Organization),
                        find_span(text, "construction worker", Subcategory::Profession)};
    const Spans sys = {find_span(text, "buildings construction worker", Subcategory::Profession)};
    const auto r = classify(gold, sys, "note");
    REQUIRE(r.size() == 2);
    CHECK(r[0].kind == ErrorKind::ExtentShortLong);
    CHECK(r[0].gold == gold[1]);
    CHECK(r[0].document == "note");
    CHECK(r[1].kind == ErrorKind::Missing);
    CHECK(r[1].gold == gold[0]);
  }
  SUBCASE("two entities tagged as one is long") {
    const Spans gold = {{0, 4, Subcategory::City}, {5, 9, Subcategory::State}};
    CHECK(classify(gold, Spans{{0, 9, Subcategory::City}})[0].kind == ErrorKind::ExtentLong);
  }
  SUBCASE("pairing prefers the larger overlap, ties to the earlier gold") {
    const Spans gold = {{0, 4, Subcategory::City}, {6, 20, Subcategory::State}};
    auto r = classify(gold, Spans{{2, 12, Subcategory::State}});
    CHECK(r[0].gold == gold[1]);
    r = classify(Spans{{0, 4, Subcategory::City}, {6, 10, Subcategory::State}}, Spans{{2, 8, Subcategory::City}});
    CHECK(r[0].gold->subcategory == Subcategory::City);
  }
  SUBCASE("spurious and missing") {
    CHECK(only_kind({}, {{3, 9, Subcategory::Organization}}) == ErrorKind::Spurious);
    CHECK(only_kind({{3, 9, Subcategory::City}}, {}) == ErrorKind::Missing);
  }
  CHECK(to_string(ErrorKind::ExtentShortLong) == "EXTENT_SHORT_LONG");
}

TEST_CASE("corpus classification pairs documents by id") {
  Document g, s;
  g.id = s.id = "n1";
  g.text = s.text = "Seen by Whalen";
  g.gold = {{8, 14, Subcategory::Doctor}};
  s.gold = {{8, 14, Subcategory::Patient}};
  Document stray = s;
  stray.id = "other";
  const auto r = classify(Corpus{g}, Corpus{stray, s});
  REQUIRE(r.size() == 1);
  CHECK(r[0].kind == ErrorKind::Type);
  CHECK(r[0].document == "n1");
}

TEST_CASE("error matrix") {
  SUBCASE("all correct is diagonal") {
    const Spans spans = {{0, 2, Subcategory::Patient}, {3, 5, Subcategory::Date}, {6, 8, Subcategory::Date}};
    const auto m = error_matrix(classify(spans, spans));
    for (auto g : all_subcategories()) {
      for (auto s : all_subcategories()) {
        const std::size_t want = g == s ? (g == Subcategory::Date ? 2 : g == Subcategory::Patient ? 1 : 0) : 0;
        CHECK(m.cells[index_of(g)][index_of(s)] == want);
      }
    }
    CHECK(m.by_kind[0] == 3);
  }
  SUBCASE("PATIENT row with type confusions and misses") {
    // 597 correct, then type confusions, then 187 missing: 826 gold.
    const std::vector<std::pair<Subcategory, std::size_t>> row = {
        {Subcategory::Patient, 597}, {Subcategory::Doctor, 19}, {Subcategory::Profession, 1},
        {Subcategory::Hospital, 8},  {Subcategory::Organization, 2}, {Subcategory::City, 5},
        {Subcategory::State, 6},     {Subcategory::Country, 1}};
    Spans gold, sys;
    std::size_t k = 0;
    for (const auto& [sub, n] : row) {
      for (std::size_t i = 0; i < n; ++i, ++k) {
        gold.push_back({10 * k, 10 * k + 5, Subcategory::Patient});
        sys.push_back({10 * k, 10 * k + 5, sub});
      }
    }
    for (std::size_t i = 0; i < 187; ++i, ++k) gold.push_back({10 * k, 10 * k + 5, Subcategory::Patient});
    const auto m = error_matrix(classify(gold, sys));
    const auto& pt = m.cells[index_of(Subcategory::Patient)];
    CHECK(pt[index_of(Subcategory::Patient)] == 597);
    CHECK(pt[index_of(Subcategory::Doctor)] == 19);
    CHECK(m.missing[index_of(Subcategory::Patient)] == 187);
    CHECK(m.gold_total(Subcategory::Patient) == 826);
    CHECK(m.by_kind[static_cast<std::size_t>(ErrorKind::Type)] == 42);
    const std::string text = format_error_matrix(m);
    CHECK(text.find("826") != std::string::npos);
    CHECK(error_matrix_csv(m).find("PATIENT,DOCTOR,19") != std::string::npos);
    CHECK(!format_error_matrix(m, true).empty());
  }
  SUBCASE("totals reconcile with span counts and strict TP") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      const auto gold = oracle::random_spans(rng, 60, 6, 3);
      auto sys = oracle::random_spans(rng, 60, 6, 3);
      const auto m = error_matrix(classify(gold, sys));
      CHECK(m.by_kind[0] == match_strict(gold, sys).total().tp);
      std::size_t g_total = 0, s_total = 0;
      for (auto s : all_subcategories()) {
        g_total += m.gold_total(s);
        s_total += m.system_total(s);
      }
      CHECK(g_total == gold.size());
      CHECK(s_total == sys.size());
    }
  }
}

TEST_CASE("quantiles") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == 2.5);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  const std::vector<double> one = {7};
  CHECK(quantile(one, 0.3) == 7.0);
}

TEST_CASE("document frequency") {
  Corpus corpus;
  const std::vector<std::string> patients = {
      "Abel",  "Baker", "Cohen", "Dietz", "Evans", "Foley", "Grant", "Hayes", "Irwin", "Jones",
      "Klein", "Lopez", "Mason", "Nolan", "Olsen", "Perez", "Quinn", "Reyes", "Stone", "Tate",
      "Upton", "Vance", "Walsh", "Xiong", "Young", "Zhang", "Ames",  "Boyd",  "Cruz",  "Dunn",
      "Ellis", "Frost", "Gomez", "Hurst", "Ingram", "Joyce", "Kerr", "Lowe",  "Moss",  "Nash"};
  REQUIRE(patients.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    Document d;
    d.id = "n" + std::to_string(i);
    d.text = "Dr Whalen saw " + patients[i];
    d.gold = {{3, 9, Subcategory::Doctor}, {14, 14 + patients[i].size(), Subcategory::Patient}};
    corpus.push_back(d);
  }
  const auto rows = doc_frequency(corpus);
  const auto& doctor = rows[index_of(Subcategory::Doctor)];
  const auto& patient = rows[index_of(Subcategory::Patient)];
  CHECK(doctor.surfaces == 1);
  CHECK(doctor.median == 40.0);
  CHECK(patient.surfaces == 40);
  CHECK(patient.median == 1.0);
  CHECK(patient.max == 1.0);
  CHECK(rows[index_of(Subcategory::Zip)].surfaces == 0);
  const std::string text = format_doc_frequency(rows);
  CHECK(text.find("DOCTOR") != std::string::npos);
}
