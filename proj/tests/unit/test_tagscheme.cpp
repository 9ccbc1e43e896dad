#include "deid/preprocess.hpp"
#include "deid/tagscheme.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace deid;

namespace {

LabelId L(Prefix p, Subcategory s) { return label_id({p, s}); }

}  // namespace

TEST_CASE("label ids are dense and round-trip through strings") {
  CHECK(kLabelCount == 89);
  CHECK(label_string(kOutside) == "O");
  for (LabelId id = 0; id < kLabelCount; ++id) {
    CHECK(label_id(label_at(id)) == id);
    CHECK(parse_label(label_string(id)) == id);
  }
  CHECK(label_string(L(Prefix::U, Subcategory::Doctor)) == "U-DOCTOR");
  CHECK(!parse_label("X-DOCTOR"));
}

TEST_CASE("encode") {
  SUBCASE("single token entity is U") {
    const auto tokens = tokenize(std::string_view("Vincent"));
    const std::vector<PhiSpan> spans = {{0, 7, Subcategory::Doctor}};
    CHECK(encode(tokens, spans) == std::vector<LabelId>{L(Prefix::U, Subcategory::Doctor)});
  }
  SUBCASE("multi token entity is B I I E") {
    const auto tokens = tokenize(std::string_view("State University of Wyoming"));
    const std::vector<PhiSpan> spans = {{0, 27, Subcategory::Organization}};
    CHECK(encode(tokens, spans) == std::vector<LabelId>{L(Prefix::B, Subcategory::Organization),
                                                        L(Prefix::I, Subcategory::Organization),
                                                        L(Prefix::I, Subcategory::Organization),
                                                        L(Prefix::E, Subcategory::Organization)});
  }
  SUBCASE("half a token is a misalignment") {
    const auto tokens = tokenize(std::string_view("Vincent"));
    const std::vector<PhiSpan> spans = {{0, 3, Subcategory::Doctor}};
    CHECK_THROWS_AS(encode(tokens, spans), MisalignmentError);
  }
  SUBCASE("other tokens are O") {
    const auto tokens = tokenize(std::string_view("Dr. Vincent saw"));
    const std::vector<PhiSpan> spans = {{4, 11, Subcategory::Doctor}};
    CHECK(encode(tokens, spans) ==
          std::vector<LabelId>{kOutside, kOutside, L(Prefix::U, Subcategory::Doctor), kOutside});
  }
}

TEST_CASE("decode") {
  const auto tokens = tokenize(std::string_view("2072 winter x"));
  SUBCASE("B E makes one span") {
    const std::vector<LabelId> labels = {L(Prefix::B, Subcategory::Date), L(Prefix::E, Subcategory::Date), kOutside};
    CHECK(decode(labels, tokens) == std::vector<PhiSpan>{{0, 11, Subcategory::Date}});
  }
  SUBCASE("lone I is repaired into a span") {
    const std::vector<LabelId> labels = {kOutside, L(Prefix::I, Subcategory::City), kOutside};
    CHECK(decode(labels, tokens) == std::vector<PhiSpan>{{5, 11, Subcategory::City}});
  }
  SUBCASE("U between O") {
    const std::vector<LabelId> labels = {kOutside, L(Prefix::U, Subcategory::Zip), kOutside};
    CHECK(decode(labels, tokens) == std::vector<PhiSpan>{{5, 11, Subcategory::Zip}});
  }
  SUBCASE("adjacent well-formed chunks stay separate") {
    const std::vector<LabelId> labels = {L(Prefix::U, Subcategory::Date), L(Prefix::U, Subcategory::Date), kOutside};
    CHECK(decode(labels, tokens) == std::vector<PhiSpan>{{0, 4, Subcategory::Date}, {5, 11, Subcategory::Date}});
  }
  SUBCASE("type change splits the run") {
    const std::vector<LabelId> labels = {L(Prefix::B, Subcategory::Date), L(Prefix::E, Subcategory::City), kOutside};
    CHECK(decode(labels, tokens) == std::vector<PhiSpan>{{0, 4, Subcategory::Date}, {5, 11, Subcategory::City}});
  }
  SUBCASE("all O") {
    const std::vector<LabelId> labels(3, kOutside);
    CHECK(decode(labels, tokens).empty());
  }
}

TEST_CASE("encode then decode is the identity on aligned spans") {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto tokens = tokenize(oracle::random_sentence(rng, 1 + rng.below(12)));
    const auto spans = oracle::random_aligned_spans(rng, tokens);
    CHECK(decode(encode(tokens, spans), tokens) == spans);
  }
}
