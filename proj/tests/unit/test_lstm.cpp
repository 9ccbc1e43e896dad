#include <algorithm>
#include <cmath>

#include "deid/embeddings.hpp"
#include "deid/lstm.hpp"
#include "deid/preprocess.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace deid;

namespace {

LstmDims tiny_dims() {
  LstmDims d;
  d.char_dim = 4;
  d.char_hidden = 5;
  d.word_dim = 6;
  d.feature_dim = 2;
  d.word_hidden = 7;
  return d;
}

EmbeddingTable tiny_words() {
  EmbeddingTable t(6);
  t.set("saw", std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  t.set("boston", std::vector<double>{-0.1, 0.0, 0.1, 0.0, -0.2, 0.3});
  return t;
}

std::vector<char32_t> letters() {
  std::vector<char32_t> a;
  for (char32_t c = U'a'; c <= U'z'; ++c) a.push_back(c);
  for (char32_t c = U'A'; c <= U'Z'; ++c) a.push_back(c);
  return a;
}

LstmModel tiny_model(std::uint64_t seed = 3) {
  return LstmModel(tiny_dims(), tiny_words(), letters(), Gazetteers::defaults(), seed);
}

Document one_sentence_doc() {
  Document doc;
  doc.id = "one";
  doc.text = "Dr Vincent saw Mary in Boston";
  auto at = [&](const char* s) { return doc.text.find(s); };
  doc.gold = {{at("Vincent"), at("Vincent") + 7, Subcategory::Doctor},
              {at("Mary"), at("Mary") + 4, Subcategory::Patient},
              {at("Boston"), at("Boston") + 6, Subcategory::City}};
  preprocess(doc);
  return doc;
}

}  // namespace

TEST_CASE("lstm cell") {
  auto run = [](LstmParams& p, double x, double c) {
    Tape tape;
    const auto vars = bind(tape, p);
    const auto out = lstm_cell(tape, vars, tape.constant(std::vector<double>(p.input, x)),
                               tape.constant(std::vector<double>(p.hidden, 0.0)),
                               tape.constant(std::vector<double>(p.hidden, c)));
    return std::vector<double>{tape.scalar(out.z), tape.scalar(out.i), tape.scalar(out.c), tape.scalar(out.o),
                               tape.scalar(out.h)};
  };
  SUBCASE("zero parameters and inputs") {
    LstmParams p("t", 2, 1);
    CHECK(run(p, 0.0, 0.0) == std::vector<double>{0.0, 0.5, 0.0, 0.5, 0.0});
  }
  SUBCASE("scalar hand evaluation") {
    LstmParams p("t", 1, 1);
    p.Wz.value.data[0] = 1.0;
    const auto v = run(p, 1.0, 0.0);
    CHECK(v[0] == doctest::Approx(0.76159).epsilon(1e-5));
    CHECK(v[1] == 0.5);
    CHECK(v[2] == doctest::Approx(0.38080).epsilon(1e-5));
    CHECK(v[4] == doctest::Approx(0.5 * std::tanh(0.5 * std::tanh(1.0))).epsilon(1e-12));
  }
  SUBCASE("coupled gate keeps the old cell when i is near zero") {
    LstmParams p("t", 1, 1);
    p.bi.value.data[0] = -50.0;
    const auto v = run(p, 0.3, 0.8);
    CHECK(v[2] == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("parameter names") {
    LstmParams p("word.fwd", 3, 2);
    CHECK(p.parameters().size() == 11);
    CHECK(p.Vi.name == "word.fwd.Vi");
    CHECK(p.Wz.value.rows == 2);
    CHECK(p.Wz.value.cols == 3);
  }
}

TEST_CASE("character encoder of a one-letter word equals one cell step each way") {
  auto model = tiny_model();
  Tape tape;
  auto g = model.bind(tape);
  const auto got = tape.values(model.char_embed(g, "a"));
  REQUIRE(got.size() == 10);

  Parameter* E = model.find_parameter("char.embedding");
  REQUIRE(E != nullptr);
  const auto& alphabet = model.alphabet();
  const std::size_t row = 1 + (std::find(alphabet.begin(), alphabet.end(), U'a') - alphabet.begin());  // row 0: unknown
  const auto x = tape.row(*E, row);
  const auto zero = tape.constant(std::vector<double>(5, 0.0));
  const auto f = tape.values(lstm_cell(tape, g.char_fwd, x, zero, zero).h);
  const auto b = tape.values(lstm_cell(tape, g.char_bwd, x, zero, zero).h);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(got[k] == f[k]);
    CHECK(got[5 + k] == b[k]);
  }
}

TEST_CASE("word vectors") {
  auto model = tiny_model();
  SUBCASE("in-vocabulary word uses its table vector") {
    CHECK(model.word_vector("Saw") == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    Tape tape;
    auto g = model.bind(tape);
    const auto r = tape.values(model.represent(g, "saw"));
    CHECK(r.size() == tiny_dims().representation());
    CHECK(std::vector<double>(r.begin() + 10, r.begin() + 16) == model.word_vector("saw"));
  }
  SUBCASE("OOV vectors are cached, seeded and bounded") {
    const auto a = model.word_vector("zyzzyva");
    CHECK(a == model.word_vector("ZYZZYVA"));
    CHECK(a == tiny_model().word_vector("zyzzyva"));
    CHECK(a != tiny_model(4).word_vector("zyzzyva"));
    for (double v : a) CHECK(std::abs(v) <= std::sqrt(3.0 / 6.0));
  }
}

TEST_CASE("emissions") {
  auto model = tiny_model();
  const std::vector<std::string> tokens = {"Dr", "Vincent", "saw", "Boston"};
  SUBCASE("all-zero model gives uniform probabilities") {
    for (auto* p : model.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    const Tensor P = model.emission_matrix(tokens);
    CHECK(P.rows == 4);
    CHECK(P.cols == kLabelCount);
    for (double v : P.data) CHECK(v == doctest::Approx(1.0 / kLabelCount).epsilon(1e-12));
  }
  SUBCASE("inference is deterministic") {
    CHECK(model.emission_matrix(tokens).data == model.emission_matrix(tokens).data);
  }
  SUBCASE("logit mode feeds raw scores") {
    model.emission = EmissionMode::Logits;
    const Tensor P = model.emission_matrix(tokens);
    double row = 0.0;
    for (std::size_t y = 0; y < P.cols; ++y) row += P(0, y);
    CHECK(std::abs(row - 1.0) > 1e-6);
  }
}

TEST_CASE("decoding lattice") {
  Rng rng(7);
  SUBCASE("zero transitions reduce to the emission sum") {
    const Tensor P = oracle::random_tensor(rng, 4, 3);
    const Tensor M(5, 5);
    const std::vector<std::size_t> y = {0, 2, 1, 1};
    CHECK(lattice::sequence_score(P, M, y) == doctest::Approx(P(0, 0) + P(1, 2) + P(2, 1) + P(3, 1)));
  }
  SUBCASE("single position includes start and end") {
    const Tensor P = oracle::random_tensor(rng, 1, 3);
    const Tensor M = oracle::random_tensor(rng, 5, 5);
    const std::vector<std::size_t> y = {2};
    CHECK(lattice::sequence_score(P, M, y) == doctest::Approx(M(3, 2) + P(0, 2) + M(2, 4)));
  }
  SUBCASE("T=3, d=4 hand sum") {
    const Tensor P = oracle::random_tensor(rng, 3, 4);
    const Tensor M = oracle::random_tensor(rng, 6, 6);
    const std::vector<std::size_t> y = {3, 0, 2};
    const double want = M(4, 3) + P(0, 3) + M(3, 0) + P(1, 0) + M(0, 2) + P(2, 2) + M(2, 5);
    CHECK(lattice::sequence_score(P, M, y) == doctest::Approx(want).epsilon(1e-14));
  }
  SUBCASE("log Z and viterbi match enumeration") {
    for (int i = 0; i < 100; ++i) {
      const std::size_t T = 1 + rng.below(6), d = 1 + rng.below(5);
      const Tensor P = oracle::random_tensor(rng, T, d);
      const Tensor M = oracle::random_tensor(rng, d + 2, d + 2);
      const auto brute = oracle::lattice_brute(P, M);
      CHECK(std::abs(lattice::log_partition(P, M) - brute.log_z) < 1e-8);
      CHECK(lattice::viterbi(P, M) == brute.best);
    }
  }
  SUBCASE("closed form with zero transitions and constant rows") {
    const std::size_t T = 5, d = 4;
    Tensor P(T, d);
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double c = rng.uniform(-2, 2);
      sum += c;
      for (std::size_t y = 0; y < d; ++y) P(t, y) = c;
    }
    CHECK(lattice::log_partition(P, Tensor(d + 2, d + 2)) ==
          doctest::Approx(sum + T * std::log(static_cast<double>(d))).epsilon(1e-13));
  }
  SUBCASE("saturated gold sequence has near-zero loss") {
    Tensor P = oracle::random_tensor(rng, 4, 5, 0.5);
    const Tensor M = oracle::random_tensor(rng, 7, 7, 0.5);
    const std::vector<std::size_t> y = {1, 4, 0, 2};
    for (std::size_t t = 0; t < 4; ++t) P(t, y[t]) += 50.0;
    CHECK(lattice::log_partition(P, M) - lattice::sequence_score(P, M, y) < 1e-3);
  }
  SUBCASE("zero transitions decode per position") {
    const Tensor P = oracle::random_tensor(rng, 6, 4);
    std::vector<std::size_t> want;
    for (std::size_t t = 0; t < 6; ++t) {
      std::size_t best = 0;
      for (std::size_t y = 1; y < 4; ++y) {
        if (P(t, y) > P(t, best)) best = y;
      }
      want.push_back(best);
    }
    CHECK(lattice::viterbi(P, Tensor(6, 6)) == want);
  }
  SUBCASE("marginals sum to one per position") {
    const Tensor P = oracle::random_tensor(rng, 4, 3);
    const Tensor M = oracle::random_tensor(rng, 5, 5);
    const auto m = lattice::marginals(P, M);
    CHECK(m.log_z == doctest::Approx(lattice::log_partition(P, M)));
    for (std::size_t t = 0; t < 4; ++t) {
      double s = 0.0;
      for (std::size_t y = 0; y < 3; ++y) s += m.unary(t, y);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("lattice ablation decodes per token") {
  auto model = tiny_model();
  model.emission = EmissionMode::Logits;
  model.parts.lattice = false;
  Rng rng(8);
  for (auto& v : model.find_parameter("transition.M")->value.data) v = rng.uniform(-5, 5);
  const std::vector<std::string> tokens = {"Dr", "Vincent", "saw", "Boston"};
  const Tensor P = model.emission_matrix(tokens);
  const auto y = model.predict(tokens);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t k = 0; k < P.cols; ++k) CHECK(P(t, y[t]) >= P(t, k));
  }
}

TEST_CASE("training") {
  const Document doc = one_sentence_doc();
  LstmTrainConfig config;
  config.dims = tiny_dims();
  config.epochs = 50;
  config.dropout = 0.0;
  config.learning_rate = 0.05;
  config.emission = EmissionMode::Logits;

  SUBCASE("memorizes one sentence") {
    auto model = train_lstm({doc}, {}, tiny_words(), Gazetteers::defaults(), config);
    CHECK(tag(model, doc) == doc.gold);
  }
  SUBCASE("fixed seed gives bit-identical parameters") {
    config.epochs = 3;
    config.dropout = 0.5;
    const auto a = serialize_lstm(train_lstm({doc}, {}, tiny_words(), Gazetteers::defaults(), config));
    const auto b = serialize_lstm(train_lstm({doc}, {}, tiny_words(), Gazetteers::defaults(), config));
    CHECK(a == b);
  }
  SUBCASE("progress is reported once per epoch") {
    config.epochs = 4;
    std::size_t calls = 0;
    train_lstm({doc}, {doc}, tiny_words(), Gazetteers::defaults(), config, [&](const EpochReport& r) {
      ++calls;
      CHECK(r.epoch == calls);
      CHECK(std::isfinite(r.loss));
    });
    CHECK(calls == 4);
  }
}

TEST_CASE("tagging edge cases") {
  auto model = tiny_model();
  Document empty;
  empty.id = "e";
  preprocess(empty);
  CHECK(tag(model, empty).empty());

  for (auto* p : model.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  model.find_parameter("emission.b")->value.data[kOutside] = 5.0;
  CHECK(tag(model, one_sentence_doc()).empty());
}

TEST_CASE("binary model file round-trips") {
  auto model = tiny_model();
  model.emission = EmissionMode::Logits;
  model.parts.features = false;
  const std::string bytes = serialize_lstm(model);
  CHECK(bytes.rfind("DEIDLSTM", 0) == 0);
  auto back = parse_lstm(bytes);
  CHECK(serialize_lstm(back) == bytes);
  CHECK(back.emission == EmissionMode::Logits);
  CHECK(!back.parts.features);
  const std::vector<std::string> tokens = {"Dr", "Vincent"};
  CHECK(back.emission_matrix(tokens).data == model.emission_matrix(tokens).data);
  CHECK_THROWS_AS(parse_lstm(bytes.substr(0, bytes.size() / 2)), DataError);
}
