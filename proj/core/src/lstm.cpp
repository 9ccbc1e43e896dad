#include "deid/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "deid/common.hpp"
#include "deid/crf.hpp"

namespace deid {

// ---- lattice ----------------------------------------------------------------

namespace lattice {
namespace {

void check(const Tensor& P, const Tensor& M) {
  const std::size_t d = P.cols;
  if (M.rows != d + 2 || M.cols != d + 2) {
    throw std::invalid_argument("lattice: M must be " + std::to_string(d + 2) + "x" + std::to_string(d + 2));
  }
}

// Folds START into the start vector and END into the last unary row.
Lattice to_crf(const Tensor& P, const Tensor& M) {
  check(P, M);
  const std::size_t T = P.rows;
  const std::size_t d = P.cols;
  Lattice lat(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < d; ++y) lat.unary(t, y) = P(t, y);
  }
  for (std::size_t y = 0; y < d; ++y) {
    lat.start(y) = M(d, y);
    if (T > 0) lat.unary(T - 1, y) += M(y, d + 1);
    for (std::size_t j = 0; j < d; ++j) lat.trans(y, j) = M(y, j);
  }
  return lat;
}

}  // namespace

double sequence_score(const Tensor& P, const Tensor& M, std::span<const std::size_t> y) {
  check(P, M);
  if (y.size() != P.rows) throw std::invalid_argument("sequence_score: length mismatch");
  if (y.empty()) return 0.0;
  const std::size_t d = P.cols;
  double s = M(d, y[0]);
  for (std::size_t t = 0; t + 1 < y.size(); ++t) s += M(y[t], y[t + 1]);
  s += M(y.back(), d + 1);
  for (std::size_t t = 0; t < y.size(); ++t) s += P(t, y[t]);
  return s;
}

double log_partition(const Tensor& P, const Tensor& M) { return deid::log_partition(to_crf(P, M)); }

std::vector<std::size_t> viterbi(const Tensor& P, const Tensor& M) { return deid::viterbi(to_crf(P, M)); }

Marginals marginals(const Tensor& P, const Tensor& M) {
  const Lattice lat = to_crf(P, M);
  const std::size_t T = P.rows;
  const std::size_t d = P.cols;
  Marginals out;
  out.unary = Tensor(T, d);
  out.transitions = Tensor(d + 2, d + 2);
  if (T == 0) return out;
  const ForwardBackward fb = forward_backward(lat);
  out.log_z = fb.log_z;
  out.unary.data = unary_marginals(lat, fb);
  const auto inner = expected_transitions(lat, fb);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.transitions(i, j) = inner[i * d + j];
  }
  for (std::size_t y = 0; y < d; ++y) {
    out.transitions(d, y) = out.unary(0, y);
    out.transitions(y, d + 1) = out.unary(T - 1, y);
  }
  return out;
}

}  // namespace lattice

// ---- cell -------------------------------------------------------------------

LstmParams::LstmParams(const std::string& prefix, std::size_t in, std::size_t h)
    : input(in),
      hidden(h),
      Wz(prefix + ".Wz", h, in),
      Uz(prefix + ".Uz", h, h),
      bz(prefix + ".bz", h, 1),
      Wi(prefix + ".Wi", h, in),
      Ui(prefix + ".Ui", h, h),
      Vi(prefix + ".Vi", h, h),
      bi(prefix + ".bi", h, 1),
      Wo(prefix + ".Wo", h, in),
      Uo(prefix + ".Uo", h, h),
      Vo(prefix + ".Vo", h, h),
      bo(prefix + ".bo", h, 1) {}

std::vector<Parameter*> LstmParams::parameters() { return {&Wz, &Uz, &bz, &Wi, &Ui, &Vi, &bi, &Wo, &Uo, &Vo, &bo}; }

LstmVars bind(Tape& tape, LstmParams& p) {
  return {tape.param(p.Wz), tape.param(p.Uz), tape.param(p.bz), tape.param(p.Wi),
          tape.param(p.Ui), tape.param(p.Vi), tape.param(p.bi), tape.param(p.Wo),
          tape.param(p.Uo), tape.param(p.Vo), tape.param(p.bo)};
}

CellOutput lstm_cell(Tape& tape, const LstmVars& p, Tape::Var x, Tape::Var h_prev, Tape::Var c_prev) {
  CellOutput out{};
  out.z = tape.tanh(tape.add(tape.add(tape.matvec(p.Wz, x), tape.matvec(p.Uz, h_prev)), p.bz));
  out.i = tape.sigmoid(tape.add(
      tape.add(tape.add(tape.matvec(p.Wi, x), tape.matvec(p.Ui, h_prev)), tape.matvec(p.Vi, c_prev)), p.bi));
  out.c = tape.add(tape.mul(tape.one_minus(out.i), c_prev), tape.mul(out.i, out.z));
  out.o = tape.sigmoid(tape.add(
      tape.add(tape.add(tape.matvec(p.Wo, x), tape.matvec(p.Uo, h_prev)), tape.matvec(p.Vo, c_prev)), p.bo));
  out.h = tape.mul(out.o, tape.tanh(out.c));
  return out;
}

// ---- model ------------------------------------------------------------------

namespace {

void glorot(Parameter& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows + p.value.cols));
  for (auto& v : p.value.data) v = rng.uniform(-limit, limit);
}

}  // namespace

LstmModel::LstmModel(const LstmDims& dims, EmbeddingTable words, std::vector<char32_t> alphabet,
                     Gazetteers gazetteers, std::uint64_t seed, std::size_t labels)
    : dims_(dims),
      labels_(labels),
      seed_(seed),
      words_(std::move(words)),
      gazetteers_(std::move(gazetteers)),
      alphabet_(std::move(alphabet)) {
  if (words_.dim() != dims_.word_dim) {
    throw DataError("word embedding width " + std::to_string(words_.dim()) + " does not match " +
                    std::to_string(dims_.word_dim));
  }
  std::sort(alphabet_.begin(), alphabet_.end());
  alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
  for (std::size_t i = 0; i < alphabet_.size(); ++i) char_ids_[alphabet_[i]] = i + 1;

  char_emb_ = Parameter("char.embedding", alphabet_.size() + 1, dims_.char_dim);
  capital_emb_ = Parameter("capital.embedding", 16, dims_.feature_dim);
  dict_emb_ = Parameter("dict.embedding", 16, dims_.feature_dim);
  char_fwd_ = LstmParams("char.fwd", dims_.char_dim, dims_.char_hidden);
  char_bwd_ = LstmParams("char.bwd", dims_.char_dim, dims_.char_hidden);
  word_fwd_ = LstmParams("word.fwd", dims_.representation(), dims_.word_hidden);
  word_bwd_ = LstmParams("word.bwd", dims_.representation(), dims_.word_hidden);
  Wl_ = Parameter("emission.W", labels_, 2 * dims_.word_hidden);
  bl_ = Parameter("emission.b", labels_, 1);
  M_ = Parameter("transition.M", labels_ + 2, labels_ + 2);
  init(seed);
}

LstmModel::LstmModel(const LstmModel& other) { *this = other; }

LstmModel& LstmModel::operator=(const LstmModel& other) {
  if (this == &other) return *this;
  emission = other.emission;
  parts = other.parts;
  dropout = other.dropout;
  dims_ = other.dims_;
  labels_ = other.labels_;
  seed_ = other.seed_;
  words_ = other.words_;
  gazetteers_ = other.gazetteers_;
  alphabet_ = other.alphabet_;
  char_ids_ = other.char_ids_;
  char_emb_ = other.char_emb_;
  capital_emb_ = other.capital_emb_;
  dict_emb_ = other.dict_emb_;
  char_fwd_ = other.char_fwd_;
  char_bwd_ = other.char_bwd_;
  word_fwd_ = other.word_fwd_;
  word_bwd_ = other.word_bwd_;
  Wl_ = other.Wl_;
  bl_ = other.bl_;
  M_ = other.M_;
  std::lock_guard lock(other.oov_mutex_);
  oov_cache_ = other.oov_cache_;
  return *this;
}

void LstmModel::init(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1a57));
  for (Parameter* p : parameters()) {
    const bool bias = p->value.cols == 1;
    if (bias || p == &M_) continue;
    glorot(*p, rng);
  }
}

std::vector<Parameter*> LstmModel::parameters() {
  std::vector<Parameter*> out = {&char_emb_, &capital_emb_, &dict_emb_};
  for (LstmParams* l : {&char_fwd_, &char_bwd_, &word_fwd_, &word_bwd_}) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  out.push_back(&Wl_);
  out.push_back(&bl_);
  out.push_back(&M_);
  return out;
}

Parameter* LstmModel::find_parameter(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

std::size_t LstmModel::char_id(char32_t c) const {
  const auto it = char_ids_.find(c);
  return it == char_ids_.end() ? 0 : it->second;
}

LstmModel::Graph LstmModel::bind(Tape& tape) {
  Graph g;
  g.tape = &tape;
  g.char_fwd = deid::bind(tape, char_fwd_);
  g.char_bwd = deid::bind(tape, char_bwd_);
  g.word_fwd = deid::bind(tape, word_fwd_);
  g.word_bwd = deid::bind(tape, word_bwd_);
  g.Wl = tape.param(Wl_);
  g.bl = tape.param(bl_);
  g.M = tape.param(M_);
  return g;
}

Tape::Var LstmModel::char_embed(Graph& g, std::string_view word) {
  const auto cps = decode_utf8(word);
  if (cps.empty()) throw std::invalid_argument("char_embed: empty word");
  Tape& tape = *g.tape;
  const std::vector<double> zeros(dims_.char_hidden, 0.0);
  std::vector<Tape::Var> xs;
  xs.reserve(cps.size());
  for (char32_t c : cps) xs.push_back(tape.row(char_emb_, char_id(c)));

  Tape::Var h = tape.constant(zeros);
  Tape::Var c = tape.constant(zeros);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto out = lstm_cell(tape, g.char_fwd, xs[i], h, c);
    h = out.h;
    c = out.c;
  }
  const Tape::Var forward = h;
  h = tape.constant(zeros);
  c = tape.constant(zeros);
  for (std::size_t i = xs.size(); i-- > 0;) {
    const auto out = lstm_cell(tape, g.char_bwd, xs[i], h, c);
    h = out.h;
    c = out.c;
  }
  const std::array<Tape::Var, 2> parts_ = {forward, h};
  return tape.concat(parts_);
}

std::vector<double> LstmModel::word_vector(std::string_view token) const {
  const std::string lower = to_lower_ascii(token);
  if (parts.word_embedding) {
    if (const double* v = words_.find(lower)) return {v, v + words_.dim()};
  }
  std::lock_guard lock(oov_mutex_);
  auto it = oov_cache_.find(lower);
  if (it == oov_cache_.end()) {
    Rng rng(fnv1a64(lower) ^ seed_);
    const double limit = std::sqrt(3.0 / static_cast<double>(dims_.word_dim));
    std::vector<double> v(dims_.word_dim);
    for (auto& x : v) x = rng.uniform(-limit, limit);
    it = oov_cache_.emplace(lower, std::move(v)).first;
  }
  return it->second;
}

Tape::Var LstmModel::represent(Graph& g, std::string_view token) {
  Tape& tape = *g.tape;
  std::array<Tape::Var, 4> pieces{};
  pieces[0] = parts.char_embedding ? char_embed(g, token)
                                   : tape.constant(std::vector<double>(2 * dims_.char_hidden, 0.0));
  pieces[1] = tape.constant(word_vector(token));
  if (parts.features) {
    pieces[2] = tape.row(capital_emb_, capital_bits(token));
    pieces[3] = tape.row(dict_emb_, dict_bits(token, gazetteers_));
  } else {
    const std::vector<double> zeros(dims_.feature_dim, 0.0);
    pieces[2] = tape.constant(zeros);
    pieces[3] = tape.constant(zeros);
  }
  return tape.concat(pieces);
}

LstmModel::Emissions LstmModel::emissions(Graph& g, std::span<const std::string> tokens, Rng* rng) {
  if (tokens.empty()) throw std::invalid_argument("emissions: empty sentence");
  Tape& tape = *g.tape;
  const std::size_t T = tokens.size();
  std::vector<Tape::Var> reps;
  reps.reserve(T);
  for (const auto& tok : tokens) reps.push_back(represent(g, tok));

  const std::vector<double> zeros(dims_.word_hidden, 0.0);
  std::vector<Tape::Var> hf(T), hb(T);
  Tape::Var h = tape.constant(zeros);
  Tape::Var c = tape.constant(zeros);
  for (std::size_t t = 0; t < T; ++t) {
    const auto out = lstm_cell(tape, g.word_fwd, reps[t], h, c);
    h = hf[t] = out.h;
    c = out.c;
  }
  h = tape.constant(zeros);
  c = tape.constant(zeros);
  for (std::size_t t = T; t-- > 0;) {
    const auto out = lstm_cell(tape, g.word_bwd, reps[t], h, c);
    h = hb[t] = out.h;
    c = out.c;
  }

  Emissions e;
  const bool drop = rng != nullptr && parts.dropout && dropout > 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::array<Tape::Var, 2> both = {hf[t], hb[t]};
    Tape::Var ht = tape.concat(both);
    if (drop) ht = tape.dropout(ht, dropout, rng);
    const Tape::Var logits = tape.add(tape.matvec(g.Wl, ht), g.bl);
    e.logits.push_back(logits);
    e.scores.push_back(emission == EmissionMode::Probabilities ? tape.softmax(logits) : logits);
  }
  return e;
}

Tape::Var LstmModel::loss(Graph& g, const Emissions& e, std::span<const std::size_t> gold) {
  Tape& tape = *g.tape;
  const std::size_t T = e.scores.size();
  if (gold.size() != T) throw std::invalid_argument("loss: gold length mismatch");

  if (!parts.lattice) {
    std::vector<Tape::Var> terms;
    for (std::size_t t = 0; t < T; ++t) {
      terms.push_back(tape.sub(tape.log_sum_exp(e.logits[t]), tape.pick(e.logits[t], gold[t])));
    }
    return tape.sum(tape.concat(terms));
  }

  const std::size_t d = labels_;
  Tensor P(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    const double* v = tape.value(e.scores[t]);
    std::copy(v, v + d, &P.data[t * d]);
  }
  auto marg = lattice::marginals(P, M_.value);
  const double value = marg.log_z - lattice::sequence_score(P, M_.value, gold);
  const std::vector<Tape::Var> inputs = e.scores;
  const Tape::Var M = g.M;
  std::vector<std::size_t> y(gold.begin(), gold.end());
  const double one = value;
  return tape.custom(1, 1, std::span<const double>(&one, 1),
                     [inputs, M, y, marg = std::move(marg), d](Tape& tp, Tape::Var self) {
                       const double up = tp.grad(self)[0];
                       for (std::size_t t = 0; t < inputs.size(); ++t) {
                         double* gt = tp.grad(inputs[t]);
                         for (std::size_t k = 0; k < d; ++k) gt[k] += up * marg.unary(t, k);
                         gt[y[t]] -= up;
                       }
                       double* gm = tp.grad(M);
                       const std::size_t D = d + 2;
                       for (std::size_t k = 0; k < D * D; ++k) gm[k] += up * marg.transitions.data[k];
                       gm[d * D + y.front()] -= up;
                       for (std::size_t t = 0; t + 1 < y.size(); ++t) gm[y[t] * D + y[t + 1]] -= up;
                       gm[y.back() * D + d + 1] -= up;
                     });
}

Tensor LstmModel::emission_matrix(std::span<const std::string> tokens) {
  Tape tape;
  Graph g = bind(tape);
  const auto e = emissions(g, tokens, nullptr);
  Tensor P(tokens.size(), labels_);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const double* v = tape.value(e.scores[t]);
    std::copy(v, v + labels_, &P.data[t * labels_]);
  }
  return P;
}

std::vector<std::size_t> LstmModel::predict(std::span<const std::string> tokens) {
  if (tokens.empty()) return {};
  const Tensor P = emission_matrix(tokens);
  if (parts.lattice) return lattice::viterbi(P, M_.value);
  std::vector<std::size_t> y(P.rows);
  for (std::size_t t = 0; t < P.rows; ++t) {
    const double* row = &P.data[t * P.cols];
    y[t] = static_cast<std::size_t>(std::max_element(row, row + P.cols) - row);
  }
  return y;
}

// ---- tagging ----------------------------------------------------------------

std::vector<std::string> token_texts(const Document& doc, const Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (std::size_t i = s.first; i <= s.last; ++i) out.push_back(doc.tokens[i].text);
  return out;
}

std::vector<LabelId> predict_labels(LstmModel& model, const Document& doc) {
  if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
  std::vector<LabelId> out(doc.tokens.size(), kOutside);
  for (const auto& s : doc.sentences) {
    const auto y = model.predict(token_texts(doc, s));
    for (std::size_t i = 0; i < y.size(); ++i) out[s.first + i] = static_cast<LabelId>(y[i]);
  }
  return out;
}

std::vector<PhiSpan> tag(LstmModel& model, const Document& doc) {
  return decode(predict_labels(model, doc), doc.tokens);
}

// ---- training ---------------------------------------------------------------

namespace {

struct Example {
  std::vector<std::string> tokens;
  std::vector<std::size_t> gold;
};

double strict_micro_f1(LstmModel& model, const Corpus& docs) {
  std::size_t tp = 0, sys = 0, gold = 0;
  for (const auto& doc : docs) {
    const auto spans = tag(model, doc);
    sys += spans.size();
    gold += doc.gold.size();
    std::set<PhiSpan> g(doc.gold.begin(), doc.gold.end());
    for (const auto& s : spans) tp += g.count(s);
  }
  const double p = sys == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(sys);
  const double r = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

LstmModel train_lstm(const Corpus& train, const Corpus& valid, const EmbeddingTable& words,
                     const Gazetteers& gazetteers, const LstmTrainConfig& config,
                     const std::function<void(const EpochReport&)>& progress) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw std::invalid_argument("dropout must be in [0,1)");

  std::vector<Example> examples;
  std::set<char32_t> chars;
  for (const auto& doc : train) {
    if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
    const auto labels = encode(doc.tokens, doc.gold);
    for (const auto& s : doc.sentences) {
      Example ex;
      ex.tokens = token_texts(doc, s);
      for (std::size_t i = s.first; i <= s.last; ++i) ex.gold.push_back(labels[i]);
      for (const auto& t : ex.tokens) {
        for (char32_t c : decode_utf8(t)) chars.insert(c);
      }
      if (!ex.tokens.empty()) examples.push_back(std::move(ex));
    }
  }
  for (const auto& doc : valid) {
    if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
  }

  LstmModel model(config.dims, words, std::vector<char32_t>(chars.begin(), chars.end()), gazetteers,
                  mix_seed(config.seed, 0));
  model.emission = config.emission;
  model.parts = config.parts;
  model.dropout = config.dropout;

  const auto params = model.parameters();
  std::vector<Tensor> best;
  double best_f1 = -1.0;
  Rng rng(mix_seed(config.seed, 1));
  Tape tape;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t k : order) {
      const Example& ex = examples[k];
      for (Parameter* p : params) p->zero_grad();
      tape.clear();
      auto g = model.bind(tape);
      const auto e = model.emissions(g, ex.tokens, &rng);
      const Tape::Var loss = model.loss(g, e, ex.gold);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " on a sentence of " +
                             std::to_string(ex.tokens.size()) + " tokens");
      }
      total += value;
      tape.backward(loss);

      double sq = 0.0;
      for (Parameter* p : params) sq += dot(p->grad.data.data(), p->grad.data.data(), p->grad.size());
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch));
      const double factor = norm > config.clip ? config.clip / norm : 1.0;
      const double step = config.learning_rate * factor;
      for (Parameter* p : params) {
        double* v = p->value.data.data();
        const double* gr = p->grad.data.data();
        for (std::size_t i = 0; i < p->value.size(); ++i) v[i] -= step * gr[i];
      }
    }

    EpochReport report;
    report.epoch = epoch;
    report.loss = examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
    if (!valid.empty()) {
      report.valid_f1 = strict_micro_f1(model, valid);
      if (report.valid_f1 > best_f1) {
        best_f1 = report.valid_f1;
        report.best = true;
        best.clear();
        for (Parameter* p : params) best.push_back(p->value);
      }
    }
    if (progress) progress(report);
  }

  if (!best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  }
  for (Parameter* p : params) p->zero_grad();
  return model;
}

// ---- serialization ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'E', 'I', 'D', 'L', 'S', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_block(std::string& out, const std::string& name, std::uint8_t kind, std::uint64_t rows,
               std::uint64_t cols, const void* data, std::size_t bytes) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, kind);
  put<std::uint64_t>(out, rows);
  put<std::uint64_t>(out, cols);
  out.append(static_cast<const char*>(data), bytes);
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_block(out, name, 0, t.rows, t.cols, t.data.data(), t.data.size() * sizeof(double));
}

void put_text(std::string& out, const std::string& name, const std::string& text) {
  put_block(out, name, 1, text.size(), 1, text.data(), text.size());
}

struct Block {
  std::uint8_t kind = 0;
  Tensor tensor;
  std::string text;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("lstm model: truncated file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string parts_string(const LstmParts& p) {
  std::string s;
  s += p.char_embedding ? '1' : '0';
  s += p.word_embedding ? '1' : '0';
  s += p.features ? '1' : '0';
  s += p.dropout ? '1' : '0';
  s += p.lattice ? '1' : '0';
  return s;
}

}  // namespace

std::string serialize_lstm(const LstmModel& cm) {
  auto& m = const_cast<LstmModel&>(cm);
  std::ostringstream cfg;
  cfg.precision(17);
  cfg << "char_dim=" << m.dims_.char_dim << "\nchar_hidden=" << m.dims_.char_hidden
      << "\nword_dim=" << m.dims_.word_dim << "\nfeature_dim=" << m.dims_.feature_dim
      << "\nword_hidden=" << m.dims_.word_hidden << "\nlabels=" << m.labels_ << "\nseed=" << m.seed_
      << "\nemission=" << (m.emission == EmissionMode::Probabilities ? "probabilities" : "logits")
      << "\ndropout=" << m.dropout << "\nparts=" << parts_string(m.parts) << "\n";

  std::string alphabet;
  for (char32_t c : m.alphabet_) alphabet += std::to_string(static_cast<std::uint32_t>(c)) + "\n";
  std::string vocab;
  Tensor vectors(m.words_.size(), m.words_.dim());
  for (std::size_t i = 0; i < m.words_.size(); ++i) {
    vocab += m.words_.word(i) + "\n";
    const auto v = m.words_.vector(i);
    std::copy(v.begin(), v.end(), vectors.data.begin() + static_cast<std::ptrdiff_t>(i * vectors.cols));
  }

  std::vector<std::pair<std::string, std::string>> texts = {{"config", cfg.str()}, {"alphabet", alphabet},
                                                             {"words.vocab", vocab}};
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    const auto kind = static_cast<GazetteerKind>(k);
    std::string entries;
    for (const auto& e : m.gazetteers_.entries(kind)) entries += e + "\n";
    texts.emplace_back("gazetteer." + std::string(to_string(kind)), entries);
  }
  const auto params = m.parameters();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(texts.size() + 1 + params.size()));
  for (const auto& [name, text] : texts) put_text(out, name, text);
  put_tensor(out, "words.vectors", vectors);
  for (const Parameter* p : params) put_tensor(out, p->name, p->value);
  return out;
}

LstmModel parse_lstm(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw ParseError("lstm model: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw ParseError("lstm model: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::unordered_map<std::string, Block> blocks;
  for (std::uint32_t b = 0; b < count; ++b) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.take(name_len));
    Block blk;
    blk.kind = r.get<std::uint8_t>();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (blk.kind == 0) {
      if (rows != 0 && cols > (bytes.size() / sizeof(double)) / rows) throw ParseError("lstm model: bad block size");
      blk.tensor = Tensor(rows, cols);
      const auto raw = r.take(rows * cols * sizeof(double));
      std::memcpy(blk.tensor.data.data(), raw.data(), raw.size());
    } else if (blk.kind == 1) {
      blk.text = std::string(r.take(rows));
    } else {
      throw ParseError("lstm model: unknown block kind in '" + name + "'");
    }
    blocks.emplace(std::move(name), std::move(blk));
  }
  if (!r.done()) throw ParseError("lstm model: trailing bytes");

  auto text = [&](const std::string& name) -> const std::string& {
    const auto it = blocks.find(name);
    if (it == blocks.end() || it->second.kind != 1) throw ParseError("lstm model: missing block '" + name + "'");
    return it->second.text;
  };
  auto lines = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
  };

  std::unordered_map<std::string, std::string> cfg;
  for (const auto& line : lines(text("config"))) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto num = [&](const char* key) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw ParseError(std::string("lstm model: missing config key ") + key);
    return std::stoull(it->second);
  };

  LstmDims dims;
  dims.char_dim = num("char_dim");
  dims.char_hidden = num("char_hidden");
  dims.word_dim = num("word_dim");
  dims.feature_dim = num("feature_dim");
  dims.word_hidden = num("word_hidden");

  std::vector<char32_t> alphabet;
  for (const auto& line : lines(text("alphabet"))) alphabet.push_back(static_cast<char32_t>(std::stoul(line)));

  const auto vit = blocks.find("words.vectors");
  if (vit == blocks.end() || vit->second.kind != 0) throw ParseError("lstm model: missing word vectors");
  const Tensor& vectors = vit->second.tensor;
  const auto vocab = lines(text("words.vocab"));
  if (vocab.size() != vectors.rows || vectors.cols != dims.word_dim) throw ParseError("lstm model: word table shape");
  EmbeddingTable words(dims.word_dim);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    words.set(vocab[i], std::span<const double>(&vectors.data[i * vectors.cols], vectors.cols));
  }

  Gazetteers gaz;
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    const auto kind = static_cast<GazetteerKind>(k);
    for (const auto& e : lines(text("gazetteer." + std::string(to_string(kind))))) gaz.add(kind, e);
  }

  LstmModel m(dims, std::move(words), std::move(alphabet), std::move(gaz), num("seed"), num("labels"));
  m.emission = cfg["emission"] == "logits" ? EmissionMode::Logits : EmissionMode::Probabilities;
  m.dropout = std::stod(cfg["dropout"]);
  const std::string parts = cfg["parts"];
  if (parts.size() != 5) throw ParseError("lstm model: bad parts flags");
  m.parts = {parts[0] == '1', parts[1] == '1', parts[2] == '1', parts[3] == '1', parts[4] == '1'};

  for (Parameter* p : m.parameters()) {
    const auto it = blocks.find(p->name);
    if (it == blocks.end() || it->second.kind != 0) throw ParseError("lstm model: missing parameter '" + p->name + "'");
    const Tensor& t = it->second.tensor;
    if (t.rows != p->value.rows || t.cols != p->value.cols) {
      throw ParseError("lstm model: shape mismatch for '" + p->name + "'");
    }
    p->value = t;
  }
  return m;
}

void save_lstm(const LstmModel& model, const std::filesystem::path& path) {
  write_file(path.string(), serialize_lstm(model));
}

LstmModel load_lstm(const std::filesystem::path& path) { return parse_lstm(read_file(path.string())); }

}  // namespace deid
