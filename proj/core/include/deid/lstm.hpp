#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/embeddings.hpp"
#include "deid/features.hpp"
#include "deid/random.hpp"
#include "deid/tagscheme.hpp"
#include "deid/tensor.hpp"

namespace deid {

// ---- decoding lattice over emissions P (T x d) and transitions M -----------
// M is (d+2) x (d+2); row/column d is START and d+1 is END.

namespace lattice {

double sequence_score(const Tensor& P, const Tensor& M, std::span<const std::size_t> y);
double log_partition(const Tensor& P, const Tensor& M);
/// Max-sum decoding including START/END; ties go to the lower label index.
std::vector<std::size_t> viterbi(const Tensor& P, const Tensor& M);

struct Marginals {
  double log_z = 0.0;
  Tensor unary;        // T x d
  Tensor transitions;  // (d+2) x (d+2) expected counts
};
Marginals marginals(const Tensor& P, const Tensor& M);

}  // namespace lattice

// ---- LSTM cell ----------------------------------------------------------------

/// Coupled input/forget gate cell parameters for one direction.
struct LstmParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  Parameter Wz, Uz, bz;
  Parameter Wi, Ui, Vi, bi;
  Parameter Wo, Uo, Vo, bo;

  LstmParams() = default;
  LstmParams(const std::string& prefix, std::size_t input, std::size_t hidden);
  std::vector<Parameter*> parameters();
};

struct LstmVars {
  Tape::Var Wz, Uz, bz, Wi, Ui, Vi, bi, Wo, Uo, Vo, bo;
};
LstmVars bind(Tape& tape, LstmParams& p);

struct CellOutput {
  Tape::Var z, i, c, o, h;
};

/// z = tanh(Wz x + Uz h + bz); i = sigmoid(Wi x + Ui h + Vi c + bi);
/// c' = (1-i) * c + i * z; o = sigmoid(Wo x + Uo h + Vo c + bo); h' = o * tanh(c').
CellOutput lstm_cell(Tape& tape, const LstmVars& p, Tape::Var x, Tape::Var h_prev, Tape::Var c_prev);

// ---- tagger -----------------------------------------------------------------

struct LstmDims {
  std::size_t char_dim = 25;
  std::size_t char_hidden = 25;
  std::size_t word_dim = 100;
  std::size_t feature_dim = 6;
  std::size_t word_hidden = 64;

  std::size_t representation() const { return 2 * char_hidden + word_dim + 2 * feature_dim; }
};

/// What the lattice consumes: softmax probabilities or pre-softmax scores.
enum class EmissionMode : unsigned char { Probabilities, Logits };

/// Representation parts and layers; switching one off is an ablation.
struct LstmParts {
  bool char_embedding = true;
  bool word_embedding = true;
  bool features = true;
  bool dropout = true;
  bool lattice = true;
};

class LstmModel {
 public:
  LstmModel() = default;
  /// Glorot-uniform matrices, zero biases and zero M, drawn from seed.
  LstmModel(const LstmDims& dims, EmbeddingTable words, std::vector<char32_t> alphabet, Gazetteers gazetteers,
            std::uint64_t seed, std::size_t labels = kLabelCount);

  LstmModel(const LstmModel& other);
  LstmModel& operator=(const LstmModel& other);

  const LstmDims& dims() const { return dims_; }
  std::size_t label_count() const { return labels_; }
  std::uint64_t seed() const { return seed_; }
  const EmbeddingTable& words() const { return words_; }
  const Gazetteers& gazetteers() const { return gazetteers_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }

  EmissionMode emission = EmissionMode::Probabilities;
  LstmParts parts;
  double dropout = 0.5;

  std::vector<Parameter*> parameters();
  Parameter* find_parameter(const std::string& name);

  /// Per-sentence bound parameter nodes.
  struct Graph {
    Tape* tape = nullptr;
    LstmVars char_fwd{}, char_bwd{}, word_fwd{}, word_bwd{};
    Tape::Var Wl = 0, bl = 0, M = 0;
  };
  Graph bind(Tape& tape);

  /// Final forward and final backward states of the character BiLSTM.
  Tape::Var char_embed(Graph& g, std::string_view word);
  /// Pre-trained vector of the lowercased token, or its cached OOV vector.
  std::vector<double> word_vector(std::string_view token) const;
  Tape::Var represent(Graph& g, std::string_view token);

  struct Emissions {
    std::vector<Tape::Var> logits;
    std::vector<Tape::Var> scores;  // what the lattice consumes (P or logits)
  };
  /// Dropout is applied to the BiLSTM output only when rng is non-null.
  Emissions emissions(Graph& g, std::span<const std::string> tokens, Rng* rng);

  /// log Z - s(gold) as a tape node, or the per-token cross entropy when the
  /// lattice is switched off.
  Tape::Var loss(Graph& g, const Emissions& e, std::span<const std::size_t> gold);

  /// Emission matrix (T x d) in inference mode.
  Tensor emission_matrix(std::span<const std::string> tokens);
  std::vector<std::size_t> predict(std::span<const std::string> tokens);
  Tensor transitions() const { return M_.value; }

  friend void save_lstm(const LstmModel&, const std::filesystem::path&);
  friend std::string serialize_lstm(const LstmModel&);
  friend LstmModel parse_lstm(std::string_view);

 private:
  void init(std::uint64_t seed);
  std::size_t char_id(char32_t c) const;

  LstmDims dims_;
  std::size_t labels_ = kLabelCount;
  std::uint64_t seed_ = 1;
  EmbeddingTable words_;
  Gazetteers gazetteers_;
  std::vector<char32_t> alphabet_;
  std::unordered_map<char32_t, std::size_t> char_ids_;

  Parameter char_emb_, capital_emb_, dict_emb_;
  LstmParams char_fwd_, char_bwd_, word_fwd_, word_bwd_;
  Parameter Wl_, bl_, M_;

  mutable std::unordered_map<std::string, std::vector<double>> oov_cache_;
  mutable std::mutex oov_mutex_;
};

struct LstmTrainConfig {
  double learning_rate = 0.005;
  double dropout = 0.5;
  std::size_t epochs = 50;
  double clip = 5.0;
  std::uint64_t seed = 1;
  EmissionMode emission = EmissionMode::Probabilities;
  LstmParts parts;
  LstmDims dims;
};

struct EpochReport {
  std::size_t epoch = 0;
  double loss = 0.0;
  double valid_f1 = 0.0;
  bool best = false;
};

/// Batch-size-1 SGD over shuffled sentences with global-norm clipping. When
/// `valid` is non-empty the parameters of the epoch with the best strict
/// micro-F1 on it are kept. Throws NumericalError on a non-finite loss.
LstmModel train_lstm(const Corpus& train, const Corpus& valid, const EmbeddingTable& words,
                     const Gazetteers& gazetteers, const LstmTrainConfig& config,
                     const std::function<void(const EpochReport&)>& progress = {});

std::vector<std::string> token_texts(const Document& doc, const Sentence& s);
std::vector<LabelId> predict_labels(LstmModel& model, const Document& doc);
std::vector<PhiSpan> tag(LstmModel& model, const Document& doc);

/// Binary layout: "DEIDLSTM", u32 version, u32 block count, then blocks of
/// (u32 name length, name, u8 kind, u64 rows, u64 cols, payload). Kind 0 is
/// a little-endian float64 tensor, kind 1 is UTF-8 text (rows = byte count).
std::string serialize_lstm(const LstmModel& model);
LstmModel parse_lstm(std::string_view bytes);
void save_lstm(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_lstm(const std::filesystem::path& path);

}  // namespace deid
