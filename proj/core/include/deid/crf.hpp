#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/features.hpp"
#include "deid/lbfgs.hpp"
#include "deid/tagscheme.hpp"

namespace deid {

/// Log potentials of one sentence: T x L unary scores plus the L x L
/// transition block (row = previous label) and the start vector.
class Lattice {
 public:
  Lattice() = default;
  Lattice(std::size_t length, std::size_t labels)
      : T_(length), L_(labels), unary_(length * labels, 0.0), trans_(labels * labels, 0.0), start_(labels, 0.0) {}

  std::size_t length() const { return T_; }
  std::size_t labels() const { return L_; }

  double& unary(std::size_t t, std::size_t y) { return unary_[t * L_ + y]; }
  double unary(std::size_t t, std::size_t y) const { return unary_[t * L_ + y]; }
  double& trans(std::size_t prev, std::size_t y) { return trans_[prev * L_ + y]; }
  double trans(std::size_t prev, std::size_t y) const { return trans_[prev * L_ + y]; }
  double& start(std::size_t y) { return start_[y]; }
  double start(std::size_t y) const { return start_[y]; }

  const std::vector<double>& unary_data() const { return unary_; }
  const std::vector<double>& trans_data() const { return trans_; }

 private:
  std::size_t T_ = 0;
  std::size_t L_ = 0;
  std::vector<double> unary_;
  std::vector<double> trans_;
  std::vector<double> start_;
};

double sequence_score(const Lattice& lattice, std::span<const std::size_t> y);
double log_partition(const Lattice& lattice);

struct ForwardBackward {
  double log_z = 0.0;
  std::vector<double> alpha;  // T x L, log space
  std::vector<double> beta;   // T x L, log space
};

ForwardBackward forward_backward(const Lattice& lattice);
/// T x L posterior label marginals.
std::vector<double> unary_marginals(const Lattice& lattice, const ForwardBackward& fb);
/// L x L joint marginal of (y_{t-1}, y_t), t >= 1.
std::vector<double> pairwise_marginal(const Lattice& lattice, const ForwardBackward& fb, std::size_t t);

/// Expected transition counts summed over all positions (L x L).
std::vector<double> expected_transitions(const Lattice& lattice, const ForwardBackward& fb);

/// Max-sum decoding; ties go to the lower label index.
std::vector<std::size_t> viterbi(const Lattice& lattice);

/// Weight table of a linear-chain CRF. Labels are a sorted subset of the
/// full alphabet (those seen in training); local index k stands for
/// labels[k]. Layout: observation weights [feature][label], then transitions
/// [prev][label], then start weights [label].
class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(FeatureIndex index, std::vector<LabelId> labels);

  std::size_t label_count() const { return labels_.size(); }
  std::size_t feature_count() const { return index_.size(); }
  const std::vector<LabelId>& labels() const { return labels_; }
  const FeatureIndex& index() const { return index_; }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  double& observation(std::size_t f, std::size_t y) { return weights_[f * label_count() + y]; }
  double observation(std::size_t f, std::size_t y) const { return weights_[f * label_count() + y]; }
  double& transition(std::size_t prev, std::size_t y) { return weights_[trans_offset() + prev * label_count() + y]; }
  double transition(std::size_t prev, std::size_t y) const {
    return weights_[trans_offset() + prev * label_count() + y];
  }
  double& start(std::size_t y) { return weights_[start_offset() + y]; }
  double start(std::size_t y) const { return weights_[start_offset() + y]; }

  std::size_t trans_offset() const { return feature_count() * label_count(); }
  std::size_t start_offset() const { return trans_offset() + label_count() * label_count(); }

  // Training settings kept with the model so tagging reproduces extraction.
  Gazetteers gazetteers = Gazetteers::defaults();
  GroupMask groups = GroupMask::all();
  double c = 10.0;

 private:
  FeatureIndex index_;
  std::vector<LabelId> labels_;
  std::vector<double> weights_;
};

/// Indexed features per token plus local gold label indices.
struct CrfInstance {
  std::vector<std::vector<std::uint32_t>> features;
  std::vector<std::size_t> labels;
};

/// Log potential of label y after y_prev (nullopt = sentence start).
double score_position(const CrfModel& model, std::span<const std::uint32_t> features,
                      std::optional<std::size_t> y_prev, std::size_t y);

Lattice build_lattice(const CrfModel& model, const std::vector<std::vector<std::uint32_t>>& features);

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

/// -sum log p(Y|X) + |theta|^2 / (2c) and its gradient, with c = model.c.
ObjectiveValue neg_loglik_grad(const CrfModel& model, std::span<const CrfInstance> batch);

struct CrfTrainConfig {
  double c = 10.0;
  std::size_t cutoff = 4;
  std::size_t max_iterations = 200;
  double tolerance = 1e-4;
  std::size_t memory = 5;
  GroupMask groups = GroupMask::all();
};

struct CrfTrainLog {
  LbfgsResult optimizer;
  std::size_t sentences = 0;
};

/// Builds the index, collects labels, and minimises the objective from
/// theta = 0. Documents must be pre-processed. Throws MisalignmentError if a
/// gold span does not fall on token boundaries.
CrfModel train_crf(const Corpus& corpus, const Gazetteers& gazetteers, const CrfTrainConfig& config,
                   const AttributeSidecar* sidecar = nullptr, const ProgressFn& progress = {},
                   CrfTrainLog* log = nullptr);

/// Converts one pre-processed document into training instances.
std::vector<CrfInstance> make_instances(const CrfModel& model, const Document& doc,
                                        const FeatureExtractor& extractor);

/// Label ids (full alphabet) for every token of the document.
std::vector<LabelId> predict_labels(const CrfModel& model, const Document& doc,
                                    const AttributeSidecar* sidecar = nullptr);
std::vector<PhiSpan> tag(const CrfModel& model, const Document& doc, const AttributeSidecar* sidecar = nullptr);

void save_crf(const CrfModel& model, const std::filesystem::path& path);
CrfModel load_crf(const std::filesystem::path& path);
std::string serialize_crf(const CrfModel& model);
CrfModel parse_crf(std::string_view contents);

}  // namespace deid
