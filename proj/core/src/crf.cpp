#include "deid/crf.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "deid/common.hpp"

namespace deid {
namespace {

constexpr double kTiny = DBL_MIN * 1e16;

double lse(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// exp(trans - max) and the max itself.
struct ExpTrans {
  std::vector<double> e;
  double shift = 0.0;
};

ExpTrans exp_trans(const Lattice& lat) {
  const auto& t = lat.trans_data();
  ExpTrans out;
  out.shift = t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
  out.e.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out.e[i] = std::exp(t[i] - out.shift);
  return out;
}

std::vector<double> forward(const Lattice& lat, const ExpTrans& et) {
  const std::size_t T = lat.length();
  const std::size_t L = lat.labels();
  std::vector<double> alpha(T * L);
  for (std::size_t y = 0; y < L; ++y) alpha[y] = lat.start(y) + lat.unary(0, y);
  std::vector<double> a(L), s(L), tmp(L);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = &alpha[(t - 1) * L];
    const double m = *std::max_element(prev, prev + L);
    for (std::size_t i = 0; i < L; ++i) a[i] = std::exp(prev[i] - m);
    std::fill(s.begin(), s.end(), 0.0);
    for (std::size_t i = 0; i < L; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      const double* row = &et.e[i * L];
      for (std::size_t j = 0; j < L; ++j) s[j] += ai * row[j];
    }
    double* cur = &alpha[t * L];
    for (std::size_t j = 0; j < L; ++j) {
      if (s[j] > kTiny) {
        cur[j] = lat.unary(t, j) + m + et.shift + std::log(s[j]);
      } else {
        for (std::size_t i = 0; i < L; ++i) tmp[i] = prev[i] + lat.trans(i, j);
        cur[j] = lat.unary(t, j) + lse(tmp.data(), L);
      }
    }
  }
  return alpha;
}

std::vector<double> backward(const Lattice& lat, const ExpTrans& et) {
  const std::size_t T = lat.length();
  const std::size_t L = lat.labels();
  std::vector<double> beta(T * L, 0.0);
  std::vector<double> v(L), b(L), tmp(L);
  for (std::size_t t = T - 1; t-- > 0;) {
    const double* next = &beta[(t + 1) * L];
    for (std::size_t j = 0; j < L; ++j) v[j] = lat.unary(t + 1, j) + next[j];
    const double m = *std::max_element(v.begin(), v.end());
    for (std::size_t j = 0; j < L; ++j) b[j] = std::exp(v[j] - m);
    double* cur = &beta[t * L];
    for (std::size_t i = 0; i < L; ++i) {
      const double* row = &et.e[i * L];
      double s = 0.0;
      for (std::size_t j = 0; j < L; ++j) s += row[j] * b[j];
      if (s > kTiny) {
        cur[i] = m + et.shift + std::log(s);
      } else {
        for (std::size_t j = 0; j < L; ++j) tmp[j] = lat.trans(i, j) + v[j];
        cur[i] = lse(tmp.data(), L);
      }
    }
  }
  return beta;
}

// Adds the expected transition counts of position t (>= 1) to out (L x L).
void add_pairwise(const Lattice& lat, const ForwardBackward& fb, const ExpTrans& et, std::size_t t,
                  double* out) {
  const std::size_t L = lat.labels();
  const double* prev = &fb.alpha[(t - 1) * L];
  const double* next = &fb.beta[t * L];
  std::vector<double> a(L), b(L);
  const double ma = *std::max_element(prev, prev + L);
  double mb = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < L; ++j) {
    b[j] = lat.unary(t, j) + next[j];
    mb = std::max(mb, b[j]);
  }
  const double scale = std::exp(ma + mb + et.shift - fb.log_z);
  if (std::isfinite(scale)) {
    if (scale == 0.0) return;
    for (std::size_t i = 0; i < L; ++i) a[i] = std::exp(prev[i] - ma) * scale;
    for (std::size_t j = 0; j < L; ++j) b[j] = std::exp(b[j] - mb);
    for (std::size_t i = 0; i < L; ++i) {
      if (a[i] == 0.0) continue;
      const double* row = &et.e[i * L];
      double* o = out + i * L;
      for (std::size_t j = 0; j < L; ++j) o[j] += a[i] * row[j] * b[j];
    }
    return;
  }
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      out[i * L + j] += std::exp(prev[i] + lat.trans(i, j) + b[j] - fb.log_z);
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double sequence_score(const Lattice& lat, std::span<const std::size_t> y) {
  if (y.size() != lat.length()) throw std::invalid_argument("sequence_score: length mismatch");
  if (y.empty()) return 0.0;
  double s = lat.start(y[0]) + lat.unary(0, y[0]);
  for (std::size_t t = 1; t < y.size(); ++t) s += lat.trans(y[t - 1], y[t]) + lat.unary(t, y[t]);
  return s;
}

ForwardBackward forward_backward(const Lattice& lat) {
  ForwardBackward fb;
  if (lat.length() == 0) return fb;
  const ExpTrans et = exp_trans(lat);
  fb.alpha = forward(lat, et);
  fb.beta = backward(lat, et);
  fb.log_z = lse(&fb.alpha[(lat.length() - 1) * lat.labels()], lat.labels());
  return fb;
}

double log_partition(const Lattice& lat) {
  if (lat.length() == 0) return 0.0;
  const ExpTrans et = exp_trans(lat);
  const auto alpha = forward(lat, et);
  return lse(&alpha[(lat.length() - 1) * lat.labels()], lat.labels());
}

std::vector<double> unary_marginals(const Lattice& lat, const ForwardBackward& fb) {
  std::vector<double> out(fb.alpha.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(fb.alpha[k] + fb.beta[k] - fb.log_z);
  (void)lat;
  return out;
}

std::vector<double> pairwise_marginal(const Lattice& lat, const ForwardBackward& fb, std::size_t t) {
  if (t == 0 || t >= lat.length()) throw std::out_of_range("pairwise_marginal: position");
  std::vector<double> out(lat.labels() * lat.labels(), 0.0);
  add_pairwise(lat, fb, exp_trans(lat), t, out.data());
  return out;
}

std::vector<double> expected_transitions(const Lattice& lat, const ForwardBackward& fb) {
  std::vector<double> out(lat.labels() * lat.labels(), 0.0);
  if (lat.length() < 2) return out;
  const ExpTrans et = exp_trans(lat);
  for (std::size_t t = 1; t < lat.length(); ++t) add_pairwise(lat, fb, et, t, out.data());
  return out;
}

std::vector<std::size_t> viterbi(const Lattice& lat) {
  const std::size_t T = lat.length();
  const std::size_t L = lat.labels();
  if (T == 0) return {};
  std::vector<double> score(L), next(L);
  std::vector<std::size_t> back(T * L, 0);
  for (std::size_t y = 0; y < L; ++y) score[y] = lat.start(y) + lat.unary(0, y);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      std::size_t arg = 0;
      double best = score[0] + lat.trans(0, j);
      for (std::size_t i = 1; i < L; ++i) {
        const double v = score[i] + lat.trans(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      next[j] = best + lat.unary(t, j);
      back[t * L + j] = arg;
    }
    score.swap(next);
  }
  std::vector<std::size_t> y(T);
  y[T - 1] = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  for (std::size_t t = T - 1; t > 0; --t) y[t - 1] = back[t * L + y[t]];
  return y;
}

CrfModel::CrfModel(FeatureIndex index, std::vector<LabelId> labels)
    : index_(std::move(index)), labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("CrfModel: empty label set");
  weights_.assign(index_.size() * labels_.size() + labels_.size() * labels_.size() + labels_.size(), 0.0);
}

double score_position(const CrfModel& model, std::span<const std::uint32_t> features,
                      std::optional<std::size_t> y_prev, std::size_t y) {
  double s = y_prev ? model.transition(*y_prev, y) : model.start(y);
  for (auto f : features) {
    if (f < model.feature_count()) s += model.observation(f, y);
  }
  return s;
}

Lattice build_lattice(const CrfModel& model, const std::vector<std::vector<std::uint32_t>>& features) {
  const std::size_t L = model.label_count();
  Lattice lat(features.size(), L);
  for (std::size_t t = 0; t < features.size(); ++t) {
    for (auto f : features[t]) {
      const double* w = &model.weights()[f * L];
      for (std::size_t y = 0; y < L; ++y) lat.unary(t, y) += w[y];
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    lat.start(i) = model.start(i);
    for (std::size_t j = 0; j < L; ++j) lat.trans(i, j) = model.transition(i, j);
  }
  return lat;
}

ObjectiveValue neg_loglik_grad(const CrfModel& model, std::span<const CrfInstance> batch) {
  const std::size_t L = model.label_count();
  const auto& w = model.weights();
  ObjectiveValue out;
  out.gradient.assign(w.size(), 0.0);
  double* g = out.gradient.data();
  double* g_trans = g + model.trans_offset();
  double* g_start = g + model.start_offset();

  double data_term = 0.0;
  for (const auto& inst : batch) {
    const std::size_t T = inst.features.size();
    if (T == 0) continue;
    const Lattice lat = build_lattice(model, inst.features);
    const ExpTrans et = exp_trans(lat);
    ForwardBackward fb;
    fb.alpha = forward(lat, et);
    fb.beta = backward(lat, et);
    fb.log_z = lse(&fb.alpha[(T - 1) * L], L);
    data_term += fb.log_z - sequence_score(lat, inst.labels);

    for (std::size_t t = 0; t < T; ++t) {
      const double* a = &fb.alpha[t * L];
      const double* b = &fb.beta[t * L];
      double p[512];
      std::vector<double> heap;
      double* marg = p;
      if (L > 512) {
        heap.resize(L);
        marg = heap.data();
      }
      for (std::size_t y = 0; y < L; ++y) marg[y] = std::exp(a[y] + b[y] - fb.log_z);
      marg[inst.labels[t]] -= 1.0;
      for (auto f : inst.features[t]) {
        double* gf = g + static_cast<std::size_t>(f) * L;
        for (std::size_t y = 0; y < L; ++y) gf[y] += marg[y];
      }
      if (t == 0) {
        for (std::size_t y = 0; y < L; ++y) g_start[y] += marg[y];
      } else {
        add_pairwise(lat, fb, et, t, g_trans);
        g_trans[inst.labels[t - 1] * L + inst.labels[t]] -= 1.0;
      }
    }
  }

  double sq = 0.0;
  const double inv_c = 1.0 / model.c;
  for (std::size_t k = 0; k < w.size(); ++k) {
    sq += w[k] * w[k];
    g[k] += w[k] * inv_c;
  }
  out.value = data_term + 0.5 * sq * inv_c;
  return out;
}

std::vector<CrfInstance> make_instances(const CrfModel& model, const Document& doc,
                                        const FeatureExtractor& extractor) {
  const auto labels = encode(doc.tokens, doc.gold);
  std::vector<std::size_t> local(kLabelCount, SIZE_MAX);
  for (std::size_t k = 0; k < model.labels().size(); ++k) local[model.labels()[k]] = k;

  std::vector<CrfInstance> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    CrfInstance inst;
    for (auto& fs : extractor.sentence(doc, s)) inst.features.push_back(model.index().lookup(fs));
    for (std::size_t i = s.first; i <= s.last; ++i) {
      const std::size_t k = local[labels[i]];
      if (k == SIZE_MAX) throw DataError("label " + label_string(labels[i]) + " not in the model label set");
      inst.labels.push_back(k);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

CrfModel train_crf(const Corpus& corpus, const Gazetteers& gazetteers, const CrfTrainConfig& config,
                   const AttributeSidecar* sidecar, const ProgressFn& progress, CrfTrainLog* log) {
  if (config.c <= 0.0) throw std::invalid_argument("c must be positive");
  const FeatureExtractor extractor(gazetteers, config.groups, sidecar);

  std::set<LabelId> seen = {kOutside};
  for (const auto& doc : corpus) {
    if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
    for (auto l : encode(doc.tokens, doc.gold)) seen.insert(l);
  }

  CrfModel model(build_index(corpus, config.cutoff, extractor), std::vector<LabelId>(seen.begin(), seen.end()));
  model.gazetteers = gazetteers;
  model.groups = config.groups;
  model.c = config.c;

  std::vector<CrfInstance> data;
  for (const auto& doc : corpus) {
    for (auto& inst : make_instances(model, doc, extractor)) {
      if (!inst.labels.empty()) data.push_back(std::move(inst));
    }
  }

  LbfgsOptions opts;
  opts.memory = config.memory;
  opts.max_iterations = config.max_iterations;
  opts.gradient_tolerance = config.tolerance;

  CrfModel work = model;
  auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
    work.weights() = x;
    auto r = neg_loglik_grad(work, data);
    grad = std::move(r.gradient);
    return r.value;
  };
  LbfgsResult result;
  try {
    result = lbfgs_minimize(objective, model.weights(), opts, progress);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("crf training diverged: ") + e.what());
  }
  for (double v : result.x) {
    if (!std::isfinite(v)) {
      throw NumericalError("crf training produced non-finite weights after " + std::to_string(result.iterations) +
                           " iterations");
    }
  }
  model.weights() = std::move(result.x);
  if (log != nullptr) {
    log->sentences = data.size();
    log->optimizer = std::move(result);
  }
  return model;
}

std::vector<LabelId> predict_labels(const CrfModel& model, const Document& doc, const AttributeSidecar* sidecar) {
  if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
  const FeatureExtractor extractor(model.gazetteers, model.groups, sidecar);
  std::vector<LabelId> out(doc.tokens.size(), kOutside);
  for (const auto& s : doc.sentences) {
    std::vector<std::vector<std::uint32_t>> feats;
    for (auto& fs : extractor.sentence(doc, s)) feats.push_back(model.index().lookup(fs));
    const auto y = viterbi(build_lattice(model, feats));
    for (std::size_t i = 0; i < y.size(); ++i) out[s.first + i] = model.labels()[y[i]];
  }
  return out;
}

std::vector<PhiSpan> tag(const CrfModel& model, const Document& doc, const AttributeSidecar* sidecar) {
  const auto labels = predict_labels(model, doc, sidecar);
  return decode(labels, doc.tokens);
}

std::string serialize_crf(const CrfModel& model) {
  const std::size_t L = model.label_count();
  std::string out;
  out += "deid-crf 1\n";
  out += "c " + fmt(model.c) + "\n";
  out += "cutoff " + std::to_string(model.index().cutoff()) + "\n";
  out += "groups " + model.groups.to_string() + "\n";
  out += "labels " + std::to_string(L);
  for (auto l : model.labels()) out += " " + label_string(l);
  out += "\n";
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    const auto kind = static_cast<GazetteerKind>(k);
    const auto entries = model.gazetteers.entries(kind);
    out += "gazetteer " + std::string(to_string(kind)) + " " + std::to_string(entries.size()) + "\n";
    for (const auto& e : entries) out += e + "\n";
  }
  out += "start";
  for (std::size_t y = 0; y < L; ++y) out += " " + fmt(model.start(y));
  out += "\n";
  for (std::size_t i = 0; i < L; ++i) {
    out += "trans";
    for (std::size_t y = 0; y < L; ++y) out += " " + fmt(model.transition(i, y));
    out += "\n";
  }
  out += "features " + std::to_string(model.feature_count()) + "\n";
  for (std::size_t f = 0; f < model.feature_count(); ++f) {
    out += model.index().name(static_cast<std::uint32_t>(f));
    for (std::size_t y = 0; y < L; ++y) out += " " + fmt(model.observation(f, y));
    out += "\n";
  }
  return out;
}

CrfModel parse_crf(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::vector<std::string> {
    if (!std::getline(in, line)) throw ParseError("crf model: unexpected end of file at line " + std::to_string(lineno));
    ++lineno;
    return split_ws(line);
  };
  auto expect = [&](const std::vector<std::string>& f, const char* key, std::size_t min_fields) {
    if (f.empty() || f[0] != key || f.size() < min_fields) {
      throw ParseError("crf model: line " + std::to_string(lineno) + ": expected '" + key + "'");
    }
  };
  auto number = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("crf model: line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
  };

  auto f = next();
  if (f.size() != 2 || f[0] != "deid-crf" || f[1] != "1") throw ParseError("crf model: bad header");
  f = next();
  expect(f, "c", 2);
  const double c = number(f[1]);
  f = next();
  expect(f, "cutoff", 2);
  const auto cutoff = static_cast<std::size_t>(number(f[1]));
  f = next();
  expect(f, "groups", 2);
  const GroupMask groups = f[1] == "none" ? GroupMask::none() : GroupMask::parse(f[1]);
  f = next();
  expect(f, "labels", 2);
  const auto L = static_cast<std::size_t>(number(f[1]));
  if (f.size() != L + 2) throw ParseError("crf model: label count mismatch");
  std::vector<LabelId> labels;
  for (std::size_t k = 0; k < L; ++k) {
    const auto id = parse_label(f[k + 2]);
    if (!id) throw ParseError("crf model: bad label '" + f[k + 2] + "'");
    labels.push_back(*id);
  }
  Gazetteers gaz;
  for (std::size_t k = 0; k < kGazetteerCount; ++k) {
    f = next();
    expect(f, "gazetteer", 3);
    const auto kind = static_cast<GazetteerKind>(k);
    if (f[1] != to_string(kind)) throw ParseError("crf model: gazetteer order");
    const auto n = static_cast<std::size_t>(number(f[2]));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw ParseError("crf model: truncated gazetteer");
      ++lineno;
      gaz.add(kind, line);
    }
  }
  f = next();
  expect(f, "start", L + 1);
  std::vector<double> start(L);
  for (std::size_t y = 0; y < L; ++y) start[y] = number(f[y + 1]);
  std::vector<double> trans(L * L);
  for (std::size_t i = 0; i < L; ++i) {
    f = next();
    expect(f, "trans", L + 1);
    for (std::size_t y = 0; y < L; ++y) trans[i * L + y] = number(f[y + 1]);
  }
  f = next();
  expect(f, "features", 2);
  const auto F = static_cast<std::size_t>(number(f[1]));
  FeatureIndex index(cutoff);
  std::vector<double> obs;
  obs.reserve(F * L);
  for (std::size_t k = 0; k < F; ++k) {
    f = next();
    if (f.size() != L + 1) throw ParseError("crf model: line " + std::to_string(lineno) + ": weight count");
    if (index.add(f[0]) != k) throw ParseError("crf model: duplicate feature '" + f[0] + "'");
    for (std::size_t y = 0; y < L; ++y) obs.push_back(number(f[y + 1]));
  }

  CrfModel model(std::move(index), std::move(labels));
  std::copy(obs.begin(), obs.end(), model.weights().begin());
  std::copy(trans.begin(), trans.end(), model.weights().begin() + static_cast<std::ptrdiff_t>(model.trans_offset()));
  std::copy(start.begin(), start.end(), model.weights().begin() + static_cast<std::ptrdiff_t>(model.start_offset()));
  model.gazetteers = std::move(gaz);
  model.groups = groups;
  model.c = c;
  return model;
}

void save_crf(const CrfModel& model, const std::filesystem::path& path) { write_file(path.string(), serialize_crf(model)); }

CrfModel load_crf(const std::filesystem::path& path) { return parse_crf(read_file(path.string())); }

}  // namespace deid
