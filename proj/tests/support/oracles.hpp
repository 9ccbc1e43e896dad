#pragma once

// Independent reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/crf.hpp"
#include "deid/lstm.hpp"
#include "deid/preprocess.hpp"
#include "deid/random.hpp"

namespace deid::oracle {

// Calls f(y) for every label sequence of length T over L labels.
template <class F>
void for_each_sequence(std::size_t T, std::size_t L, F&& f) {
  std::vector<std::size_t> y(T, 0);
  while (true) {
    f(static_cast<const std::vector<std::size_t>&>(y));
    std::size_t t = T;
    while (t > 0) {
      --t;
      if (++y[t] < L) break;
      y[t] = 0;
      if (t == 0) return;
    }
    if (T == 0) return;
  }
}

inline double log_sum(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double crf_score(const Lattice& lat, const std::vector<std::size_t>& y) {
  double s = lat.start(y[0]) + lat.unary(0, y[0]);
  for (std::size_t t = 1; t < y.size(); ++t) s += lat.trans(y[t - 1], y[t]) + lat.unary(t, y[t]);
  return s;
}

struct Brute {
  double log_z = 0.0;
  std::vector<std::size_t> best;
};

inline Brute crf_brute(const Lattice& lat) {
  std::vector<double> scores;
  Brute b;
  double top = -std::numeric_limits<double>::infinity();
  for_each_sequence(lat.length(), lat.labels(), [&](const std::vector<std::size_t>& y) {
    const double s = crf_score(lat, y);
    scores.push_back(s);
    if (s > top) {
      top = s;
      b.best = y;
    }
  });
  b.log_z = log_sum(scores);
  return b;
}

inline Lattice random_lattice(Rng& rng, std::size_t T, std::size_t L, double scale = 2.0) {
  Lattice lat(T, L);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < L; ++y) lat.unary(t, y) = rng.uniform(-scale, scale);
  }
  for (std::size_t a = 0; a < L; ++a) {
    lat.start(a) = rng.uniform(-scale, scale);
    for (std::size_t b = 0; b < L; ++b) lat.trans(a, b) = rng.uniform(-scale, scale);
  }
  return lat;
}

// Neural lattice: START = d, END = d + 1.
inline double lattice_score(const Tensor& P, const Tensor& M, const std::vector<std::size_t>& y) {
  const std::size_t d = P.cols;
  double s = M(d, y[0]) + M(y.back(), d + 1);
  for (std::size_t t = 0; t < y.size(); ++t) s += P(t, y[t]);
  for (std::size_t t = 1; t < y.size(); ++t) s += M(y[t - 1], y[t]);
  return s;
}

inline Brute lattice_brute(const Tensor& P, const Tensor& M) {
  std::vector<double> scores;
  Brute b;
  double top = -std::numeric_limits<double>::infinity();
  for_each_sequence(P.rows, P.cols, [&](const std::vector<std::size_t>& y) {
    const double s = lattice_score(P, M, y);
    scores.push_back(s);
    if (s > top) {
      top = s;
      b.best = y;
    }
  });
  b.log_z = log_sum(scores);
  return b;
}

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 2.0) {
  Tensor t(rows, cols);
  for (auto& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

// Random clinical-looking sentence: words, numbers, punctuation and a few
// pattern-shaped tokens.
inline std::string random_sentence(Rng& rng, std::size_t words) {
  static const std::vector<std::string> pool = {
      "Dr.",    "Vincent", "saw",   "the",     "patient", "at",   "Boston", "General", "on",  "09/14/2067",
      "42",     "yo",      "male",  "called",  "617-555-1234", "from", "Ohio",  "nurse",   "and", "hcuutaj@bdd.com",
      "(",      ")",       ",",     ";",       "MRN",     "HP123456", "Ms.",  "Whalen",  "CPT", "x-ray",
      "ZIP",    "02138",   "winter", "2072",   "Zenith",  "Uni.", "État",   "naïve",   "St.", "Rd"};
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) s += rng.bernoulli(0.15) ? "" : " ";
    s += pool[rng.below(pool.size())];
  }
  return s;
}

// Random non-overlapping spans aligned to token boundaries.
inline std::vector<PhiSpan> random_aligned_spans(Rng& rng, const std::vector<Token>& tokens, double density = 0.3) {
  std::vector<PhiSpan> spans;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (rng.bernoulli(density)) {
      const std::size_t len = 1 + rng.below(std::min<std::size_t>(3, tokens.size() - i));
      spans.push_back({tokens[i].start, tokens[i + len - 1].end, subcategory_at(rng.below(kSubcategoryCount))});
      i += len;
    } else {
      ++i;
    }
  }
  return spans;
}

// Random non-overlapping spans anywhere in [0, length).
inline std::vector<PhiSpan> random_spans(Rng& rng, std::size_t length, std::size_t max_len = 8,
                                         std::size_t types = kSubcategoryCount) {
  std::vector<PhiSpan> spans;
  std::size_t pos = rng.below(4);
  while (pos + 1 < length) {
    const std::size_t len = 1 + rng.below(std::min(max_len, length - pos));
    if (rng.bernoulli(0.5)) spans.push_back({pos, pos + len, subcategory_at(rng.below(types))});
    pos += len + rng.below(4);
  }
  return spans;
}

}  // namespace deid::oracle
