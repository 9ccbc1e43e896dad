#include "deid/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "deid/common.hpp"
#include "deid/random.hpp"
#include "deid/tensor.hpp"

namespace deid {

const double* EmbeddingTable::find(std::string_view word) const {
  const auto it = ids_.find(to_lower_ascii(word));
  return it == ids_.end() ? nullptr : &vectors_[it->second * dim_];
}

bool EmbeddingTable::set(std::string_view word, std::span<const double> values) {
  if (values.size() != dim_) throw std::invalid_argument("embedding width mismatch");
  const std::string key = to_lower_ascii(word);
  const auto [it, inserted] = ids_.emplace(key, words_.size());
  if (inserted) {
    words_.push_back(key);
    vectors_.insert(vectors_.end(), values.begin(), values.end());
  } else {
    std::copy(values.begin(), values.end(), vectors_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
  }
  return inserted;
}

EmbeddingTable parse_embeddings(std::string_view contents, std::string_view origin) {
  std::size_t pos = 0;
  std::size_t lineno = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= contents.size()) return false;
    const auto nl = contents.find('\n', pos);
    const auto end = nl == std::string_view::npos ? contents.size() : nl;
    line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    return true;
  };
  auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };

  std::string_view line;
  if (!next_line(line)) throw ParseError(std::string(origin) + ": empty embedding file");
  const auto header = split_ws(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  try {
    if (header.size() != 2) throw std::invalid_argument("header");
    count = std::stoul(header[0]);
    dim = std::stoul(header[1]);
  } catch (const std::exception&) {
    throw ParseError(where() + "expected header '<count> <dim>'");
  }
  if (dim == 0) throw ParseError(where() + "dimension must be positive");

  EmbeddingTable table(dim);
  std::vector<double> values(dim);
  std::size_t rows = 0;
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != dim + 1) {
      throw ParseError(where() + "expected " + std::to_string(dim) + " values, found " +
                       std::to_string(f.size() - 1));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      try {
        std::size_t used = 0;
        values[i] = std::stod(f[i + 1], &used);
        if (used != f[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(where() + "bad number '" + f[i + 1] + "'");
      }
    }
    if (!table.set(f[0], values)) ++table.duplicates;
    ++rows;
  }
  if (rows != count) {
    throw ParseError(std::string(origin) + ": header declares " + std::to_string(count) + " rows, found " +
                     std::to_string(rows));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file(path.string()), path.string());
}

std::string serialize_embeddings(const EmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.word(i);
    for (double v : table.vector(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  write_file(path.string(), serialize_embeddings(table));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double ab = dot(a.data(), b.data(), a.size());
  const double aa = dot(a.data(), a.data(), a.size());
  const double bb = dot(b.data(), b.data(), b.size());
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

EmbeddingTable train_skipgram(const Corpus& corpus, const SkipgramConfig& config) {
  if (config.dim == 0 || config.window == 0) throw std::invalid_argument("skip-gram: dim and window must be > 0");

  // Vocabulary in order of first occurrence.
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& doc : corpus) {
    if (!doc.preprocessed()) throw DataError("document " + doc.id + " is not pre-processed");
    for (const auto& s : doc.sentences) {
      std::vector<std::string> words;
      for (std::size_t i = s.first; i <= s.last; ++i) {
        auto w = to_lower_ascii(doc.tokens[i].text);
        if (counts[w]++ == 0) order.push_back(w);
        words.push_back(std::move(w));
      }
      sentences.push_back(std::move(words));
    }
  }
  if (order.empty()) throw DataError("skip-gram: empty corpus");

  std::unordered_map<std::string, std::size_t> ids;
  std::vector<std::string> vocab;
  for (const auto& w : order) {
    if (counts[w] >= config.min_count) {
      ids.emplace(w, vocab.size());
      vocab.push_back(w);
    }
  }
  if (vocab.empty()) throw DataError("skip-gram: no word reaches min_count");
  const std::size_t V = vocab.size();
  const std::size_t D = config.dim;

  // Negative-sampling table over count^0.75.
  std::vector<double> cumulative(V);
  double total = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    total += std::pow(static_cast<double>(counts[vocab[i]]), 0.75);
    cumulative[i] = total;
  }

  Rng rng(mix_seed(config.seed, 0x5c1b));
  std::vector<double> in(V * D), out(V * D, 0.0);
  for (auto& v : in) v = rng.uniform(-0.5, 0.5) / static_cast<double>(D);

  std::vector<std::vector<std::size_t>> coded;
  std::size_t words_total = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> c;
    for (const auto& w : s) {
      const auto it = ids.find(w);
      if (it != ids.end()) c.push_back(it->second);
    }
    words_total += c.size();
    coded.push_back(std::move(c));
  }

  const double steps = static_cast<double>(config.epochs * words_total);
  double done = 0.0;
  std::vector<double> grad_in(D);
  auto sigmoid = [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& s : coded) {
      for (std::size_t pos = 0; pos < s.size(); ++pos, done += 1.0) {
        const double lr = std::max(config.learning_rate * 1e-4, config.learning_rate * (1.0 - done / steps));
        const std::size_t reduced = rng.below(config.window);
        const std::size_t span = config.window - reduced;
        const std::size_t lo = pos >= span ? pos - span : 0;
        const std::size_t hi = std::min(s.size() - 1, pos + span);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          double* vin = &in[s[c] * D];
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (std::size_t k = 0; k <= config.negatives; ++k) {
            std::size_t target;
            double label;
            if (k == 0) {
              target = s[pos];
              label = 1.0;
            } else {
              const double r = rng.uniform() * total;
              target = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                                cumulative.begin());
              if (target >= V) target = V - 1;
              if (target == s[pos]) continue;
              label = 0.0;
            }
            double* vout = &out[target * D];
            const double g = (label - sigmoid(dot(vin, vout, D))) * lr;
            for (std::size_t d = 0; d < D; ++d) {
              grad_in[d] += g * vout[d];
              vout[d] += g * vin[d];
            }
          }
          for (std::size_t d = 0; d < D; ++d) vin[d] += grad_in[d];
        }
      }
    }
  }

  EmbeddingTable table(D);
  for (std::size_t i = 0; i < V; ++i) table.set(vocab[i], std::span<const double>(&in[i * D], D));
  return table;
}

}  // namespace deid
