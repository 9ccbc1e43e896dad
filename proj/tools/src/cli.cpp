#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "deid/crf.hpp"
#include "deid/embeddings.hpp"
#include "deid/error_analysis.hpp"
#include "deid/eval.hpp"
#include "deid/features.hpp"
#include "deid/lstm.hpp"
#include "deid/preprocess.hpp"
#include "deid/random.hpp"
#include "deid/resources.hpp"

namespace deid::cli {
namespace {

namespace fs = std::filesystem;

// Bad flag combinations found after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), t0_(std::chrono::steady_clock::now()) {}

  void operator()(std::string_view event, std::initializer_list<std::pair<std::string_view, std::string>> kv) {
    err_ << "event=" << event;
    for (const auto& [k, v] : kv) err_ << ' ' << k << '=' << v;
    err_ << " elapsed=" << num(elapsed()) << '\n';
    err_.flush();
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::ostream& err_;
  std::chrono::steady_clock::time_point t0_;
};

// Runs f(i, worker) over [0, n). Output order is fixed by the caller's
// indexing, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) f(i, w);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Resources {
  std::string gazetteers;
  std::string abbrev;
  std::string sidecar;

  Gazetteers load_gazetteers() const {
    if (gazetteers.empty()) return Gazetteers::defaults();
    if (!fs::is_directory(gazetteers)) throw DataError("gazetteer directory not found: " + gazetteers);
    return Gazetteers::load_dir(gazetteers);
  }
  RuleSentenceSplitter splitter() const {
    return RuleSentenceSplitter(abbrev.empty() ? AbbreviationList::defaults() : AbbreviationList::load(abbrev));
  }
  std::optional<AttributeSidecar> load_sidecar() const {
    if (sidecar.empty()) return std::nullopt;
    return AttributeSidecar::load(sidecar);
  }
};

void add_resource_flags(CLI::App* cmd, Resources& r) {
  cmd->add_option("--gazetteers", r.gazetteers, "Directory with profession/city/country/state .txt lists");
  cmd->add_option("--abbrev", r.abbrev, "Abbreviation list for sentence splitting");
  cmd->add_option("--sidecar", r.sidecar, "POS/chunk sidecar file");
}

Corpus load_preprocessed(const std::string& dir, const SentenceSplitter& splitter, SpanKind kind = SpanKind::Gold) {
  Corpus corpus = load_corpus(dir, kind);
  preprocess(corpus, splitter);
  return corpus;
}

// ---------------------------------------------------------------- models

struct TrainOptions {
  std::string model;
  std::string train;
  std::string valid;
  std::string out;
  std::string embeddings;
  Resources resources;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  // crf
  double c = 10.0;
  std::size_t cutoff = 4;
  std::size_t max_iter = 200;
  double tolerance = 1e-4;
  std::string groups = "all";
  // lstm
  std::size_t epochs = 50;
  double lr = 0.005;
  double dropout = 0.5;
  double clip = 5.0;
  std::string emission = "probabilities";
  std::size_t sg_epochs = 5;
  LstmDims dims;
};

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--model", o.model, "Tagger")->required()->check(CLI::IsMember({"crf", "lstm"}));
  cmd->add_option("--train", o.train, "Training corpus directory")->required();
  cmd->add_option("--valid", o.valid, "Validation corpus (default: last 10% of --train, LSTM only)");
  cmd->add_option("--embeddings", o.embeddings, "Pre-trained word vectors (default: skip-gram on --train)");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--threads", o.threads, "Worker threads for tagging")->check(CLI::PositiveNumber);
  add_resource_flags(cmd, o.resources);
  cmd->add_option("--c", o.c, "CRF regularization constant")->check(CLI::PositiveNumber);
  cmd->add_option("--cutoff", o.cutoff, "CRF feature frequency cutoff");
  cmd->add_option("--max-iter", o.max_iter, "CRF L-BFGS iteration cap");
  cmd->add_option("--tol", o.tolerance, "CRF gradient-norm tolerance");
  cmd->add_option("--groups", o.groups, "CRF feature groups (comma list or 'all')");
  cmd->add_option("--epochs", o.epochs, "LSTM epochs");
  cmd->add_option("--lr", o.lr, "LSTM SGD learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--dropout", o.dropout, "LSTM dropout rate")->check(CLI::Range(0.0, 0.99));
  cmd->add_option("--clip", o.clip, "LSTM gradient-norm clip");
  cmd->add_option("--emission", o.emission, "What the lattice consumes")
      ->check(CLI::IsMember({"probabilities", "logits"}));
  cmd->add_option("--sg-epochs", o.sg_epochs, "Skip-gram epochs when no --embeddings");
  cmd->add_option("--char-dim", o.dims.char_dim, "Character embedding width");
  cmd->add_option("--char-hidden", o.dims.char_hidden, "Character LSTM width");
  cmd->add_option("--word-dim", o.dims.word_dim, "Word embedding width (ignored with --embeddings)");
  cmd->add_option("--feature-dim", o.dims.feature_dim, "Capital/dictionary embedding width");
  cmd->add_option("--hidden", o.dims.word_hidden, "Word LSTM width");
}

bool* part_flag(LstmParts& parts, std::string_view name) {
  if (name == "char") return &parts.char_embedding;
  if (name == "word") return &parts.word_embedding;
  if (name == "features") return &parts.features;
  if (name == "dropout") return &parts.dropout;
  if (name == "lattice") return &parts.lattice;
  return nullptr;
}

void check_drop(const std::string& model, const std::string& drop) {
  if (model == "crf") {
    if (!parse_feature_group(drop)) {
      throw UsageError("unknown CRF feature group '" + drop + "' (lex, letter, digit, morph, dict)");
    }
  } else {
    LstmParts parts;
    if (part_flag(parts, drop) == nullptr) {
      throw UsageError("unknown LSTM part '" + drop + "' (char, word, features, dropout, lattice)");
    }
  }
}

struct Tagger {
  std::optional<CrfModel> crf;
  std::optional<LstmModel> lstm;
  std::optional<AttributeSidecar> sidecar;

  // Tags pre-processed documents; system spans go into `gold` of the copies.
  Corpus tag_corpus(const Corpus& docs, std::size_t threads) {
    Corpus out(docs.size());
    const AttributeSidecar* side = sidecar ? &*sidecar : nullptr;
    std::vector<LstmModel> replicas;
    if (lstm) replicas.assign(std::max<std::size_t>(1, std::min(threads, docs.size())), *lstm);
    parallel_for(docs.size(), threads, [&](std::size_t i, std::size_t w) {
      Document d;
      d.id = docs[i].id;
      d.text = docs[i].text;
      d.gold = crf ? tag(*crf, docs[i], side) : tag(replicas[w], docs[i]);
      out[i] = std::move(d);
    });
    return out;
  }
};

std::pair<Corpus, Corpus> split_valid(Corpus corpus) {
  if (corpus.size() < 2) return {std::move(corpus), {}};
  const std::size_t held = std::max<std::size_t>(1, corpus.size() / 10);
  Corpus valid(std::make_move_iterator(corpus.end() - static_cast<std::ptrdiff_t>(held)),
               std::make_move_iterator(corpus.end()));
  corpus.resize(corpus.size() - held);
  return {std::move(corpus), std::move(valid)};
}

Prf strict_micro(const Corpus& gold, const Corpus& sys) {
  return evaluate(gold, sys, MatchLevel::Strict, CategorySet::i2b2()).micro;
}

// Trains one model with an optional removed group/part.
Tagger train_model(const TrainOptions& o, const Corpus& train, const Corpus& valid, const std::string& drop,
                   Log& log) {
  Tagger t;
  const Gazetteers gaz = o.resources.load_gazetteers();
  if (o.model == "crf") {
    t.sidecar = o.resources.load_sidecar();
    CrfTrainConfig cfg;
    cfg.c = o.c;
    cfg.cutoff = o.cutoff;
    cfg.max_iterations = o.max_iter;
    cfg.tolerance = o.tolerance;
    cfg.groups = o.groups == "all" ? GroupMask::all() : GroupMask::parse(o.groups);
    if (!drop.empty()) cfg.groups = cfg.groups.without(*parse_feature_group(drop));
    log("crf.start", {{"docs", std::to_string(train.size())}, {"groups", cfg.groups.to_string()},
                      {"c", num(cfg.c)}, {"cutoff", std::to_string(cfg.cutoff)}});
    CrfTrainLog tl;
    auto progress = [&](std::size_t it, double value, double gnorm) {
      if (it % 10 == 0) log("crf.iter", {{"iter", std::to_string(it)}, {"objective", num(value)}, {"gnorm", num(gnorm)}});
    };
    t.crf = train_crf(train, gaz, cfg, t.sidecar ? &*t.sidecar : nullptr, progress, &tl);
    log("crf.done", {{"iterations", std::to_string(tl.optimizer.iterations)},
                     {"objective", num(tl.optimizer.value)},
                     {"stop", tl.optimizer.stop_reason},
                     {"features", std::to_string(t.crf->feature_count())},
                     {"labels", std::to_string(t.crf->label_count())}});
    return t;
  }

  EmbeddingTable words;
  LstmDims dims = o.dims;
  if (!o.embeddings.empty()) {
    words = load_embeddings(o.embeddings);
    dims.word_dim = words.dim();
  } else {
    SkipgramConfig sg;
    sg.dim = dims.word_dim;
    sg.epochs = o.sg_epochs;
    sg.seed = mix_seed(o.seed, 2);
    words = train_skipgram(train, sg);
  }
  log("embeddings", {{"words", std::to_string(words.size())}, {"dim", std::to_string(words.dim())}});

  LstmTrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.dropout = o.dropout;
  cfg.epochs = o.epochs;
  cfg.clip = o.clip;
  cfg.seed = o.seed;
  cfg.emission = o.emission == "logits" ? EmissionMode::Logits : EmissionMode::Probabilities;
  cfg.dims = dims;
  if (!drop.empty()) *part_flag(cfg.parts, drop) = false;
  log("lstm.start", {{"train", std::to_string(train.size())}, {"valid", std::to_string(valid.size())},
                     {"emission", o.emission}, {"lr", num(o.lr)}, {"epochs", std::to_string(o.epochs)},
                     {"drop", drop.empty() ? "none" : drop}});
  t.lstm = train_lstm(train, valid, words, gaz, cfg, [&](const EpochReport& r) {
    log("lstm.epoch", {{"epoch", std::to_string(r.epoch)}, {"loss", num(r.loss)}, {"valid_f1", num(r.valid_f1)},
                       {"best", r.best ? "1" : "0"}});
  });
  return t;
}

std::string model_kind(std::string_view bytes) { return bytes.substr(0, 8) == "DEIDLSTM" ? "lstm" : "crf"; }

// ---------------------------------------------------------------- commands

struct GenOptions {
  std::size_t count = 0;
  std::uint64_t seed = 1;
  std::string out;
  double glue_rate = 0.15;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 12;
  std::string template_set = "default";
};

int cmd_gen(const GenOptions& o, Log& log) {
  SynthConfig cfg;
  cfg.document_count = o.count;
  cfg.seed = o.seed;
  cfg.glue_rate = o.glue_rate;
  cfg.min_sentences = o.min_sentences;
  cfg.max_sentences = o.max_sentences;
  cfg.template_set = o.template_set;
  const Corpus corpus = generate_synthetic(cfg);
  fs::create_directories(o.out);
  save_corpus(o.out, corpus, SpanKind::Gold, {{"seed", std::to_string(o.seed)}});
  std::size_t spans = 0;
  for (const auto& d : corpus) spans += d.gold.size();
  log("gen", {{"docs", std::to_string(corpus.size())}, {"spans", std::to_string(spans)},
              {"seed", std::to_string(o.seed)}, {"out", o.out}});
  return kOk;
}

struct PreprocessOptions {
  std::string in;
  std::string out;
  Resources resources;
};

int cmd_preprocess(const PreprocessOptions& o, Log& log) {
  const Corpus corpus = load_preprocessed(o.in, o.resources.splitter());
  fs::create_directories(o.out);
  std::size_t tokens = 0;
  std::size_t sentences = 0;
  for (const auto& d : corpus) {
    write_file((fs::path(o.out) / (d.id + ".tok")).string(), dump_tokens(d));
    tokens += d.tokens.size();
    sentences += d.sentences.size();
  }
  log("preprocess", {{"docs", std::to_string(corpus.size())}, {"tokens", std::to_string(tokens)},
                     {"sentences", std::to_string(sentences)}});
  return kOk;
}

int cmd_train(TrainOptions& o, Log& log) {
  if (o.out.empty()) throw UsageError("train: --out is required");
  const auto splitter = o.resources.splitter();
  Corpus train = load_preprocessed(o.train, splitter);
  Corpus valid;
  if (!o.valid.empty()) {
    valid = load_preprocessed(o.valid, splitter);
  } else if (o.model == "lstm") {
    std::tie(train, valid) = split_valid(std::move(train));
  }
  if (train.empty()) throw DataError("train: no training documents in " + o.train);
  Tagger t = train_model(o, train, valid, "", log);
  if (t.crf) {
    save_crf(*t.crf, o.out);
  } else {
    save_lstm(*t.lstm, o.out);
  }
  const std::string bytes = read_file(o.out);
  log("train.saved", {{"model", o.model}, {"out", o.out}, {"bytes", std::to_string(bytes.size())},
                      {"model_hash", hex64(fnv1a64(bytes))}});
  if (!valid.empty()) {
    const Prf s = strict_micro(valid, t.tag_corpus(valid, o.threads));
    log("train.valid", {{"precision", num(s.precision)}, {"recall", num(s.recall)}, {"f1", num(s.f1)}});
  }
  return kOk;
}

struct TagOptions {
  std::string model;
  std::string in;
  std::string out;
  Resources resources;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

int cmd_tag(const TagOptions& o, Log& log) {
  if (fs::exists(o.out) && fs::exists(o.in) && fs::equivalent(o.in, o.out)) {
    throw UsageError("tag: --out must differ from --in");
  }
  const std::string bytes = read_file(o.model);
  Tagger t;
  const std::string kind = model_kind(bytes);
  if (kind == "lstm") {
    t.lstm = parse_lstm(bytes);
  } else {
    t.crf = parse_crf(bytes);
    t.sidecar = o.resources.load_sidecar();
  }
  const Corpus docs = load_preprocessed(o.in, o.resources.splitter());
  const Corpus sys = t.tag_corpus(docs, o.threads);
  const std::string hash = hex64(fnv1a64(bytes));
  save_corpus(o.out, sys, SpanKind::System, {{"model_hash", hash}, {"seed", std::to_string(o.seed)}});
  std::size_t spans = 0;
  for (const auto& d : sys) spans += d.gold.size();
  log("tag", {{"model", kind}, {"model_hash", hash}, {"docs", std::to_string(sys.size())},
              {"spans", std::to_string(spans)}});
  return kOk;
}

struct EvalOptions {
  std::string gold;
  std::string sys;
  std::string level = "strict";
  std::string agg = "micro";
  std::string catset = "i2b2";
  std::string catsets;
  std::string train;
  std::string out;
  bool csv = false;
  bool overview = false;
};

std::map<std::string, CategorySet> load_category_sets(const std::string& path) {
  return parse_category_sets(path.empty() ? std::string(resources::default_category_sets()) : read_file(path));
}

int cmd_eval(const EvalOptions& o, std::ostream& out, Log& log) {
  const Corpus gold = load_corpus(o.gold, SpanKind::Gold);
  const Corpus sys = load_corpus(o.sys, SpanKind::System);
  const auto sets = load_category_sets(o.catsets);
  std::string text;
  if (o.overview) {
    text = format_overview(gold, sys, sets);
  } else {
    const CategorySet set = find_category_set(sets, o.catset);
    const MatchLevel level = *parse_match_level(o.level);
    std::optional<Corpus> train;
    if (!o.train.empty()) train = load_corpus(o.train, SpanKind::Gold);
    const EvalReport report = evaluate(gold, sys, level, set, train ? &*train : nullptr);
    const Prf headline = o.agg == "macro" ? report.macro : report.micro;
    if (o.csv) {
      text = report_csv(report);
    } else {
      text = format_report(report, train.has_value());
      text += "aggregate=" + o.agg + " precision=" + fixed4(headline.precision) +
              " recall=" + fixed4(headline.recall) + " f1=" + fixed4(headline.f1) + "\n";
    }
    log("eval", {{"level", o.level}, {"agg", o.agg}, {"catset", set.name()}, {"f1", num(headline.f1)}});
  }
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
  return kOk;
}

struct SigtestOptions {
  std::string gold;
  std::string sys_a;
  std::string sys_b;
  std::string metric = "f";
  std::string level = "strict";
  std::string catset = "i2b2";
  std::size_t trials = 9999;
  std::uint64_t seed = 1;
  bool exhaustive = false;
};

int cmd_sigtest(const SigtestOptions& o, std::ostream& out, Log& log) {
  const Corpus gold = load_corpus(o.gold, SpanKind::Gold);
  const Corpus a = load_corpus(o.sys_a, SpanKind::System);
  const Corpus b = load_corpus(o.sys_b, SpanKind::System);
  const CategorySet set = find_category_set(load_category_sets(""), o.catset);
  const MatchLevel level = *parse_match_level(o.level);
  const Metric metric = *parse_metric(o.metric);
  const auto sa = per_record_scores(evaluate(gold, a, level, set), metric);
  const auto sb = per_record_scores(evaluate(gold, b, level, set), metric);
  const RandomizationResult r =
      o.exhaustive ? approx_randomization_exhaustive(sa, sb) : approx_randomization(sa, sb, o.trials, o.seed);
  char buf[256];
  std::snprintf(buf, sizeof buf, "records=%zu metric=%s d=%.6f m=%zu trials=%zu alpha=%.6f significant=%s\n",
                sa.size(), o.metric.c_str(), r.d, r.m, r.trials, r.alpha, r.significant() ? "yes" : "no");
  out << buf;
  log("sigtest", {{"alpha", num(r.alpha)}, {"seed", std::to_string(o.seed)}});
  return kOk;
}

struct ErrorsOptions {
  std::string gold;
  std::string sys;
  bool percent = false;
  bool csv = false;
  bool freq = false;
  bool records = false;
};

int cmd_errors(const ErrorsOptions& o, std::ostream& out, Log& log) {
  const Corpus gold = load_corpus(o.gold, SpanKind::Gold);
  const Corpus sys = load_corpus(o.sys, SpanKind::System);
  const auto records = classify(gold, sys);
  const ErrorMatrix m = error_matrix(records);
  out << (o.csv ? error_matrix_csv(m) : format_error_matrix(m, o.percent));
  if (o.records) {
    for (const auto& r : records) {
      out << r.document << ' ' << to_string(r.kind);
      if (r.gold) out << " gold=" << r.gold->start << ':' << r.gold->end << ':' << to_string(r.gold->subcategory);
      if (r.system) {
        out << " sys=" << r.system->start << ':' << r.system->end << ':' << to_string(r.system->subcategory);
      }
      out << '\n';
    }
  }
  if (o.freq) out << format_doc_frequency(doc_frequency(gold));
  log("errors", {{"records", std::to_string(records.size())},
                 {"correct", std::to_string(m.by_kind[static_cast<std::size_t>(ErrorKind::Correct)])}});
  return kOk;
}

struct AblateOptions {
  TrainOptions train;
  std::string test;
  std::vector<std::string> drops;
  bool baseline = false;
  std::string out;
};

int cmd_ablate(AblateOptions& o, std::ostream& out, Log& log) {
  for (const auto& d : o.drops) check_drop(o.train.model, d);
  if (o.drops.empty() && !o.baseline) throw UsageError("ablate: give at least one --drop or --baseline");
  const auto splitter = o.train.resources.splitter();
  Corpus train = load_preprocessed(o.train.train, splitter);
  Corpus valid;
  if (!o.train.valid.empty()) {
    valid = load_preprocessed(o.train.valid, splitter);
  } else if (o.train.model == "lstm") {
    std::tie(train, valid) = split_valid(std::move(train));
  }
  const Corpus test = load_preprocessed(o.test, splitter);

  std::vector<std::string> runs;
  if (o.baseline) runs.emplace_back();
  runs.insert(runs.end(), o.drops.begin(), o.drops.end());

  std::string table = "model=" + o.train.model + " seed=" + std::to_string(o.train.seed) + "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s\n", "drop", "P", "R", "F", "delta");
  table += buf;
  std::optional<double> base;
  for (const auto& drop : runs) {
    Tagger t = train_model(o.train, train, valid, drop, log);
    const Prf s = strict_micro(test, t.tag_corpus(test, o.train.threads));
    if (drop.empty()) base = s.f1;
    const std::string delta = base && !drop.empty() ? fixed4(s.f1 - *base) : "";
    std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f %8s\n", drop.empty() ? "none" : drop.c_str(),
                  s.precision, s.recall, s.f1, delta.c_str());
    table += buf;
    log("ablate.run", {{"drop", drop.empty() ? "none" : drop}, {"f1", num(s.f1)}});
  }
  out << table;
  if (!o.out.empty()) write_file(o.out, table);
  return kOk;
}

struct SplitOptions {
  std::string in;
  std::string train;
  std::string test;
  double ratio = 0.8;
};

// Copies record files verbatim, first `ratio` of them (by name) to train.
int cmd_split(const SplitOptions& o, Log& log) {
  if (!fs::is_directory(o.in)) throw DataError("not a directory: " + o.in);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.in)) {
    if (e.is_regular_file() && e.path().extension() == ".rec") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const auto n_train = static_cast<std::size_t>(std::llround(o.ratio * static_cast<double>(files.size())));
  fs::create_directories(o.train);
  fs::create_directories(o.test);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path dest = fs::path(i < n_train ? o.train : o.test) / files[i].filename();
    fs::copy_file(files[i], dest, fs::copy_options::overwrite_existing);
  }
  log("split", {{"train", std::to_string(n_train)}, {"test", std::to_string(files.size() - n_train)}});
  return kOk;
}

struct StatsOptions {
  std::string in;
  std::string label;
  Resources resources;
  bool freq = false;
};

int cmd_stats(const StatsOptions& o, std::ostream& out) {
  const Corpus corpus = load_preprocessed(o.in, o.resources.splitter());
  out << format_stats(corpus_stats(corpus), o.label.empty() ? fs::path(o.in).filename().string() : o.label);
  if (o.freq) out << format_doc_frequency(doc_frequency(corpus));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"De-identification toolkit: synthetic data, CRF and BiLSTM taggers, evaluation"};
  app.name("deid");
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with default flag values")->envname("DEID_CONFIG");

  GenOptions gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic annotated corpus");
  c_gen->add_option("--count", gen.count, "Number of documents")->required();
  c_gen->add_option("--seed", gen.seed, "Seed");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--glue-rate", gen.glue_rate, "Probability of gluing a filler to the next word")
      ->check(CLI::Range(0.0, 1.0));
  c_gen->add_option("--min-sentences", gen.min_sentences, "Minimum sentences per document");
  c_gen->add_option("--max-sentences", gen.max_sentences, "Maximum sentences per document");
  c_gen->add_option("--templates", gen.template_set, "Template set");

  PreprocessOptions pre;
  auto* c_pre = app.add_subcommand("preprocess", "Dump tokens and sentences");
  c_pre->add_option("--in", pre.in, "Corpus directory")->required();
  c_pre->add_option("--out", pre.out, "Output directory")->required();
  c_pre->add_option("--abbrev", pre.resources.abbrev, "Abbreviation list");

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train a CRF or BiLSTM tagger");
  add_train_flags(c_train, train);
  c_train->add_option("--out", train.out, "Model file")->required();

  TagOptions tagopt;
  auto* c_tag = app.add_subcommand("tag", "Tag a corpus with a trained model");
  c_tag->add_option("--model", tagopt.model, "Model file")->required()->check(CLI::ExistingFile);
  c_tag->add_option("--in", tagopt.in, "Input corpus directory")->required();
  c_tag->add_option("--out", tagopt.out, "Output directory for SYS records")->required();
  c_tag->add_option("--seed", tagopt.seed, "Seed recorded in output headers");
  c_tag->add_option("--threads", tagopt.threads, "Worker threads")->check(CLI::PositiveNumber);
  c_tag->add_option("--abbrev", tagopt.resources.abbrev, "Abbreviation list");
  c_tag->add_option("--sidecar", tagopt.resources.sidecar, "POS/chunk sidecar file");

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Score system output against gold");
  c_eval->add_option("--gold", ev.gold, "Gold corpus")->required();
  c_eval->add_option("--sys", ev.sys, "System corpus")->required();
  c_eval->add_option("--level", ev.level, "Match level")->check(CLI::IsMember({"strict", "relaxed", "token"}));
  c_eval->add_option("--agg", ev.agg, "Aggregation for the headline line")->check(CLI::IsMember({"micro", "macro"}));
  c_eval->add_option("--catset", ev.catset, "Category set name");
  c_eval->add_option("--catsets", ev.catsets, "INI file defining category sets");
  c_eval->add_option("--train", ev.train, "Training corpus, adds a #Train column");
  c_eval->add_option("--out", ev.out, "Write the report here instead of stdout");
  c_eval->add_flag("--csv", ev.csv, "Machine-readable rows");
  c_eval->add_flag("--overview", ev.overview, "P/R/F for every set and level");

  SigtestOptions sig;
  auto* c_sig = app.add_subcommand("sigtest", "Approximate randomization test between two systems");
  c_sig->add_option("--gold", sig.gold, "Gold corpus")->required();
  c_sig->add_option("--sysA", sig.sys_a, "First system")->required();
  c_sig->add_option("--sysB", sig.sys_b, "Second system")->required();
  c_sig->add_option("--metric", sig.metric, "Per-record metric")->check(CLI::IsMember({"p", "r", "f"}));
  c_sig->add_option("--level", sig.level, "Match level")->check(CLI::IsMember({"strict", "relaxed", "token"}));
  c_sig->add_option("--catset", sig.catset, "Category set name");
  c_sig->add_option("--m", sig.trials, "Shuffles")->check(CLI::PositiveNumber);
  c_sig->add_option("--seed", sig.seed, "Seed");
  c_sig->add_flag("--exhaustive", sig.exhaustive, "Enumerate all swap patterns (n <= 30)");

  ErrorsOptions er;
  auto* c_err = app.add_subcommand("errors", "Error taxonomy matrix");
  c_err->add_option("--gold", er.gold, "Gold corpus")->required();
  c_err->add_option("--sys", er.sys, "System corpus")->required();
  c_err->add_flag("--percent", er.percent, "Show rounded percentages");
  c_err->add_flag("--csv", er.csv, "Machine-readable rows");
  c_err->add_flag("--freq", er.freq, "Append per-subcategory document frequency summary");
  c_err->add_flag("--records", er.records, "List every classified record");

  AblateOptions ab;
  auto* c_ab = app.add_subcommand("ablate", "Retrain with one feature group or network part removed");
  add_train_flags(c_ab, ab.train);
  c_ab->add_option("--test", ab.test, "Held-out corpus scored after each run")->required();
  c_ab->add_option("--drop", ab.drops, "Group or part to remove, one run each");
  c_ab->add_flag("--baseline", ab.baseline, "Also train the full model and report deltas");
  c_ab->add_option("--out", ab.out, "Also write the table here");

  SplitOptions sp;
  auto* c_split = app.add_subcommand("split", "Split a corpus directory into train and test");
  c_split->add_option("--in", sp.in, "Corpus directory")->required();
  c_split->add_option("--train", sp.train, "Train output directory")->required();
  c_split->add_option("--test", sp.test, "Test output directory")->required();
  c_split->add_option("--ratio", sp.ratio, "Train fraction")->check(CLI::Range(0.0, 1.0));

  StatsOptions st;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
  c_stats->add_option("--in", st.in, "Corpus directory")->required();
  c_stats->add_option("--label", st.label, "Row label");
  c_stats->add_option("--abbrev", st.resources.abbrev, "Abbreviation list");
  c_stats->add_flag("--freq", st.freq, "Append document frequency summary");

  Log log(err);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_gen->parsed()) return cmd_gen(gen, log);
    if (c_pre->parsed()) return cmd_preprocess(pre, log);
    if (c_train->parsed()) return cmd_train(train, log);
    if (c_tag->parsed()) return cmd_tag(tagopt, log);
    if (c_eval->parsed()) return cmd_eval(ev, out, log);
    if (c_sig->parsed()) return cmd_sigtest(sig, out, log);
    if (c_err->parsed()) return cmd_errors(er, out, log);
    if (c_ab->parsed()) return cmd_ablate(ab, out, log);
    if (c_split->parsed()) return cmd_split(sp, log);
    if (c_stats->parsed()) return cmd_stats(st, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace deid::cli
