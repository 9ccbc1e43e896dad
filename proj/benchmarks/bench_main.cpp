#include <benchmark/benchmark.h>

#include "deid/corpus.hpp"
#include "deid/crf.hpp"
#include "deid/lstm.hpp"
#include "deid/preprocess.hpp"
#include "oracles.hpp"

using namespace deid;

namespace {

std::string note_text() {
  SynthConfig config;
  config.document_count = 1;
  config.seed = 3;
  return generate_synthetic(config).front().text;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text = note_text();
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_CrfLogPartition(benchmark::State& state) {
  Rng rng(1);
  const auto lattice = oracle::random_lattice(rng, static_cast<std::size_t>(state.range(0)), 45);
  for (auto _ : state) benchmark::DoNotOptimize(log_partition(lattice));
}
BENCHMARK(BM_CrfLogPartition)->Arg(10)->Arg(40);

void BM_CrfForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const auto lattice = oracle::random_lattice(rng, 25, 45);
  for (auto _ : state) benchmark::DoNotOptimize(forward_backward(lattice));
}
BENCHMARK(BM_CrfForwardBackward);

void BM_CrfViterbi(benchmark::State& state) {
  Rng rng(3);
  const auto lattice = oracle::random_lattice(rng, 25, 45);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(lattice));
}
BENCHMARK(BM_CrfViterbi);

void BM_LstmEmissions(benchmark::State& state) {
  LstmDims dims;
  dims.word_dim = 50;
  std::vector<char32_t> alphabet;
  for (char32_t c = 32; c < 127; ++c) alphabet.push_back(c);
  LstmModel model(dims, EmbeddingTable(dims.word_dim), alphabet, Gazetteers{}, 1);
  Rng rng(4);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    tokens.push_back(oracle::random_sentence(rng, 1));
  }
  for (auto _ : state) benchmark::DoNotOptimize(model.emission_matrix(tokens));
}
BENCHMARK(BM_LstmEmissions)->Arg(10)->Arg(30);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode tied to one compiler build.
BENCHMARK_MAIN();
