#include <benchmark/benchmark.h>

#include "modcrf/crf.hpp"
#include "modcrf/rng.hpp"

namespace {

using namespace modcrf;

CrfPotentials make_potentials(int length, int labels, Rng& rng) {
  CrfPotentials p;
  std::vector<double> em(size_t(length) * labels);
  for (auto& v : em) v = rng.uniform(-2.0, 2.0);
  p.emissions = Tensor::from_values(length, labels, std::move(em));
  const int w = labels + 2;
  std::vector<double> tr(size_t(w) * w);
  for (auto& v : tr) v = rng.uniform(-2.0, 2.0);
  p.transitions = Tensor::from_values(w, w, std::move(tr));
  return p;
}

void BM_LogPartition(benchmark::State& state) {
  Rng rng(1);
  auto p = make_potentials(int(state.range(0)), int(state.range(1)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_partition(p).value());
  }
}
BENCHMARK(BM_LogPartition)->Args({10, 9})->Args({30, 17})->Args({30, 33});

void BM_LogPartitionBackward(benchmark::State& state) {
  Rng rng(1);
  auto p = make_potentials(int(state.range(0)), int(state.range(1)), rng);
  p.emissions.set_requires_grad(true);
  p.transitions.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape;
    Tensor z = log_partition(p);
    tape.backward(z);
    p.emissions.zero_grad();
    p.transitions.zero_grad();
  }
}
BENCHMARK(BM_LogPartitionBackward)->Args({10, 9})->Args({30, 17});

void BM_Viterbi(benchmark::State& state) {
  Rng rng(1);
  auto p = make_potentials(int(state.range(0)), int(state.range(1)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(viterbi(p).path);
  }
}
BENCHMARK(BM_Viterbi)->Args({10, 9})->Args({30, 17})->Args({30, 33});

void BM_NllLoss(benchmark::State& state) {
  Rng rng(1);
  const int length = int(state.range(0)), labels = int(state.range(1));
  auto p = make_potentials(length, labels, rng);
  p.emissions.set_requires_grad(true);
  p.transitions.set_requires_grad(true);
  std::vector<int> gold;
  for (int t = 0; t < length; ++t) gold.push_back(int(rng.next_below(uint64_t(labels))));
  for (auto _ : state) {
    Tape tape;
    Tensor loss = nll(p, gold);
    tape.backward(loss);
    p.emissions.zero_grad();
    p.transitions.zero_grad();
  }
}
BENCHMARK(BM_NllLoss)->Args({10, 9})->Args({30, 17});

}  // namespace
