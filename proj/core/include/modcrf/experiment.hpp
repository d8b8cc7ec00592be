#ifndef MODCRF_EXPERIMENT_HPP
#define MODCRF_EXPERIMENT_HPP

#include <functional>
#include <string>
#include <vector>

#include "modcrf/config.hpp"
#include "modcrf/synth.hpp"

// Weak-supervision protocols over a fully labeled source corpus:
//  - KnowledgeIntegration: three disjoint folds (SegOnly, TypeOnly, Full);
//    the modular system trains on all three with the Full fold scaled by the
//    grid fraction, against a baseline on the scaled Full fold alone.
//  - PartialCurve: a fixed Full share plus growing amounts of one partial
//    projection from the remainder.
//  - DomainTransfer: a fixed Full share in-domain plus growing amounts of
//    TypeOnly labels from an out-of-domain corpus sharing the type alphabet.
// Every grid point emits one row per system per seed.

namespace modcrf {

enum class Protocol { KnowledgeIntegration, PartialCurve, DomainTransfer };

const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& name);

struct ExperimentSpec {
  Protocol protocol = Protocol::PartialCurve;
  std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  PartialKind partial_kind = PartialKind::Seg;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  double full_fraction = 0.2;  // PartialCurve / DomainTransfer fixed share
};

struct ExperimentData {
  Corpus train;
  Corpus dev;
  Corpus test;
  Corpus out_domain_train;  // DomainTransfer only
};

struct ExperimentRow {
  Protocol protocol;
  double fraction = 0.0;
  uint64_t seed = 0;
  std::string system;  // variant name
  double test_f1 = 0.0;
  int train_sentences = 0;
};

std::vector<ExperimentRow> run_experiment(
    const ExperimentSpec& spec, const RunConfig& base_config,
    const ExperimentData& data,
    const std::function<void(const ExperimentRow&)>& row_callback = nullptr,
    int worker_threads = 1);

std::string format_rows(const std::vector<ExperimentRow>& rows);

// Deterministic train/dev/test synthetic setup shared by the CLI and tests.
ExperimentData default_synthetic_data(const SynthSpec& spec, uint64_t seed,
                                      int dev_sentences, int test_sentences,
                                      bool with_out_domain = false);

// Trains `config.variant` on `train` and reports Full F1 on `test`.
double train_and_score(const RunConfig& config, const Corpus& train,
                       const Corpus& dev, const Corpus& test, uint64_t seed,
                       TrainResult* result_out = nullptr);

}  // namespace modcrf

#endif  // MODCRF_EXPERIMENT_HPP
