#include "modcrf/experiment.hpp"

#include <algorithm>
#include <future>
#include <mutex>
#include <sstream>

namespace modcrf {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::KnowledgeIntegration: return "knowledge-integration";
    case Protocol::PartialCurve: return "partial-curve";
    case Protocol::DomainTransfer: return "domain-transfer";
  }
  return "?";
}

std::optional<Protocol> protocol_from_name(const std::string& name) {
  if (name == "knowledge-integration") return Protocol::KnowledgeIntegration;
  if (name == "partial-curve") return Protocol::PartialCurve;
  if (name == "domain-transfer") return Protocol::DomainTransfer;
  return std::nullopt;
}

namespace {

Corpus subset(const Corpus& corpus, const std::vector<int>& ids) {
  Corpus out;
  out.label_space = corpus.label_space;
  out.provenance = corpus.provenance + "#subset";
  for (int i : ids) out.sentences.push_back(corpus.sentences[size_t(i)]);
  return out;
}

Corpus project_all(const Corpus& corpus, PartialKind kind) {
  Corpus out;
  out.label_space = corpus.label_space;
  out.provenance = corpus.provenance;
  for (const auto& s : corpus.sentences) {
    out.sentences.push_back(kind == PartialKind::Seg
                                ? make_seg_sentence(s.tokens, s.seg_labels)
                                : make_typ_sentence(s.tokens, s.typ_labels));
  }
  return out;
}

Corpus concat_corpora(const Corpus& a, const Corpus& b) {
  Corpus out = a;
  out.sentences.insert(out.sentences.end(), b.sentences.begin(),
                       b.sentences.end());
  return out;
}

std::vector<int> shuffled_ids(int n, Rng& rng) {
  std::vector<int> ids(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) ids[size_t(i)] = i;
  rng.shuffle(ids);
  return ids;
}

std::vector<int> take(const std::vector<int>& ids, int begin, int count) {
  return std::vector<int>(ids.begin() + begin, ids.begin() + begin + count);
}

}  // namespace

double train_and_score(const RunConfig& config, const Corpus& train_corpus,
                       const Corpus& dev, const Corpus& test, uint64_t seed,
                       TrainResult* result_out) {
  std::vector<const Corpus*> corpora = {&train_corpus, &dev, &test};
  Vocabulary vocab = Vocabulary::build(corpora);
  Corpus indexed_train = train_corpus;
  Corpus indexed_dev = dev;
  Corpus indexed_test = test;
  vocab.index(indexed_train);
  vocab.index(indexed_dev);
  vocab.index(indexed_test);

  Model model(config.model_config(), vocab, nullptr, seed);
  TrainConfig train_config;
  train_config.optimizer = config.optimizer;
  train_config.adversarial = config.adversarial;
  train_config.seed = seed;
  TrainResult result = train(model, indexed_train, indexed_dev, train_config);
  if (result_out) *result_out = result;
  return evaluate_full(model, indexed_test).f1;
}

std::vector<ExperimentRow> run_experiment(
    const ExperimentSpec& spec, const RunConfig& base_config,
    const ExperimentData& data,
    const std::function<void(const ExperimentRow&)>& row_callback,
    int worker_threads) {
  if (spec.grid.empty()) throw ConfigError("experiment: empty fraction grid");
  for (double f : spec.grid)
    if (f < 0.0 || f > 1.0)
      throw ConfigError("experiment: fraction outside [0, 1]");
  if (spec.seeds.empty()) throw ConfigError("experiment: no seeds");
  if (spec.full_fraction <= 0.0 || spec.full_fraction > 1.0)
    throw ConfigError("experiment: full_fraction outside (0, 1]");

  struct Job {
    double fraction;
    uint64_t seed;
    bool modular;
    Corpus train;
  };
  std::vector<Job> jobs;

  const int n = data.train.size();
  for (uint64_t seed : spec.seeds) {
    Rng rng = Rng::derive(seed, "experiment-split");
    const auto ids = shuffled_ids(n, rng);
    switch (spec.protocol) {
      case Protocol::KnowledgeIntegration: {
        // Three disjoint folds: seg, typ, full.
        const int third = n / 3;
        auto seg_fold = project_all(subset(data.train, take(ids, 0, third)),
                                    PartialKind::Seg);
        auto typ_fold = project_all(
            subset(data.train, take(ids, third, third)), PartialKind::Typ);
        const int full_avail = n - 2 * third;
        for (double f : spec.grid) {
          const int full_count =
              std::max(1, int(std::lround(f * full_avail)));
          auto full_fold =
              subset(data.train, take(ids, 2 * third, full_count));
          jobs.push_back(Job{f, seed, true,
                             concat_corpora(concat_corpora(seg_fold, typ_fold),
                                            full_fold)});
          jobs.push_back(Job{f, seed, false, full_fold});
        }
        break;
      }
      case Protocol::PartialCurve: {
        const int full_count =
            std::max(1, int(std::lround(spec.full_fraction * n)));
        auto full_part = subset(data.train, take(ids, 0, full_count));
        const int pool = n - full_count;
        for (double f : spec.grid) {
          const int partial_count = int(std::lround(f * pool));
          auto partial = project_all(
              subset(data.train, take(ids, full_count, partial_count)),
              spec.partial_kind);
          jobs.push_back(
              Job{f, seed, true, concat_corpora(full_part, partial)});
          jobs.push_back(Job{f, seed, false, full_part});
        }
        break;
      }
      case Protocol::DomainTransfer: {
        if (data.out_domain_train.sentences.empty())
          throw ConfigError("domain transfer needs an out-of-domain corpus");
        const int full_count =
            std::max(1, int(std::lround(spec.full_fraction * n)));
        auto full_part = subset(data.train, take(ids, 0, full_count));
        Rng out_rng = Rng::derive(seed, "experiment-out-domain");
        const auto out_ids =
            shuffled_ids(data.out_domain_train.size(), out_rng);
        for (double f : spec.grid) {
          const int partial_count =
              int(std::lround(f * data.out_domain_train.size()));
          auto partial = project_all(
              subset(data.out_domain_train, take(out_ids, 0, partial_count)),
              PartialKind::Typ);
          jobs.push_back(
              Job{f, seed, true, concat_corpora(full_part, partial)});
          jobs.push_back(Job{f, seed, false, full_part});
        }
        break;
      }
    }
  }

  std::vector<ExperimentRow> rows(jobs.size());
  std::mutex callback_mutex;
  auto run_job = [&](size_t ji) {
    const Job& job = jobs[ji];
    RunConfig config = base_config;
    if (!job.modular) config.variant = "baseline";
    ExperimentRow row;
    row.protocol = spec.protocol;
    row.fraction = job.fraction;
    row.seed = job.seed;
    row.system = config.variant;
    row.train_sentences = job.train.size();
    row.test_f1 =
        train_and_score(config, job.train, data.dev, data.test, job.seed);
    rows[ji] = row;
    if (row_callback) {
      std::lock_guard<std::mutex> lock(callback_mutex);
      row_callback(row);
    }
  };

  if (worker_threads <= 1) {
    for (size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
  } else {
    // Grid points are independent model replicas; run a bounded pool.
    std::vector<std::future<void>> pending;
    for (size_t ji = 0; ji < jobs.size(); ++ji) {
      if (int(pending.size()) >= worker_threads) {
        pending.front().get();
        pending.erase(pending.begin());
      }
      pending.push_back(std::async(std::launch::async, run_job, ji));
    }
    for (auto& f : pending) f.get();
  }
  return rows;
}

std::string format_rows(const std::vector<ExperimentRow>& rows) {
  std::ostringstream os;
  os << "protocol\tfraction\tseed\tsystem\ttrain_sentences\ttest_f1\n";
  for (const auto& row : rows) {
    os << protocol_name(row.protocol) << '\t' << format_double(row.fraction)
       << '\t' << row.seed << '\t' << row.system << '\t'
       << row.train_sentences << '\t';
    char f1[32];
    std::snprintf(f1, sizeof(f1), "%.4f", row.test_f1);
    os << f1 << '\n';
  }
  return os.str();
}

ExperimentData default_synthetic_data(const SynthSpec& spec, uint64_t seed,
                                      int dev_sentences, int test_sentences,
                                      bool with_out_domain) {
  SynthSpec train_spec = spec;
  SynthSpec dev_spec = spec;
  dev_spec.num_sentences = dev_sentences;
  SynthSpec test_spec = spec;
  test_spec.num_sentences = test_sentences;

  ExperimentData data;
  data.train = generate_synthetic_corpus(train_spec, seed);
  data.dev = generate_synthetic_corpus(dev_spec, seed ^ 0x9E3779B97F4A7C15ULL);
  data.test =
      generate_synthetic_corpus(test_spec, seed ^ 0xD1B54A32D192ED03ULL);
  if (with_out_domain) {
    SynthSpec out_spec = spec;
    out_spec.domain = "x";  // fresh entity/filler lexicons, shared cues
    data.out_domain_train = generate_synthetic_corpus(out_spec, seed ^ 0xA5A5ULL);
  }
  return data;
}

}  // namespace modcrf
