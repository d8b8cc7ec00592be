// Command-line surface: train, eval, predict, experiment, verify.
// Exit codes: 0 success, 1 verification failure, 2 config error,
// 3 data error, 4 checkpoint error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "modcrf/checkpoint.hpp"
#include "modcrf/config.hpp"
#include "modcrf/experiment.hpp"
#include "modcrf/synth.hpp"
#include "modcrf/verify.hpp"

namespace {

using namespace modcrf;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitCheckpointError = 4;

RunConfig load_config(const std::string& config_path,
                      const std::vector<std::string>& overrides) {
  RunConfig config;
  if (!config_path.empty()) config = RunConfig::from_file(config_path);
  for (const auto& item : overrides) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + item);
    config.apply(item.substr(0, eq), item.substr(eq + 1));
  }
  return config;
}

LabelSpace bio2_space(const RunConfig& config) {
  return LabelSpace::build(Scheme::BIO2, config.types);
}

struct LoadedModel {
  RunConfig config;
  Vocabulary vocab;
  std::unique_ptr<Model> model;
};

LoadedModel model_from_checkpoint(const std::string& path) {
  Checkpoint checkpoint = load_checkpoint(path);
  RunConfig config;
  for (const auto& [key, value] : checkpoint.manifest) {
    if (key == "config_hash" || key == "vocab_words" || key == "vocab_chars")
      continue;
    config.apply(key, value);
  }
  if (!checkpoint.manifest.count("vocab_words") ||
      !checkpoint.manifest.count("vocab_chars"))
    throw CheckpointError("checkpoint is missing the vocabulary manifest");

  std::vector<std::string> words;
  std::istringstream ss(checkpoint.manifest.at("vocab_words"));
  std::string word;
  while (std::getline(ss, word)) words.push_back(word);

  LoadedModel loaded{config,
                     Vocabulary::from_lists(
                         words, checkpoint.manifest.at("vocab_chars")),
                     nullptr};
  loaded.model = std::make_unique<Model>(config.model_config(), loaded.vocab,
                                         nullptr, config.seed);
  restore_params(loaded.model->params(), checkpoint);
  return loaded;
}

int cmd_train(const RunConfig& config, const std::string& checkpoint_path,
              const std::string& log_path) {
  if (config.train_path.empty() || config.dev_path.empty())
    throw ConfigError("train and dev data paths are required");

  LabelSpace space = bio2_space(config);
  Corpus train_corpus = read_conll(config.train_path, space);
  Corpus dev_corpus = read_conll(config.dev_path, space);

  EmbeddingTable table;
  const EmbeddingTable* table_ptr = nullptr;
  if (!config.embeddings_path.empty()) {
    table = load_embeddings(config.embeddings_path,
                            config.encoder.word_embed_dim, config.seed);
    table_ptr = &table;
  }

  std::vector<const Corpus*> corpora = {&train_corpus, &dev_corpus};
  Vocabulary vocab = Vocabulary::build(corpora, table_ptr);
  vocab.index(train_corpus);
  vocab.index(dev_corpus);

  Model model(config.model_config(), vocab, table_ptr, config.seed);
  TrainConfig tc;
  tc.optimizer = config.optimizer;
  tc.adversarial = config.adversarial;
  tc.seed = config.seed;

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw ConfigError("cannot write metrics log " + log_path);
  }
  auto result = train(model, train_corpus, dev_corpus, tc,
                      [&](const EpochRecord& record) {
                        std::ostringstream line;
                        line << record.epoch << '\t' << record.train_loss
                             << '\t' << record.dev_f1;
                        if (log.is_open()) log << line.str() << '\n';
                        std::cerr << "epoch " << line.str() << '\n';
                      });

  auto manifest = config.manifest();
  manifest["vocab_words"] = vocab.serialize_words();
  manifest["vocab_chars"] = vocab.serialize_chars();
  save_checkpoint(checkpoint_path, model.params(), manifest);

  // Human-readable run manifest next to the checkpoint.
  {
    std::ofstream mf(checkpoint_path + ".manifest");
    mf << config.to_text();
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  (unsigned long long)config.config_hash());
    mf << "config_hash=" << hash << '\n';
  }

  std::cout << "trained " << variant_name(config.model_config().variant)
            << ": best dev F1 " << result.best_dev_f1 << " at epoch "
            << result.best_epoch << " (" << result.epochs_run
            << " epochs run)\n"
            << "checkpoint: " << checkpoint_path << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& test_path,
             const std::string& mode) {
  LoadedModel loaded = model_from_checkpoint(checkpoint_path);
  if (mode != "full" &&
      !variant_has_subtask_heads(loaded.config.model_config().variant))
    throw ConfigError("variant has no " + mode + " head");

  Corpus test = read_conll(test_path, bio2_space(loaded.config));
  loaded.vocab.index(test);
  for (const auto& s : test.sentences) {
    if (s.availability != Availability::Full)
      throw ConfigError("eval needs fully labeled data");
  }

  PRF1 score;
  if (mode == "full") {
    score = evaluate_full(*loaded.model, test);
  } else if (mode == "seg") {
    score = evaluate_seg(*loaded.model, test);
  } else if (mode == "typ") {
    score = evaluate_typ(*loaded.model, test);
  } else {
    throw ConfigError("unknown eval mode: " + mode);
  }
  std::cout << format_prf1(score) << '\n'
            << "tp=" << score.tp << "\tfp=" << score.fp << "\tfn=" << score.fn
            << '\n';
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint_path,
                const std::string& input_path,
                const std::string& output_path) {
  LoadedModel loaded = model_from_checkpoint(checkpoint_path);
  LabelSpace space = bio2_space(loaded.config);
  Corpus input = read_conll(input_path, space);
  loaded.vocab.index(input);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output_path.empty()) {
    file.open(output_path);
    if (!file) throw ConfigError("cannot write " + output_path);
    out = &file;
  }
  for (const auto& s : input.sentences) {
    auto labels = loaded.model->predict(s);
    for (int t = 0; t < s.size(); ++t) {
      (*out) << s.tokens[size_t(t)].surface << ' '
             << space.render(labels[size_t(t)]) << '\n';
    }
    (*out) << '\n';
  }
  return kExitOk;
}

SynthSpec experiment_synth_spec(const RunConfig& config, int sentences) {
  SynthSpec spec;
  spec.types = config.types;
  spec.num_sentences = sentences;
  spec.entity_words = 40;
  spec.triggers_per_type = 14;
  spec.filler_words = 30;
  spec.min_tokens = 5;
  spec.max_tokens = 9;
  spec.min_spans = 1;
  spec.max_spans = 2;
  spec.min_span_len = 1;
  spec.max_span_len = 3;
  return spec;
}

int cmd_experiment(const RunConfig& base, const std::string& protocol_arg,
                   std::vector<double> grid, std::vector<uint64_t> seeds,
                   const std::string& partial, double full_fraction,
                   int synth_sentences, int threads,
                   const std::string& out_path) {
  auto protocol = protocol_from_name(protocol_arg);
  if (!protocol) throw ConfigError("unknown protocol: " + protocol_arg);

  ExperimentSpec spec;
  spec.protocol = *protocol;
  if (!grid.empty()) spec.grid = std::move(grid);
  if (!seeds.empty()) spec.seeds = std::move(seeds);
  if (partial == "seg")
    spec.partial_kind = PartialKind::Seg;
  else if (partial == "typ")
    spec.partial_kind = PartialKind::Typ;
  else
    throw ConfigError("partial kind must be seg or typ");
  spec.full_fraction = full_fraction;

  // Self-contained by default: the synthetic generator supplies data unless
  // the config names corpora.
  ExperimentData data;
  if (!base.train_path.empty()) {
    LabelSpace space = bio2_space(base);
    data.train = read_conll(base.train_path, space);
    if (base.dev_path.empty() || base.test_path.empty())
      throw ConfigError("experiment on real data needs dev and test paths");
    data.dev = read_conll(base.dev_path, space);
    data.test = read_conll(base.test_path, space);
  } else {
    data = default_synthetic_data(
        experiment_synth_spec(base, synth_sentences), base.seed,
        std::max(20, synth_sentences / 5), std::max(30, synth_sentences / 4),
        spec.protocol == Protocol::DomainTransfer);
  }

  auto rows = run_experiment(
      spec, base, data,
      [](const ExperimentRow& row) {
        std::cerr << protocol_name(row.protocol) << " f=" << row.fraction
                  << " seed=" << row.seed << " " << row.system
                  << " F1=" << row.test_f1 << '\n';
      },
      threads);
  const std::string table = format_rows(rows);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write " + out_path);
    out << table;
  }
  std::cout << table;
  return kExitOk;
}

int cmd_verify() {
  auto report = run_verification();
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "PASS" : "FAIL") << "  " << check.name;
    if (!check.detail.empty()) std::cout << "  (" << check.detail << ")";
    std::cout << '\n';
  }
  return report.all_passed() ? kExitOk : kExitVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modcrf: modular neural-CRF sequence labeling"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--set", overrides, "config override key=value");

  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string checkpoint_path = "model.ckpt";
  std::string log_path;
  train_cmd->add_option("--checkpoint", checkpoint_path, "output checkpoint");
  train_cmd->add_option("--log", log_path, "per-epoch metrics log (tsv)");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint, eval_data, eval_mode = "full";
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--mode", eval_mode, "full | seg | typ");

  auto* predict_cmd = app.add_subcommand("predict", "label a corpus");
  std::string predict_checkpoint, predict_input, predict_output;
  predict_cmd->add_option("--checkpoint", predict_checkpoint)->required();
  predict_cmd->add_option("--input", predict_input)->required();
  predict_cmd->add_option("--output", predict_output,
                          "output path (stdout when omitted)");

  auto* experiment_cmd =
      app.add_subcommand("experiment", "run a weak-supervision protocol");
  std::string protocol = "partial-curve";
  std::vector<double> grid;
  std::vector<uint64_t> seeds;
  std::string partial = "seg";
  double full_fraction = 0.2;
  int synth_sentences = 250;
  int threads = 1;
  std::string table_out;
  experiment_cmd->add_option(
      "--protocol", protocol,
      "knowledge-integration | partial-curve | domain-transfer");
  experiment_cmd->add_option("--grid", grid, "partial-label fractions");
  experiment_cmd->add_option("--seeds", seeds, "random seeds");
  experiment_cmd->add_option("--partial", partial, "seg | typ");
  experiment_cmd->add_option("--full-fraction", full_fraction,
                             "fixed share of full labels");
  experiment_cmd->add_option("--synth-sentences", synth_sentences,
                             "synthetic training corpus size");
  experiment_cmd->add_option("--threads", threads, "parallel grid points");
  experiment_cmd->add_option("--out", table_out, "results table path");

  app.add_subcommand("verify", "run the oracle verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = load_config(config_path, overrides);
    if (train_cmd->parsed())
      return cmd_train(config, checkpoint_path, log_path);
    if (eval_cmd->parsed())
      return cmd_eval(eval_checkpoint, eval_data, eval_mode);
    if (predict_cmd->parsed())
      return cmd_predict(predict_checkpoint, predict_input, predict_output);
    if (experiment_cmd->parsed())
      return cmd_experiment(config, protocol, grid, seeds, partial,
                            full_fraction, synth_sentences, threads,
                            table_out);
    return cmd_verify();
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpointError;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
