#include <array>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "modcrf/data.hpp"
#include "modcrf/synth.hpp"
#include "modcrf/verify.hpp"

// End-to-end checks of the installed command surface. The binary path comes
// from the build system.

using namespace modcrf;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string command =
      std::string(MODCRF_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), int(buffer.size()), pipe))
    result.output += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct CorpusFiles {
  std::string train, dev, test, unlabeled;
};

CorpusFiles write_corpora() {
  SynthSpec spec;
  spec.types = {"pos", "neu", "neg"};
  spec.num_sentences = 30;
  spec.entity_words = 8;
  spec.triggers_per_type = 3;
  spec.filler_words = 8;
  spec.min_tokens = 4;
  spec.max_tokens = 6;

  CorpusFiles files;
  files.train = temp_path("modcrf_cli_train.conll");
  files.dev = temp_path("modcrf_cli_dev.conll");
  files.test = temp_path("modcrf_cli_test.conll");
  files.unlabeled = temp_path("modcrf_cli_unlabeled.conll");

  write_conll(files.train, generate_synthetic_corpus(spec, 11));
  SynthSpec small = spec;
  small.num_sentences = 8;
  write_conll(files.dev, generate_synthetic_corpus(small, 12));
  write_conll(files.test, generate_synthetic_corpus(small, 13));

  auto unlabeled = generate_synthetic_corpus(small, 14);
  std::ofstream out(files.unlabeled);
  for (const auto& s : unlabeled.sentences) {
    for (const auto& tok : s.tokens) out << tok.surface << '\n';
    out << '\n';
  }
  return files;
}

std::string common_flags(const CorpusFiles& files) {
  std::ostringstream os;
  os << "--set train=" << files.train << " --set dev=" << files.dev
     << " --set types=pos,neu,neg"
     << " --set char_embed_dim=4 --set char_hidden=3"
     << " --set word_embed_dim=8 --set word_hidden=8"
     << " --set max_epochs=8 --set min_epochs=2 --set patience=8"
     << " --set seed=5";
  return os.str();
}

}  // namespace

TEST_CASE("train, eval, predict round trip through the binary") {
  CorpusFiles files = write_corpora();
  const std::string ckpt = temp_path("modcrf_cli.ckpt");
  const std::string log = temp_path("modcrf_cli.log");

  auto trained =
      run_cli(common_flags(files) + " --set variant=tig train --checkpoint " +
              ckpt + " --log " + log);
  CHECK(trained.exit_code == 0);
  CHECK(trained.output.find("best dev F1") != std::string::npos);

  // Metrics log: one tab-separated line per epoch.
  std::ifstream log_in(log);
  int lines = 0;
  std::string line;
  while (std::getline(log_in, line)) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), '\t') == 2);
  }
  CHECK(lines == 8);

  // A flat key=value manifest lands next to the checkpoint.
  std::ifstream manifest(ckpt + ".manifest");
  REQUIRE(manifest.good());
  bool saw_lr = false, saw_hash = false;
  while (std::getline(manifest, line)) {
    if (line == "lr=0.01") saw_lr = true;
    if (line.rfind("config_hash=", 0) == 0) saw_hash = true;
  }
  CHECK(saw_lr);
  CHECK(saw_hash);

  auto eval_full = run_cli("eval --checkpoint " + ckpt + " --data " +
                           files.test + " --mode full");
  CHECK(eval_full.exit_code == 0);
  CHECK(eval_full.output.find("Pre\tRec\tF1") != std::string::npos);

  auto eval_seg = run_cli("eval --checkpoint " + ckpt + " --data " +
                          files.test + " --mode seg");
  CHECK(eval_seg.exit_code == 0);

  const std::string predictions = temp_path("modcrf_cli_pred.conll");
  auto predicted = run_cli("predict --checkpoint " + ckpt + " --input " +
                           files.unlabeled + " --output " + predictions);
  CHECK(predicted.exit_code == 0);

  // Prediction output is valid labeled CoNLL aligned with its input.
  auto space = LabelSpace::build(Scheme::BIO2, {"pos", "neu", "neg"});
  auto output_corpus = read_conll(predictions, space, Availability::Full);
  auto input_corpus = read_conll(files.unlabeled, space);
  REQUIRE(output_corpus.size() == input_corpus.size());
  for (int i = 0; i < output_corpus.size(); ++i) {
    CHECK(output_corpus.sentences[size_t(i)].size() ==
          input_corpus.sentences[size_t(i)].size());
  }
}

TEST_CASE("determinism: same config and seed give identical checkpoints") {
  CorpusFiles files = write_corpora();
  const std::string c1 = temp_path("modcrf_cli_det1.ckpt");
  const std::string c2 = temp_path("modcrf_cli_det2.ckpt");
  auto r1 =
      run_cli(common_flags(files) + " --set variant=t train --checkpoint " + c1);
  auto r2 =
      run_cli(common_flags(files) + " --set variant=t train --checkpoint " + c2);
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);

  std::ifstream f1(c1, std::ios::binary), f2(c2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK(!b1.empty());
}

TEST_CASE("exit codes: config, data, checkpoint errors") {
  CorpusFiles files = write_corpora();

  // Missing data path: config error.
  auto no_data = run_cli("--set types=a,b train");
  CHECK(no_data.exit_code == 2);

  // Unreadable training data: data error.
  auto bad_data = run_cli("--set train=/nonexistent.conll --set dev=" +
                          files.dev + " --set types=a,b train");
  CHECK(bad_data.exit_code == 3);

  // Corrupt checkpoint: checkpoint error.
  const std::string junk = temp_path("modcrf_cli_junk.ckpt");
  {
    std::ofstream out(junk);
    out << "not a checkpoint";
  }
  auto bad_ckpt =
      run_cli("eval --checkpoint " + junk + " --data " + files.test);
  CHECK(bad_ckpt.exit_code == 4);

  // Unknown config key: config error.
  auto bad_key = run_cli("--set nonsense=1 verify");
  CHECK(bad_key.exit_code == 2);

  // Baseline has no seg head: config error.
  const std::string base_ckpt = temp_path("modcrf_cli_base.ckpt");
  auto trained = run_cli(common_flags(files) +
                         " --set variant=baseline train --checkpoint " +
                         base_ckpt);
  REQUIRE(trained.exit_code == 0);
  auto seg_eval = run_cli("eval --checkpoint " + base_ckpt + " --data " +
                          files.test + " --mode seg");
  CHECK(seg_eval.exit_code == 2);
}

TEST_CASE("experiment emits one row per grid point, seed and system") {
  const std::string table = temp_path("modcrf_cli_table.tsv");
  auto result = run_cli(
      "--set types=a,b --set char_embed_dim=4 --set char_hidden=3 "
      "--set word_embed_dim=8 --set word_hidden=8 "
      "--set max_epochs=2 --set min_epochs=1 --set patience=2 "
      "experiment --protocol partial-curve --grid 0 0.5 --seeds 1 2 "
      "--partial seg --synth-sentences 40 --threads 4 --out " +
      table);
  REQUIRE(result.exit_code == 0);

  std::ifstream in(table);
  std::string line;
  std::getline(in, line);
  CHECK(line == "protocol\tfraction\tseed\tsystem\ttrain_sentences\ttest_f1");
  int rows = 0;
  int modular_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.find("\ttig\t") != std::string::npos) ++modular_rows;
  }
  CHECK(rows == 2 * 2 * 2);  // grid x seeds x systems
  CHECK(modular_rows == 4);
}

TEST_CASE("verify passes on the shipped implementation and flags faults") {
  auto result = run_cli("verify");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("FAIL") == std::string::npos);
  // One line per oracle check.
  int pass_lines = 0;
  std::istringstream ss(result.output);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind("PASS", 0) == 0) ++pass_lines;
  CHECK(pass_lines == 5);

  // The suite is sensitive: an off-by-one in the Viterbi backpointer and a
  // perturbed partition are both caught through the injection hooks.
  VerifyHooks broken_viterbi;
  broken_viterbi.viterbi = [](const CrfPotentials& p) {
    ViterbiResult r = viterbi(p);
    if (r.path.size() > 1) std::swap(r.path.front(), r.path.back());
    return r;
  };
  CHECK(!run_verification(broken_viterbi).all_passed());

  VerifyHooks broken_partition;
  broken_partition.log_partition = [](const CrfPotentials& p) {
    return add(log_partition(p), Tensor::scalar(1e-6));
  };
  CHECK(!run_verification(broken_partition).all_passed());
}
