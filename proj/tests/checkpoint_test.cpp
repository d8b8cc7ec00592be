#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "modcrf/checkpoint.hpp"
#include "modcrf/config.hpp"
#include "modcrf/model.hpp"
#include "modcrf/synth.hpp"

using namespace modcrf;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("checkpoint round-trips parameters and manifest") {
  ParamRegistry params;
  Tensor a = params.create("alpha", 2, 3);
  a.values() = {1.5, -2.25, 0.0, 1e-300, -0.0, 42.0};
  Tensor b = params.create("beta", 1, 2);
  b.values() = {3.14159, -1.0};

  const std::string path = temp_path("modcrf_ckpt.bin");
  save_checkpoint(path, params, {{"variant", "tig"}, {"seed", "7"}});

  auto loaded = load_checkpoint(path);
  CHECK(loaded.manifest.at("variant") == "tig");
  CHECK(loaded.manifest.at("seed") == "7");
  REQUIRE(loaded.tensors.count("alpha") == 1);
  CHECK(loaded.tensors.at("alpha").values() == a.values());
  CHECK(loaded.tensors.at("beta").values() == b.values());

  ParamRegistry fresh;
  fresh.create("alpha", 2, 3);
  fresh.create("beta", 1, 2);
  restore_params(fresh, loaded);
  CHECK(fresh.find("alpha")->tensor.values() == a.values());

  ParamRegistry mismatched;
  mismatched.create("alpha", 3, 2);
  mismatched.create("beta", 1, 2);
  CHECK_THROWS_AS(restore_params(mismatched, loaded), CheckpointError);

  ParamRegistry extra;
  extra.create("alpha", 2, 3);
  extra.create("gamma", 1, 1);
  CHECK_THROWS_AS(restore_params(extra, loaded), CheckpointError);
}

TEST_CASE("checkpoint bytes are independent of registration order") {
  ParamRegistry forward, backward;
  forward.create("a", 1, 2).values() = {1, 2};
  forward.create("b", 1, 2).values() = {3, 4};
  backward.create("b", 1, 2).values() = {3, 4};
  backward.create("a", 1, 2).values() = {1, 2};

  const std::string p1 = temp_path("modcrf_order1.bin");
  const std::string p2 = temp_path("modcrf_order2.bin");
  save_checkpoint(p1, forward, {});
  save_checkpoint(p2, backward, {});
  CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("corrupt and truncated files are rejected") {
  const std::string path = temp_path("modcrf_corrupt.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);

  // Truncate a valid file.
  ParamRegistry params;
  params.create("a", 4, 4);
  const std::string valid = temp_path("modcrf_valid.bin");
  save_checkpoint(valid, params, {{"k", "v"}});
  auto bytes = read_bytes(valid);
  const std::string cut = temp_path("modcrf_cut.bin");
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint(cut), CheckpointError);

  CHECK_THROWS_AS(load_checkpoint(temp_path("modcrf_missing.bin")),
                  CheckpointError);
}

TEST_CASE("same config and seed give byte-identical model checkpoints") {
  SynthSpec spec;
  spec.types = {"a", "b"};
  spec.num_sentences = 6;
  auto corpus = generate_synthetic_corpus(spec, 3);
  auto vocab = Vocabulary::build({&corpus});

  RunConfig config;
  config.types = {"a", "b"};
  config.encoder.char_embed_dim = 3;
  config.encoder.char_hidden = 2;
  config.encoder.word_embed_dim = 4;
  config.encoder.word_hidden = 3;

  auto dump = [&](const std::string& path) {
    Model model(config.model_config(), vocab, nullptr, config.seed);
    auto manifest = config.manifest();
    save_checkpoint(path, model.params(), manifest);
  };
  const std::string p1 = temp_path("modcrf_det1.bin");
  const std::string p2 = temp_path("modcrf_det2.bin");
  dump(p1);
  dump(p2);
  CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("run config canonical text and manifest carry the recipe") {
  RunConfig config;
  const std::string text = config.to_text();
  // The documented training recipe, as the manifest strings.
  CHECK(text.find("lr=0.01\n") != std::string::npos);
  CHECK(text.find("lr_decay=0.05\n") != std::string::npos);
  CHECK(text.find("momentum=0.9\n") != std::string::npos);
  CHECK(text.find("batch_size=10\n") != std::string::npos);
  CHECK(text.find("clip=5\n") != std::string::npos);
  CHECK(text.find("patience=30\n") != std::string::npos);
  CHECK(text.find("min_epochs=120\n") != std::string::npos);
  CHECK(text.find("alpha=1\n") != std::string::npos);
  CHECK(text.find("beta=1\n") != std::string::npos);

  auto manifest = config.manifest();
  CHECK(manifest.at("lr") == "0.01");
  CHECK(manifest.count("config_hash") == 1);

  // The hash is stable and changes with the config.
  RunConfig other = config;
  CHECK(other.config_hash() == config.config_hash());
  other.optimizer.lr = 0.02;
  CHECK(other.config_hash() != config.config_hash());
}

TEST_CASE("run config file parsing and overrides") {
  const std::string path = temp_path("modcrf_config.txt");
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "variant=ti\n";
    out << "types=x,y\n";
    out << "lr=0.25\n";
    out << "max_epochs=40\n";
    out << "adversarial=true\n";
  }
  auto config = RunConfig::from_file(path);
  CHECK(config.variant == "ti");
  CHECK(config.types == std::vector<std::string>{"x", "y"});
  CHECK(config.optimizer.lr == 0.25);
  CHECK(config.optimizer.max_epochs == 40);
  CHECK(config.adversarial.enabled);
  // Untouched keys keep defaults.
  CHECK(config.optimizer.momentum == 0.9);

  config.apply("momentum", "0.5");
  CHECK(config.optimizer.momentum == 0.5);
  CHECK_THROWS_AS(config.apply("nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(config.apply("lr", "fast"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(temp_path("nope.cfg")), ConfigError);
}
