#include <cmath>
#include <functional>

#include "doctest.h"
#include "modcrf/encoder.hpp"
#include "modcrf/synth.hpp"

using namespace modcrf;

namespace {

EncoderConfig small_config() {
  EncoderConfig config;
  config.char_embed_dim = 3;
  config.char_hidden = 2;
  config.word_embed_dim = 4;
  config.word_hidden = 3;
  config.dropout_rate = 0.5;
  return config;
}

struct Fixture {
  Corpus corpus;
  Vocabulary vocab;
  Fixture() {
    SynthSpec spec;
    spec.types = {"a", "b"};
    spec.num_sentences = 6;
    spec.min_tokens = 3;
    spec.max_tokens = 5;
    corpus = generate_synthetic_corpus(spec, 5);
    vocab = Vocabulary::build({&corpus});
    vocab.index(corpus);
  }
};

}  // namespace

TEST_CASE("lstm_step zero weights with zero state gives zero output") {
  LstmDirectionParams dir;
  dir.input_dim = 4;
  dir.hidden_dim = 3;
  auto make = [&](double bias) {
    LstmGate g;
    g.W = Tensor::zeros(7, 3);
    g.b = Tensor::constant(1, 3, bias);
    return g;
  };
  dir.input = make(0.0);
  dir.forget = make(0.0);  // forget bias forced to 0 for this case
  dir.output = make(0.0);
  dir.candidate = make(0.0);

  Tensor x = Tensor::row({5.0, -3.0, 2.0, 9.0});
  auto [h, c] = lstm_step(dir, x, Tensor::zeros(1, 3), Tensor::zeros(1, 3));
  for (double v : h.values()) CHECK(v == 0.0);
  for (double v : c.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(lstm_step(dir, Tensor::zeros(1, 5), Tensor::zeros(1, 3),
                            Tensor::zeros(1, 3)),
                  DimensionError);
}

TEST_CASE("lstm_step matches the gate equations") {
  Rng rng(3);
  ParamRegistry registry;
  auto params = make_lstm_params(registry, "lstm", 2, 2, rng);

  Tensor x = Tensor::row({0.3, -0.8});
  Tensor h_prev = Tensor::row({0.1, 0.2});
  Tensor c_prev = Tensor::row({-0.4, 0.6});
  auto [h, c] = lstm_step(params.fwd, x, h_prev, c_prev);

  // Recompute by hand from the stored parameters.
  auto affine = [&](const LstmGate& gate) {
    std::vector<double> z = {x.at(0, 0), x.at(0, 1), h_prev.at(0, 0),
                             h_prev.at(0, 1)};
    std::vector<double> out(2, 0.0);
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 4; ++i) out[size_t(j)] += z[size_t(i)] * gate.W.at(i, j);
      out[size_t(j)] += gate.b.at(0, j);
    }
    return out;
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto i_gate = affine(params.fwd.input);
  auto f_gate = affine(params.fwd.forget);
  auto o_gate = affine(params.fwd.output);
  auto g_cand = affine(params.fwd.candidate);
  for (int j = 0; j < 2; ++j) {
    const double ci = sig(f_gate[size_t(j)]) * c_prev.at(0, j) +
                      sig(i_gate[size_t(j)]) * std::tanh(g_cand[size_t(j)]);
    CHECK(c.at(0, j) == doctest::Approx(ci).epsilon(1e-12));
    CHECK(h.at(0, j) ==
          doctest::Approx(sig(o_gate[size_t(j)]) * std::tanh(ci)).epsilon(1e-12));
  }
}

TEST_CASE("lstm gradients pass the finite-difference oracle") {
  Rng rng(7);
  ParamRegistry registry;
  auto params = make_lstm_params(registry, "lstm", 2, 2, rng);
  std::vector<Tensor> inputs = {Tensor::row({0.5, -0.2}),
                                Tensor::row({-1.0, 0.8}),
                                Tensor::row({0.1, 0.1})};
  auto build = [&] {
    auto outputs = run_lstm(params.fwd, inputs, false);
    Tensor total = sum(outputs[0]);
    for (size_t t = 1; t < outputs.size(); ++t)
      total = add(total, sum(outputs[size_t(t)]));
    return total;
  };
  CHECK(grad_check(registry, build, 1e-5, 1e-4).passed);
}

TEST_CASE("sequence of length one equals a single step") {
  Rng rng(9);
  ParamRegistry registry;
  auto params = make_lstm_params(registry, "lstm", 3, 2, rng);
  Tensor x = Tensor::row({0.2, -0.7, 1.1});
  auto seq = run_lstm(params.fwd, {x}, false);
  auto [h, c] = lstm_step(params.fwd, x, Tensor::zeros(1, 2),
                          Tensor::zeros(1, 2));
  CHECK(seq[0].values() == h.values());
}

TEST_CASE("backward direction mirrors reversed input") {
  Rng rng(11);
  ParamRegistry registry;
  auto params = make_lstm_params(registry, "lstm", 2, 3, rng);
  std::vector<Tensor> inputs = {Tensor::row({1.0, 0.0}),
                                Tensor::row({0.0, 1.0}),
                                Tensor::row({-1.0, 0.5})};
  std::vector<Tensor> reversed(inputs.rbegin(), inputs.rend());
  auto back = run_lstm(params.fwd, inputs, true);
  auto forward_on_reversed = run_lstm(params.fwd, reversed, false);
  for (size_t t = 0; t < inputs.size(); ++t)
    CHECK(back[t].values() ==
          forward_on_reversed[inputs.size() - 1 - t].values());
}

TEST_CASE("char_encode has fixed width and is order sensitive") {
  Rng rng(13);
  ParamRegistry registry;
  Tensor char_embed = glorot_init(registry, "char_embed", 10, 3, rng);
  auto lstm = make_lstm_params(registry, "char_lstm", 3, 2, rng);

  auto single = char_encode({4}, char_embed, lstm);
  CHECK(single.cols() == 4);
  auto longer = char_encode({4, 7, 2, 2, 5}, char_embed, lstm);
  CHECK(longer.cols() == 4);

  auto permuted = char_encode({2, 4, 7, 2, 5}, char_embed, lstm);
  bool differs = false;
  for (int j = 0; j < 4; ++j)
    if (longer.at(0, j) != permuted.at(0, j)) differs = true;
  CHECK(differs);

  // Empty input falls back to the padding character.
  auto empty = char_encode({}, char_embed, lstm);
  auto pad = char_encode({Vocabulary::kPad}, char_embed, lstm);
  CHECK(empty.values() == pad.values());
}

TEST_CASE("highway limits: closed gate copies, open gate transforms") {
  Rng rng(17);
  ParamRegistry registry;
  HighwayParams params;
  params.Wg = glorot_init(registry, "Wg", 3, 3, rng);
  params.bg = registry.create("bg", 1, 3);
  params.Wh = glorot_init(registry, "Wh", 3, 3, rng);
  params.bh = registry.create("bh", 1, 3);

  Tensor x = Tensor::row({0.3, -1.2, 0.9});

  for (auto& v : params.bg.values()) v = -1e9;  // gate shut: carry only
  auto carried = highway(x, params);
  CHECK(carried.values() == x.values());

  for (auto& v : params.bg.values()) v = 1e9;  // gate open: transform only
  auto transformed = highway(x, params);
  std::vector<double> manual(3, 0.0);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) manual[size_t(j)] += x.at(0, i) * params.Wh.at(i, j);
    manual[size_t(j)] = std::max(0.0, manual[size_t(j)] + params.bh.at(0, j));
  }
  for (int j = 0; j < 3; ++j)
    CHECK(transformed.at(0, j) == doctest::Approx(manual[size_t(j)]).epsilon(1e-12));

  for (auto& v : params.bg.values()) v = 0.3;  // interior point
  auto build = [&] { return sum(highway(x, params)); };
  CHECK(grad_check(registry, build, 1e-5, 1e-4).passed);
}

TEST_CASE("encode_sentence shapes, determinism and privacy") {
  Fixture fix;
  EncoderConfig config = small_config();
  ParamRegistry registry;
  Rng init(21);
  std::set<ModuleId> modules = {ModuleId::Decision, ModuleId::Seg,
                                ModuleId::Typ};
  Encoder encoder(config, fix.vocab, nullptr, modules, registry, init);

  const auto& sentence = fix.corpus.sentences[0];
  DropoutDriver eval = DropoutDriver::disabled();
  auto a = encoder.encode(sentence, eval);
  auto b = encoder.encode(sentence, eval);

  CHECK(int(a.token_reprs.size()) == sentence.size());
  for (const auto& e : a.token_reprs) CHECK(e.cols() == config.token_dim());
  for (ModuleId m : modules) {
    CHECK(a.hidden.at(m).rows() == sentence.size());
    CHECK(a.hidden.at(m).cols() == config.hidden_dim());
    // Evaluation mode is deterministic.
    CHECK(a.hidden.at(m).values() == b.hidden.at(m).values());
  }

  // Private word LSTMs: per-module hidden states differ for random params.
  CHECK(a.hidden.at(ModuleId::Seg).values() !=
        a.hidden.at(ModuleId::Decision).values());

  // Training mode applies masks; with dropout 0 it matches evaluation.
  Rng dropout_rng(5);
  DropoutDriver drop(config.dropout_rate, &dropout_rng);
  auto dropped = encoder.encode(sentence, drop);
  CHECK(dropped.hidden.at(ModuleId::Decision).values() !=
        a.hidden.at(ModuleId::Decision).values());

  AnnotatedSentence unindexed = sentence;
  for (auto& tok : unindexed.tokens) tok.word_id = -1;
  CHECK_THROWS_AS(encoder.encode(unindexed, eval), UsageError);
}

TEST_CASE("shared e_t feeds every private lstm exactly once") {
  Fixture fix;
  EncoderConfig config = small_config();
  config.dropout_rate = 0.0;
  ParamRegistry registry;
  Rng init(23);
  std::set<ModuleId> modules = {ModuleId::Decision, ModuleId::Seg};
  Encoder encoder(config, fix.vocab, nullptr, modules, registry, init);

  const auto& sentence = fix.corpus.sentences[1];
  DropoutDriver eval = DropoutDriver::disabled();
  auto out = encoder.encode(sentence, eval);

  // Mutating seg-LSTM parameters afterwards cannot change e_t: encode again
  // with scrambled seg weights and compare token representations.
  auto* seg_w = registry.find("word_lstm.seg.fwd.input.W");
  REQUIRE(seg_w != nullptr);
  for (auto& v : seg_w->tensor.values()) v += 10.0;
  auto rerun = encoder.encode(sentence, eval);
  for (size_t t = 0; t < out.token_reprs.size(); ++t)
    CHECK(out.token_reprs[t].values() == rerun.token_reprs[t].values());
  CHECK(out.hidden.at(ModuleId::Seg).values() !=
        rerun.hidden.at(ModuleId::Seg).values());
  CHECK(out.hidden.at(ModuleId::Decision).values() ==
        rerun.hidden.at(ModuleId::Decision).values());
}

TEST_CASE("full encoder gradient passes the finite-difference oracle") {
  Fixture fix;
  EncoderConfig config = small_config();
  config.dropout_rate = 0.0;
  ParamRegistry registry;
  Rng init(29);
  Encoder encoder(config, fix.vocab, nullptr, {ModuleId::Decision}, registry,
                  init);

  AnnotatedSentence sentence = fix.corpus.sentences[2];
  sentence.tokens.resize(3);

  DropoutDriver eval = DropoutDriver::disabled();
  auto build = [&] {
    auto out = encoder.encode(sentence, eval);
    return sum(tanh_t(out.hidden.at(ModuleId::Decision)));
  };
  auto report = grad_check(registry, build, 1e-5, 1e-4);
  CHECK(report.passed);
}

TEST_CASE("dropout replay reproduces the sampled pass bitwise") {
  Fixture fix;
  EncoderConfig config = small_config();
  ParamRegistry registry;
  Rng init(31);
  Encoder encoder(config, fix.vocab, nullptr, {ModuleId::Decision}, registry,
                  init);
  const auto& sentence = fix.corpus.sentences[0];

  Rng dropout_rng(5);
  DropoutDriver drop(config.dropout_rate, &dropout_rng);
  auto sampled = encoder.encode(sentence, drop);
  drop.start_replay();
  auto replayed = encoder.encode(sentence, drop);
  CHECK(sampled.hidden.at(ModuleId::Decision).values() ==
        replayed.hidden.at(ModuleId::Decision).values());
}
