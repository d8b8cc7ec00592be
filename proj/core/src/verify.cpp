#include "modcrf/verify.hpp"

#include <cmath>
#include <sstream>

#include "modcrf/model.hpp"
#include "modcrf/synth.hpp"

namespace modcrf {

namespace {

CrfPotentials random_potentials(int length, int num_labels, Rng& rng) {
  CrfPotentials p;
  std::vector<double> em(size_t(length) * num_labels);
  for (auto& v : em) v = rng.uniform(-2.0, 2.0);
  p.emissions = Tensor::from_values(length, num_labels, std::move(em));
  const int w = num_labels + 2;
  std::vector<double> tr(size_t(w) * w);
  for (auto& v : tr) v = rng.uniform(-2.0, 2.0);
  p.transitions = Tensor::from_values(w, w, std::move(tr));
  return p;
}

VerifyCheck check_crf_oracle(const VerifyHooks& hooks) {
  VerifyCheck check{"crf-brute-force-equivalence", true, ""};
  auto partition = hooks.log_partition
                       ? hooks.log_partition
                       : [](const CrfPotentials& p) { return log_partition(p); };
  auto decode = hooks.viterbi
                    ? hooks.viterbi
                    : [](const CrfPotentials& p) { return viterbi(p); };
  Rng rng(20240);
  double worst_z = 0.0;
  for (int round = 0; round < 200; ++round) {
    const int length = rng.next_int(1, 6);
    const int k = rng.next_int(1, 4);
    auto p = random_potentials(length, k, rng);

    const double z_fast = partition(p).value();
    const double z_slow = brute_force_log_partition(p);
    worst_z = std::max(worst_z, std::abs(z_fast - z_slow));
    if (std::abs(z_fast - z_slow) > 1e-10) {
      check.passed = false;
      check.detail = "partition mismatch " + std::to_string(z_fast - z_slow);
      return check;
    }

    auto fast = decode(p);
    auto slow = brute_force_best_path(p);
    if (std::abs(fast.score - slow.score) > 1e-10 || fast.path != slow.path) {
      check.passed = false;
      check.detail = "viterbi mismatch at round " + std::to_string(round);
      return check;
    }
  }
  std::ostringstream os;
  os << "200 instances, worst |dZ| = " << worst_z;
  check.detail = os.str();
  return check;
}

struct TinyWorld {
  Corpus corpus;
  Vocabulary vocab;
  AnnotatedSentence sentence;

  TinyWorld() {
    SynthSpec spec;
    spec.types = {"a", "b"};
    spec.num_sentences = 6;
    spec.min_tokens = 3;
    spec.max_tokens = 4;
    spec.min_spans = 1;
    spec.max_spans = 1;
    spec.entity_words = 5;
    spec.triggers_per_type = 3;
    spec.filler_words = 5;
    corpus = generate_synthetic_corpus(spec, 91);
    vocab = Vocabulary::build({&corpus});
    vocab.index(corpus);

    const auto& src = corpus.sentences[0];
    std::vector<Token> tokens(src.tokens.begin(), src.tokens.begin() + 3);
    std::vector<FullLabel> labels(src.labels.begin(), src.labels.begin() + 3);
    for (int t = 0; t < 3; ++t) {
      if (labels[size_t(t)].seg == SegTag::I &&
          (t == 0 || labels[size_t(t - 1)].is_o()))
        labels[size_t(t)].seg = SegTag::B;
    }
    sentence = make_full_sentence(tokens, labels);
  }

  ModelConfig model_config(ModelVariant v) const {
    ModelConfig config;
    config.variant = v;
    config.encoder.char_embed_dim = 3;
    config.encoder.char_hidden = 2;
    config.encoder.word_embed_dim = 4;
    config.encoder.word_hidden = 3;
    config.encoder.dropout_rate = 0.0;
    config.types = {"a", "b"};
    return config;
  }
};

VerifyCheck check_gradients(const TinyWorld& world) {
  VerifyCheck check{"gradient-integrity-all-variants", true, ""};
  double worst = 0.0;
  for (ModelVariant v : {ModelVariant::Baseline, ModelVariant::T,
                         ModelVariant::TI, ModelVariant::TIg,
                         ModelVariant::TIgNoCrf}) {
    Model model(world.model_config(v), world.vocab, nullptr, 13);
    DropoutDriver eval = DropoutDriver::disabled();
    auto build = [&] { return model.sentence_loss(world.sentence, eval); };
    auto report = grad_check(model.params(), build, 1e-4, 1e-4);
    worst = std::max(worst, report.max_rel_error);
    if (!report.passed) {
      check.passed = false;
      check.detail = std::string("variant ") + variant_name(v) +
                     " max rel err " + std::to_string(report.max_rel_error);
      return check;
    }
  }
  std::ostringstream os;
  os << "5 variants, worst rel err = " << worst;
  check.detail = os.str();
  return check;
}

VerifyCheck check_label_roundtrips() {
  VerifyCheck check{"label-algebra-round-trips", true, ""};
  auto space = LabelSpace::build(Scheme::BIOES, {"p", "q", "r", "s"});
  if (space.num_full() != 17) {
    check.passed = false;
    check.detail = "BIOES x 4 types != 17 labels";
    return check;
  }
  for (const auto& y : space.full()) {
    auto [seg, typ] = decompose(y);
    if (!(compose(seg, typ) == y)) {
      check.passed = false;
      check.detail = "compose(decompose) misses " + space.render(y);
      return check;
    }
  }
  Rng rng(7);
  for (int round = 0; round < 1000; ++round) {
    std::vector<FullLabel> seq;
    const int length = rng.next_int(1, 10);
    int t = 0;
    while (t < length) {
      if (rng.next_double() < 0.5) {
        seq.push_back(FullLabel{SegTag::O, kNoType});
        ++t;
        continue;
      }
      const int typ = rng.next_int(0, 3);
      const int span = std::min(length - t, rng.next_int(1, 3));
      for (int i = 0; i < span; ++i)
        seq.push_back(FullLabel{i == 0 ? SegTag::B : SegTag::I, typ});
      t += span;
    }
    if (bioes_to_bio2(bio2_to_bioes(seq)) != seq) {
      check.passed = false;
      check.detail = "BIO2<->BIOES round trip failed";
      return check;
    }
  }
  check.detail = "17-label space; 1000 conversion round trips";
  return check;
}

VerifyCheck check_masking(const TinyWorld& world) {
  VerifyCheck check{"partial-label-masking-zeros", true, ""};
  Model model(world.model_config(ModelVariant::TIg), world.vocab, nullptr, 7);
  const auto& src = world.corpus.sentences[1];

  auto run = [&](const AnnotatedSentence& s,
                 const std::function<bool(const std::string&)>& allowed) {
    model.params().zero_grad();
    DropoutDriver eval = DropoutDriver::disabled();
    {
      Tape tape;
      tape.backward(model.sentence_loss(s, eval));
    }
    for (const auto& p : model.params().all()) {
      if (allowed(p.name) || !p.tensor.has_grad()) continue;
      for (double g : p.tensor.grad()) {
        if (g != 0.0) return false;
      }
    }
    return true;
  };

  const bool seg_ok = run(
      make_seg_sentence(src.tokens, src.seg_labels), [](const std::string& n) {
        return n.rfind("char_", 0) == 0 || n == "word_embed" ||
               n.rfind("highway.", 0) == 0 || n.rfind("word_lstm.seg.", 0) == 0 ||
               n.rfind("head.seg.", 0) == 0 || n == "trans.seg";
      });
  const bool typ_ok = run(
      make_typ_sentence(src.tokens, src.typ_labels), [](const std::string& n) {
        return n.rfind("char_", 0) == 0 || n == "word_embed" ||
               n.rfind("highway.", 0) == 0 || n.rfind("word_lstm.typ.", 0) == 0 ||
               n.rfind("head.typ.", 0) == 0 || n == "trans.typ";
      });
  model.params().zero_grad();
  if (!seg_ok || !typ_ok) {
    check.passed = false;
    check.detail = seg_ok ? "TypeOnly grads leak" : "SegOnly grads leak";
    return check;
  }
  check.detail = "SegOnly and TypeOnly gradients confined to their paths";
  return check;
}

VerifyCheck check_gate_saturation(const TinyWorld& world) {
  VerifyCheck check{"gate-saturation-reduction", true, ""};
  Model ti(world.model_config(ModelVariant::TI), world.vocab, nullptr, 11);
  Model tig(world.model_config(ModelVariant::TIg), world.vocab, nullptr, 11);
  tig.params().find("gate.seg.b")->tensor.values().assign(
      size_t(tig.num_seg_labels()), 30.0);
  tig.params().find("gate.typ.b")->tensor.values().assign(
      size_t(tig.num_typ_labels()), 30.0);

  DropoutDriver eval = DropoutDriver::disabled();
  HeadRequest decision_only;
  decision_only.decision = true;
  double worst = 0.0;
  for (const auto& s : world.corpus.sentences) {
    auto a = tig.forward_heads(s, decision_only, eval);
    auto b = ti.forward_heads(s, decision_only, eval);
    for (size_t i = 0; i < b.decision->emissions.values().size(); ++i) {
      worst = std::max(worst, std::abs(a.decision->emissions.values()[i] -
                                       b.decision->emissions.values()[i]));
    }
  }
  if (worst > 1e-9) {
    check.passed = false;
  }
  std::ostringstream os;
  os << "worst |TIg - TI| emission gap = " << worst;
  check.detail = os.str();
  return check;
}

}  // namespace

VerifyReport run_verification(const VerifyHooks& hooks) {
  VerifyReport report;
  report.checks.push_back(check_crf_oracle(hooks));
  TinyWorld world;
  report.checks.push_back(check_gradients(world));
  report.checks.push_back(check_label_roundtrips());
  report.checks.push_back(check_masking(world));
  report.checks.push_back(check_gate_saturation(world));
  return report;
}

}  // namespace modcrf
