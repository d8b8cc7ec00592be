#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "modcrf/data.hpp"
#include "modcrf/eval.hpp"
#include "modcrf/synth.hpp"

using namespace modcrf;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

LabelSpace sentiment_space() {
  return LabelSpace::build(Scheme::BIO2, {"positive", "neutral", "negative"});
}

}  // namespace

TEST_CASE("read_conll infers availability from the label alphabet") {
  auto space = sentiment_space();

  const std::string full = temp_path("modcrf_full.conll");
  write_file(full, "Green B-positive\nBook I-positive\n\n");
  auto corpus = read_conll(full, space);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus.sentences[0].availability == Availability::Full);
  CHECK(space.render(corpus.sentences[0].labels[0]) == "B-positive");
  CHECK(corpus.sentences[0].seg_labels[1] == SegTag::I);

  const std::string seg = temp_path("modcrf_seg.conll");
  write_file(seg, "the O\ngame B\nboard I\n\nx B\n\n");
  auto seg_corpus = read_conll(seg, space);
  REQUIRE(seg_corpus.size() == 2);
  CHECK(seg_corpus.sentences[0].availability == Availability::SegOnly);
  CHECK(seg_corpus.sentences[0].seg_labels[1] == SegTag::B);
  CHECK_THROWS_AS(seg_corpus.sentences[0].typ_view(), UsageError);

  const std::string typ = temp_path("modcrf_typ.conll");
  write_file(typ, "good positive\nfilm O\n\n");
  auto typ_corpus = read_conll(typ, space);
  CHECK(typ_corpus.sentences[0].availability == Availability::TypeOnly);
  CHECK(typ_corpus.sentences[0].typ_labels[0] == 0);
  CHECK(typ_corpus.sentences[0].typ_labels[1] == kNoType);

  const std::string empty = temp_path("modcrf_empty.conll");
  write_file(empty, "");
  CHECK(read_conll(empty, space).size() == 0);

  const std::string unlabeled = temp_path("modcrf_unlabeled.conll");
  write_file(unlabeled, "just\ntokens\n\n");
  auto u = read_conll(unlabeled, space);
  REQUIRE(u.size() == 1);
  CHECK(u.sentences[0].availability == Availability::Unlabeled);
}

TEST_CASE("read_conll reports bad labels and invalid sequences") {
  auto space = sentiment_space();
  const std::string bad = temp_path("modcrf_bad.conll");
  write_file(bad, "word B-positive\nnext Z-positive\n\n");
  CHECK_THROWS_AS(read_conll(bad, space), ParseError);

  const std::string invalid = temp_path("modcrf_invalid.conll");
  write_file(invalid, "word I-positive\n\n");
  CHECK_THROWS_AS(read_conll(invalid, space), ParseError);

  const std::string ragged = temp_path("modcrf_ragged.conll");
  write_file(ragged, "a B-positive\nb\n\n");
  CHECK_THROWS_AS(read_conll(ragged, space), ParseError);
}

TEST_CASE("conll write/read round-trips all availabilities") {
  SynthSpec spec;
  spec.types = {"positive", "negative"};
  spec.num_sentences = 25;
  auto corpus = generate_synthetic_corpus(spec, 11);

  auto seg = project_partial(corpus, PartialKind::Seg, 1.0, 5);
  auto typ = project_partial(corpus, PartialKind::Typ, 1.0, 5);

  for (const Corpus* c : {&corpus, &seg, &typ}) {
    const std::string path = temp_path("modcrf_roundtrip.conll");
    write_conll(path, *c);
    auto back = read_conll(path, c->label_space);
    REQUIRE(back.size() == c->size());
    for (int i = 0; i < c->size(); ++i) {
      const auto& a = c->sentences[size_t(i)];
      const auto& b = back.sentences[size_t(i)];
      CHECK(a.availability == b.availability);
      REQUIRE(a.size() == b.size());
      for (int t = 0; t < a.size(); ++t)
        CHECK(a.tokens[size_t(t)].surface == b.tokens[size_t(t)].surface);
      CHECK(a.labels == b.labels);
      CHECK(a.seg_labels == b.seg_labels);
      CHECK(a.typ_labels == b.typ_labels);
    }
  }
}

TEST_CASE("load_embeddings reads vectors and flags bad lines") {
  const std::string path = temp_path("modcrf_vectors.txt");
  write_file(path, "the 0.1 0.2\ncat -1 0.5\n");
  auto table = load_embeddings(path, 2, 7);
  CHECK(table.lookup("the") == std::vector<double>{0.1, 0.2});
  CHECK(table.size() == 2);

  // Absent words share one stable OOV vector inside a run.
  const auto& oov1 = table.lookup("zebra");
  const auto& oov2 = table.lookup("walrus");
  CHECK(oov1 == oov2);
  CHECK(oov1.size() == 2);
  for (double v : oov1) CHECK(std::abs(v) <= std::sqrt(3.0 / 2));

  // Same seed, same OOV vector; different seed, different vector.
  auto again = load_embeddings(path, 2, 7);
  CHECK(again.oov_vector() == table.oov_vector());
  auto other = load_embeddings(path, 2, 8);
  CHECK(other.oov_vector() != table.oov_vector());

  const std::string bad = temp_path("modcrf_vectors_bad.txt");
  write_file(bad, "ok 1 2\nbad 1 2 3\n");
  CHECK_THROWS_WITH_AS(load_embeddings(bad, 2, 7), doctest::Contains(":2"),
                       ParseError);
}

TEST_CASE("vocabulary is case-insensitive for words, case-keeping for chars") {
  SynthSpec spec;
  spec.types = {"a"};
  spec.num_sentences = 5;
  auto corpus = generate_synthetic_corpus(spec, 3);
  corpus.sentences[0].tokens[0].surface = "Mixed";

  Vocabulary vocab = Vocabulary::build({&corpus});
  CHECK(vocab.word_id("Mixed") == vocab.word_id("mixed"));
  CHECK(vocab.word_id("MIXED") == vocab.word_id("mixed"));
  CHECK(vocab.word_id("unseen-token") == Vocabulary::kOov);
  CHECK(vocab.char_id('M') != vocab.char_id('m'));

  vocab.index(corpus);
  CHECK(corpus.sentences[0].tokens[0].word_id == vocab.word_id("mixed"));
  CHECK(corpus.sentences[0].tokens[0].characters.size() == 5);

  // With an embedding table, out-of-table words collapse to the OOV id.
  EmbeddingTable table(3, 1);
  table.insert("mixed", {1, 2, 3});
  Vocabulary restricted = Vocabulary::build({&corpus}, &table);
  CHECK(restricted.word_id("mixed") != Vocabulary::kOov);
  CHECK(restricted.num_words() == 3);  // pad, oov, mixed
}

TEST_CASE("split_folds partitions deterministically") {
  SynthSpec spec;
  spec.types = {"a", "b"};
  spec.num_sentences = 100;
  auto corpus = generate_synthetic_corpus(spec, 21);

  auto folds = split_folds(corpus, 10, 77);
  REQUIRE(folds.size() == 10);
  for (const auto& fold : folds) {
    CHECK(fold.test.size() == 10);
    CHECK(fold.dev.size() == 9);
    CHECK(fold.train.size() == 81);
  }

  // Same seed reproduces the folds exactly.
  auto again = split_folds(corpus, 10, 77);
  for (size_t f = 0; f < folds.size(); ++f) {
    REQUIRE(again[f].test.size() == folds[f].test.size());
    for (int i = 0; i < folds[f].test.size(); ++i)
      CHECK(again[f].test.sentences[size_t(i)].tokens[0].surface ==
            folds[f].test.sentences[size_t(i)].tokens[0].surface);
  }

  // Union of test folds covers the corpus exactly once.
  std::multiset<std::string> all_keys, test_keys;
  auto key = [](const AnnotatedSentence& s) {
    std::string k;
    for (const auto& tok : s.tokens) k += tok.surface + " ";
    return k;
  };
  for (const auto& s : corpus.sentences) all_keys.insert(key(s));
  for (const auto& fold : folds)
    for (const auto& s : fold.test.sentences) test_keys.insert(key(s));
  CHECK(all_keys == test_keys);

  CHECK_THROWS_AS(split_folds(corpus, 1, 7), UsageError);
  SynthSpec tiny = spec;
  tiny.num_sentences = 5;
  CHECK_THROWS_AS(split_folds(generate_synthetic_corpus(tiny, 1), 10, 7),
                  UsageError);
}

TEST_CASE("project_partial selects, projects and stays disjoint") {
  SynthSpec spec;
  spec.types = {"a", "b"};
  spec.num_sentences = 40;
  auto corpus = generate_synthetic_corpus(spec, 31);

  auto all_seg = project_partial(corpus, PartialKind::Seg, 1.0, 3);
  CHECK(all_seg.size() == 40);
  for (const auto& s : all_seg.sentences) {
    CHECK(s.availability == Availability::SegOnly);
    CHECK(s.typ_labels.empty());
  }

  CHECK(project_partial(corpus, PartialKind::Typ, 0.0, 3).size() == 0);

  auto half = project_partial(corpus, PartialKind::Typ, 0.5, 3, true);
  CHECK(half.size() == 40);
  int partial = 0, full = 0;
  for (const auto& s : half.sentences) {
    if (s.availability == Availability::TypeOnly) ++partial;
    if (s.availability == Availability::Full) ++full;
  }
  CHECK(partial == 20);
  CHECK(full == 20);

  CHECK_THROWS_AS(project_partial(corpus, PartialKind::Seg, 1.5, 3),
                  UsageError);
  CHECK_THROWS_AS(project_partial(all_seg, PartialKind::Seg, 1.0, 3),
                  UsageError);
}

TEST_CASE("synthetic corpora are deterministic, valid and separable") {
  SynthSpec spec;
  spec.types = {"pos", "neu", "neg"};
  spec.num_sentences = 60;

  auto a = generate_synthetic_corpus(spec, 123);
  auto b = generate_synthetic_corpus(spec, 123);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.sentences[size_t(i)].labels == b.sentences[size_t(i)].labels);
    for (int t = 0; t < a.sentences[size_t(i)].size(); ++t)
      CHECK(a.sentences[size_t(i)].tokens[size_t(t)].surface ==
            b.sentences[size_t(i)].tokens[size_t(t)].surface);
  }
  auto c = generate_synthetic_corpus(spec, 124);
  bool any_difference = false;
  for (int i = 0; i < a.size() && !any_difference; ++i)
    for (int t = 0; t < a.sentences[size_t(i)].size() &&
                    t < c.sentences[size_t(i)].size();
         ++t)
      if (a.sentences[size_t(i)].tokens[size_t(t)].surface !=
          c.sentences[size_t(i)].tokens[size_t(t)].surface)
        any_difference = true;
  CHECK(any_difference);

  // Every generated sequence is valid BIO2, lengths respect the range.
  for (const auto& s : a.sentences) {
    CHECK(validate_sequence(s.labels, Scheme::BIO2).empty());
    CHECK(s.size() >= spec.min_tokens);
    CHECK(s.size() <= spec.max_tokens);
  }

  // Rule tagger with the generator lexicon reproduces gold exactly.
  auto lexicon = synth_lexicon(spec);
  std::vector<std::vector<FullLabel>> gold, rule;
  for (const auto& s : a.sentences) {
    gold.push_back(s.labels);
    rule.push_back(rule_tag(s.tokens, lexicon));
  }
  auto score = span_f1(gold, rule, EvalMode::Full);
  CHECK(score.f1 == 1.0);

  // No spans requested: all-O labels.
  SynthSpec empty_spans = spec;
  empty_spans.min_spans = empty_spans.max_spans = 0;
  for (const auto& s : generate_synthetic_corpus(empty_spans, 5).sentences) {
    for (const auto& y : s.labels) CHECK(y.is_o());
  }

  SynthSpec bad = spec;
  bad.min_span_len = 4;
  bad.max_span_len = 3;
  CHECK_THROWS_AS(generate_synthetic_corpus(bad, 1), UsageError);
}
