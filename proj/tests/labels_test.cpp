#include <set>

#include "doctest.h"
#include "modcrf/labels.hpp"
#include "modcrf/rng.hpp"

using namespace modcrf;

namespace {

LabelSpace sentiment_space(Scheme scheme = Scheme::BIO2) {
  return LabelSpace::build(scheme, {"positive", "neutral", "negative"});
}

// Random well-formed BIO2 sequence over a type alphabet.
std::vector<FullLabel> random_bio2(Rng& rng, int length, int num_types) {
  std::vector<FullLabel> seq;
  int t = 0;
  while (t < length) {
    if (rng.next_double() < 0.5) {
      seq.push_back(FullLabel{SegTag::O, kNoType});
      ++t;
      continue;
    }
    const int typ = rng.next_int(0, num_types - 1);
    const int span = std::min(length - t, rng.next_int(1, 3));
    for (int i = 0; i < span; ++i)
      seq.push_back(FullLabel{i == 0 ? SegTag::B : SegTag::I, typ});
    t += span;
  }
  return seq;
}

std::vector<std::pair<int, int>> span_set(const std::vector<FullLabel>& seq) {
  std::vector<std::pair<int, int>> spans;
  for (int t = 0; t < int(seq.size()); ++t) {
    if (seq[size_t(t)].seg == SegTag::B) {
      int u = t + 1;
      while (u < int(seq.size()) && seq[size_t(u)].seg == SegTag::I) ++u;
      spans.emplace_back(t, u - 1);
    }
  }
  return spans;
}

}  // namespace

TEST_CASE("decompose splits rendered labels") {
  auto space = sentiment_space();
  auto [seg_b, typ_b] = decompose(space.parse("B-neutral"));
  CHECK(seg_b == SegTag::B);
  CHECK(space.render_typ(typ_b) == "neutral");

  auto [seg_o, typ_o] = decompose(space.parse("O"));
  CHECK(seg_o == SegTag::O);
  CHECK(typ_o == kNoType);

  auto [seg_i, typ_i] = decompose(space.parse("I-positive"));
  CHECK(seg_i == SegTag::I);
  CHECK(space.render_typ(typ_i) == "positive");

  CHECK_THROWS_AS(space.parse("B-bogus"), UsageError);
  CHECK_THROWS_AS(space.parse("X-positive"), UsageError);
}

TEST_CASE("compose is inverse of decompose") {
  auto space = sentiment_space();
  CHECK(space.render(compose(SegTag::B, 1)) == "B-neutral");
  CHECK(space.render(compose(SegTag::O, kNoType)) == "O");

  auto roundtrip = decompose(compose(SegTag::B, 0));
  CHECK(roundtrip.first == SegTag::B);
  CHECK(roundtrip.second == 0);

  CHECK_THROWS_AS(compose(SegTag::O, 2), UsageError);
  CHECK_THROWS_AS(compose(SegTag::B, kNoType), UsageError);
}

TEST_CASE("decompose/compose round-trip over the whole space") {
  for (Scheme scheme : {Scheme::BIO2, Scheme::BIOES}) {
    auto space = LabelSpace::build(scheme, {"a", "b"});
    for (const FullLabel& y : space.full()) {
      auto [seg, typ] = decompose(y);
      CHECK(compose(seg, typ) == y);
      CHECK(space.full_at(space.full_index(y)) == y);
    }
  }
}

TEST_CASE("bio2 to bioes rewrites span edges") {
  auto space = sentiment_space();
  auto parse_seq = [&](const std::vector<std::string>& texts) {
    std::vector<FullLabel> seq;
    for (const auto& t : texts) seq.push_back(space.parse(t));
    return seq;
  };
  auto render_seq = [&](const std::vector<FullLabel>& seq) {
    std::vector<std::string> out;
    for (const auto& y : seq) out.push_back(space.render(y));
    return out;
  };

  CHECK(render_seq(bio2_to_bioes(parse_seq({"B-positive"}))) ==
        std::vector<std::string>{"S-positive"});
  CHECK(render_seq(bio2_to_bioes(parse_seq({"B-positive", "I-positive"}))) ==
        std::vector<std::string>{"B-positive", "E-positive"});
  CHECK(render_seq(bio2_to_bioes(parse_seq(
            {"O", "B-negative", "I-negative", "I-negative", "O"}))) ==
        std::vector<std::string>{"O", "B-negative", "I-negative", "E-negative",
                                 "O"});

  // I without an opener is rejected with its position.
  auto bad = parse_seq({"O", "I-positive"});
  CHECK_THROWS_WITH_AS(bio2_to_bioes(bad), doctest::Contains("position 1"),
                       UsageError);
}

TEST_CASE("bioes to bio2 is total and inverts the conversion") {
  auto space = LabelSpace::build(Scheme::BIOES, {"positive", "negative"});
  CHECK(space.render(bioes_to_bio2({space.parse("S-positive")})[0]) ==
        "B-positive");
  // Ill-formed input maps without repair.
  CHECK(space.render(bioes_to_bio2({space.parse("E-positive")})[0]) ==
        "I-positive");

  Rng rng(99);
  for (int round = 0; round < 1000; ++round) {
    auto seq = random_bio2(rng, rng.next_int(1, 12), 2);
    REQUIRE(validate_sequence(seq, Scheme::BIO2).empty());
    auto bioes = bio2_to_bioes(seq);
    CHECK(validate_sequence(bioes, Scheme::BIOES).empty());
    CHECK(bioes_to_bio2(bioes) == seq);
    // Conversion preserves the extracted span set exactly.
    CHECK(span_set(bioes_to_bio2(bioes)) == span_set(seq));
  }
}

TEST_CASE("seg-only conversions mirror the full ones") {
  std::vector<SegTag> seq = {SegTag::B, SegTag::I, SegTag::B, SegTag::O,
                             SegTag::B};
  auto bioes = seg_bio2_to_bioes(seq);
  CHECK(bioes == std::vector<SegTag>{SegTag::B, SegTag::E, SegTag::S,
                                     SegTag::O, SegTag::S});
  CHECK(seg_bioes_to_bio2(bioes) == seq);
}

TEST_CASE("label space counts follow the closed form") {
  CHECK(LabelSpace::build(Scheme::BIOES, {"per", "loc", "org", "misc"})
            .num_full() == 17);
  CHECK(sentiment_space(Scheme::BIO2).num_full() == 7);
  CHECK(LabelSpace::build(Scheme::BIOES, {"only"}).num_full() == 5);

  for (Scheme scheme : {Scheme::BIO2, Scheme::BIOES}) {
    for (int n : {1, 2, 3, 5}) {
      std::vector<std::string> types;
      for (int i = 0; i < n; ++i) types.push_back("t" + std::to_string(i));
      auto space = LabelSpace::build(scheme, types);
      const int span_tags = scheme == Scheme::BIO2 ? 2 : 4;
      CHECK(space.num_full() == span_tags * n + 1);
      // Dense 0-based stable indices.
      std::set<int> seen;
      for (const auto& y : space.full()) seen.insert(space.full_index(y));
      CHECK(int(seen.size()) == space.num_full());
      CHECK(*seen.begin() == 0);
      CHECK(*seen.rbegin() == space.num_full() - 1);
    }
  }

  CHECK_THROWS_AS(LabelSpace::build(Scheme::BIO2, {}), UsageError);
  CHECK_THROWS_AS(LabelSpace::build(Scheme::BIO2, {"a", "a"}), UsageError);
}

TEST_CASE("validate_sequence catches scheme violations") {
  auto space = sentiment_space();
  CHECK(validate_sequence({space.parse("O"), space.parse("O")}, Scheme::BIO2)
            .empty());

  auto bad_i = validate_sequence({space.parse("I-positive")}, Scheme::BIO2);
  REQUIRE(bad_i.size() == 1);
  CHECK(bad_i[0].position == 0);

  auto bioes = LabelSpace::build(Scheme::BIOES, {"positive", "negative"});
  auto mismatch = validate_sequence(
      {bioes.parse("B-positive"), bioes.parse("E-negative")}, Scheme::BIOES);
  CHECK(!mismatch.empty());

  CHECK(validate_sequence(
            {bioes.parse("B-positive"), bioes.parse("E-positive")},
            Scheme::BIOES)
            .empty());
  CHECK(!validate_sequence({bioes.parse("B-positive")}, Scheme::BIOES).empty());
  CHECK(validate_sequence({bioes.parse("S-negative")}, Scheme::BIOES).empty());
}
