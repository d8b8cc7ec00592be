#include "modcrf/synth.hpp"

#include <algorithm>

namespace modcrf {

namespace {

void validate_spec(const SynthSpec& spec) {
  if (spec.types.empty()) throw UsageError("synth: empty type alphabet");
  if (spec.num_sentences < 1 || spec.entity_words < 1 ||
      spec.triggers_per_type < 1 || spec.filler_words < 1)
    throw UsageError("synth: lexicon and corpus sizes must be positive");
  if (spec.min_tokens < 1 || spec.min_tokens > spec.max_tokens)
    throw UsageError("synth: bad sentence length range");
  if (spec.min_spans < 0 || spec.min_spans > spec.max_spans)
    throw UsageError("synth: bad span count range");
  if (spec.max_spans > 0 &&
      (spec.min_span_len < 1 || spec.min_span_len > spec.max_span_len))
    throw UsageError("synth: bad span length range");
  const int footprint =
      spec.min_spans * spec.min_span_len + std::max(0, spec.min_spans - 1);
  if (footprint > spec.max_tokens)
    throw UsageError("synth: min_spans cannot fit into max_tokens");
}

// Structureless lowercase surfaces: lexicon membership must be learned from
// supervision, not read off prefixes, so pools are random distinct strings.
std::string random_word(Rng& rng) {
  const int length = rng.next_int(4, 7);
  std::string word;
  for (int i = 0; i < length; ++i)
    word += char('a' + rng.next_int(0, 25));
  return word;
}

std::vector<std::string> draw_pool(Rng& rng, int count,
                                   std::set<std::string>& taken) {
  std::vector<std::string> pool;
  while (int(pool.size()) < count) {
    std::string word = random_word(rng);
    if (taken.insert(word).second) pool.push_back(std::move(word));
  }
  return pool;
}

struct SynthPools {
  std::vector<std::string> cues;      // index / triggers_per_type = type
  std::vector<std::string> entities;
  std::vector<std::string> fillers;
};

// Pools are functions of the lexicon namespaces and sizes only, so corpora
// sharing cue_domain share cue surfaces and their type assignment, which is
// what domain transfer relies on. Entity and filler pools reject collisions
// with the cue pool, keeping every corpus separable.
SynthPools build_pools(const SynthSpec& spec) {
  const int cue_count = int(spec.types.size()) * spec.triggers_per_type;
  SynthPools pools;
  std::set<std::string> taken;
  {
    Rng rng = Rng::derive(0x5EEDC0DEULL + uint64_t(cue_count),
                          "synth-cues:" + spec.cue_domain);
    pools.cues = draw_pool(rng, cue_count, taken);
  }
  {
    Rng rng = Rng::derive(0x5EEDC0DEULL ^ uint64_t(spec.entity_words * 131 +
                                                   spec.filler_words),
                          "synth-words:" + spec.domain);
    pools.entities = draw_pool(rng, spec.entity_words, taken);
    pools.fillers = draw_pool(rng, spec.filler_words, taken);
  }
  return pools;
}

}  // namespace

SynthLexicon synth_lexicon(const SynthSpec& spec) {
  validate_spec(spec);
  SynthLexicon lex;
  SynthPools pools = build_pools(spec);
  for (const auto& word : pools.entities) lex.span_words.insert(word);
  for (int t = 0; t < int(spec.types.size()); ++t) {
    for (int i = 0; i < spec.triggers_per_type; ++i) {
      const auto& surface = pools.cues[size_t(t) * spec.triggers_per_type + i];
      lex.span_words.insert(surface);
      lex.cue_type[surface] = t;
    }
  }
  return lex;
}

Corpus generate_synthetic_corpus(const SynthSpec& spec, uint64_t seed) {
  validate_spec(spec);
  Corpus corpus;
  corpus.label_space = LabelSpace::build(Scheme::BIO2, spec.types);
  corpus.provenance = "synthetic(domain=" + spec.domain + ")";

  SynthPools pools = build_pools(spec);
  const auto& cues = pools.cues;
  auto entity = [&](int i) { return pools.entities[size_t(i)]; };
  auto filler = [&](int i) { return pools.fillers[size_t(i)]; };

  Rng rng = Rng::derive(seed, "synth-corpus:" + spec.domain);

  for (int si = 0; si < spec.num_sentences; ++si) {
    int target = rng.next_int(spec.min_tokens, spec.max_tokens);
    int spans = spec.max_spans > 0
                    ? rng.next_int(spec.min_spans, spec.max_spans)
                    : 0;
    auto footprint = [&](int n) {
      return n * spec.min_span_len + std::max(0, n - 1);
    };
    while (spans > spec.min_spans && footprint(spans) > target) --spans;
    target = std::max(target, footprint(spans));

    // Span lengths: minimal, then spend leftover budget at random.
    std::vector<int> lens(size_t(spans), spec.min_span_len);
    int budget = target - footprint(spans);
    for (int i = 0; i < spans && budget > 0; ++i) {
      int extra = rng.next_int(0, std::min(budget,
                                           spec.max_span_len - lens[size_t(i)]));
      lens[size_t(i)] += extra;
      budget -= extra;
    }
    int total_span_tokens = 0;
    for (int l : lens) total_span_tokens += l;
    int fillers = target - total_span_tokens;

    // Filler counts per slot: one mandatory between adjacent spans.
    std::vector<int> slot(size_t(spans) + 1, 0);
    for (int i = 1; i < spans; ++i) slot[size_t(i)] = 1;
    int loose = fillers - std::max(0, spans - 1);
    for (int i = 0; i < loose; ++i)
      slot[size_t(rng.next_int(0, spans))] += 1;

    std::vector<Token> tokens;
    std::vector<FullLabel> labels;
    auto emit_fillers = [&](int count) {
      for (int i = 0; i < count; ++i) {
        tokens.push_back(Token{filler(rng.next_int(0, spec.filler_words - 1)),
                               {}, -1});
        labels.push_back(FullLabel{SegTag::O, kNoType});
      }
    };
    for (int sp = 0; sp < spans; ++sp) {
      emit_fillers(slot[size_t(sp)]);
      const int len = lens[size_t(sp)];
      const int cue_index = rng.next_int(0, int(cues.size()) - 1);
      const int typ = cue_index / spec.triggers_per_type;
      const int cue_pos = rng.next_int(0, len - 1);
      for (int i = 0; i < len; ++i) {
        std::string surface =
            (i == cue_pos) ? cues[size_t(cue_index)]
                           : entity(rng.next_int(0, spec.entity_words - 1));
        tokens.push_back(Token{std::move(surface), {}, -1});
        labels.push_back(
            FullLabel{i == 0 ? SegTag::B : SegTag::I, typ});
      }
    }
    emit_fillers(slot[size_t(spans)]);

    corpus.sentences.push_back(
        make_full_sentence(std::move(tokens), std::move(labels)));
  }
  return corpus;
}

std::vector<FullLabel> rule_tag(const std::vector<Token>& tokens,
                                const SynthLexicon& lexicon) {
  const int n = int(tokens.size());
  std::vector<FullLabel> out(size_t(n), FullLabel{SegTag::O, kNoType});
  int t = 0;
  while (t < n) {
    if (!lexicon.span_words.count(tokens[size_t(t)].surface)) {
      ++t;
      continue;
    }
    int u = t;
    int typ = kNoType;
    while (u < n && lexicon.span_words.count(tokens[size_t(u)].surface)) {
      auto it = lexicon.cue_type.find(tokens[size_t(u)].surface);
      if (it != lexicon.cue_type.end() && typ == kNoType) typ = it->second;
      ++u;
    }
    if (typ != kNoType) {
      for (int i = t; i < u; ++i)
        out[size_t(i)] = FullLabel{i == t ? SegTag::B : SegTag::I, typ};
    }
    t = u;
  }
  return out;
}

}  // namespace modcrf
