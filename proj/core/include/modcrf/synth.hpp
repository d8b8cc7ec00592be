#ifndef MODCRF_SYNTH_HPP
#define MODCRF_SYNTH_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "modcrf/data.hpp"

// Synthetic corpora for desk-scale experiments. Sentences are filler tokens
// with embedded spans; a span is entity words plus exactly one type-cue word,
// so span boundaries are cued by lexicon membership and types by the cue.
// The task is separable by construction: rule_tag with the generator lexicon
// reproduces the gold labels exactly.

namespace modcrf {

struct SynthSpec {
  std::vector<std::string> types;
  int num_sentences = 200;
  int entity_words = 30;
  int triggers_per_type = 12;
  int filler_words = 40;
  int min_tokens = 6;
  int max_tokens = 12;
  int min_spans = 0;
  int max_spans = 2;
  int min_span_len = 1;  // tokens per span, cue included
  int max_span_len = 3;
  // Lexicon namespaces. Corpora sharing cue_domain share cue surfaces and the
  // cue-to-type assignment, which is what domain transfer transfers.
  std::string domain = "";
  std::string cue_domain = "";
};

struct SynthLexicon {
  std::set<std::string> span_words;        // entities and cues
  std::map<std::string, int> cue_type;     // cue surface -> type index
};

SynthLexicon synth_lexicon(const SynthSpec& spec);

// Deterministic under seed; gold labels are valid BIO2 FullLabels.
Corpus generate_synthetic_corpus(const SynthSpec& spec, uint64_t seed);

// Tags maximal runs of span-lexicon words, typed by the contained cue.
std::vector<FullLabel> rule_tag(const std::vector<Token>& tokens,
                                const SynthLexicon& lexicon);

}  // namespace modcrf

#endif  // MODCRF_SYNTH_HPP
