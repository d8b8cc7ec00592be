#ifndef MODCRF_EVAL_HPP
#define MODCRF_EVAL_HPP

#include <string>
#include <vector>

#include "modcrf/labels.hpp"

// Span extraction with CoNLL semantics and exact-match precision/recall/F1
// for the full task and both partial tasks.

namespace modcrf {

struct Span {
  int start = 0;  // inclusive
  int end = 0;    // inclusive
  int type = kNoType;

  bool operator==(const Span&) const = default;
};

struct PRF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0;
};

PRF1 prf1_from_counts(long tp, long fp, long fn);

// Maximal B,I+ runs of consistent type over a BIO2 sequence. Lenient on
// ill-formed input: an I opening a span counts as B; a type change breaks
// the span.
std::vector<Span> extract_spans(const std::vector<FullLabel>& labels);
std::vector<Span> extract_seg_spans(const std::vector<SegTag>& labels);

enum class EvalMode { Full, SegOnly, TypeOnly };

// Full: (start, end, type) exact match. SegOnly: boundaries only.
// TypeOnly: token-level type match over non-O tokens.
PRF1 span_f1(const std::vector<std::vector<FullLabel>>& gold,
             const std::vector<std::vector<FullLabel>>& pred, EvalMode mode);

// Seg-head predictions scored on boundary match.
PRF1 seg_f1(const std::vector<std::vector<FullLabel>>& gold,
            const std::vector<std::vector<SegTag>>& pred_bio2);

// Arithmetic mean of per-fold precision, recall and F1; counts are summed.
PRF1 aggregate_folds(const std::vector<PRF1>& per_fold);

// "P\tR\tF1" style report block.
std::string format_prf1(const PRF1& score);

}  // namespace modcrf

#endif  // MODCRF_EVAL_HPP
