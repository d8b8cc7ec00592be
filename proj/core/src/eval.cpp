#include "modcrf/eval.hpp"

#include <set>
#include <sstream>

namespace modcrf {

PRF1 prf1_from_counts(long tp, long fp, long fn) {
  PRF1 s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
  s.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

std::vector<Span> extract_spans(const std::vector<FullLabel>& labels) {
  std::vector<Span> spans;
  const int n = int(labels.size());
  int t = 0;
  while (t < n) {
    const FullLabel& y = labels[size_t(t)];
    if (y.is_o()) {
      ++t;
      continue;
    }
    // B opens; a leading I is treated as B.
    int u = t + 1;
    while (u < n && labels[size_t(u)].seg == SegTag::I &&
           labels[size_t(u)].typ == y.typ) {
      ++u;
    }
    spans.push_back(Span{t, u - 1, y.typ});
    t = u;
  }
  return spans;
}

std::vector<Span> extract_seg_spans(const std::vector<SegTag>& labels) {
  std::vector<FullLabel> full;
  full.reserve(labels.size());
  for (SegTag s : labels)
    full.push_back(s == SegTag::O ? FullLabel{SegTag::O, kNoType}
                                  : FullLabel{s, 0});
  return extract_spans(full);
}

namespace {

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

template <typename GoldSpans, typename PredSpans, typename Match>
void count_spans(const GoldSpans& gold, const PredSpans& pred, Match&& match,
                 Counts& counts) {
  std::vector<char> gold_used(gold.size(), 0);
  for (const auto& p : pred) {
    bool hit = false;
    for (size_t gi = 0; gi < gold.size(); ++gi) {
      if (!gold_used[gi] && match(gold[gi], p)) {
        gold_used[gi] = 1;
        hit = true;
        break;
      }
    }
    if (hit)
      ++counts.tp;
    else
      ++counts.fp;
  }
  for (size_t gi = 0; gi < gold.size(); ++gi)
    if (!gold_used[gi]) ++counts.fn;
}

}  // namespace

PRF1 span_f1(const std::vector<std::vector<FullLabel>>& gold,
             const std::vector<std::vector<FullLabel>>& pred, EvalMode mode) {
  if (gold.size() != pred.size())
    throw UsageError("span_f1: corpus size mismatch");
  Counts counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size())
      throw UsageError("span_f1: sentence length mismatch at index " +
                       std::to_string(i));
    if (mode == EvalMode::TypeOnly) {
      for (size_t t = 0; t < gold[i].size(); ++t) {
        const bool gold_tagged = !gold[i][t].is_o();
        const bool pred_tagged = !pred[i][t].is_o();
        if (gold_tagged && pred_tagged && gold[i][t].typ == pred[i][t].typ)
          ++counts.tp;
        else if (pred_tagged)
          ++counts.fp;
        if (gold_tagged && !(pred_tagged && gold[i][t].typ == pred[i][t].typ))
          ++counts.fn;
      }
      continue;
    }
    auto gold_spans = extract_spans(gold[i]);
    auto pred_spans = extract_spans(pred[i]);
    if (mode == EvalMode::Full) {
      count_spans(gold_spans, pred_spans,
                  [](const Span& a, const Span& b) { return a == b; }, counts);
    } else {
      count_spans(gold_spans, pred_spans,
                  [](const Span& a, const Span& b) {
                    return a.start == b.start && a.end == b.end;
                  },
                  counts);
    }
  }
  return prf1_from_counts(counts.tp, counts.fp, counts.fn);
}

PRF1 seg_f1(const std::vector<std::vector<FullLabel>>& gold,
            const std::vector<std::vector<SegTag>>& pred_bio2) {
  if (gold.size() != pred_bio2.size())
    throw UsageError("seg_f1: corpus size mismatch");
  Counts counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    auto gold_spans = extract_spans(gold[i]);
    auto pred_spans = extract_seg_spans(pred_bio2[i]);
    count_spans(gold_spans, pred_spans,
                [](const Span& a, const Span& b) {
                  return a.start == b.start && a.end == b.end;
                },
                counts);
  }
  return prf1_from_counts(counts.tp, counts.fp, counts.fn);
}

PRF1 aggregate_folds(const std::vector<PRF1>& per_fold) {
  if (per_fold.empty()) throw UsageError("aggregate_folds: empty input");
  PRF1 out;
  for (const auto& f : per_fold) {
    out.precision += f.precision;
    out.recall += f.recall;
    out.f1 += f.f1;
    out.tp += f.tp;
    out.fp += f.fp;
    out.fn += f.fn;
  }
  const double n = double(per_fold.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

std::string format_prf1(const PRF1& score) {
  std::ostringstream os;
  os << "Pre\tRec\tF1\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%.4f\t%.4f\t%.4f", score.precision,
                score.recall, score.f1);
  os << line;
  return os.str();
}

}  // namespace modcrf
