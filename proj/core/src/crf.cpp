#include "modcrf/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modcrf {

namespace {

void check_labels(const CrfPotentials& p, const std::vector<int>& labels) {
  if (int(labels.size()) != p.length()) {
    throw DimensionError("label sequence length " +
                         std::to_string(labels.size()) +
                         " != potential length " + std::to_string(p.length()));
  }
  for (int y : labels) {
    if (y < 0 || y >= p.num_labels())
      throw UsageError("label index out of range: " + std::to_string(y));
  }
}

}  // namespace

Tensor score_sequence(const CrfPotentials& p, const std::vector<int>& labels) {
  check_labels(p, labels);
  const int L = p.length();
  const int start = p.start_state(), stop = p.stop_state();

  Tensor s = pick_entries(p.transitions, {{start, labels[0]}});
  s = add(s, pick_entries(p.emissions, {{0, labels[0]}}));
  for (int t = 1; t < L; ++t) {
    s = add(s, pick_entries(p.transitions, {{labels[t - 1], labels[t]}}));
    s = add(s, pick_entries(p.emissions, {{t, labels[t]}}));
  }
  s = add(s, pick_entries(p.transitions, {{labels[L - 1], stop}}));
  return s;
}

namespace {

// Shared forward recursion; a position mask of 0/-1e9 restricts the lattice.
Tensor forward_log_partition(const CrfPotentials& p, const Tensor* mask) {
  const int L = p.length(), K = p.num_labels();
  const int start = p.start_state(), stop = p.stop_state();

  Tensor emissions = p.emissions;
  if (mask) emissions = add(emissions, *mask);

  Tensor start_row = slice(p.transitions, start, start + 1, 0, K);
  Tensor alpha = add(start_row, slice(emissions, 0, 1, 0, K));
  if (L > 1) {
    Tensor core = slice(p.transitions, 0, K, 0, K);
    for (int t = 1; t < L; ++t) {
      Tensor combined = add_colvec(core, alpha);      // [i][j] = psi + alpha_i
      Tensor reduced = logsumexp(combined, Axis::Rows);
      alpha = add(reduced, slice(emissions, t, t + 1, 0, K));
    }
  }
  Tensor stop_col = slice(p.transitions, 0, K, stop, stop + 1);
  Tensor final_scores = add(alpha, reshape(transpose(stop_col), 1, K));
  return logsumexp(final_scores, Axis::Cols);  // 1 x 1
}

}  // namespace

Tensor log_partition(const CrfPotentials& p) {
  if (p.length() < 1) throw DimensionError("log_partition: empty sequence");
  return forward_log_partition(p, nullptr);
}

Tensor log_partition_restricted(const CrfPotentials& p,
                                const std::vector<std::vector<int>>& allowed) {
  const int L = p.length(), K = p.num_labels();
  if (int(allowed.size()) != L)
    throw DimensionError("restriction list length != sequence length");
  std::vector<double> mask(size_t(L) * K, kMaskedTransition);
  for (int t = 0; t < L; ++t) {
    if (allowed[t].empty())
      throw UsageError("empty allowed set at position " + std::to_string(t));
    for (int y : allowed[t]) {
      if (y < 0 || y >= K)
        throw UsageError("allowed label out of range: " + std::to_string(y));
      mask[size_t(t) * K + y] = 0.0;
    }
  }
  Tensor mask_t = Tensor::from_values(L, K, std::move(mask));
  return forward_log_partition(p, &mask_t);
}

ViterbiResult viterbi(const CrfPotentials& p) {
  const int L = p.length(), K = p.num_labels();
  if (L < 1) throw DimensionError("viterbi: empty sequence");
  const auto& em = p.emissions.values();
  const auto& tr = p.transitions.values();
  const int W = K + 2;
  const int start = p.start_state(), stop = p.stop_state();

  std::vector<double> score(K), next(K);
  std::vector<int> back(size_t(std::max(0, L - 1)) * K, 0);
  for (int j = 0; j < K; ++j)
    score[j] = tr[size_t(start) * W + j] + em[j];

  for (int t = 1; t < L; ++t) {
    for (int j = 0; j < K; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int best_i = 0;
      for (int i = 0; i < K; ++i) {
        const double s = score[i] + tr[size_t(i) * W + j];
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      next[j] = best + em[size_t(t) * K + j];
      back[size_t(t - 1) * K + j] = best_i;
    }
    std::swap(score, next);
  }

  double best = -std::numeric_limits<double>::infinity();
  int best_last = 0;
  for (int j = 0; j < K; ++j) {
    const double s = score[j] + tr[size_t(j) * W + stop];
    if (s > best) {
      best = s;
      best_last = j;
    }
  }

  ViterbiResult result;
  result.score = best;
  result.path.assign(size_t(L), 0);
  result.path[L - 1] = best_last;
  for (int t = L - 2; t >= 0; --t)
    result.path[t] = back[size_t(t) * K + result.path[t + 1]];
  return result;
}

Tensor nll(const CrfPotentials& p, const std::vector<int>& gold) {
  check_labels(p, gold);
  Tensor z = log_partition(p);
  Tensor s = score_sequence(p, gold);
  return add(z, neg(s));
}

Tensor nll_marginalized(const CrfPotentials& p,
                        const std::vector<std::vector<int>>& allowed) {
  Tensor z = log_partition(p);
  Tensor restricted = log_partition_restricted(p, allowed);
  return add(z, neg(restricted));
}

// ---- oracles -------------------------------------------------------------

namespace {

void check_enumerable(const CrfPotentials& p) {
  double paths = 1.0;
  for (int t = 0; t < p.length(); ++t) {
    paths *= p.num_labels();
    if (paths > 1e6)
      throw UsageError("instance too large for brute force: K^L > 1e6");
  }
}

// Interleaved accumulation matching both score_sequence and the Viterbi
// recursion, so scores are comparable bitwise.
double path_score(const CrfPotentials& p, const std::vector<int>& y) {
  const auto& em = p.emissions.values();
  const auto& tr = p.transitions.values();
  const int K = p.num_labels(), W = K + 2, L = p.length();
  double s = tr[size_t(p.start_state()) * W + y[0]] + em[y[0]];
  for (int t = 1; t < L; ++t) {
    s += tr[size_t(y[t - 1]) * W + y[t]];
    s += em[size_t(t) * K + y[t]];
  }
  s += tr[size_t(y[L - 1]) * W + p.stop_state()];
  return s;
}

template <typename Visit>
void enumerate_paths(int L, int K, Visit&& visit) {
  std::vector<int> y(size_t(L), 0);
  while (true) {
    visit(const_cast<const std::vector<int>&>(y));
    int t = L - 1;
    while (t >= 0 && ++y[t] == K) {
      y[t] = 0;
      --t;
    }
    if (t < 0) break;
  }
}

}  // namespace

double brute_force_score(const CrfPotentials& p, const std::vector<int>& y) {
  check_labels(p, y);
  return path_score(p, y);
}

double brute_force_log_partition(const CrfPotentials& p) {
  if (p.length() < 1) throw DimensionError("empty sequence");
  check_enumerable(p);
  std::vector<double> scores;
  enumerate_paths(p.length(), p.num_labels(),
                  [&](const std::vector<int>& y) {
                    scores.push_back(path_score(p, y));
                  });
  return logsumexp(std::span<const double>(scores));
}

ViterbiResult brute_force_best_path(const CrfPotentials& p) {
  if (p.length() < 1) throw DimensionError("empty sequence");
  check_enumerable(p);
  ViterbiResult best;
  best.score = -std::numeric_limits<double>::infinity();
  bool first = true;
  // Lower-index backpointer tie-breaking selects, among optimal paths, the
  // reverse-lexicographic minimum (last label compared first).
  auto revlex_less = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (int t = int(a.size()) - 1; t >= 0; --t) {
      if (a[t] != b[t]) return a[t] < b[t];
    }
    return false;
  };
  enumerate_paths(p.length(), p.num_labels(), [&](const std::vector<int>& y) {
    const double s = path_score(p, y);
    if (first || s > best.score ||
        (s == best.score && revlex_less(y, best.path))) {
      best.score = s;
      best.path = y;
      first = false;
    }
  });
  return best;
}

std::vector<std::vector<double>> brute_force_marginals(
    const CrfPotentials& p) {
  check_enumerable(p);
  const int L = p.length(), K = p.num_labels();
  const double log_z = brute_force_log_partition(p);
  std::vector<std::vector<double>> marginals(size_t(L),
                                             std::vector<double>(size_t(K), 0.0));
  enumerate_paths(L, K, [&](const std::vector<int>& y) {
    const double w = std::exp(path_score(p, y) - log_z);
    for (int t = 0; t < L; ++t) marginals[t][y[t]] += w;
  });
  return marginals;
}

// ---- scheme constraints ----------------------------------------------------

Tensor bioes_transition_mask(const LabelSpace& space) {
  if (space.scheme() != Scheme::BIOES)
    throw UsageError("hard constraints require the BIOES scheme");
  const int K = space.num_full();
  const int W = K + 2, start = K, stop = K + 1;

  auto closed = [](const FullLabel& y) {
    return y.seg == SegTag::O || y.seg == SegTag::E || y.seg == SegTag::S;
  };
  auto valid_pair = [&](const FullLabel& a, const FullLabel& b) {
    if (closed(a)) return b.seg != SegTag::I && b.seg != SegTag::E;
    // a opens or continues a span: must continue with same type
    return (b.seg == SegTag::I || b.seg == SegTag::E) && b.typ == a.typ;
  };

  std::vector<double> mask(size_t(W) * W, 0.0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      if (!valid_pair(space.full_at(i), space.full_at(j)))
        mask[size_t(i) * W + j] = kMaskedTransition;
  for (int j = 0; j < K; ++j) {
    const FullLabel y = space.full_at(j);
    if (y.seg == SegTag::I || y.seg == SegTag::E)
      mask[size_t(start) * W + j] = kMaskedTransition;
  }
  for (int i = 0; i < K; ++i) {
    if (!closed(space.full_at(i))) mask[size_t(i) * W + stop] = kMaskedTransition;
  }
  return Tensor::from_values(W, W, std::move(mask));
}

}  // namespace modcrf
