#ifndef MODCRF_CRF_HPP
#define MODCRF_CRF_HPP

#include <vector>

#include "modcrf/labels.hpp"
#include "modcrf/tensor.hpp"

// Linear-chain CRF over arbitrary emission sources. Scores decompose as
// sum_t phi(x, y_t) + psi(y_{t-1}, y_t) with virtual START/STOP states
// completing the chain boundaries. The partition function is computed by the
// forward recursion in log space; decoding is exact Viterbi. Brute-force
// enumeration twins are provided as independent oracles.

namespace modcrf {

// Transition entries into START or out of STOP are structurally masked: no
// code path reads them, which realizes the -inf convention without putting
// non-finite values into parameters.
struct CrfPotentials {
  Tensor emissions;    // L x K
  Tensor transitions;  // (K+2) x (K+2); START = K, STOP = K + 1

  int length() const { return emissions.rows(); }
  int num_labels() const { return emissions.cols(); }
  int start_state() const { return num_labels(); }
  int stop_state() const { return num_labels() + 1; }
};

struct CrfScore {
  double log_numerator = 0.0;
  double log_partition = 0.0;
};

// Differentiable path score. The accumulation order mirrors the forward
// recursion (trans, emit alternating) so degenerate instances agree bitwise.
Tensor score_sequence(const CrfPotentials& potentials,
                      const std::vector<int>& labels);

// log sum over all K^L sequences of exp(score), via the forward recursion
// with logsumexp; differentiable w.r.t. emissions and transitions.
Tensor log_partition(const CrfPotentials& potentials);

// As log_partition but summing only over sequences whose label at position t
// lies in allowed[t]. Singleton sets recover score_sequence.
Tensor log_partition_restricted(const CrfPotentials& potentials,
                                const std::vector<std::vector<int>>& allowed);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

// Exact argmax; ties break toward the lower label index at every backpointer
// decision and at the final state.
ViterbiResult viterbi(const CrfPotentials& potentials);

// log_partition - score_sequence(gold); >= 0, differentiable.
Tensor nll(const CrfPotentials& potentials, const std::vector<int>& gold);

// Marginalizes the gold constraint at positions where allowed sets are wider
// than singletons: -log P(y in allowed set). Used by the type-loss ablation.
Tensor nll_marginalized(const CrfPotentials& potentials,
                        const std::vector<std::vector<int>>& allowed);

// ---- Oracles (independent enumeration; K^L <= 1e6 or usage error) ------

double brute_force_log_partition(const CrfPotentials& potentials);
ViterbiResult brute_force_best_path(const CrfPotentials& potentials);
double brute_force_score(const CrfPotentials& potentials,
                         const std::vector<int>& labels);
// Explicit forward-backward marginals P(y_t = k); oracle-suite only.
std::vector<std::vector<double>> brute_force_marginals(
    const CrfPotentials& potentials);

// ---- Hard scheme constraints -------------------------------------------

// (K+2)^2 additive mask, 0 for scheme-valid transitions and a large negative
// constant for invalid ones (O->I, type changes without closing, open spans
// at STOP, ...). Off by default; add to transitions before decoding.
Tensor bioes_transition_mask(const LabelSpace& space);

constexpr double kMaskedTransition = -1e9;

}  // namespace modcrf

#endif  // MODCRF_CRF_HPP
