#ifndef MODCRF_TRAIN_HPP
#define MODCRF_TRAIN_HPP

#include <functional>
#include <vector>

#include "modcrf/eval.hpp"
#include "modcrf/model.hpp"

// SGD with momentum, epoch-indexed learning-rate decay, elementwise gradient
// clipping, early stopping with a minimum epoch count, and adversarial
// training on the token representations.

namespace modcrf {

struct OptimizerConfig {
  double lr = 0.01;
  double lr_decay = 0.05;
  double momentum = 0.9;
  int batch_size = 10;
  double clip = 5.0;
  int patience = 30;
  int min_epochs = 120;
  int max_epochs = 0;  // 0 = run until early stop
};

enum class PerturbationMode { L2, Sign };

struct AdversarialConfig {
  bool enabled = false;
  double epsilon = 0.05;
  PerturbationMode mode = PerturbationMode::L2;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  AdversarialConfig adversarial;
  uint64_t seed = 1;
};

// eta / (1 + e * rho)
double lr_at_epoch(double eta, double rho, int epoch);

// Clamps every gradient component into [-bound, bound].
void clip_gradients(ParamRegistry& params, double bound);

class SgdMomentum {
 public:
  SgdMomentum(ParamRegistry& params, double momentum);

  // v <- mu v + g; p <- p - lr v; gradients are zeroed afterwards.
  void step(double lr);

  const std::vector<double>& velocity(size_t param_index) const {
    return velocity_[param_index];
  }
  std::vector<double>& velocity(size_t param_index) {
    return velocity_[param_index];
  }

 private:
  ParamRegistry& params_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

struct EarlyStopState {
  double best_dev_f1 = -1.0;
  int best_epoch = 0;
  int patience = 30;
  int min_epochs = 120;
};

enum class StopDecision { Continue, Stop };

// Updates best on improvement; Stop once epoch >= min_epochs and
// epoch - best_epoch >= patience.
StopDecision early_stop_check(EarlyStopState& state, int epoch, double dev_f1);

// Clean batch loss plus the loss at e_t perturbed along the loss gradient
// (L2-normalized over the batch; delta treated as a constant). Zero gradient
// norm skips the perturbation. Dropout masks are shared between the probe
// and both replayed passes.
Tensor adversarial_batch_loss(Model& model,
                              const std::vector<const AnnotatedSentence*>& batch,
                              const AdversarialConfig& config,
                              DropoutDriver& dropout);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Shuffled seeded epochs over batches of batch_size; evaluates dev span-F1
// each epoch and restores the best-epoch parameters at stop. Dev must be
// fully labeled. `epoch_callback`, when set, sees each record as it is made.
TrainResult train(Model& model, const Corpus& train_corpus,
                  const Corpus& dev_corpus, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& epoch_callback =
                      nullptr);

// Full-label span F1 of the model on a fully labeled corpus.
PRF1 evaluate_full(const Model& model, const Corpus& corpus);
PRF1 evaluate_seg(const Model& model, const Corpus& corpus);
PRF1 evaluate_typ(const Model& model, const Corpus& corpus);

}  // namespace modcrf

#endif  // MODCRF_TRAIN_HPP
