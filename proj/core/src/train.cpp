#include "modcrf/train.hpp"

#include <algorithm>
#include <cmath>

namespace modcrf {

double lr_at_epoch(double eta, double rho, int epoch) {
  if (epoch < 0) throw UsageError("lr_at_epoch: negative epoch");
  return eta / (1.0 + epoch * rho);
}

void clip_gradients(ParamRegistry& params, double bound) {
  for (auto& p : params.all()) {
    if (!p.tensor.has_grad()) continue;
    for (auto& g : p.tensor.grad()) g = std::clamp(g, -bound, bound);
  }
}

SgdMomentum::SgdMomentum(ParamRegistry& params, double momentum)
    : params_(params), momentum_(momentum) {
  velocity_.reserve(params.all().size());
  for (const auto& p : params.all())
    velocity_.emplace_back(p.tensor.values().size(), 0.0);
}

void SgdMomentum::step(double lr) {
  for (size_t pi = 0; pi < params_.all().size(); ++pi) {
    auto& p = params_.all()[pi].tensor;
    if (!p.requires_grad()) continue;
    auto& v = velocity_[pi];
    auto& values = p.values();
    if (p.has_grad()) {
      const auto& g = p.grad();
      for (size_t i = 0; i < v.size(); ++i) {
        v[i] = momentum_ * v[i] + g[i];
        values[i] -= lr * v[i];
      }
      p.zero_grad();
    } else {
      for (size_t i = 0; i < v.size(); ++i) {
        v[i] = momentum_ * v[i];
        values[i] -= lr * v[i];
      }
    }
  }
}

StopDecision early_stop_check(EarlyStopState& state, int epoch, double dev_f1) {
  if (epoch < 1) throw UsageError("early_stop_check: epoch must be >= 1");
  if (dev_f1 > state.best_dev_f1) {
    state.best_dev_f1 = dev_f1;
    state.best_epoch = epoch;
  }
  if (epoch >= state.min_epochs && epoch - state.best_epoch >= state.patience)
    return StopDecision::Stop;
  return StopDecision::Continue;
}

namespace {

Tensor mean_batch_loss(const Model& model,
                       const std::vector<const AnnotatedSentence*>& batch,
                       DropoutDriver& dropout,
                       const std::vector<std::vector<Tensor>>* perturbations,
                       bool retain_token_grads,
                       std::vector<HeadOutputs>* outputs_out) {
  Tensor total;
  for (size_t i = 0; i < batch.size(); ++i) {
    HeadOutputs outputs;
    Tensor loss = model.sentence_loss(
        *batch[i], dropout, perturbations ? &(*perturbations)[i] : nullptr,
        retain_token_grads, outputs_out ? &outputs : nullptr);
    if (outputs_out) outputs_out->push_back(std::move(outputs));
    total = total.defined() ? add(total, loss) : loss;
  }
  return scale(total, 1.0 / double(batch.size()));
}

}  // namespace

Tensor adversarial_batch_loss(Model& model,
                              const std::vector<const AnnotatedSentence*>& batch,
                              const AdversarialConfig& config,
                              DropoutDriver& dropout) {
  if (batch.empty()) throw UsageError("adversarial loss on empty batch");

  // Probe pass on its own tape: gradient of the clean loss w.r.t. e_t.
  std::vector<std::vector<Tensor>> deltas(batch.size());
  {
    Tape probe_tape;
    std::vector<HeadOutputs> outputs;
    Tensor clean = mean_batch_loss(model, batch, dropout, nullptr,
                                   /*retain_token_grads=*/true, &outputs);
    probe_tape.backward(clean);

    double norm_sq = 0.0;
    for (const auto& out : outputs)
      for (const auto& e : out.encoded.token_reprs)
        for (double g : e.grad()) norm_sq += g * g;
    const double norm = std::sqrt(norm_sq);

    for (size_t i = 0; i < batch.size(); ++i) {
      for (const auto& e : outputs[i].encoded.token_reprs) {
        std::vector<double> d(e.values().size(), 0.0);
        if (norm > 0.0) {
          const auto& g = e.grad();
          for (size_t j = 0; j < d.size(); ++j) {
            d[j] = config.mode == PerturbationMode::L2
                       ? config.epsilon * g[j] / norm
                       : config.epsilon * double((g[j] > 0) - (g[j] < 0));
          }
        }
        deltas[i].push_back(Tensor::from_values(1, e.cols(), std::move(d)));
      }
    }
  }
  model.params().zero_grad();  // discard probe gradients

  dropout.start_replay();
  Tensor clean = mean_batch_loss(model, batch, dropout, nullptr, false, nullptr);
  dropout.start_replay();
  Tensor adversarial =
      mean_batch_loss(model, batch, dropout, &deltas, false, nullptr);
  return add(clean, adversarial);
}

namespace {

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& params) {
  std::vector<std::vector<double>> snap;
  snap.reserve(params.all().size());
  for (const auto& p : params.all()) snap.push_back(p.tensor.values());
  return snap;
}

void restore_params(ParamRegistry& params,
                    const std::vector<std::vector<double>>& snap) {
  for (size_t i = 0; i < params.all().size(); ++i)
    params.all()[i].tensor.values() = snap[i];
}

}  // namespace

PRF1 evaluate_full(const Model& model, const Corpus& corpus) {
  std::vector<std::vector<FullLabel>> gold, pred;
  for (const auto& s : corpus.sentences) {
    gold.push_back(s.full_view());
    pred.push_back(model.predict(s));
  }
  return span_f1(gold, pred, EvalMode::Full);
}

PRF1 evaluate_seg(const Model& model, const Corpus& corpus) {
  std::vector<std::vector<FullLabel>> gold;
  std::vector<std::vector<SegTag>> pred;
  for (const auto& s : corpus.sentences) {
    gold.push_back(s.full_view());
    pred.push_back(seg_bioes_to_bio2(model.predict_seg(s)));
  }
  return seg_f1(gold, pred);
}

PRF1 evaluate_typ(const Model& model, const Corpus& corpus) {
  std::vector<std::vector<FullLabel>> gold, pred;
  for (const auto& s : corpus.sentences) {
    gold.push_back(s.full_view());
    // Token-level type comparison only; segmentation carried as singletons.
    std::vector<int> types = model.predict_typ(s);
    std::vector<FullLabel> row;
    for (int typ : types)
      row.push_back(typ == kNoType ? FullLabel{SegTag::O, kNoType}
                                   : FullLabel{SegTag::B, typ});
    pred.push_back(std::move(row));
  }
  return span_f1(gold, pred, EvalMode::TypeOnly);
}

TrainResult train(Model& model, const Corpus& train_corpus,
                  const Corpus& dev_corpus, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& epoch_callback) {
  if (train_corpus.sentences.empty() || dev_corpus.sentences.empty())
    throw UsageError("train: corpora must be nonempty");
  for (const auto& s : dev_corpus.sentences) {
    if (s.availability != Availability::Full)
      throw UsageError("train: dev corpus must be fully labeled");
  }
  for (const auto& s : train_corpus.sentences) {
    if (s.availability == Availability::Unlabeled)
      throw UsageError("train: unlabeled sentences cannot be trained on");
  }

  const OptimizerConfig& opt_config = config.optimizer;
  SgdMomentum optimizer(model.params(), opt_config.momentum);
  Rng shuffle_rng = Rng::derive(config.seed, "train:shuffle");
  Rng dropout_rng = Rng::derive(config.seed, "train:dropout");

  EarlyStopState stop_state;
  stop_state.patience = opt_config.patience;
  stop_state.min_epochs = opt_config.min_epochs;

  std::vector<int> order(train_corpus.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);

  TrainResult result;
  std::vector<std::vector<double>> best_snapshot = snapshot_params(model.params());

  for (int epoch = 1;; ++epoch) {
    shuffle_rng.shuffle(order);
    const double lr = lr_at_epoch(opt_config.lr, opt_config.lr_decay, epoch - 1);

    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t begin = 0; begin < order.size();
         begin += size_t(opt_config.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + size_t(opt_config.batch_size));
      std::vector<const AnnotatedSentence*> batch;
      for (size_t i = begin; i < end; ++i)
        batch.push_back(&train_corpus.sentences[size_t(order[i])]);

      Tape tape;
      DropoutDriver dropout(model.config().encoder.dropout_rate, &dropout_rng);
      Tensor loss =
          config.adversarial.enabled
              ? adversarial_batch_loss(model, batch, config.adversarial, dropout)
              : mean_batch_loss(model, batch, dropout, nullptr, false, nullptr);
      tape.backward(loss);
      clip_gradients(model.params(), opt_config.clip);
      optimizer.step(lr);

      epoch_loss += loss.value();
      ++batches;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = batches > 0 ? epoch_loss / batches : 0.0;
    record.dev_f1 = evaluate_full(model, dev_corpus).f1;
    result.log.push_back(record);
    if (epoch_callback) epoch_callback(record);

    const bool improved = record.dev_f1 > stop_state.best_dev_f1;
    const StopDecision decision = early_stop_check(stop_state, epoch, record.dev_f1);
    if (improved) best_snapshot = snapshot_params(model.params());

    result.epochs_run = epoch;
    if (decision == StopDecision::Stop ||
        (opt_config.max_epochs > 0 && epoch >= opt_config.max_epochs)) {
      break;
    }
  }

  restore_params(model.params(), best_snapshot);
  result.best_dev_f1 = stop_state.best_dev_f1;
  result.best_epoch = stop_state.best_epoch;
  return result;
}

}  // namespace modcrf
