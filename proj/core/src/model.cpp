#include "modcrf/model.hpp"

#include <algorithm>

namespace modcrf {

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::Baseline: return "baseline";
    case ModelVariant::T: return "t";
    case ModelVariant::TI: return "ti";
    case ModelVariant::TIg: return "tig";
    case ModelVariant::TIgNoCrf: return "tig-nocrf";
  }
  return "?";
}

std::optional<ModelVariant> variant_from_name(const std::string& name) {
  if (name == "baseline") return ModelVariant::Baseline;
  if (name == "t") return ModelVariant::T;
  if (name == "ti") return ModelVariant::TI;
  if (name == "tig") return ModelVariant::TIg;
  if (name == "tig-nocrf") return ModelVariant::TIgNoCrf;
  return std::nullopt;
}

bool variant_has_subtask_heads(ModelVariant v) {
  return v != ModelVariant::Baseline;
}

bool variant_has_gates(ModelVariant v) {
  return v == ModelVariant::TIg || v == ModelVariant::TIgNoCrf;
}

bool variant_has_crf(ModelVariant v) { return v != ModelVariant::TIgNoCrf; }

namespace {

bool variant_infuses(ModelVariant v) {
  return v == ModelVariant::TI || v == ModelVariant::TIg ||
         v == ModelVariant::TIgNoCrf;
}

}  // namespace

std::set<ModuleId> Model::modules_for(ModelVariant v) {
  if (v == ModelVariant::Baseline) return {ModuleId::Decision};
  return {ModuleId::Decision, ModuleId::Seg, ModuleId::Typ};
}

HeadRequest Model::request_for(Availability availability, ModelVariant v) {
  HeadRequest request;
  switch (availability) {
    case Availability::Full:
      request.decision = true;
      request.seg = request.typ = variant_has_subtask_heads(v);
      break;
    case Availability::SegOnly:
      request.seg = true;
      break;
    case Availability::TypeOnly:
      request.typ = true;
      break;
    case Availability::Unlabeled:
      throw UsageError("unlabeled sentences contribute no loss");
  }
  return request;
}

Model::Model(const ModelConfig& config, const Vocabulary& vocab,
             const EmbeddingTable* embeddings, uint64_t init_seed)
    : config_(config),
      full_space_(LabelSpace::build(config.train_scheme, config.types)),
      bio2_space_(LabelSpace::build(Scheme::BIO2, config.types)) {
  config_.encoder.validate();

  Rng encoder_rng = Rng::derive(init_seed, "init:encoder");
  encoder_ = std::make_unique<Encoder>(config_.encoder, vocab, embeddings,
                                       modules_for(config_.variant), registry_,
                                       encoder_rng);

  const int hidden = config_.encoder.hidden_dim();
  const int k_full = full_space_.num_full();
  const int k_seg = full_space_.num_seg();
  const int k_typ = full_space_.num_typ();

  Rng head_rng = Rng::derive(init_seed, "init:heads");
  if (variant_has_subtask_heads(config_.variant)) {
    seg_W_ = glorot_init(registry_, "head.seg.W", hidden, k_seg, head_rng);
    seg_b_ = registry_.create("head.seg.b", 1, k_seg);
    typ_W_ = glorot_init(registry_, "head.typ.W", hidden, k_typ, head_rng);
    typ_b_ = registry_.create("head.typ.b", 1, k_typ);
  }
  const int decision_in =
      variant_infuses(config_.variant) ? hidden + k_seg + k_typ : hidden;
  dec_W_ = glorot_init(registry_, "head.decision.W", decision_in, k_full,
                       head_rng);
  dec_b_ = registry_.create("head.decision.b", 1, k_full);

  if (variant_has_gates(config_.variant)) {
    Rng gate_rng = Rng::derive(init_seed, "init:gates");
    gate_seg_W_ = glorot_init(registry_, "gate.seg.W", hidden, k_seg, gate_rng);
    gate_seg_b_ = registry_.create("gate.seg.b", 1, k_seg);
    gate_typ_W_ = glorot_init(registry_, "gate.typ.W", hidden, k_typ, gate_rng);
    gate_typ_b_ = registry_.create("gate.typ.b", 1, k_typ);
  }

  if (variant_has_crf(config_.variant)) {
    dec_trans_ = registry_.create("trans.decision", k_full + 2, k_full + 2);
    if (variant_has_subtask_heads(config_.variant)) {
      seg_trans_ = registry_.create("trans.seg", k_seg + 2, k_seg + 2);
      typ_trans_ = registry_.create("trans.typ", k_typ + 2, k_typ + 2);
    }
  }

  if (config_.constrain_decode) {
    decode_mask_ = bioes_transition_mask(full_space_);
  }
}

HeadOutputs Model::forward_heads(const AnnotatedSentence& sentence,
                                 const HeadRequest& request,
                                 DropoutDriver& dropout,
                                 const std::vector<Tensor>* perturbations,
                                 bool retain_token_grads) const {
  const ModelVariant v = config_.variant;
  if ((request.seg || request.typ) && !variant_has_subtask_heads(v))
    throw UsageError("variant has no sub-task heads");

  // The decision head of infusion variants consumes the sub-task emissions.
  bool need_seg_module = request.seg;
  bool need_typ_module = request.typ;
  if (request.decision && variant_infuses(v))
    need_seg_module = need_typ_module = true;

  std::set<ModuleId> wanted;
  if (request.decision) wanted.insert(ModuleId::Decision);
  if (need_seg_module) wanted.insert(ModuleId::Seg);
  if (need_typ_module) wanted.insert(ModuleId::Typ);

  HeadOutputs out;
  out.encoded = encoder_->encode(sentence, dropout, perturbations,
                                 retain_token_grads, &wanted);

  Tensor seg_em, typ_em;
  if (need_seg_module) {
    seg_em = add_rowvec(matmul(out.encoded.hidden.at(ModuleId::Seg), seg_W_),
                        seg_b_);
  }
  if (need_typ_module) {
    typ_em = add_rowvec(matmul(out.encoded.hidden.at(ModuleId::Typ), typ_W_),
                        typ_b_);
  }
  if (request.seg) out.seg = CrfPotentials{seg_em, seg_trans_};
  if (request.typ) out.typ = CrfPotentials{typ_em, typ_trans_};

  if (request.decision) {
    const Tensor& h_dec = out.encoded.hidden.at(ModuleId::Decision);
    Tensor decision_in = h_dec;
    if (variant_infuses(v)) {
      Tensor infused_seg = seg_em;
      Tensor infused_typ = typ_em;
      if (variant_has_gates(v)) {
        Tensor gate_seg =
            sigmoid(add_rowvec(matmul(h_dec, gate_seg_W_), gate_seg_b_));
        Tensor gate_typ =
            sigmoid(add_rowvec(matmul(h_dec, gate_typ_W_), gate_typ_b_));
        infused_seg = hadamard(gate_seg, infused_seg);
        infused_typ = hadamard(gate_typ, infused_typ);
      }
      decision_in = concat({h_dec, infused_seg, infused_typ}, Axis::Cols);
    }
    Tensor decision_em = add_rowvec(matmul(decision_in, dec_W_), dec_b_);
    out.decision = CrfPotentials{decision_em, dec_trans_};
  }
  return out;
}

Tensor Model::head_nll(const CrfPotentials& potentials,
                       const std::vector<int>& gold, bool use_crf) const {
  if (use_crf) return nll(potentials, gold);
  return softmax_nll(potentials.emissions, gold);
}

Tensor Model::joint_loss(const HeadOutputs& outputs,
                         const AnnotatedSentence& sentence) const {
  const ModelVariant v = config_.variant;
  const bool crf = variant_has_crf(v);
  const double alpha = config_.weights.alpha;
  const double beta = config_.weights.beta;

  auto typ_loss = [&]() -> Tensor {
    const auto targets = typ_targets(sentence);
    if (!config_.marginalize_o_types)
      return head_nll(*outputs.typ, targets, crf);
    // Ablation: O positions are unconstrained rather than trained toward O.
    if (crf) {
      std::vector<std::vector<int>> allowed(targets.size());
      for (size_t t = 0; t < targets.size(); ++t) {
        if (targets[t] == full_space_.num_typ() - 1) {
          allowed[t].resize(size_t(full_space_.num_typ()));
          for (int k = 0; k < full_space_.num_typ(); ++k) allowed[t][size_t(k)] = k;
        } else {
          allowed[t] = {targets[t]};
        }
      }
      return nll_marginalized(*outputs.typ, allowed);
    }
    Tensor lse = logsumexp(outputs.typ->emissions, Axis::Cols);
    std::vector<std::pair<int, int>> picks;
    std::vector<std::pair<int, int>> rows;
    for (int t = 0; t < int(targets.size()); ++t) {
      if (targets[size_t(t)] == full_space_.num_typ() - 1) continue;
      picks.emplace_back(t, targets[size_t(t)]);
      rows.emplace_back(t, 0);
    }
    if (picks.empty()) return Tensor::scalar(0.0);
    Tensor gold_scores = pick_entries(outputs.typ->emissions, picks);
    Tensor norms = pick_entries(lse, rows);
    return add(sum(norms), neg(sum(gold_scores)));
  };

  switch (sentence.availability) {
    case Availability::Full: {
      Tensor loss = head_nll(*outputs.decision, decision_targets(sentence), crf);
      if (variant_has_subtask_heads(v)) {
        if (alpha != 0.0) {
          Tensor seg_loss = head_nll(*outputs.seg, seg_targets(sentence), crf);
          loss = add(loss, alpha == 1.0 ? seg_loss : scale(seg_loss, alpha));
        }
        if (beta != 0.0) {
          Tensor t_loss = typ_loss();
          loss = add(loss, beta == 1.0 ? t_loss : scale(t_loss, beta));
        }
      }
      return loss;
    }
    case Availability::SegOnly: {
      if (!variant_has_subtask_heads(v))
        throw UsageError("variant cannot train on SegOnly data");
      Tensor seg_loss = head_nll(*outputs.seg, seg_targets(sentence), crf);
      return alpha == 1.0 ? seg_loss : scale(seg_loss, alpha);
    }
    case Availability::TypeOnly: {
      if (!variant_has_subtask_heads(v))
        throw UsageError("variant cannot train on TypeOnly data");
      Tensor t_loss = typ_loss();
      return beta == 1.0 ? t_loss : scale(t_loss, beta);
    }
    case Availability::Unlabeled:
      throw UsageError("unlabeled sentences contribute no loss");
  }
  throw UsageError("unreachable");
}

Tensor Model::sentence_loss(const AnnotatedSentence& sentence,
                            DropoutDriver& dropout,
                            const std::vector<Tensor>* perturbations,
                            bool retain_token_grads,
                            HeadOutputs* outputs_out) const {
  HeadOutputs outputs =
      forward_heads(sentence, request_for(sentence.availability, config_.variant),
                    dropout, perturbations, retain_token_grads);
  Tensor loss = joint_loss(outputs, sentence);
  if (outputs_out) *outputs_out = std::move(outputs);
  return loss;
}

CrfPotentials Model::decision_potentials_for_decode(
    const HeadOutputs& outputs) const {
  CrfPotentials p = *outputs.decision;
  if (config_.constrain_decode && variant_has_crf(config_.variant)) {
    p.transitions = add(p.transitions, decode_mask_);
  }
  return p;
}

std::vector<FullLabel> Model::predict(const AnnotatedSentence& sentence) const {
  DropoutDriver eval = DropoutDriver::disabled();
  HeadRequest request;
  request.decision = true;
  HeadOutputs outputs = forward_heads(sentence, request, eval);

  std::vector<int> path;
  if (variant_has_crf(config_.variant)) {
    path = viterbi(decision_potentials_for_decode(outputs)).path;
  } else {
    const Tensor& em = outputs.decision->emissions;
    for (int t = 0; t < em.rows(); ++t) {
      int best = 0;
      for (int k = 1; k < em.cols(); ++k)
        if (em.at(t, k) > em.at(t, best)) best = k;
      path.push_back(best);
    }
  }
  std::vector<FullLabel> decoded;
  decoded.reserve(path.size());
  for (int idx : path) decoded.push_back(full_space_.full_at(idx));
  return bioes_to_bio2(decoded);
}

std::vector<SegTag> Model::predict_seg(const AnnotatedSentence& sentence) const {
  if (!variant_has_subtask_heads(config_.variant))
    throw UsageError("variant has no seg head");
  DropoutDriver eval = DropoutDriver::disabled();
  HeadRequest request;
  request.seg = true;
  HeadOutputs outputs = forward_heads(sentence, request, eval);
  std::vector<int> path;
  if (variant_has_crf(config_.variant)) {
    path = viterbi(*outputs.seg).path;
  } else {
    const Tensor& em = outputs.seg->emissions;
    for (int t = 0; t < em.rows(); ++t) {
      int best = 0;
      for (int k = 1; k < em.cols(); ++k)
        if (em.at(t, k) > em.at(t, best)) best = k;
      path.push_back(best);
    }
  }
  std::vector<SegTag> tags;
  tags.reserve(path.size());
  for (int idx : path) tags.push_back(full_space_.seg_at(idx));
  return tags;
}

std::vector<int> Model::predict_typ(const AnnotatedSentence& sentence) const {
  if (!variant_has_subtask_heads(config_.variant))
    throw UsageError("variant has no typ head");
  DropoutDriver eval = DropoutDriver::disabled();
  HeadRequest request;
  request.typ = true;
  HeadOutputs outputs = forward_heads(sentence, request, eval);
  std::vector<int> path;
  if (variant_has_crf(config_.variant)) {
    path = viterbi(*outputs.typ).path;
  } else {
    const Tensor& em = outputs.typ->emissions;
    for (int t = 0; t < em.rows(); ++t) {
      int best = 0;
      for (int k = 1; k < em.cols(); ++k)
        if (em.at(t, k) > em.at(t, best)) best = k;
      path.push_back(best);
    }
  }
  std::vector<int> types;
  types.reserve(path.size());
  for (int idx : path) types.push_back(full_space_.typ_at(idx));
  return types;
}

std::vector<int> Model::decision_targets(const AnnotatedSentence& sentence) const {
  const auto& bio2 = sentence.full_view();
  std::vector<FullLabel> scheme_labels =
      config_.train_scheme == Scheme::BIOES ? bio2_to_bioes(bio2) : bio2;
  std::vector<int> targets;
  targets.reserve(scheme_labels.size());
  for (const auto& y : scheme_labels)
    targets.push_back(full_space_.full_index(y));
  return targets;
}

std::vector<int> Model::seg_targets(const AnnotatedSentence& sentence) const {
  std::vector<SegTag> tags = sentence.seg_view();
  if (config_.train_scheme == Scheme::BIOES) tags = seg_bio2_to_bioes(tags);
  std::vector<int> targets;
  targets.reserve(tags.size());
  for (SegTag s : tags) targets.push_back(full_space_.seg_index(s));
  return targets;
}

std::vector<int> Model::typ_targets(const AnnotatedSentence& sentence) const {
  const auto& types = sentence.typ_view();
  std::vector<int> targets;
  targets.reserve(types.size());
  for (int t : types) targets.push_back(full_space_.typ_index(t));
  return targets;
}

Tensor softmax_nll(const Tensor& emissions, const std::vector<int>& gold) {
  if (int(gold.size()) != emissions.rows())
    throw DimensionError("softmax_nll: gold length != rows");
  std::vector<std::pair<int, int>> picks;
  picks.reserve(gold.size());
  for (int t = 0; t < int(gold.size()); ++t) {
    if (gold[size_t(t)] < 0 || gold[size_t(t)] >= emissions.cols())
      throw UsageError("softmax_nll: gold index out of range");
    picks.emplace_back(t, gold[size_t(t)]);
  }
  Tensor lse = logsumexp(emissions, Axis::Cols);  // rows x 1
  Tensor gold_scores = pick_entries(emissions, picks);
  return add(sum(lse), neg(sum(gold_scores)));
}

}  // namespace modcrf
