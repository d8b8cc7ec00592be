#ifndef MODCRF_MODEL_HPP
#define MODCRF_MODEL_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "modcrf/crf.hpp"
#include "modcrf/encoder.hpp"

// The five architecture variants wiring encoder outputs into CRF (or softmax)
// heads, and the joint loss over full and partial labels: full sentences add
// the decision loss plus alpha * seg and beta * typ; partially labeled
// sentences train only the module their projection feeds.

namespace modcrf {

enum class ModelVariant { Baseline, T, TI, TIg, TIgNoCrf };

const char* variant_name(ModelVariant v);
std::optional<ModelVariant> variant_from_name(const std::string& name);
bool variant_has_subtask_heads(ModelVariant v);
bool variant_has_gates(ModelVariant v);
bool variant_has_crf(ModelVariant v);

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
};

struct ModelConfig {
  ModelVariant variant = ModelVariant::TIg;
  EncoderConfig encoder;
  std::vector<std::string> types;
  LossWeights weights;
  Scheme train_scheme = Scheme::BIOES;
  // Hard BIOES constraints on the decision decode; off by default.
  bool constrain_decode = false;
  // Ablation for the type module's target at O positions: marginalize them
  // out of the loss instead of training toward the O type.
  bool marginalize_o_types = false;
};

struct HeadOutputs {
  std::optional<CrfPotentials> seg;
  std::optional<CrfPotentials> typ;
  std::optional<CrfPotentials> decision;  // transitions undefined for TIgNoCrf
  EncodedSentence encoded;
};

// Which heads a forward pass must produce.
struct HeadRequest {
  bool seg = false;
  bool typ = false;
  bool decision = false;
};

class Model {
 public:
  Model(const ModelConfig& config, const Vocabulary& vocab,
        const EmbeddingTable* embeddings, uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  ParamRegistry& params() { return registry_; }
  const ParamRegistry& params() const { return registry_; }
  size_t parameter_count() const { return registry_.parameter_count(); }

  const LabelSpace& full_space() const { return full_space_; }
  const LabelSpace& bio2_space() const { return bio2_space_; }
  int num_seg_labels() const { return full_space_.num_seg(); }
  int num_typ_labels() const { return full_space_.num_typ(); }

  static HeadRequest request_for(Availability availability, ModelVariant v);

  HeadOutputs forward_heads(const AnnotatedSentence& sentence,
                            const HeadRequest& request,
                            DropoutDriver& dropout,
                            const std::vector<Tensor>* perturbations = nullptr,
                            bool retain_token_grads = false) const;

  // Availability-aware loss of one sentence given its forward outputs.
  Tensor joint_loss(const HeadOutputs& outputs,
                    const AnnotatedSentence& sentence) const;
  // forward_heads + joint_loss for the sentence's availability.
  Tensor sentence_loss(const AnnotatedSentence& sentence,
                       DropoutDriver& dropout,
                       const std::vector<Tensor>* perturbations = nullptr,
                       bool retain_token_grads = false,
                       HeadOutputs* outputs_out = nullptr) const;

  // Decision decode in the training scheme, converted back to BIO2.
  std::vector<FullLabel> predict(const AnnotatedSentence& sentence) const;
  // Sub-task decodes over the head's own label space (training scheme).
  std::vector<SegTag> predict_seg(const AnnotatedSentence& sentence) const;
  std::vector<int> predict_typ(const AnnotatedSentence& sentence) const;

  // Gold index sequences in the training scheme.
  std::vector<int> decision_targets(const AnnotatedSentence& sentence) const;
  std::vector<int> seg_targets(const AnnotatedSentence& sentence) const;
  std::vector<int> typ_targets(const AnnotatedSentence& sentence) const;

  static std::set<ModuleId> modules_for(ModelVariant v);

 private:
  Tensor head_nll(const CrfPotentials& potentials,
                  const std::vector<int>& gold, bool use_crf) const;
  CrfPotentials decision_potentials_for_decode(
      const HeadOutputs& outputs) const;

  ModelConfig config_;
  LabelSpace full_space_;   // training scheme
  LabelSpace bio2_space_;   // evaluation rendering
  ParamRegistry registry_;
  std::unique_ptr<Encoder> encoder_;

  // Emission affines; gate affines for TIg-family; per-head transitions.
  Tensor seg_W_, seg_b_;
  Tensor typ_W_, typ_b_;
  Tensor dec_W_, dec_b_;
  Tensor gate_seg_W_, gate_seg_b_;
  Tensor gate_typ_W_, gate_typ_b_;
  Tensor seg_trans_, typ_trans_, dec_trans_;
  Tensor decode_mask_;  // constant, only when constrain_decode
};

// Per-token cross entropy: sum_t (logsumexp(row_t) - row_t[gold_t]).
Tensor softmax_nll(const Tensor& emissions, const std::vector<int>& gold);

}  // namespace modcrf

#endif  // MODCRF_MODEL_HPP
