#ifndef MODCRF_ENCODER_HPP
#define MODCRF_ENCODER_HPP

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "modcrf/data.hpp"
#include "modcrf/rng.hpp"
#include "modcrf/tensor.hpp"

// Token representations: character BiLSTM + pretrained or randomly
// initialized word embeddings, highway connection on the character part, and
// per-module private word-level BiLSTMs. Only the embedding stage is shared
// between modules; everything above it is private.

namespace modcrf {

struct EncoderConfig {
  int char_embed_dim = 30;
  int char_hidden = 25;
  int word_embed_dim = 100;
  int word_hidden = 300;
  double dropout_rate = 0.5;
  bool use_highway = true;
  bool finetune_embeddings = true;
  // Scales the private word-LSTM width; the parameter-parity knob.
  double width_multiplier = 1.0;

  int char_repr_dim() const { return 2 * char_hidden; }
  int token_dim() const { return char_repr_dim() + word_embed_dim; }
  int module_word_hidden() const {
    return std::max(1, int(std::lround(word_hidden * width_multiplier)));
  }
  int hidden_dim() const { return 2 * module_word_hidden(); }

  void validate() const;
};

enum class ModuleId { Decision = 0, Seg = 1, Typ = 2 };
const char* module_name(ModuleId m);

struct LstmGate {
  Tensor W;  // (input_dim + hidden) x hidden, applied to [x; h_prev]
  Tensor b;  // 1 x hidden
};

struct LstmDirectionParams {
  LstmGate input, forget, output, candidate;
  int input_dim = 0;
  int hidden_dim = 0;
};

struct LstmParams {
  LstmDirectionParams fwd, bwd;
};

struct HighwayParams {
  Tensor Wg, bg;  // gate
  Tensor Wh, bh;  // transform
};

// Standard recurrence: i,f,o = sigmoid(affine), g = tanh(affine),
// c = f (.) c_prev + i (.) g, h = o (.) tanh(c).
std::pair<Tensor, Tensor> lstm_step(const LstmDirectionParams& params,
                                    const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev);

// Hidden states aligned to input positions; reversed runs right to left.
std::vector<Tensor> run_lstm(const LstmDirectionParams& params,
                             const std::vector<Tensor>& inputs, bool reversed);

// concat(final forward hidden, final backward hidden); empty input uses a
// single padding character upstream.
Tensor char_encode(const std::vector<int>& char_ids, const Tensor& char_embed,
                   const LstmParams& char_lstm);

// g = sigmoid(Wg x + bg); y = g (.) relu(Wh x + bh) + (1 - g) (.) x
Tensor highway(const Tensor& x, const HighwayParams& params);

// Inverted dropout with recordable masks so a pass can be replayed exactly
// (adversarial perturbation and gradient checks need bitwise reruns).
class DropoutDriver {
 public:
  enum class Mode { Disabled, Sample, Replay };

  DropoutDriver() = default;
  DropoutDriver(double rate, Rng* rng) : mode_(Mode::Sample), rate_(rate), rng_(rng) {}

  static DropoutDriver disabled() { return DropoutDriver(); }

  void start_replay();
  void restart_sampling();
  Tensor apply(const Tensor& x);
  Mode mode() const { return mode_; }

 private:
  Mode mode_ = Mode::Disabled;
  double rate_ = 0.0;
  Rng* rng_ = nullptr;
  std::vector<Tensor> masks_;
  size_t next_ = 0;
};

struct EncodedSentence {
  // e_t rows (1 x token_dim), shared by every module below.
  std::vector<Tensor> token_reprs;
  // L x hidden_dim matrix per private BiLSTM.
  std::map<ModuleId, Tensor> hidden;
};

class Encoder {
 public:
  Encoder(const EncoderConfig& config, const Vocabulary& vocab,
          const EmbeddingTable* embeddings, const std::set<ModuleId>& modules,
          ParamRegistry& registry, Rng& init_rng);

  const EncoderConfig& config() const { return config_; }
  const std::set<ModuleId>& modules() const { return modules_; }

  // Computes e_t once and runs each requested private BiLSTM over it.
  // `perturbations`, when given, are constant rows added to e_t first.
  // `retain_token_grads` marks e_t so backward() stores d(loss)/d(e_t).
  // `subset` limits the pass to some of the constructed modules.
  EncodedSentence encode(const AnnotatedSentence& sentence,
                         DropoutDriver& dropout,
                         const std::vector<Tensor>* perturbations = nullptr,
                         bool retain_token_grads = false,
                         const std::set<ModuleId>* subset = nullptr) const;

 private:
  Tensor token_repr(const Token& token) const;

  EncoderConfig config_;
  std::set<ModuleId> modules_;
  Tensor char_embed_;
  Tensor word_embed_;
  LstmParams char_lstm_;
  HighwayParams highway_;
  std::map<ModuleId, LstmParams> word_lstms_;
};

// Uniform +-sqrt(6 / (fan_in + fan_out)) matrices, zero biases except the
// forget gate at 1.
Tensor glorot_init(ParamRegistry& registry, const std::string& name, int rows,
                   int cols, Rng& rng);
LstmParams make_lstm_params(ParamRegistry& registry, const std::string& prefix,
                            int input_dim, int hidden_dim, Rng& rng);

}  // namespace modcrf

#endif  // MODCRF_ENCODER_HPP
