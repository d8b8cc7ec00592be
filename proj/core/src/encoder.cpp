#include "modcrf/encoder.hpp"

#include <algorithm>

namespace modcrf {

void EncoderConfig::validate() const {
  if (char_embed_dim < 1 || char_hidden < 1 || word_embed_dim < 1 ||
      word_hidden < 1)
    throw UsageError("encoder config: dimensions must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw UsageError("encoder config: dropout rate must be in [0, 1)");
  if (width_multiplier <= 0.0)
    throw UsageError("encoder config: width multiplier must be positive");
}

const char* module_name(ModuleId m) {
  switch (m) {
    case ModuleId::Decision: return "decision";
    case ModuleId::Seg: return "seg";
    case ModuleId::Typ: return "typ";
  }
  return "?";
}

namespace {

// The four gate affines run as one fused matmul per step; the concatenated
// weight view is built once per sequence and gradients split back to the
// per-gate parameters through the concat node.
struct FusedGates {
  Tensor W;  // (input_dim + hidden) x 4 hidden, gate order i, f, o, g
  Tensor b;  // 1 x 4 hidden

  explicit FusedGates(const LstmDirectionParams& params)
      : W(concat({params.input.W, params.forget.W, params.output.W,
                  params.candidate.W},
                 Axis::Cols)),
        b(concat({params.input.b, params.forget.b, params.output.b,
                  params.candidate.b},
                 Axis::Cols)) {}
};

std::pair<Tensor, Tensor> fused_lstm_step(const FusedGates& gates, int hidden,
                                          const Tensor& x,
                                          const Tensor& h_prev,
                                          const Tensor& c_prev) {
  Tensor z = concat({x, h_prev}, Axis::Cols);
  Tensor pre = add(matmul(z, gates.W), gates.b);
  Tensor i = sigmoid(slice(pre, 0, 1, 0, hidden));
  Tensor f = sigmoid(slice(pre, 0, 1, hidden, 2 * hidden));
  Tensor o = sigmoid(slice(pre, 0, 1, 2 * hidden, 3 * hidden));
  Tensor g = tanh_t(slice(pre, 0, 1, 3 * hidden, 4 * hidden));
  Tensor c = add(hadamard(f, c_prev), hadamard(i, g));
  Tensor h = hadamard(o, tanh_t(c));
  return {h, c};
}

}  // namespace

std::pair<Tensor, Tensor> lstm_step(const LstmDirectionParams& params,
                                    const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  if (x.cols() != params.input_dim || h_prev.cols() != params.hidden_dim)
    throw DimensionError("lstm_step: input dims disagree with parameters");
  FusedGates gates(params);
  return fused_lstm_step(gates, params.hidden_dim, x, h_prev, c_prev);
}

std::vector<Tensor> run_lstm(const LstmDirectionParams& params,
                             const std::vector<Tensor>& inputs,
                             bool reversed) {
  const int L = int(inputs.size());
  std::vector<Tensor> outputs(static_cast<size_t>(L));
  FusedGates gates(params);
  Tensor h = Tensor::zeros(1, params.hidden_dim);
  Tensor c = Tensor::zeros(1, params.hidden_dim);
  for (int step = 0; step < L; ++step) {
    const int t = reversed ? L - 1 - step : step;
    auto [h_next, c_next] =
        fused_lstm_step(gates, params.hidden_dim, inputs[size_t(t)], h, c);
    h = h_next;
    c = c_next;
    outputs[size_t(t)] = h;
  }
  return outputs;
}

Tensor char_encode(const std::vector<int>& char_ids, const Tensor& char_embed,
                   const LstmParams& char_lstm) {
  std::vector<int> ids = char_ids;
  if (ids.empty()) ids.push_back(Vocabulary::kPad);
  Tensor embedded = gather_rows(char_embed, ids);
  std::vector<Tensor> rows;
  rows.reserve(ids.size());
  for (int i = 0; i < int(ids.size()); ++i)
    rows.push_back(slice(embedded, i, i + 1, 0, embedded.cols()));
  auto fwd = run_lstm(char_lstm.fwd, rows, /*reversed=*/false);
  auto bwd = run_lstm(char_lstm.bwd, rows, /*reversed=*/true);
  return concat({fwd.back(), bwd.front()}, Axis::Cols);
}

Tensor highway(const Tensor& x, const HighwayParams& params) {
  Tensor g = sigmoid(add(matmul(x, params.Wg), params.bg));
  Tensor transformed = relu(add(matmul(x, params.Wh), params.bh));
  Tensor carry = add(Tensor::constant(g.rows(), g.cols(), 1.0), neg(g));
  return add(hadamard(g, transformed), hadamard(carry, x));
}

// ---- dropout -----------------------------------------------------------

void DropoutDriver::start_replay() {
  if (mode_ == Mode::Disabled) return;
  mode_ = Mode::Replay;
  next_ = 0;
}

void DropoutDriver::restart_sampling() {
  if (mode_ == Mode::Disabled) return;
  mode_ = Mode::Sample;
  masks_.clear();
  next_ = 0;
}

Tensor DropoutDriver::apply(const Tensor& x) {
  if (mode_ == Mode::Disabled || rate_ == 0.0) return x;
  if (mode_ == Mode::Sample) {
    std::vector<double> mask(x.values().size());
    const double keep = 1.0 - rate_;
    for (auto& m : mask)
      m = (rng_->next_double() < rate_) ? 0.0 : 1.0 / keep;
    masks_.push_back(Tensor::from_values(x.rows(), x.cols(), std::move(mask)));
    return hadamard(x, masks_.back());
  }
  if (next_ >= masks_.size())
    throw UsageError("dropout replay ran past the recorded masks");
  const Tensor& mask = masks_[next_++];
  if (mask.rows() != x.rows() || mask.cols() != x.cols())
    throw UsageError("dropout replay shape mismatch");
  return hadamard(x, mask);
}

// ---- initialization -------------------------------------------------------

Tensor glorot_init(ParamRegistry& registry, const std::string& name, int rows,
                   int cols, Rng& rng) {
  Tensor t = registry.create(name, rows, cols);
  const double bound = std::sqrt(6.0 / (rows + cols));
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

namespace {

LstmDirectionParams make_direction(ParamRegistry& registry,
                                   const std::string& prefix, int input_dim,
                                   int hidden_dim, Rng& rng) {
  LstmDirectionParams dir;
  dir.input_dim = input_dim;
  dir.hidden_dim = hidden_dim;
  const int in_rows = input_dim + hidden_dim;
  auto gate = [&](const std::string& gate_name, double bias_value) {
    LstmGate g;
    g.W = glorot_init(registry, prefix + "." + gate_name + ".W", in_rows,
                      hidden_dim, rng);
    g.b = registry.create(prefix + "." + gate_name + ".b", 1, hidden_dim);
    for (auto& v : g.b.values()) v = bias_value;
    return g;
  };
  dir.input = gate("input", 0.0);
  dir.forget = gate("forget", 1.0);
  dir.output = gate("output", 0.0);
  dir.candidate = gate("candidate", 0.0);
  return dir;
}

}  // namespace

LstmParams make_lstm_params(ParamRegistry& registry, const std::string& prefix,
                            int input_dim, int hidden_dim, Rng& rng) {
  LstmParams p;
  p.fwd = make_direction(registry, prefix + ".fwd", input_dim, hidden_dim, rng);
  p.bwd = make_direction(registry, prefix + ".bwd", input_dim, hidden_dim, rng);
  return p;
}

// ---- encoder ----------------------------------------------------------------

Encoder::Encoder(const EncoderConfig& config, const Vocabulary& vocab,
                 const EmbeddingTable* embeddings,
                 const std::set<ModuleId>& modules, ParamRegistry& registry,
                 Rng& init_rng)
    : config_(config), modules_(modules) {
  config_.validate();
  if (embeddings && embeddings->dimension() != config_.word_embed_dim)
    throw DimensionError("embedding table dimension != word_embed_dim");

  char_embed_ = registry.create("char_embed", vocab.num_chars(),
                                config_.char_embed_dim);
  {
    const double bound = std::sqrt(3.0 / config_.char_embed_dim);
    for (auto& v : char_embed_.values()) v = init_rng.uniform(-bound, bound);
  }

  word_embed_ = registry.create("word_embed", vocab.num_words(),
                                config_.word_embed_dim);
  {
    const double bound = std::sqrt(3.0 / config_.word_embed_dim);
    auto& values = word_embed_.values();
    for (int w = 0; w < vocab.num_words(); ++w) {
      const std::vector<double>* source = nullptr;
      if (embeddings) source = &embeddings->lookup(vocab.words()[size_t(w)]);
      for (int j = 0; j < config_.word_embed_dim; ++j) {
        values[size_t(w) * config_.word_embed_dim + j] =
            source ? (*source)[size_t(j)] : init_rng.uniform(-bound, bound);
      }
    }
    word_embed_.set_requires_grad(config_.finetune_embeddings);
  }

  char_lstm_ = make_lstm_params(registry, "char_lstm", config_.char_embed_dim,
                                config_.char_hidden, init_rng);
  if (config_.use_highway) {
    const int d = config_.char_repr_dim();
    highway_.Wg = glorot_init(registry, "highway.Wg", d, d, init_rng);
    highway_.bg = registry.create("highway.bg", 1, d);
    highway_.Wh = glorot_init(registry, "highway.Wh", d, d, init_rng);
    highway_.bh = registry.create("highway.bh", 1, d);
  }
  for (ModuleId m : modules_) {
    word_lstms_[m] = make_lstm_params(
        registry, std::string("word_lstm.") + module_name(m),
        config_.token_dim(), config_.module_word_hidden(), init_rng);
  }
}

Tensor Encoder::token_repr(const Token& token) const {
  if (token.word_id < 0)
    throw UsageError("token '" + token.surface + "' was not indexed");
  Tensor chars = char_encode(token.characters, char_embed_, char_lstm_);
  if (config_.use_highway) chars = highway(chars, highway_);
  Tensor word = gather_rows(word_embed_, {token.word_id});
  return concat({chars, word}, Axis::Cols);
}

EncodedSentence Encoder::encode(const AnnotatedSentence& sentence,
                                DropoutDriver& dropout,
                                const std::vector<Tensor>* perturbations,
                                bool retain_token_grads,
                                const std::set<ModuleId>* subset) const {
  if (sentence.tokens.empty()) throw UsageError("cannot encode empty sentence");
  if (perturbations && perturbations->size() != sentence.tokens.size())
    throw DimensionError("perturbation count != token count");

  EncodedSentence out;
  out.token_reprs.reserve(sentence.tokens.size());
  for (const auto& token : sentence.tokens) {
    Tensor e = token_repr(token);
    if (retain_token_grads) e.set_retain_grad(true);
    out.token_reprs.push_back(e);
  }

  std::vector<Tensor> inputs;
  inputs.reserve(out.token_reprs.size());
  for (size_t t = 0; t < out.token_reprs.size(); ++t) {
    Tensor e = out.token_reprs[t];
    if (perturbations) e = add(e, (*perturbations)[t]);
    inputs.push_back(dropout.apply(e));
  }

  for (ModuleId m : modules_) {
    if (subset && !subset->count(m)) continue;
    const LstmParams& lstm = word_lstms_.at(m);
    auto fwd = run_lstm(lstm.fwd, inputs, /*reversed=*/false);
    auto bwd = run_lstm(lstm.bwd, inputs, /*reversed=*/true);
    std::vector<Tensor> rows;
    rows.reserve(fwd.size());
    for (size_t t = 0; t < fwd.size(); ++t)
      rows.push_back(dropout.apply(concat({fwd[t], bwd[t]}, Axis::Cols)));
    out.hidden[m] = concat(rows, Axis::Rows);
  }
  return out;
}

}  // namespace modcrf
