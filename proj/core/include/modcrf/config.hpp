#ifndef MODCRF_CONFIG_HPP
#define MODCRF_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "modcrf/model.hpp"
#include "modcrf/train.hpp"

// Flat key=value run configuration. Defaults follow the training recipe the
// models ship with (SGD momentum 0.9, lr 0.01 with decay 0.05, clip 5.0,
// batch 10, patience 30 over at least 120 epochs). The canonical rendering
// doubles as the manifest, making runs diffable and reproducible.

namespace modcrf {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  std::string variant = "tig";
  std::string scheme = "bioes";  // training scheme
  std::vector<std::string> types = {"positive", "neutral", "negative"};

  EncoderConfig encoder;  // 30/25/100/300, dropout 0.5, highway on
  LossWeights weights;    // alpha = beta = 1.0
  OptimizerConfig optimizer;
  AdversarialConfig adversarial;
  bool constrain_decode = false;
  bool marginalize_o_types = false;

  uint64_t seed = 1;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string embeddings_path;

  ModelConfig model_config() const;

  // Canonical key=value rendering (sorted keys, one per line).
  std::string to_text() const;
  uint64_t config_hash() const;  // FNV-1a 64 of to_text()
  std::map<std::string, std::string> manifest() const;

  static RunConfig from_file(const std::string& path);
  void apply(const std::string& key, const std::string& value);
};

std::string format_double(double v);

}  // namespace modcrf

#endif  // MODCRF_CONFIG_HPP
