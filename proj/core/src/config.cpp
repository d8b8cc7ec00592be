#include "modcrf/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace modcrf {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

namespace {

std::string join_types(const std::vector<std::string>& types) {
  std::string out;
  for (size_t i = 0; i < types.size(); ++i) {
    if (i) out += ",";
    out += types[i];
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean for " + key + ": " + value);
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": " + value);
  }
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + value);
  }
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  auto v = variant_from_name(variant);
  if (!v) throw ConfigError("unknown variant: " + variant);
  mc.variant = *v;
  if (scheme == "bioes")
    mc.train_scheme = Scheme::BIOES;
  else if (scheme == "bio2")
    mc.train_scheme = Scheme::BIO2;
  else
    throw ConfigError("unknown scheme: " + scheme);
  if (types.empty()) throw ConfigError("types must be nonempty");
  mc.types = types;
  mc.encoder = encoder;
  mc.weights = weights;
  mc.constrain_decode = constrain_decode;
  mc.marginalize_o_types = marginalize_o_types;
  return mc;
}

std::string RunConfig::to_text() const {
  std::map<std::string, std::string> kv;
  kv["variant"] = variant;
  kv["scheme"] = scheme;
  kv["types"] = join_types(types);
  kv["char_embed_dim"] = std::to_string(encoder.char_embed_dim);
  kv["char_hidden"] = std::to_string(encoder.char_hidden);
  kv["word_embed_dim"] = std::to_string(encoder.word_embed_dim);
  kv["word_hidden"] = std::to_string(encoder.word_hidden);
  kv["dropout"] = format_double(encoder.dropout_rate);
  kv["use_highway"] = encoder.use_highway ? "true" : "false";
  kv["finetune_embeddings"] = encoder.finetune_embeddings ? "true" : "false";
  kv["width_multiplier"] = format_double(encoder.width_multiplier);
  kv["alpha"] = format_double(weights.alpha);
  kv["beta"] = format_double(weights.beta);
  kv["lr"] = format_double(optimizer.lr);
  kv["lr_decay"] = format_double(optimizer.lr_decay);
  kv["momentum"] = format_double(optimizer.momentum);
  kv["batch_size"] = std::to_string(optimizer.batch_size);
  kv["clip"] = format_double(optimizer.clip);
  kv["patience"] = std::to_string(optimizer.patience);
  kv["min_epochs"] = std::to_string(optimizer.min_epochs);
  kv["max_epochs"] = std::to_string(optimizer.max_epochs);
  kv["adversarial"] = adversarial.enabled ? "true" : "false";
  kv["adversarial_epsilon"] = format_double(adversarial.epsilon);
  kv["adversarial_mode"] =
      adversarial.mode == PerturbationMode::L2 ? "l2" : "sign";
  kv["constrain_decode"] = constrain_decode ? "true" : "false";
  kv["marginalize_o_types"] = marginalize_o_types ? "true" : "false";
  kv["seed"] = std::to_string(seed);
  kv["train"] = train_path;
  kv["dev"] = dev_path;
  kv["test"] = test_path;
  kv["embeddings"] = embeddings_path;

  std::string out;
  for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
  return out;
}

uint64_t RunConfig::config_hash() const {
  const std::string text = to_text();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::map<std::string, std::string> RunConfig::manifest() const {
  std::map<std::string, std::string> m;
  std::istringstream ss(to_text());
  std::string line;
  while (std::getline(ss, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                (unsigned long long)config_hash());
  m["config_hash"] = hash;
  return m;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    config.apply(line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "variant") variant = value;
  else if (key == "scheme") scheme = value;
  else if (key == "types") types = split_csv(value);
  else if (key == "char_embed_dim") encoder.char_embed_dim = parse_int(value, key);
  else if (key == "char_hidden") encoder.char_hidden = parse_int(value, key);
  else if (key == "word_embed_dim") encoder.word_embed_dim = parse_int(value, key);
  else if (key == "word_hidden") encoder.word_hidden = parse_int(value, key);
  else if (key == "dropout") encoder.dropout_rate = parse_double(value, key);
  else if (key == "use_highway") encoder.use_highway = parse_bool(value, key);
  else if (key == "finetune_embeddings")
    encoder.finetune_embeddings = parse_bool(value, key);
  else if (key == "width_multiplier")
    encoder.width_multiplier = parse_double(value, key);
  else if (key == "alpha") weights.alpha = parse_double(value, key);
  else if (key == "beta") weights.beta = parse_double(value, key);
  else if (key == "lr") optimizer.lr = parse_double(value, key);
  else if (key == "lr_decay") optimizer.lr_decay = parse_double(value, key);
  else if (key == "momentum") optimizer.momentum = parse_double(value, key);
  else if (key == "batch_size") optimizer.batch_size = parse_int(value, key);
  else if (key == "clip") optimizer.clip = parse_double(value, key);
  else if (key == "patience") optimizer.patience = parse_int(value, key);
  else if (key == "min_epochs") optimizer.min_epochs = parse_int(value, key);
  else if (key == "max_epochs") optimizer.max_epochs = parse_int(value, key);
  else if (key == "adversarial") adversarial.enabled = parse_bool(value, key);
  else if (key == "adversarial_epsilon")
    adversarial.epsilon = parse_double(value, key);
  else if (key == "adversarial_mode") {
    if (value == "l2") adversarial.mode = PerturbationMode::L2;
    else if (value == "sign") adversarial.mode = PerturbationMode::Sign;
    else throw ConfigError("bad adversarial_mode: " + value);
  }
  else if (key == "constrain_decode") constrain_decode = parse_bool(value, key);
  else if (key == "marginalize_o_types")
    marginalize_o_types = parse_bool(value, key);
  else if (key == "seed") seed = uint64_t(std::stoull(value));
  else if (key == "train") train_path = value;
  else if (key == "dev") dev_path = value;
  else if (key == "test") test_path = value;
  else if (key == "embeddings") embeddings_path = value;
  else throw ConfigError("unknown config key: " + key);
}

}  // namespace modcrf
