#ifndef MODCRF_CHECKPOINT_HPP
#define MODCRF_CHECKPOINT_HPP

#include <map>
#include <string>

#include "modcrf/tensor.hpp"

// Flat checkpoint archive: a manifest of key=value strings (variant, config
// hash, seed) followed by parameter name -> shape + little-endian float64
// payload, written in sorted name order so identical runs produce identical
// bytes.

namespace modcrf {

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what)
      : std::runtime_error(what) {}
};

struct Checkpoint {
  std::map<std::string, std::string> manifest;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, const ParamRegistry& params,
                     const std::map<std::string, std::string>& manifest);

Checkpoint load_checkpoint(const std::string& path);

// Shape-checked copy of checkpoint values into matching registry entries.
void restore_params(ParamRegistry& params, const Checkpoint& checkpoint);

}  // namespace modcrf

#endif  // MODCRF_CHECKPOINT_HPP
