#include "modcrf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace modcrf {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'R', 'F', '0', '0', '0', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = (v >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw CheckpointError("truncated checkpoint");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  uint64_t v = std::bit_cast<uint64_t>(d);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = (v >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw CheckpointError("truncated checkpoint");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(bytes[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

std::string get_string(std::istream& in) {
  uint32_t n = get_u32(in);
  if (n > (1u << 24)) throw CheckpointError("implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), std::streamsize(n));
  if (!in) throw CheckpointError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamRegistry& params,
                     const std::map<std::string, std::string>& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));

  put_u32(out, uint32_t(manifest.size()));
  for (const auto& [key, value] : manifest) {
    put_string(out, key);
    put_string(out, value);
  }

  std::map<std::string, const Parameter*> sorted;
  for (const auto& p : params.all()) sorted[p.name] = &p;
  put_u32(out, uint32_t(sorted.size()));
  for (const auto& [name, p] : sorted) {
    put_string(out, name);
    put_u32(out, uint32_t(p->tensor.rows()));
    put_u32(out, uint32_t(p->tensor.cols()));
    for (double v : p->tensor.values()) put_f64(out, v);
  }
  if (!out) throw CheckpointError("write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path + " is not a checkpoint");

  Checkpoint checkpoint;
  const uint32_t manifest_count = get_u32(in);
  for (uint32_t i = 0; i < manifest_count; ++i) {
    std::string key = get_string(in);
    checkpoint.manifest[key] = get_string(in);
  }
  const uint32_t param_count = get_u32(in);
  for (uint32_t i = 0; i < param_count; ++i) {
    std::string name = get_string(in);
    const int rows = int(get_u32(in));
    const int cols = int(get_u32(in));
    if (rows < 1 || cols < 1 || int64_t(rows) * cols > (int64_t(1) << 28))
      throw CheckpointError("implausible tensor shape in " + path);
    std::vector<double> values(size_t(rows) * size_t(cols));
    for (auto& v : values) v = get_f64(in);
    checkpoint.tensors[name] =
        Tensor::from_values(rows, cols, std::move(values));
  }
  return checkpoint;
}

void restore_params(ParamRegistry& params, const Checkpoint& checkpoint) {
  for (auto& p : params.all()) {
    auto it = checkpoint.tensors.find(p.name);
    if (it == checkpoint.tensors.end())
      throw CheckpointError("checkpoint is missing parameter " + p.name);
    const Tensor& stored = it->second;
    if (stored.rows() != p.tensor.rows() || stored.cols() != p.tensor.cols())
      throw CheckpointError("shape mismatch for parameter " + p.name);
    p.tensor.values() = stored.values();
  }
}

}  // namespace modcrf
