#ifndef MODCRF_TENSOR_HPP
#define MODCRF_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Dense 2-d tensors with reverse-mode gradient accumulation. Everything is a
// rows x cols matrix; vectors are 1 x n rows and scalars are 1 x 1. Ops record
// onto the active Tape (one per forward/backward pass, thread-confined) and
// backward() accumulates d(root)/d(leaf) additively into leaf grad buffers.

namespace modcrf {

class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class Tape;

struct TensorData {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  std::vector<double> grad;   // leaves only; allocated on first accumulation
  bool requires_grad = false;
  bool retain_grad = false;   // intermediates that keep their gradient
  bool tracked = false;       // produced by a recorded op or requires_grad
  // Producing node on its tape; identity-compared only, never dereferenced
  // outside that tape's own backward pass. The generation stamp guards
  // against a later tape reusing the same stack address.
  int producer = -1;
  const Tape* producer_tape = nullptr;
  uint64_t producer_generation = 0;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols);
  static Tensor constant(int rows, int cols, double value);
  static Tensor from_values(int rows, int cols, std::vector<double> values);
  // 1 x n row vector
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return d_ != nullptr; }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int numel() const { return d_->rows * d_->cols; }
  bool is_scalar() const { return defined() && numel() == 1; }

  double value() const;  // scalar tensors only
  double at(int r, int c) const { return d_->values[size_t(r) * d_->cols + c]; }

  std::vector<double>& values() { return d_->values; }
  const std::vector<double>& values() const { return d_->values; }

  bool requires_grad() const { return d_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  // Keeps this intermediate's gradient after backward (leaf-style access).
  Tensor& set_retain_grad(bool on) {
    d_->retain_grad = on;
    return *this;
  }
  bool tracked() const { return defined() && d_->tracked; }

  // Gradient buffer of a leaf; zeros if never accumulated into.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool has_grad() const { return d_ && !d_->grad.empty(); }
  void zero_grad();

  TensorData* data_ptr() const { return d_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<TensorData> d_;
  friend class Tape;
};

// One recorded primitive op: inputs kept alive, backward scatters the output
// gradient to the tracked inputs.
struct TapeNode {
  std::vector<Tensor> inputs;
  Tensor output;
  // fn(out_grad, in_grads): in_grads[i] is empty for untracked inputs.
  std::function<void(std::span<const double>, std::vector<std::span<double>>&)>
      backward;
};

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  void record(TapeNode node);
  size_t size() const { return nodes_.size(); }
  uint64_t generation() const { return generation_; }

  // Seeds d(root)/d(root) = 1 and accumulates into every reachable leaf with
  // requires_grad. Intermediate gradients are scratch local to this call, so
  // calling twice doubles leaf gradients.
  void backward(const Tensor& root);

 private:
  std::vector<TapeNode> nodes_;
  Tape* previous_ = nullptr;
  uint64_t generation_ = 0;
};

// ---- Primitive ops ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);           // same shape
Tensor add_rowvec(const Tensor& m, const Tensor& v);    // v is 1 x cols
Tensor add_colvec(const Tensor& m, const Tensor& v);    // v is 1 x rows
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);

Tensor sigmoid(const Tensor& x);
Tensor tanh_t(const Tensor& x);
Tensor exp_t(const Tensor& x);
Tensor log_t(const Tensor& x);   // domain error on non-positive entries
Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);

enum class Axis { Rows = 0, Cols = 1 };

// Juxtaposes parts along axis (Rows stacks vertically).
Tensor concat(const std::vector<Tensor>& parts, Axis axis);
// Half-open row/col ranges.
Tensor slice(const Tensor& x, int r0, int r1, int c0, int c1);
Tensor reshape(const Tensor& x, int rows, int cols);
Tensor transpose(const Tensor& x);

Tensor sum(const Tensor& x);                 // 1 x 1
// Reduces along axis with max-subtraction; Axis::Rows collapses rows
// (output 1 x cols), Axis::Cols collapses cols (output rows x 1).
Tensor logsumexp(const Tensor& x, Axis axis);
double logsumexp(std::span<const double> xs);  // plain helper, same guarantee

Tensor gather_rows(const Tensor& m, const std::vector<int>& row_ids);
// Picks entries (r, c); output is 1 x |entries|; gradient scatter-adds.
Tensor pick_entries(const Tensor& m, const std::vector<std::pair<int, int>>& entries);

void backward(const Tensor& root);  // on the current tape

// ---- Parameters and gradient checking ---------------------------------

struct Parameter {
  std::string name;
  Tensor tensor;
};

class ParamRegistry {
 public:
  Tensor create(const std::string& name, int rows, int cols);
  void add(const std::string& name, Tensor t);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  size_t parameter_count() const;  // total scalar components
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central finite differences against the analytic gradient of a deterministic
// scalar-producing closure. The closure is evaluated twice up front; a value
// mismatch (fresh dropout masks and the like) is a usage error.
GradCheckReport grad_check(ParamRegistry& params,
                           const std::function<Tensor()>& build,
                           double step = 1e-5, double tol = 1e-4);

}  // namespace modcrf

#endif  // MODCRF_TENSOR_HPP
