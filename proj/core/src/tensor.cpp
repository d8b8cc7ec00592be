#include "modcrf/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace modcrf {

namespace {

thread_local Tape* g_current_tape = nullptr;

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << "[" << t.rows() << "x" << t.cols() << "]";
  return os.str();
}

std::shared_ptr<TensorData> make_data(int rows, int cols) {
  auto d = std::make_shared<TensorData>();
  d->rows = rows;
  d->cols = cols;
  d->values.assign(size_t(rows) * cols, 0.0);
  return d;
}

bool any_tracked(const std::vector<Tensor>& ts) {
  for (const auto& t : ts) {
    if (t.tracked()) return true;
  }
  return false;
}

}  // namespace

// -- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(int rows, int cols) {
  return Tensor(make_data(rows, cols));
}

Tensor Tensor::constant(int rows, int cols, double value) {
  auto d = make_data(rows, cols);
  std::fill(d->values.begin(), d->values.end(), value);
  return Tensor(std::move(d));
}

Tensor Tensor::from_values(int rows, int cols, std::vector<double> values) {
  if (int64_t(rows) * cols != int64_t(values.size())) {
    throw DimensionError("from_values: " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " needs " +
                         std::to_string(int64_t(rows) * cols) + " values, got " +
                         std::to_string(values.size()));
  }
  auto d = std::make_shared<TensorData>();
  d->rows = rows;
  d->cols = cols;
  d->values = std::move(values);
  return Tensor(std::move(d));
}

Tensor Tensor::row(std::vector<double> values) {
  int n = int(values.size());
  return from_values(1, n, std::move(values));
}

Tensor Tensor::scalar(double value) { return from_values(1, 1, {value}); }

double Tensor::value() const {
  if (!is_scalar()) {
    throw UsageError("value(): tensor is " + shape_str(*this) + ", not scalar");
  }
  return d_->values[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  d_->requires_grad = on;
  // Leaf-only switch: clearing it also clears tracking.
  d_->tracked = on;
  return *this;
}

std::vector<double>& Tensor::grad() {
  if (d_->grad.empty()) d_->grad.assign(d_->values.size(), 0.0);
  return d_->grad;
}

const std::vector<double>& Tensor::grad() const {
  static const std::vector<double> empty;
  if (d_->grad.empty()) {
    // Present a zero buffer of the right size for callers that only read.
    const_cast<TensorData*>(d_.get())->grad.assign(d_->values.size(), 0.0);
  }
  return d_->grad;
}

void Tensor::zero_grad() {
  if (d_ && !d_->grad.empty()) {
    std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
  }
}

// -- Tape ----------------------------------------------------------------

namespace {
std::atomic<uint64_t> g_tape_generation{1};
}  // namespace

Tape::Tape() {
  previous_ = g_current_tape;
  g_current_tape = this;
  generation_ = g_tape_generation.fetch_add(1, std::memory_order_relaxed);
}

Tape::~Tape() { g_current_tape = previous_; }

Tape* Tape::current() { return g_current_tape; }

void Tape::record(TapeNode node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& root) {
  if (!root.defined() || !root.is_scalar()) {
    throw UsageError("backward: root must be a scalar tensor");
  }
  TensorData* root_data = root.data_ptr();
  if (!root.tracked() || root_data->producer_tape != this ||
      root_data->producer_generation != generation_ ||
      root_data->producer < 0) {
    throw UsageError(
        "backward: root was not produced through ops recorded on this tape");
  }

  // Node-indexed scratch; leaves and retained intermediates accumulate
  // straight into their .grad buffers.
  std::vector<std::vector<double>> scratch(nodes_.size());
  scratch[size_t(root_data->producer)] = {1.0};

  auto leaf_grad = [](const Tensor& t) -> std::span<double> {
    TensorData* data = t.data_ptr();
    if (data->grad.empty()) data->grad.assign(data->values.size(), 0.0);
    return data->grad;
  };

  std::vector<std::span<double>> in_grads;
  for (int ni = int(nodes_.size()) - 1; ni >= 0; --ni) {
    if (scratch[size_t(ni)].empty()) continue;  // did not influence the root
    TapeNode& node = nodes_[size_t(ni)];
    std::span<const double> out_grad(scratch[size_t(ni)]);

    in_grads.clear();
    for (const auto& input : node.inputs) {
      TensorData* data = input.data_ptr();
      if (!data->tracked) {
        in_grads.emplace_back();
      } else if (data->producer_tape == this &&
                 data->producer_generation == generation_ &&
                 data->producer >= 0) {
        auto& buf = scratch[size_t(data->producer)];
        if (buf.empty()) buf.assign(data->values.size(), 0.0);
        in_grads.emplace_back(buf);
      } else if (data->requires_grad || data->retain_grad) {
        in_grads.emplace_back(leaf_grad(input));
      } else {
        in_grads.emplace_back();
      }
    }
    node.backward(out_grad, in_grads);
  }

  // Retained intermediates keep their gradient like leaves do.
  for (size_t ni = 0; ni < nodes_.size(); ++ni) {
    if (scratch[ni].empty()) continue;
    TensorData* data = nodes_[ni].output.data_ptr();
    if (!data->requires_grad && !data->retain_grad) continue;
    if (data->grad.empty()) data->grad.assign(data->values.size(), 0.0);
    for (size_t i = 0; i < scratch[ni].size(); ++i)
      data->grad[i] += scratch[ni][i];
  }
}

void backward(const Tensor& root) {
  Tape* tape = Tape::current();
  if (!tape) throw UsageError("backward: no active tape");
  tape->backward(root);
}

// -- op plumbing ----------------------------------------------------------

namespace {

Tensor make_output(int rows, int cols) { return Tensor::zeros(rows, cols); }

void record_op(std::vector<Tensor> inputs, Tensor& out,
               std::function<void(std::span<const double>,
                                  std::vector<std::span<double>>&)>
                   backward_fn) {
  Tape* tape = Tape::current();
  if (!tape || !any_tracked(inputs)) return;
  TensorData* data = out.data_ptr();
  data->tracked = true;
  data->producer = int(tape->size());
  data->producer_tape = tape;
  data->producer_generation = tape->generation();
  TapeNode node;
  node.inputs = std::move(inputs);
  node.output = out;
  node.backward = std::move(backward_fn);
  tape->record(std::move(node));
}

}  // namespace

// -- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(a) +
                         " vs " + shape_str(b));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output(m, n);
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[size_t(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[size_t(p) * n];
      double* orow = &ov[size_t(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  record_op({a, b}, out,
            [a, b, m, k, n](std::span<const double> og,
                            std::vector<std::span<double>>& ig) {
              const auto& av = a.values();
              const auto& bv = b.values();
              if (!ig[0].empty()) {
                // dA = dC * B^T
                for (int i = 0; i < m; ++i)
                  for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    const double* orow = &og[size_t(i) * n];
                    const double* brow = &bv[size_t(p) * n];
                    for (int j = 0; j < n; ++j) acc += orow[j] * brow[j];
                    ig[0][size_t(i) * k + p] += acc;
                  }
              }
              if (!ig[1].empty()) {
                // dB = A^T * dC
                for (int p = 0; p < k; ++p)
                  for (int i = 0; i < m; ++i) {
                    const double aip = av[size_t(i) * k + p];
                    if (aip == 0.0) continue;
                    const double* orow = &og[size_t(i) * n];
                    double* grow = &ig[1][size_t(p) * n];
                    for (int j = 0; j < n; ++j) grow[j] += aip * orow[j];
                  }
              }
            });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: shape mismatch: " + shape_str(a) + " vs " +
                         shape_str(b));
  }
  Tensor out = make_output(a.rows(), a.cols());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  record_op({a, b}, out,
            [](std::span<const double> og, std::vector<std::span<double>>& ig) {
              for (int which = 0; which < 2; ++which) {
                if (ig[which].empty()) continue;
                for (size_t i = 0; i < og.size(); ++i) ig[which][i] += og[i];
              }
            });
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.cols()) {
    throw DimensionError("add_rowvec: " + shape_str(m) + " + " + shape_str(v));
  }
  const int rows = m.rows(), cols = m.cols();
  Tensor out = make_output(rows, cols);
  const auto& mv = m.values();
  const auto& vv = v.values();
  auto& ov = out.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[size_t(i) * cols + j] = mv[size_t(i) * cols + j] + vv[j];
  record_op({m, v}, out,
            [rows, cols](std::span<const double> og,
                         std::vector<std::span<double>>& ig) {
              if (!ig[0].empty())
                for (size_t i = 0; i < og.size(); ++i) ig[0][i] += og[i];
              if (!ig[1].empty())
                for (int i = 0; i < rows; ++i)
                  for (int j = 0; j < cols; ++j)
                    ig[1][j] += og[size_t(i) * cols + j];
            });
  return out;
}

Tensor add_colvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.rows()) {
    throw DimensionError("add_colvec: " + shape_str(m) + " + " + shape_str(v));
  }
  const int rows = m.rows(), cols = m.cols();
  Tensor out = make_output(rows, cols);
  const auto& mv = m.values();
  const auto& vv = v.values();
  auto& ov = out.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[size_t(i) * cols + j] = mv[size_t(i) * cols + j] + vv[i];
  record_op({m, v}, out,
            [rows, cols](std::span<const double> og,
                         std::vector<std::span<double>>& ig) {
              if (!ig[0].empty())
                for (size_t i = 0; i < og.size(); ++i) ig[0][i] += og[i];
              if (!ig[1].empty())
                for (int i = 0; i < rows; ++i)
                  for (int j = 0; j < cols; ++j)
                    ig[1][i] += og[size_t(i) * cols + j];
            });
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("hadamard: shape mismatch: " + shape_str(a) + " vs " +
                         shape_str(b));
  }
  Tensor out = make_output(a.rows(), a.cols());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  record_op({a, b}, out,
            [a, b](std::span<const double> og,
                   std::vector<std::span<double>>& ig) {
              const auto& av = a.values();
              const auto& bv = b.values();
              if (!ig[0].empty())
                for (size_t i = 0; i < og.size(); ++i) ig[0][i] += og[i] * bv[i];
              if (!ig[1].empty())
                for (size_t i = 0; i < og.size(); ++i) ig[1][i] += og[i] * av[i];
            });
  return out;
}

Tensor scale(const Tensor& x, double c) {
  Tensor out = make_output(x.rows(), x.cols());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = c * xv[i];
  record_op({x}, out,
            [c](std::span<const double> og, std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (size_t i = 0; i < og.size(); ++i) ig[0][i] += c * og[i];
            });
  return out;
}

namespace {

// F and D are stateless functors; no per-element indirection survives -O2.
template <typename F, typename D>
Tensor unary_op(const Tensor& x, F f, D dfdx) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = f(xv[i]);
  Tensor out_copy = out;
  record_op({x}, out,
            [x, out_copy, dfdx](std::span<const double> og,
                                std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              const auto& xv = x.values();
              const auto& yv = out_copy.values();
              for (size_t i = 0; i < og.size(); ++i)
                ig[0][i] += og[i] * dfdx(yv[i], xv[i]);
            });
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); },
      [](double y, double) { return 1.0 - y * y; });
}

Tensor exp_t(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); },
      [](double y, double) { return y; });
}

Tensor log_t(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) {
      throw DomainError("log: non-positive entry " + std::to_string(v));
    }
  }
  return unary_op(
      x, [](double v) { return std::log(v); },
      [](double, double xi) { return 1.0 / xi; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double, double xi) { return xi > 0.0 ? 1.0 : 0.0; });
}

Tensor concat(const std::vector<Tensor>& parts, Axis axis) {
  if (parts.empty()) throw DimensionError("concat: no parts");
  int rows = parts[0].rows(), cols = parts[0].cols();
  if (axis == Axis::Rows) {
    rows = 0;
    for (const auto& p : parts) {
      if (p.cols() != cols)
        throw DimensionError("concat rows: column mismatch");
      rows += p.rows();
    }
  } else {
    cols = 0;
    for (const auto& p : parts) {
      if (p.rows() != rows) throw DimensionError("concat cols: row mismatch");
      cols += p.cols();
    }
  }
  Tensor out = make_output(rows, cols);
  auto& ov = out.values();
  if (axis == Axis::Rows) {
    size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.values().begin(), p.values().end(), ov.begin() + offset);
      offset += p.values().size();
    }
  } else {
    int c0 = 0;
    for (const auto& p : parts) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < p.cols(); ++j)
          ov[size_t(i) * cols + c0 + j] = p.at(i, j);
      c0 += p.cols();
    }
  }
  std::vector<Tensor> inputs = parts;
  record_op(inputs, out,
            [parts, axis, rows, cols](std::span<const double> og,
                                      std::vector<std::span<double>>& ig) {
              if (axis == Axis::Rows) {
                size_t offset = 0;
                for (size_t pi = 0; pi < parts.size(); ++pi) {
                  size_t len = parts[pi].values().size();
                  if (!ig[pi].empty())
                    for (size_t i = 0; i < len; ++i)
                      ig[pi][i] += og[offset + i];
                  offset += len;
                }
              } else {
                int c0 = 0;
                for (size_t pi = 0; pi < parts.size(); ++pi) {
                  int pc = parts[pi].cols();
                  if (!ig[pi].empty())
                    for (int i = 0; i < rows; ++i)
                      for (int j = 0; j < pc; ++j)
                        ig[pi][size_t(i) * pc + j] +=
                            og[size_t(i) * cols + c0 + j];
                  c0 += pc;
                }
              }
            });
  return out;
}

Tensor slice(const Tensor& x, int r0, int r1, int c0, int c1) {
  if (r0 < 0 || r1 > x.rows() || c0 < 0 || c1 > x.cols() || r0 >= r1 ||
      c0 >= c1) {
    throw DimensionError("slice: bad range on " + shape_str(x));
  }
  const int rows = r1 - r0, cols = c1 - c0, xc = x.cols();
  Tensor out = make_output(rows, cols);
  auto& ov = out.values();
  const auto& xv = x.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[size_t(i) * cols + j] = xv[size_t(i + r0) * xc + (j + c0)];
  record_op({x}, out,
            [r0, c0, rows, cols, xc](std::span<const double> og,
                                     std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                  ig[0][size_t(i + r0) * xc + (j + c0)] +=
                      og[size_t(i) * cols + j];
            });
  return out;
}

Tensor reshape(const Tensor& x, int rows, int cols) {
  if (rows * cols != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x) + " to " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor out = Tensor::from_values(rows, cols, x.values());
  record_op({x}, out,
            [](std::span<const double> og, std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (size_t i = 0; i < og.size(); ++i) ig[0][i] += og[i];
            });
  return out;
}

Tensor transpose(const Tensor& x) {
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output(cols, rows);
  auto& ov = out.values();
  const auto& xv = x.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[size_t(j) * rows + i] = xv[size_t(i) * cols + j];
  record_op({x}, out,
            [rows, cols](std::span<const double> og,
                         std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                  ig[0][size_t(i) * cols + j] += og[size_t(j) * rows + i];
            });
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out = Tensor::scalar(acc);
  record_op({x}, out,
            [](std::span<const double> og, std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (size_t i = 0; i < ig[0].size(); ++i) ig[0][i] += og[0];
            });
  return out;
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("logsumexp: empty input");
  double m = xs[0];
  for (double v : xs) m = std::max(m, v);
  if (!std::isfinite(m)) {
    // all -inf stays -inf; +inf propagates
    return m;
  }
  double acc = 0.0;
  for (double v : xs) acc += std::exp(v - m);
  return m + std::log(acc);
}

Tensor logsumexp(const Tensor& x, Axis axis) {
  const int rows = x.rows(), cols = x.cols();
  if (x.numel() == 0) throw DomainError("logsumexp: empty tensor");
  Tensor out = (axis == Axis::Rows) ? make_output(1, cols) : make_output(rows, 1);
  auto& ov = out.values();
  const auto& xv = x.values();
  if (axis == Axis::Rows) {
    for (int j = 0; j < cols; ++j) {
      double m = xv[j];
      for (int i = 1; i < rows; ++i)
        m = std::max(m, xv[size_t(i) * cols + j]);
      double acc = 0.0;
      for (int i = 0; i < rows; ++i) acc += std::exp(xv[size_t(i) * cols + j] - m);
      ov[j] = m + std::log(acc);
    }
  } else {
    for (int i = 0; i < rows; ++i) {
      const double* xrow = &xv[size_t(i) * cols];
      ov[i] = logsumexp(std::span<const double>(xrow, size_t(cols)));
    }
  }
  Tensor out_copy = out;
  record_op({x}, out,
            [x, out_copy, axis, rows, cols](std::span<const double> og,
                                            std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              const auto& xv = x.values();
              const auto& yv = out_copy.values();
              // d/dx_i = softmax weight exp(x_i - lse)
              if (axis == Axis::Rows) {
                for (int j = 0; j < cols; ++j)
                  for (int i = 0; i < rows; ++i)
                    ig[0][size_t(i) * cols + j] +=
                        og[j] * std::exp(xv[size_t(i) * cols + j] - yv[j]);
              } else {
                for (int i = 0; i < rows; ++i)
                  for (int j = 0; j < cols; ++j)
                    ig[0][size_t(i) * cols + j] +=
                        og[i] * std::exp(xv[size_t(i) * cols + j] - yv[i]);
              }
            });
  return out;
}

Tensor gather_rows(const Tensor& m, const std::vector<int>& row_ids) {
  const int cols = m.cols();
  for (int r : row_ids) {
    if (r < 0 || r >= m.rows())
      throw UsageError("gather_rows: row " + std::to_string(r) +
                       " out of range for " + shape_str(m));
  }
  Tensor out = make_output(int(row_ids.size()), cols);
  auto& ov = out.values();
  const auto& mv = m.values();
  for (size_t i = 0; i < row_ids.size(); ++i)
    std::copy(&mv[size_t(row_ids[i]) * cols], &mv[size_t(row_ids[i]) * cols] + cols,
              &ov[i * cols]);
  record_op({m}, out,
            [row_ids, cols](std::span<const double> og,
                            std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (size_t i = 0; i < row_ids.size(); ++i)
                for (int j = 0; j < cols; ++j)
                  ig[0][size_t(row_ids[i]) * cols + j] += og[i * cols + j];
            });
  return out;
}

Tensor pick_entries(const Tensor& m,
                    const std::vector<std::pair<int, int>>& entries) {
  const int cols = m.cols();
  for (auto [r, c] : entries) {
    if (r < 0 || r >= m.rows() || c < 0 || c >= cols)
      throw UsageError("pick_entries: (" + std::to_string(r) + "," +
                       std::to_string(c) + ") out of range for " + shape_str(m));
  }
  Tensor out = make_output(1, int(entries.size()));
  auto& ov = out.values();
  const auto& mv = m.values();
  for (size_t i = 0; i < entries.size(); ++i)
    ov[i] = mv[size_t(entries[i].first) * cols + entries[i].second];
  record_op({m}, out,
            [entries, cols](std::span<const double> og,
                            std::vector<std::span<double>>& ig) {
              if (ig[0].empty()) return;
              for (size_t i = 0; i < entries.size(); ++i)
                ig[0][size_t(entries[i].first) * cols + entries[i].second] +=
                    og[i];
            });
  return out;
}

// -- ParamRegistry ---------------------------------------------------------

Tensor ParamRegistry::create(const std::string& name, int rows, int cols) {
  Tensor t = Tensor::zeros(rows, cols);
  t.set_requires_grad(true);
  add(name, t);
  return t;
}

void ParamRegistry::add(const std::string& name, Tensor t) {
  if (find(name)) throw UsageError("parameter name not unique: " + name);
  t.set_requires_grad(true);
  params_.push_back(Parameter{name, std::move(t)});
}

Parameter* ParamRegistry::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParamRegistry::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

size_t ParamRegistry::parameter_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p.tensor.values().size();
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

// -- grad_check --------------------------------------------------------------

GradCheckReport grad_check(ParamRegistry& params,
                           const std::function<Tensor()>& build, double step,
                           double tol) {
  auto eval_value = [&]() {
    Tensor t = build();
    if (!t.is_scalar()) throw UsageError("grad_check: closure must be scalar");
    return t.value();
  };
  const double v1 = eval_value();
  const double v2 = eval_value();
  if (v1 != v2) {
    throw UsageError(
        "grad_check: closure is non-deterministic (double evaluation "
        "mismatch)");
  }

  // Analytic pass.
  params.zero_grad();
  {
    Tape tape;
    Tensor loss = build();
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.all().size());
  for (auto& p : params.all()) analytic.push_back(p.tensor.grad());
  params.zero_grad();

  GradCheckReport report;
  report.max_rel_error = 0.0;
  for (size_t pi = 0; pi < params.all().size(); ++pi) {
    auto& p = params.all()[pi];
    if (!p.tensor.requires_grad()) continue;  // frozen (e.g. fixed embeddings)
    GradCheckEntry entry{p.name, 0.0};
    auto& vals = p.tensor.values();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + step;
      const double up = eval_value();
      vals[i] = saved - step;
      const double down = eval_value();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double m = std::max(std::abs(a), std::abs(numeric));
      // Components below the cancellation noise floor carry no signal.
      const double rel = (m < 1e-6) ? 0.0 : std::abs(a - numeric) / m;
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace modcrf
