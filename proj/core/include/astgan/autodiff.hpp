#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major arrays.
//
// A BasicValue is a shared handle to a graph node. Operations build new nodes
// that remember their inputs and a backward rule; backward() walks the graph in
// reverse topological order and accumulates gradients into every reachable node
// that requires them. The engine is templated on the scalar type so the same
// model code can run in float (training) and double (gradient oracles).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace astgan {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {
inline thread_local bool grad_mode = true;

[[noreturn]] inline void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}
[[noreturn]] inline void bad_shape(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": " + why + " (got " + shape_str(a) + ")");
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode; }

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode) { detail::grad_mode = false; }
  ~NoGradGuard() { detail::grad_mode = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;
};

template <class T>
class BasicValue {
 public:
  using scalar_type = T;

  BasicValue() = default;
  explicit BasicValue(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static BasicValue leaf(Shape shape, std::vector<T> data, bool requires_grad) {
    if (numel(shape) != data.size()) {
      throw ShapeError("leaf: " + std::to_string(data.size()) + " values for shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->grad.assign(data.size(), T{0});
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return BasicValue(std::move(node));
  }
  static BasicValue constant(Shape shape, std::vector<T> data) {
    return leaf(std::move(shape), std::move(data), false);
  }
  static BasicValue zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(numel(shape), T{0});
    return leaf(std::move(shape), std::move(data), requires_grad);
  }
  static BasicValue scalar(T v) { return constant({}, {v}); }
  static BasicValue vector(std::vector<T> v) {
    Shape s{v.size()};
    return constant(std::move(s), std::move(v));
  }

  bool defined() const { return static_cast<bool>(node_); }
  explicit operator bool() const { return defined(); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }

  T item() const {
    if (size() != 1) detail::bad_shape("item", shape(), "expected a single element");
    return node_->data[0];
  }
  T operator[](std::size_t i) const { return node_->data.at(i); }

  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T{0}); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& handle() const { return node_; }

  // Fresh leaf holding a copy of this value's data.
  BasicValue detach() const { return constant(shape(), node_->data); }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Value = BasicValue<float>;
using Value64 = BasicValue<double>;

namespace detail {

// Creates an op result. The backward rule is only kept when recording is on and
// some input needs a gradient.
template <class T>
BasicValue<T> make_result(const char* op, Shape shape, std::vector<T> data,
                          std::initializer_list<BasicValue<T>> inputs,
                          std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->op = op;
  node->grad.assign(data.size(), T{0});
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs = false;
  if (grad_mode) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->inputs.push_back(in.handle());
    node->backward_fn = std::move(backward);
  }
  return BasicValue<T>(std::move(node));
}

template <class T>
BasicValue<T> make_result_n(const char* op, Shape shape, std::vector<T> data,
                            const std::vector<BasicValue<T>>& inputs,
                            std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->op = op;
  node->grad.assign(data.size(), T{0});
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs = false;
  if (grad_mode) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->inputs.push_back(in.handle());
    node->backward_fn = std::move(backward);
  }
  return BasicValue<T>(std::move(node));
}

template <class T>
Node<T>& in(Node<T>& self, std::size_t i) {
  return *self.inputs[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

namespace detail {

// Inner product with eight independent partial sums so the loop vectorizes
// without reassociating floating-point math globally.
template <class T>
T dot_kernel(const T* a, const T* b, std::size_t k) {
  T acc[8] = {};
  std::size_t p = 0;
  for (; p + 8 <= k; p += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[p + l] * b[p + l];
  }
  T tail{0};
  for (; p < k; ++p) tail += a[p] * b[p];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

}  // namespace detail

// Supports (m,k)x(k,n), (m,k)x(k), (k)x(k,n) and (k)x(k).
template <class T>
BasicValue<T> matmul(const BasicValue<T>& a, const BasicValue<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.empty() || sb.empty() || sa.size() > 2 || sb.size() > 2) {
    detail::shape_mismatch("matmul", sa, sb);
  }
  const std::size_t m = sa.size() == 2 ? sa[0] : 1;
  const std::size_t k = sa.back();
  const std::size_t kb = sb[0];
  const std::size_t n = sb.size() == 2 ? sb[1] : 1;
  if (k != kb) detail::shape_mismatch("matmul", sa, sb);

  Shape out_shape;
  if (sa.size() == 2) out_shape.push_back(m);
  if (sb.size() == 2) out_shape.push_back(n);

  std::vector<T> out(m * n, T{0});
  const T* A = a.data().data();
  const T* B = b.data().data();
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) out[i] = detail::dot_kernel(A + i * k, B, k);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* orow = out.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = A[i * k + p];
        const T* brow = B + p * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }

  return detail::make_result<T>("matmul", std::move(out_shape), std::move(out), {a, b},
                                [m, k, n](Node<T>& self) {
                                  auto& na = detail::in(self, 0);
                                  auto& nb = detail::in(self, 1);
                                  const T* g = self.grad.data();
                                  if (na.requires_grad && n == 1) {
                                    T* ga = na.grad.data();
                                    const T* Bd = nb.data.data();
                                    for (std::size_t i = 0; i < m; ++i) {
                                      const T gi = g[i];
                                      T* garow = ga + i * k;
                                      for (std::size_t p = 0; p < k; ++p) garow[p] += gi * Bd[p];
                                    }
                                  } else if (na.requires_grad) {
                                    T* ga = na.grad.data();
                                    const T* Bd = nb.data.data();
                                    for (std::size_t i = 0; i < m; ++i) {
                                      for (std::size_t p = 0; p < k; ++p) {
                                        const T* brow = Bd + p * n;
                                        const T* grow = g + i * n;
                                        T acc{0};
                                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                                        ga[i * k + p] += acc;
                                      }
                                    }
                                  }
                                  if (nb.requires_grad) {
                                    T* gb = nb.grad.data();
                                    const T* Ad = na.data.data();
                                    for (std::size_t i = 0; i < m; ++i) {
                                      const T* grow = g + i * n;
                                      for (std::size_t p = 0; p < k; ++p) {
                                        const T av = Ad[i * k + p];
                                        T* gbrow = gb + p * n;
                                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                                      }
                                    }
                                  }
                                });
}

// ---------------------------------------------------------------------------
// Elementwise binary ops. Shapes must match, except that a single-element
// operand broadcasts against the other.

namespace detail {

template <class T, class Fwd, class DA, class DB>
BasicValue<T> binary(const char* op, const BasicValue<T>& a, const BasicValue<T>& b, Fwd fwd, DA da,
                     DB db) {
  const bool a_bcast = a.size() == 1 && b.size() != 1;
  const bool b_bcast = b.size() == 1 && a.size() != 1;
  if (!a_bcast && !b_bcast && a.shape() != b.shape()) {
    if (!(a.size() == 1 && b.size() == 1)) shape_mismatch(op, a.shape(), b.shape());
  }
  // Two single-element operands keep the higher-rank shape.
  const bool take_b = a_bcast || (a.size() == 1 && b.size() == 1 && b.rank() > a.rank());
  const Shape out_shape = take_b ? b.shape() : a.shape();
  const std::size_t n = numel(out_shape);
  std::vector<T> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(ad[a_bcast ? 0 : i], bd[b_bcast ? 0 : i]);
  }
  return make_result<T>(op, out_shape, std::move(out), {a, b},
                        [n, a_bcast, b_bcast, da, db](Node<T>& self) {
                          auto& na = in(self, 0);
                          auto& nb = in(self, 1);
                          for (std::size_t i = 0; i < n; ++i) {
                            const std::size_t ia = a_bcast ? 0 : i;
                            const std::size_t ib = b_bcast ? 0 : i;
                            const T g = self.grad[i];
                            if (na.requires_grad) na.grad[ia] += da(na.data[ia], nb.data[ib], g);
                            if (nb.requires_grad) nb.grad[ib] += db(na.data[ia], nb.data[ib], g);
                          }
                        });
}

template <class T, class Fwd, class Bwd>
BasicValue<T> unary(const char* op, const BasicValue<T>& a, Fwd fwd, Bwd bwd) {
  const std::size_t n = a.size();
  std::vector<T> out(n);
  const auto ad = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ad[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a}, [n, bwd](Node<T>& self) {
    auto& na = in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) {
      na.grad[i] += bwd(na.data[i], self.data[i], self.grad[i]);
    }
  });
}

}  // namespace detail

template <class T>
BasicValue<T> add(const BasicValue<T>& a, const BasicValue<T>& b) {
  return detail::binary<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T, T g) { return g; },
      [](T, T, T g) { return g; });
}

template <class T>
BasicValue<T> sub(const BasicValue<T>& a, const BasicValue<T>& b) {
  return detail::binary<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T, T g) { return g; },
      [](T, T, T g) { return -g; });
}

template <class T>
BasicValue<T> mul(const BasicValue<T>& a, const BasicValue<T>& b) {
  return detail::binary<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y, T g) { return g * y; },
      [](T x, T, T g) { return g * x; });
}

template <class T>
BasicValue<T> scale(const BasicValue<T>& a, T c) {
  return detail::unary<T>(
      "scale", a, [c](T x) { return c * x; }, [c](T, T, T g) { return c * g; });
}

template <class T>
BasicValue<T> neg(const BasicValue<T>& a) {
  return scale(a, T{-1});
}

// ---------------------------------------------------------------------------
// Elementwise unary ops

template <class T>
BasicValue<T> sigmoid(const BasicValue<T>& a) {
  return detail::unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y, T g) { return g * y * (T{1} - y); });
}

template <class T>
BasicValue<T> tanh(const BasicValue<T>& a) {
  return detail::unary<T>(
      "tanh", a, [](T x) { return std::tanh(x); }, [](T, T y, T g) { return g * (T{1} - y * y); });
}

template <class T>
BasicValue<T> relu(const BasicValue<T>& a) {
  return detail::unary<T>(
      "relu", a, [](T x) { return x > T{0} ? x : T{0}; },
      [](T x, T, T g) { return x > T{0} ? g : T{0}; });
}

template <class T>
BasicValue<T> exp(const BasicValue<T>& a) {
  return detail::unary<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y, T g) { return g * y; });
}

template <class T>
BasicValue<T> log(const BasicValue<T>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.data()[i] > T{0})) {
      std::ostringstream os;
      os << "log: non-positive entry " << a.data()[i] << " at index " << i << " of " << shape_str(a.shape());
      throw DomainError(os.str());
    }
  }
  return detail::unary<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T, T g) { return g / x; });
}

// ---------------------------------------------------------------------------
// Reductions and normalizers

template <class T>
BasicValue<T> sum(const BasicValue<T>& a) {
  T acc{0};
  for (T v : a.data()) acc += v;
  const std::size_t n = a.size();
  return detail::make_result<T>("sum", {}, {acc}, {a}, [n](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) na.grad[i] += self.grad[0];
  });
}

template <class T>
BasicValue<T> mean(const BasicValue<T>& a) {
  if (a.size() == 0) detail::bad_shape("mean", a.shape(), "empty input");
  T acc{0};
  for (T v : a.data()) acc += v;
  const std::size_t n = a.size();
  const T inv = T{1} / static_cast<T>(n);
  return detail::make_result<T>("mean", {}, {acc * inv}, {a}, [n, inv](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) na.grad[i] += self.grad[0] * inv;
  });
}

namespace detail {
template <class T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool log_space) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y + r * cols;
    T mx = xr[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    T z{0};
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(xr[j] - mx);
    if (log_space) {
      const T lz = std::log(z) + mx;
      for (std::size_t j = 0; j < cols; ++j) yr[j] = xr[j] - lz;
    } else {
      for (std::size_t j = 0; j < cols; ++j) yr[j] = std::exp(xr[j] - mx) / z;
    }
  }
}
}  // namespace detail

// Softmax over the last axis of a 1-D or 2-D value.
template <class T>
BasicValue<T> softmax(const BasicValue<T>& a) {
  if (a.rank() == 0 || a.rank() > 2 || a.size() == 0) detail::bad_shape("softmax", a.shape(), "expected 1-D or 2-D");
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  std::vector<T> out(a.size());
  detail::softmax_rows(a.data().data(), out.data(), rows, cols, false);
  return detail::make_result<T>("softmax", a.shape(), std::move(out), {a}, [rows, cols](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.data.data() + r * cols;
      const T* g = self.grad.data() + r * cols;
      T dot{0};
      for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
      T* gx = na.grad.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += y[j] * (g[j] - dot);
    }
  });
}

template <class T>
BasicValue<T> log_softmax(const BasicValue<T>& a) {
  if (a.rank() == 0 || a.rank() > 2 || a.size() == 0) {
    detail::bad_shape("log_softmax", a.shape(), "expected 1-D or 2-D");
  }
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  std::vector<T> out(a.size());
  detail::softmax_rows(a.data().data(), out.data(), rows, cols, true);
  return detail::make_result<T>("log_softmax", a.shape(), std::move(out), {a}, [rows, cols](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* ly = self.data.data() + r * cols;
      const T* g = self.grad.data() + r * cols;
      T gsum{0};
      for (std::size_t j = 0; j < cols; ++j) gsum += g[j];
      T* gx = na.grad.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += g[j] - std::exp(ly[j]) * gsum;
    }
  });
}

// ---------------------------------------------------------------------------
// Structural ops

// Concatenates along `axis`. Scalars and 1-D values join into a 1-D value;
// 2-D values join along rows (axis 0) or columns (axis 1).
template <class T>
BasicValue<T> concat(const std::vector<BasicValue<T>>& parts, std::size_t axis = 0) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const bool flat = parts[0].rank() <= 1;
  if (flat) {
    if (axis != 0) detail::bad_shape("concat", parts[0].shape(), "axis 1 requires 2-D inputs");
    std::vector<T> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      if (p.rank() > 1) detail::shape_mismatch("concat", parts[0].shape(), p.shape());
      offsets.push_back(out.size());
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
    Shape s{out.size()};
    return detail::make_result_n<T>("concat", std::move(s), std::move(out), parts,
                                    [offsets](Node<T>& self) {
                                      for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                                        auto& nk = *self.inputs[k];
                                        if (!nk.requires_grad) continue;
                                        for (std::size_t i = 0; i < nk.grad.size(); ++i) {
                                          nk.grad[i] += self.grad[offsets[k] + i];
                                        }
                                      }
                                    });
  }
  if (axis > 1) detail::bad_shape("concat", parts[0].shape(), "axis out of range");
  const std::size_t other = axis == 0 ? 1 : 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(other) != parts[0].dim(other)) {
      detail::shape_mismatch("concat", parts[0].shape(), p.shape());
    }
    total += p.dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : parts[0].dim(0);
  const std::size_t cols = axis == 1 ? total : parts[0].dim(1);
  std::vector<T> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t pr = p.dim(0), pc = p.dim(1);
    for (std::size_t r = 0; r < pr; ++r) {
      for (std::size_t c = 0; c < pc; ++c) {
        const std::size_t orow = axis == 0 ? off + r : r;
        const std::size_t ocol = axis == 1 ? off + c : c;
        out[orow * cols + ocol] = p.data()[r * pc + c];
      }
    }
    off += p.dim(axis);
  }
  return detail::make_result_n<T>(
      "concat", Shape{rows, cols}, std::move(out), parts, [offsets, axis, cols](Node<T>& self) {
        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
          auto& nk = *self.inputs[k];
          if (!nk.requires_grad) continue;
          const std::size_t pr = nk.shape[0], pc = nk.shape[1];
          for (std::size_t r = 0; r < pr; ++r) {
            for (std::size_t c = 0; c < pc; ++c) {
              const std::size_t orow = axis == 0 ? offsets[k] + r : r;
              const std::size_t ocol = axis == 1 ? offsets[k] + c : c;
              nk.grad[r * pc + c] += self.grad[orow * cols + ocol];
            }
          }
        }
      });
}

// Stacks equal-length 1-D values into the rows of a 2-D value.
template <class T>
BasicValue<T> stack(const std::vector<BasicValue<T>>& rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  const std::size_t d = rows[0].size();
  std::vector<T> out;
  out.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != d) detail::shape_mismatch("stack", rows[0].shape(), r.shape());
    out.insert(out.end(), r.data().begin(), r.data().end());
  }
  return detail::make_result_n<T>("stack", Shape{rows.size(), d}, std::move(out), rows,
                                  [d](Node<T>& self) {
                                    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                                      auto& nk = *self.inputs[k];
                                      if (!nk.requires_grad) continue;
                                      for (std::size_t i = 0; i < d; ++i) nk.grad[i] += self.grad[k * d + i];
                                    }
                                  });
}

template <class T>
BasicValue<T> reshape(const BasicValue<T>& a, Shape shape) {
  if (numel(shape) != a.size()) detail::shape_mismatch("reshape", a.shape(), shape);
  std::vector<T> out(a.data().begin(), a.data().end());
  const std::size_t n = a.size();
  return detail::make_result<T>("reshape", std::move(shape), std::move(out), {a}, [n](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) na.grad[i] += self.grad[i];
  });
}

// Half-open range [begin, end) along axis 0: elements of a 1-D value or rows of
// a 2-D value.
template <class T>
BasicValue<T> slice(const BasicValue<T>& a, std::size_t begin, std::size_t end) {
  if (a.rank() == 0 || a.rank() > 2) detail::bad_shape("slice", a.shape(), "expected 1-D or 2-D");
  if (begin > end || end > a.dim(0)) {
    detail::bad_shape("slice", a.shape(),
                      "range [" + std::to_string(begin) + "," + std::to_string(end) + ") out of bounds");
  }
  const std::size_t stride = a.rank() == 2 ? a.dim(1) : 1;
  Shape s = a.shape();
  s[0] = end - begin;
  std::vector<T> out(a.data().begin() + begin * stride, a.data().begin() + end * stride);
  const std::size_t off = begin * stride;
  const std::size_t n = out.size();
  return detail::make_result<T>("slice", std::move(s), std::move(out), {a}, [off, n](Node<T>& self) {
    auto& na = detail::in(self, 0);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) na.grad[off + i] += self.grad[i];
  });
}

// Selects entries of a 1-D value by index (repeats allowed).
template <class T>
BasicValue<T> gather(const BasicValue<T>& a, std::vector<std::size_t> indices) {
  if (a.rank() != 1) detail::bad_shape("gather", a.shape(), "expected 1-D");
  std::vector<T> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.size()) detail::bad_shape("gather", a.shape(), "index " + std::to_string(indices[i]));
    out[i] = a.data()[indices[i]];
  }
  Shape s{indices.size()};
  return detail::make_result<T>("gather", std::move(s), std::move(out), {a},
                                [idx = std::move(indices)](Node<T>& self) {
                                  auto& na = detail::in(self, 0);
                                  if (!na.requires_grad) return;
                                  for (std::size_t i = 0; i < idx.size(); ++i) na.grad[idx[i]] += self.grad[i];
                                });
}

// Rows of a (V x d) table: one id gives a 1-D value of length d, a list gives
// an (n x d) value.
template <class T>
BasicValue<T> embedding_lookup(const BasicValue<T>& table, std::vector<std::size_t> ids) {
  if (table.rank() != 2) detail::bad_shape("embedding_lookup", table.shape(), "expected a 2-D table");
  const std::size_t d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= table.dim(0)) {
      detail::bad_shape("embedding_lookup", table.shape(), "id " + std::to_string(ids[r]) + " out of range");
    }
    std::copy_n(table.data().begin() + ids[r] * d, d, out.begin() + r * d);
  }
  Shape s{ids.size(), d};
  return detail::make_result<T>("embedding_lookup", std::move(s), std::move(out), {table},
                                [d, idx = std::move(ids)](Node<T>& self) {
                                  auto& nt = detail::in(self, 0);
                                  if (!nt.requires_grad) return;
                                  for (std::size_t r = 0; r < idx.size(); ++r) {
                                    for (std::size_t j = 0; j < d; ++j) nt.grad[idx[r] * d + j] += self.grad[r * d + j];
                                  }
                                });
}

template <class T>
BasicValue<T> embedding_lookup(const BasicValue<T>& table, std::size_t id) {
  return reshape(embedding_lookup(table, std::vector<std::size_t>{id}), Shape{table.dim(1)});
}

template <class T>
BasicValue<T> dot(const BasicValue<T>& a, const BasicValue<T>& b) {
  return matmul(a, b);
}

// ---------------------------------------------------------------------------
// Backward pass

// Accumulates d(root)/d(node) into every reachable node that requires a
// gradient. Leaf gradients accumulate across calls; intermediate gradients are
// reset at the start of each call.
template <class T>
void backward(const BasicValue<T>& root) {
  if (root.size() != 1 || root.rank() > 1) {
    throw ShapeError("backward: root must be scalar, got " + shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) {
    if (n->backward_fn) std::fill(n->grad.begin(), n->grad.end(), T{0});
  }
  if (root.node()->backward_fn) {
    root.node()->grad[0] = T{1};
  } else {
    root.node()->grad[0] += T{1};
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace astgan
