#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sernet/error.hpp"
#include "sernet/gemm.hpp"
#include "sernet/rng.hpp"
#include "sernet/tensor.hpp"

namespace sernet::nn {

// Define-by-run reverse-mode tape. Each op pushes a node holding its output
// value plus a closure that scatters the node's gradient back to its parents;
// creation order is a topological order, so backward() is a single reverse
// sweep. Gradients accumulate with +=, which handles tensors consumed by
// several ops (the three parallel conv paths all read the same input node).
//
// Intermediate values and gradients are released as the backward sweep passes
// them, so peak memory stays near one forward's activations rather than
// activations plus a full mirror of gradients.
template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&)>;

  int leaf(Tensor<T> v, bool requires_grad = false) {
    return push_node(std::move(v), requires_grad, nullptr, requires_grad);
  }

  // Copies the parameter value in; after backward() the node's gradient is
  // accumulated into p.grad.
  int param(Parameter<T>& p) { return push_node(p.value, true, &p, false); }

  int push(Tensor<T> value, bool requires_grad) {
    return push_node(std::move(value), requires_grad, nullptr, false);
  }

  void set_backprop(int id, BackFn fn) { nodes_[static_cast<size_t>(id)].backprop = std::move(fn); }

  const Tensor<T>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }

  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Gradient buffer, allocated zero on first touch.
  Tensor<T>& grad(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
  }

  bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.data.empty(); }

  // Gradient of a retained leaf, valid after backward().
  const Tensor<T>& grad_of(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.data.empty()) throw Error(Error::Kind::argument, "no gradient recorded for node");
    return n.grad;
  }

  void backward(int loss_id) {
    if (value(loss_id).numel() != 1)
      throw Error(Error::Kind::argument, "backward requires a scalar loss");
    backward_seeded(loss_id, Tensor<T>({1}, {T(1)}));
  }

  // Seed an arbitrary output gradient; used by the receptive-field oracle.
  void backward_seeded(int id, Tensor<T> seed) {
    grad(id).data = std::move(seed.data);
    for (int i = id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.requires_grad && !n.grad.data.empty() && n.backprop) n.backprop(*this);
      if (n.param && !n.grad.data.empty())
        for (size_t k = 0; k < n.grad.data.size(); ++k) n.param->grad.data[k] += n.grad.data[k];
      if (!n.retain) {  // release working buffers behind the sweep
        n.value.data.clear();
        n.value.data.shrink_to_fit();
        n.grad.data.clear();
        n.grad.data.shrink_to_fit();
        n.backprop = nullptr;
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    BackFn backprop;
    bool requires_grad = false;
    bool retain = false;
  };

  int push_node(Tensor<T> value, bool requires_grad, Parameter<T>* p, bool retain) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.param = p;
    n.retain = retain;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

// ---------- pointwise ops ----------

template <typename T>
int relu(Tape<T>& tape, int x) {
  Tensor<T> y = tape.value(x);
  for (T& v : y.data)
    if (v < T(0)) v = T(0);
  bool rg = tape.requires_grad(x);
  int out = tape.push(std::move(y), rg);
  if (rg)
    tape.set_backprop(out, [x, out](Tape<T>& t) {
      const Tensor<T>& xv = t.value(x);
      const Tensor<T>& dy = t.grad(out);
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dy.data.size(); ++i)
        if (xv.data[i] > T(0)) dx.data[i] += dy.data[i];
    });
  return out;
}

template <typename T>
int sum(Tape<T>& tape, int x) {
  const Tensor<T>& xv = tape.value(x);
  T acc = T(0);
  for (T v : xv.data) acc += v;
  bool rg = tape.requires_grad(x);
  int out = tape.push(Tensor<T>({1}, {acc}), rg);
  if (rg)
    tape.set_backprop(out, [x, out](Tape<T>& t) {
      T g = t.grad(out).data[0];
      Tensor<T>& dx = t.grad(x);
      for (T& v : dx.data) v += g;
    });
  return out;
}

// scalar = sum(x .* coeff) for a fixed coefficient tensor; the projection
// used to reduce vector outputs to a scalar in gradient checks
template <typename T>
int dot(Tape<T>& tape, int x, Tensor<T> coeff) {
  const Tensor<T>& xv = tape.value(x);
  if (coeff.data.size() != xv.data.size())
    throw Error(Error::Kind::shape, "dot: coefficient size mismatch");
  T acc = T(0);
  for (size_t i = 0; i < xv.data.size(); ++i) acc += xv.data[i] * coeff.data[i];
  bool rg = tape.requires_grad(x);
  int out = tape.push(Tensor<T>({1}, {acc}), rg);
  if (rg) {
    auto c = std::make_shared<Tensor<T>>(std::move(coeff));
    tape.set_backprop(out, [x, out, c](Tape<T>& t) {
      T g = t.grad(out).data[0];
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g * c->data[i];
    });
  }
  return out;
}

// scalar = x.data[flat_index]
template <typename T>
int select(Tape<T>& tape, int x, int64_t flat_index) {
  const Tensor<T>& xv = tape.value(x);
  if (flat_index < 0 || flat_index >= xv.numel())
    throw Error(Error::Kind::argument, "select: index out of range");
  bool rg = tape.requires_grad(x);
  int out = tape.push(Tensor<T>({1}, {xv.data[static_cast<size_t>(flat_index)]}), rg);
  if (rg)
    tape.set_backprop(out, [x, out, flat_index](Tape<T>& t) {
      t.grad(x).data[static_cast<size_t>(flat_index)] += t.grad(out).data[0];
    });
  return out;
}

// ---------- dense / classifier ops ----------

// y[N,O] = x[N,F] * w[F,O] + b[O]
template <typename T>
int dense(Tape<T>& tape, int x, int w, int b) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(w);
  const Tensor<T>& bv = tape.value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0) || bv.numel() != wv.dim(1))
    throw Error(Error::Kind::shape, "dense: shape mismatch " + shape_str(xv.shape) + " x " +
                                        shape_str(wv.shape));
  const int n = xv.dim(0), f = xv.dim(1), o = wv.dim(1);
  Tensor<T> y({n, o});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < o; ++j) y.data[static_cast<size_t>(i) * o + j] = bv.data[static_cast<size_t>(j)];
  gemm_acc(n, o, f, xv.ptr(), f, wv.ptr(), o, y.ptr(), o);

  bool rg = tape.requires_grad(x) || tape.requires_grad(w) || tape.requires_grad(b);
  int out = tape.push(std::move(y), rg);
  if (rg)
    tape.set_backprop(out, [x, w, b, out, n, f, o](Tape<T>& t) {
      const Tensor<T>& dy = t.grad(out);
      if (t.requires_grad(x)) {
        std::vector<T> wt(static_cast<size_t>(f) * o);
        transpose(f, o, t.value(w).ptr(), wt.data());
        gemm_acc(n, f, o, dy.ptr(), o, wt.data(), f, t.grad(x).ptr(), f);
      }
      if (t.requires_grad(w))
        gemm_at_acc(n, o, f, t.value(x).ptr(), f, dy.ptr(), o, t.grad(w).ptr(), o);
      if (t.requires_grad(b)) {
        Tensor<T>& db = t.grad(b);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < o; ++j) db.data[static_cast<size_t>(j)] += dy.data[static_cast<size_t>(i) * o + j];
      }
    });
  return out;
}

// softmax along the last axis of [N,C], shifted by the row max
template <typename T>
int softmax(Tape<T>& tape, int x) {
  const Tensor<T>& xv = tape.value(x);
  if (xv.rank() != 2) throw Error(Error::Kind::shape, "softmax expects [N,C]");
  const int n = xv.dim(0), c = xv.dim(1);
  Tensor<T> y({n, c});
  for (int i = 0; i < n; ++i) {
    const T* row = xv.ptr() + static_cast<size_t>(i) * c;
    T* dst = y.ptr() + static_cast<size_t>(i) * c;
    T mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T z = T(0);
    for (int j = 0; j < c; ++j) {
      dst[j] = std::exp(row[j] - mx);
      z += dst[j];
    }
    for (int j = 0; j < c; ++j) dst[j] /= z;
  }
  bool rg = tape.requires_grad(x);
  int out = tape.push(std::move(y), rg);
  if (rg)
    tape.set_backprop(out, [x, out, n, c](Tape<T>& t) {
      const Tensor<T>& yv = t.value(out);
      const Tensor<T>& dy = t.grad(out);
      Tensor<T>& dx = t.grad(x);
      for (int i = 0; i < n; ++i) {
        const T* yr = yv.ptr() + static_cast<size_t>(i) * c;
        const T* gr = dy.ptr() + static_cast<size_t>(i) * c;
        T* dr = dx.ptr() + static_cast<size_t>(i) * c;
        T inner = T(0);
        for (int j = 0; j < c; ++j) inner += gr[j] * yr[j];
        for (int j = 0; j < c; ++j) dr[j] += yr[j] * (gr[j] - inner);
      }
    });
  return out;
}

// Inverted dropout: training scales kept activations by 1/(1-rate); at
// inference the op is an exact identity (the input node is returned).
template <typename T>
int dropout(Tape<T>& tape, int x, double rate, bool training, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error(Error::Kind::argument, "dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  if (rng == nullptr) throw Error(Error::Kind::argument, "dropout in training mode needs an rng");
  const Tensor<T>& xv = tape.value(x);
  const T scale = T(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<uint8_t>>(xv.data.size());
  Tensor<T> y = xv;
  for (size_t i = 0; i < y.data.size(); ++i) {
    bool keep = rng->uniform() >= rate;
    (*mask)[i] = keep;
    y.data[i] = keep ? y.data[i] * scale : T(0);
  }
  bool rg = tape.requires_grad(x);
  int out = tape.push(std::move(y), rg);
  if (rg)
    tape.set_backprop(out, [x, out, mask, scale](Tape<T>& t) {
      const Tensor<T>& dy = t.grad(out);
      Tensor<T>& dx = t.grad(x);
      for (size_t i = 0; i < dy.data.size(); ++i)
        if ((*mask)[i]) dx.data[i] += dy.data[i] * scale;
    });
  return out;
}

// Concatenate [N,H,W,Ci] tensors along the channel axis, in argument order.
template <typename T>
int concat_channels(Tape<T>& tape, const std::vector<int>& xs) {
  if (xs.empty()) throw Error(Error::Kind::argument, "concat of zero tensors");
  const Tensor<T>& first = tape.value(xs[0]);
  if (first.rank() != 4) throw Error(Error::Kind::shape, "concat expects [N,H,W,C]");
  const int n = first.dim(0), h = first.dim(1), w = first.dim(2);
  int c_total = 0;
  bool rg = false;
  for (int id : xs) {
    const Tensor<T>& v = tape.value(id);
    if (v.rank() != 4 || v.dim(0) != n || v.dim(1) != h || v.dim(2) != w)
      throw Error(Error::Kind::shape, "concat: incompatible shapes");
    c_total += v.dim(3);
    rg = rg || tape.requires_grad(id);
  }

  Tensor<T> y({n, h, w, c_total});
  const int64_t spatial = static_cast<int64_t>(n) * h * w;
  int offset = 0;
  for (int id : xs) {
    const Tensor<T>& v = tape.value(id);
    const int ci = v.dim(3);
    for (int64_t s = 0; s < spatial; ++s)
      std::copy_n(v.ptr() + s * ci, ci, y.ptr() + s * c_total + offset);
    offset += ci;
  }

  int out = tape.push(std::move(y), rg);
  if (rg) {
    auto ids = std::make_shared<std::vector<int>>(xs);
    tape.set_backprop(out, [ids, out, spatial, c_total](Tape<T>& t) {
      const Tensor<T>& dy = t.grad(out);
      int off = 0;
      for (int id : *ids) {
        const int ci = t.value(id).dim(3);
        if (t.requires_grad(id)) {
          Tensor<T>& dx = t.grad(id);
          for (int64_t s = 0; s < spatial; ++s) {
            const T* src = dy.ptr() + s * c_total + off;
            T* dst = dx.ptr() + s * ci;
            for (int j = 0; j < ci; ++j) dst[j] += src[j];
          }
        }
        off += ci;
      }
    });
  }
  return out;
}

}  // namespace sernet::nn
