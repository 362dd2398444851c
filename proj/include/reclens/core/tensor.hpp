// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 reclens authors
//
// Minimal reverse-mode autodiff over Mat. A Graph is a tape of op nodes in
// creation order (which is a topological order); backward() walks it in
// reverse. Leaves (parameters, constants) live outside the tape and may be
// reused across graphs; their gradients accumulate until zeroed.

#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "reclens/core/mat.hpp"

namespace reclens {

struct TensorNode {
  Mat value;
  Mat grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::function<void()> backprop;  // empty for leaves

  void ensure_grad() {
    if (requires_grad && !grad.same_shape(value)) grad = Mat::zeros(value.rows, value.cols);
  }
};

using NodePtr = std::shared_ptr<TensorNode>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor leaf(Mat v, bool requires_grad = false) {
    auto n = std::make_shared<TensorNode>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    n->ensure_grad();
    return Tensor(n);
  }

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  Mat& grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  int rows() const { return node_->value.rows; }
  int cols() const { return node_->value.cols; }
  const NodePtr& node() const { return node_; }

  void zero_grad() {
    if (node_->requires_grad) node_->grad.zero();
  }

 private:
  NodePtr node_;
};

class Graph {
 public:
  // ---- structural ops ----

  Tensor gather_rows(const Tensor& table, std::vector<int> ids, int frozen_row = -1) {
    const Mat& t = table.value();
    Mat out(static_cast<int>(ids.size()), t.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
      assert(ids[i] >= 0 && ids[i] < t.rows);
      std::copy(t.row(ids[i]), t.row(ids[i]) + t.cols, out.row(static_cast<int>(i)));
    }
    return make(std::move(out), {table}, [table, ids = std::move(ids), frozen_row](TensorNode& n) {
      if (!table.requires_grad()) return;
      Mat& tg = table.node()->grad;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == frozen_row) continue;
        axpy(1.0, n.grad.row(static_cast<int>(i)), tg.row(ids[i]), tg.cols);
      }
    });
  }

  Tensor concat_rows(const std::vector<Tensor>& parts) {
    assert(!parts.empty());
    int total = 0;
    const int c = parts[0].cols();
    for (const auto& p : parts) {
      assert(p.cols() == c);
      total += p.rows();
    }
    Mat out(total, c);
    int r = 0;
    for (const auto& p : parts) {
      std::copy(p.value().data.begin(), p.value().data.end(), out.row(r));
      r += p.rows();
    }
    return make(std::move(out), parts, [parts](TensorNode& n) {
      int r = 0;
      for (const auto& p : parts) {
        if (p.requires_grad()) {
          Mat& pg = p.node()->grad;
          for (int i = 0; i < p.rows(); ++i) axpy(1.0, n.grad.row(r + i), pg.row(i), pg.cols);
        }
        r += p.rows();
      }
    });
  }

  Tensor slice_rows(const Tensor& x, int start, int count) {
    Mat out = x.value().slice_rows(start, count);
    return make(std::move(out), {x}, [x, start, count](TensorNode& n) {
      if (!x.requires_grad()) return;
      Mat& xg = x.node()->grad;
      for (int i = 0; i < count; ++i) axpy(1.0, n.grad.row(i), xg.row(start + i), xg.cols);
    });
  }

  Tensor flatten_to_row(const Tensor& x) {
    Mat out(1, x.rows() * x.cols());
    out.data = x.value().data;
    return make(std::move(out), {x}, [x](TensorNode& n) {
      if (!x.requires_grad()) return;
      Mat& xg = x.node()->grad;
      for (size_t i = 0; i < xg.data.size(); ++i) xg.data[i] += n.grad.data[i];
    });
  }

  // ---- linear algebra ----

  Tensor matmul(const Tensor& a, const Tensor& b) {
    Mat out(a.rows(), b.cols());
    matmul_acc(a.value(), b.value(), out);
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
      if (a.requires_grad()) matmul_nt_acc(n.grad, b.value(), a.node()->grad);
      if (b.requires_grad()) matmul_tn_acc(a.value(), n.grad, b.node()->grad);
    });
  }

  // a * b^T
  Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    Mat out(a.rows(), b.rows());
    matmul_nt_acc(a.value(), b.value(), out);
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
      if (a.requires_grad()) matmul_acc(n.grad, b.value(), a.node()->grad);
      if (b.requires_grad()) matmul_tn_acc(n.grad, a.value(), b.node()->grad);
    });
  }

  Tensor add(const Tensor& a, const Tensor& b) {
    assert(a.rows() == b.rows() && a.cols() == b.cols());
    Mat out = a.value();
    out.add_inplace(b.value());
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
      if (a.requires_grad()) a.node()->grad.add_inplace(n.grad);
      if (b.requires_grad()) b.node()->grad.add_inplace(n.grad);
    });
  }

  // a (m x n) + bias (1 x n), broadcast over rows
  Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
    assert(bias.rows() == 1 && bias.cols() == a.cols());
    Mat out = a.value();
    for (int i = 0; i < out.rows; ++i) axpy(1.0, bias.value().row(0), out.row(i), out.cols);
    return make(std::move(out), {a, bias}, [a, bias](TensorNode& n) {
      if (a.requires_grad()) a.node()->grad.add_inplace(n.grad);
      if (bias.requires_grad()) {
        Mat& bg = bias.node()->grad;
        for (int i = 0; i < n.grad.rows; ++i) axpy(1.0, n.grad.row(i), bg.row(0), bg.cols);
      }
    });
  }

  // alpha * a + beta, elementwise
  Tensor affine(const Tensor& a, double alpha, double beta) {
    Mat out = a.value();
    for (double& v : out.data) v = alpha * v + beta;
    return make(std::move(out), {a}, [a, alpha](TensorNode& n) {
      if (a.requires_grad()) a.node()->grad.add_scaled_inplace(n.grad, alpha);
    });
  }

  Tensor scale(const Tensor& a, double s) { return affine(a, s, 0.0); }

  Tensor hadamard(const Tensor& a, const Tensor& b) {
    assert(a.rows() == b.rows() && a.cols() == b.cols());
    Mat out = a.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
    return make(std::move(out), {a, b}, [a, b](TensorNode& n) {
      if (a.requires_grad()) {
        Mat& ag = a.node()->grad;
        for (size_t i = 0; i < ag.data.size(); ++i) ag.data[i] += n.grad.data[i] * b.value().data[i];
      }
      if (b.requires_grad()) {
        Mat& bg = b.node()->grad;
        for (size_t i = 0; i < bg.data.size(); ++i) bg.data[i] += n.grad.data[i] * a.value().data[i];
      }
    });
  }

  // ---- nonlinearities ----

  Tensor tanh_t(const Tensor& a) {
    Mat out = a.value();
    for (double& v : out.data) v = std::tanh(v);
    return make(std::move(out), {a}, [a](TensorNode& n) {
      if (!a.requires_grad()) return;
      Mat& ag = a.node()->grad;
      for (size_t i = 0; i < ag.data.size(); ++i) {
        const double t = n.value.data[i];
        ag.data[i] += n.grad.data[i] * (1.0 - t * t);
      }
    });
  }

  Tensor sigmoid_t(const Tensor& a) {
    Mat out = a.value();
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return make(std::move(out), {a}, [a](TensorNode& n) {
      if (!a.requires_grad()) return;
      Mat& ag = a.node()->grad;
      for (size_t i = 0; i < ag.data.size(); ++i) {
        const double s = n.value.data[i];
        ag.data[i] += n.grad.data[i] * s * (1.0 - s);
      }
    });
  }

  Tensor gelu_t(const Tensor& a) {
    // tanh approximation
    static constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    static constexpr double kK = 0.044715;
    Mat out = a.value();
    for (double& v : out.data) {
      const double x = v;
      v = 0.5 * x * (1.0 + std::tanh(kC * (x + kK * x * x * x)));
    }
    return make(std::move(out), {a}, [a](TensorNode& n) {
      if (!a.requires_grad()) return;
      Mat& ag = a.node()->grad;
      for (size_t i = 0; i < ag.data.size(); ++i) {
        const double x = a.value().data[i];
        const double u = kC * (x + kK * x * x * x);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * kK * x * x);
        const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
        ag.data[i] += n.grad.data[i] * d;
      }
    });
  }

  // Row-wise RMS normalization with a learned gain: y = x / rms(x) * g.
  Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps = 1e-6) {
    assert(gain.rows() == 1 && gain.cols() == x.cols());
    const int n = x.cols();
    Mat out(x.rows(), n);
    auto inv_rms = std::make_shared<std::vector<double>>(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
      const double* xr = x.value().row(i);
      double ss = 0.0;
      for (int j = 0; j < n; ++j) ss += xr[j] * xr[j];
      const double inv = 1.0 / std::sqrt(ss / n + eps);
      (*inv_rms)[i] = inv;
      double* orow = out.row(i);
      const double* g = gain.value().row(0);
      for (int j = 0; j < n; ++j) orow[j] = xr[j] * inv * g[j];
    }
    return make(std::move(out), {x, gain}, [x, gain, inv_rms, n](TensorNode& nd) {
      for (int i = 0; i < nd.grad.rows; ++i) {
        const double* dy = nd.grad.row(i);
        const double* xr = x.value().row(i);
        const double* g = gain.value().row(0);
        const double inv = (*inv_rms)[i];
        if (x.requires_grad()) {
          double u = 0.0;
          for (int j = 0; j < n; ++j) u += dy[j] * g[j] * xr[j];
          const double k = u * inv * inv * inv / n;
          double* dx = x.node()->grad.row(i);
          for (int j = 0; j < n; ++j) dx[j] += dy[j] * g[j] * inv - xr[j] * k;
        }
        if (gain.requires_grad()) {
          double* dg = gain.node()->grad.row(0);
          for (int j = 0; j < n; ++j) dg[j] += dy[j] * xr[j] * inv;
        }
      }
    });
  }

  // ---- attention ----

  // Multi-head causal self-attention over a batch of equal-length blocks.
  // q, k, v: (batch * len) x dim, row b*len+i is position i of block b.
  // Within a block, position i attends to positions <= i.
  Tensor causal_self_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                               int batch, int len) {
    const int dim = q.cols();
    assert(dim % heads == 0 && q.rows() == batch * len);
    const int dh = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // per (block, head) attention matrices kept for backward
    auto attn = std::make_shared<std::vector<Mat>>();
    attn->reserve(static_cast<size_t>(batch) * heads);

    Mat out(q.rows(), dim);
    for (int b = 0; b < batch; ++b) {
      const int base = b * len;
      for (int h = 0; h < heads; ++h) {
        const int c0 = h * dh;
        Mat a(len, len);
        for (int i = 0; i < len; ++i) {
          const double* qi = q.value().row(base + i) + c0;
          double mx = -1e300;
          double* ar = a.row(i);
          for (int j = 0; j <= i; ++j) {
            const double s = dot(qi, k.value().row(base + j) + c0, dh) * scale;
            ar[j] = s;
            mx = std::max(mx, s);
          }
          double z = 0.0;
          for (int j = 0; j <= i; ++j) {
            ar[j] = std::exp(ar[j] - mx);
            z += ar[j];
          }
          const double inv = 1.0 / z;
          for (int j = 0; j <= i; ++j) ar[j] *= inv;
          double* orow = out.row(base + i) + c0;
          for (int j = 0; j <= i; ++j) axpy(ar[j], v.value().row(base + j) + c0, orow, dh);
        }
        attn->push_back(std::move(a));
      }
    }

    return make(std::move(out), {q, k, v},
                [q, k, v, attn, heads, batch, len, dh, scale](TensorNode& nd) {
      const bool need_q = q.requires_grad(), need_k = k.requires_grad(), need_v = v.requires_grad();
      if (!need_q && !need_k && !need_v) return;
      for (int b = 0; b < batch; ++b) {
        const int base = b * len;
        for (int h = 0; h < heads; ++h) {
          const int c0 = h * dh;
          const Mat& a = (*attn)[static_cast<size_t>(b) * heads + h];
          Mat ds(len, len);  // grad wrt pre-softmax scores (scaled)
          for (int i = 0; i < len; ++i) {
            const double* dout = nd.grad.row(base + i) + c0;
            const double* ar = a.row(i);
            // dA then softmax backward
            double dot_da_a = 0.0;
            double* dsr = ds.row(i);
            for (int j = 0; j <= i; ++j) {
              const double da = dot(dout, v.value().row(base + j) + c0, dh);
              dsr[j] = da;
              dot_da_a += da * ar[j];
            }
            for (int j = 0; j <= i; ++j) dsr[j] = ar[j] * (dsr[j] - dot_da_a);
            if (need_v) {
              for (int j = 0; j <= i; ++j)
                axpy(ar[j], dout, v.node()->grad.row(base + j) + c0, dh);
            }
          }
          if (need_q) {
            for (int i = 0; i < len; ++i) {
              double* dq = q.node()->grad.row(base + i) + c0;
              const double* dsr = ds.row(i);
              for (int j = 0; j <= i; ++j)
                axpy(dsr[j] * scale, k.value().row(base + j) + c0, dq, dh);
            }
          }
          if (need_k) {
            for (int i = 0; i < len; ++i) {
              const double* qi = q.value().row(base + i) + c0;
              const double* dsr = ds.row(i);
              for (int j = 0; j <= i; ++j)
                axpy(dsr[j] * scale, qi, k.node()->grad.row(base + j) + c0, dh);
            }
          }
        }
      }
    });
  }

  // ---- reductions / losses ----

  // Column-wise max over rows -> 1 x n. Ties resolve to the smallest row index.
  Tensor colwise_max(const Tensor& x) {
    const int n = x.cols();
    Mat out(1, n);
    auto argmax = std::make_shared<std::vector<int>>(n, 0);
    for (int j = 0; j < n; ++j) {
      double best = x.value().at(0, j);
      int bi = 0;
      for (int i = 1; i < x.rows(); ++i) {
        const double v = x.value().at(i, j);
        if (v > best) {
          best = v;
          bi = i;
        }
      }
      out.at(0, j) = best;
      (*argmax)[j] = bi;
    }
    return make(std::move(out), {x}, [x, argmax, n](TensorNode& nd) {
      if (!x.requires_grad()) return;
      for (int j = 0; j < n; ++j) x.node()->grad.at((*argmax)[j], j) += nd.grad.at(0, j);
    });
  }

  // Mean negative log-likelihood over rows with target >= 0; rows with
  // target -1 are ignored. logits: m x V.
  Tensor cross_entropy_mean(const Tensor& logits, std::vector<int> targets) {
    assert(static_cast<int>(targets.size()) == logits.rows());
    const int v = logits.cols();
    auto lse = std::make_shared<std::vector<double>>(logits.rows(), 0.0);
    double loss = 0.0;
    int count = 0;
    for (int i = 0; i < logits.rows(); ++i) {
      if (targets[i] < 0) continue;
      const double* r = logits.value().row(i);
      double mx = r[0];
      for (int j = 1; j < v; ++j) mx = std::max(mx, r[j]);
      double z = 0.0;
      for (int j = 0; j < v; ++j) z += std::exp(r[j] - mx);
      const double l = mx + std::log(z);
      (*lse)[i] = l;
      loss += l - r[targets[i]];
      ++count;
    }
    assert(count > 0);
    Mat out(1, 1);
    out.at(0, 0) = loss / count;
    return make(std::move(out), {logits},
                [logits, targets = std::move(targets), lse, v, count](TensorNode& nd) {
      if (!logits.requires_grad()) return;
      const double g = nd.grad.at(0, 0) / count;
      for (int i = 0; i < logits.rows(); ++i) {
        if (targets[i] < 0) continue;
        const double* r = logits.value().row(i);
        double* dr = logits.node()->grad.row(i);
        const double l = (*lse)[i];
        for (int j = 0; j < v; ++j) dr[j] += g * std::exp(r[j] - l);
        dr[targets[i]] -= g;
      }
    });
  }

  // Mean squared error over all elements.
  Tensor mse_mean(const Tensor& a, const Tensor& b) {
    assert(a.rows() == b.rows() && a.cols() == b.cols());
    const double n = static_cast<double>(a.value().size());
    double s = 0.0;
    for (size_t i = 0; i < a.value().data.size(); ++i) {
      const double d = a.value().data[i] - b.value().data[i];
      s += d * d;
    }
    Mat out(1, 1);
    out.at(0, 0) = s / n;
    return make(std::move(out), {a, b}, [a, b, n](TensorNode& nd) {
      const double g = 2.0 * nd.grad.at(0, 0) / n;
      for (size_t i = 0; i < a.value().data.size(); ++i) {
        const double d = a.value().data[i] - b.value().data[i];
        if (a.requires_grad()) a.node()->grad.data[i] += g * d;
        if (b.requires_grad()) b.node()->grad.data[i] -= g * d;
      }
    });
  }

  Tensor mean_all(const Tensor& a) {
    const double n = static_cast<double>(a.value().size());
    double s = 0.0;
    for (double x : a.value().data) s += x;
    Mat out(1, 1);
    out.at(0, 0) = s / n;
    return make(std::move(out), {a}, [a, n](TensorNode& nd) {
      if (!a.requires_grad()) return;
      const double g = nd.grad.at(0, 0) / n;
      for (double& d : a.node()->grad.data) d += g;
    });
  }

  // ---- backward ----

  void backward(const Tensor& root) {
    assert(root.rows() == 1 && root.cols() == 1);
    assert(root.requires_grad());
    root.node()->grad.at(0, 0) = 1.0;
    sweep();
  }

  // Seeds explicit gradients on intermediate nodes, then sweeps the tape.
  void backward_seeded(const std::vector<std::pair<Tensor, Mat>>& seeds) {
    for (const auto& [t, g] : seeds) {
      assert(t.requires_grad());
      t.node()->grad.add_inplace(g);
    }
    sweep();
  }

  size_t num_ops() const { return ops_.size(); }

 private:
  Tensor make(Mat value, const std::vector<Tensor>& parents,
              std::function<void(TensorNode&)> bp) {
    auto n = std::make_shared<TensorNode>();
    n->value = std::move(value);
    for (const auto& p : parents) {
      if (p.requires_grad()) {
        n->requires_grad = true;
        break;
      }
    }
    n->ensure_grad();
    if (n->requires_grad) {
      TensorNode* raw = n.get();
      n->backprop = [raw, bp = std::move(bp)]() { bp(*raw); };
      ops_.push_back(n);
    }
    return Tensor(n);
  }

  void sweep() {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      if ((*it)->backprop) (*it)->backprop();
    }
  }

  std::vector<NodePtr> ops_;
};

}  // namespace reclens
