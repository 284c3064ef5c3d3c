#include "a2v/autodiff.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "a2v/dsp.h"
#include "a2v/error.h"
#include "a2v/linalg.h"

namespace a2v::ad {

namespace {

std::atomic<int64_t> g_next_id{1};

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p->requires_grad;
  n->requires_grad = needs_grad;
  if (needs_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.v.empty()) grad = Tensor(value.shape, 0.0);
  return grad;
}

Var Var::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->requires_grad = false;
  return Var(n);
}

Var Var::param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->requires_grad = true;
  return Var(n);
}

void backward(const Var& root) {
  if (!root.defined() || !root.node()->requires_grad) return;
  // Gather the reachable requires-grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) {
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });
  Tensor& g = root.node()->ensure_grad();
  for (auto& x : g.v) x += 1.0;
  for (Node* n : order) {
    if (n->backward_fn) {
      for (const auto& p : n->parents) {
        if (p->requires_grad) p->ensure_grad();
      }
      n->backward_fn(*n);
    }
  }
}

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a.value();
  const auto& bv = b.value().v;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (int pi = 0; pi < 2; ++pi) {
      auto& p = self.parents[static_cast<size_t>(pi)];
      if (!p->requires_grad) continue;
      for (size_t i = 0; i < self.grad.v.size(); ++i) p->grad.v[i] += self.grad.v[i];
    }
  }));
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a.value();
  const auto& bv = b.value().v;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= bv[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) {
      for (size_t i = 0; i < self.grad.v.size(); ++i) {
        self.parents[0]->grad.v[i] += self.grad.v[i];
      }
    }
    if (self.parents[1]->requires_grad) {
      for (size_t i = 0; i < self.grad.v.size(); ++i) {
        self.parents[1]->grad.v[i] -= self.grad.v[i];
      }
    }
  }));
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a.value();
  const auto& bv = b.value().v;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= bv[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& self) {
    const auto& av = self.parents[0]->value.v;
    const auto& bv2 = self.parents[1]->value.v;
    if (self.parents[0]->requires_grad) {
      for (size_t i = 0; i < self.grad.v.size(); ++i) {
        self.parents[0]->grad.v[i] += self.grad.v[i] * bv2[i];
      }
    }
    if (self.parents[1]->requires_grad) {
      for (size_t i = 0; i < self.grad.v.size(); ++i) {
        self.parents[1]->grad.v[i] += self.grad.v[i] * av[i];
      }
    }
  }));
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (auto& x : out.v) x *= c;
  return Var(make_node(std::move(out), {a.node()}, [c](Node& self) {
    for (size_t i = 0; i < self.grad.v.size(); ++i) {
      self.parents[0]->grad.v[i] += c * self.grad.v[i];
    }
  }));
}

Var add_rowvec(const Var& x, const Var& bias) {
  if (x.cols() != bias.value().numel()) {
    throw ShapeError("add_rowvec: bias length mismatch");
  }
  Tensor out = x.value();
  const int64_t m = x.rows(), n = x.cols();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out.at(i, j) += bias.value().at(j);
  }
  return Var(make_node(std::move(out), {x.node(), bias.node()}, [m, n](Node& self) {
    if (self.parents[0]->requires_grad) {
      for (size_t i = 0; i < self.grad.v.size(); ++i) {
        self.parents[0]->grad.v[i] += self.grad.v[i];
      }
    }
    if (self.parents[1]->requires_grad) {
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
          self.parents[1]->grad.at(j) += self.grad.at(i, j);
        }
      }
    }
  }));
}

// ------------------------------------------------------------------- matmuls

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dim mismatch");
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n}, 0.0);
  linalg::gemm(false, false, m, n, k, 1.0, a.value().data(), k,
               b.value().data(), n, 0.0, out.data(), n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      // dA = dC * B^T
      linalg::gemm(false, true, m, k, n, 1.0, self.grad.data(), n, bv.data(), n,
                   1.0, self.parents[0]->grad.data(), k);
    }
    if (self.parents[1]->requires_grad) {
      // dB = A^T * dC
      linalg::gemm(true, false, k, n, m, 1.0, av.data(), k, self.grad.data(), n,
                   1.0, self.parents[1]->grad.data(), n);
    }
  }));
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dim mismatch");
  const int64_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n}, 0.0);
  linalg::gemm(false, true, m, n, k, 1.0, a.value().data(), k, b.value().data(),
               k, 0.0, out.data(), n);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      // dA = dC * B
      linalg::gemm(false, false, m, k, n, 1.0, self.grad.data(), n, bv.data(),
                   k, 1.0, self.parents[0]->grad.data(), k);
    }
    if (self.parents[1]->requires_grad) {
      // dB = dC^T * A
      linalg::gemm(true, false, n, k, m, 1.0, self.grad.data(), n, av.data(), k,
                   1.0, self.parents[1]->grad.data(), k);
    }
  }));
}

Var linear(const Var& x, const Var& w, const Var& b) {
  return add_rowvec(matmul(x, w), b);
}

// --------------------------------------------------------------- activations

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
  return Var(make_node(std::move(out), {x.node()}, [](Node& self) {
    for (size_t i = 0; i < self.grad.v.size(); ++i) {
      const double y = self.value.v[i];
      self.parents[0]->grad.v[i] += self.grad.v[i] * y * (1.0 - y);
    }
  }));
}

Var gelu(const Var& x) {
  Tensor out = x.value();
  const int64_t n = out.numel();
#pragma omp parallel for schedule(static) if (n > 4096)
  for (int64_t i = 0; i < n; ++i) {
    const double v = out.v[static_cast<size_t>(i)];
    out.v[static_cast<size_t>(i)] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  return Var(make_node(std::move(out), {x.node()}, [n](Node& self) {
    static const double kInvSqrt2Pi = 0.3989422804014326779;
    double* dst = self.parents[0]->grad.data();
    const double* src = self.parents[0]->value.data();
    const double* g = self.grad.data();
#pragma omp parallel for schedule(static) if (n > 4096)
    for (int64_t i = 0; i < n; ++i) {
      const double v = src[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      dst[i] += g[i] * (cdf + v * pdf);
    }
  }));
}

Var leaky_relu(const Var& x, double negative_slope) {
  Tensor out = x.value();
  for (auto& v : out.v) v = v >= 0.0 ? v : negative_slope * v;
  return Var(make_node(std::move(out), {x.node()}, [negative_slope](Node& self) {
    for (size_t i = 0; i < self.grad.v.size(); ++i) {
      const double v = self.parents[0]->value.v[i];
      self.parents[0]->grad.v[i] +=
          self.grad.v[i] * (v >= 0.0 ? 1.0 : negative_slope);
    }
  }));
}

Var pswish(const Var& x, const Var& alpha, const Var& beta) {
  const int64_t m = x.rows(), n = x.cols();
  if (alpha.value().numel() != n || beta.value().numel() != n) {
    throw ShapeError("pswish: per-column parameter length mismatch");
  }
  Tensor out({m, n}, 0.0);
#pragma omp parallel for schedule(static) if (m > 64)
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      const double v = x.value().at(i, j);
      const double s = 1.0 / (1.0 + std::exp(-beta.value().at(j) * v));
      out.at(i, j) = v * alpha.value().at(j) * s;
    }
  }
  return Var(make_node(
      std::move(out), {x.node(), alpha.node(), beta.node()}, [m, n](Node& self) {
        const Tensor& xv = self.parents[0]->value;
        const Tensor& av = self.parents[1]->value;
        const Tensor& bv = self.parents[2]->value;
        if (self.parents[0]->requires_grad) {
#pragma omp parallel for schedule(static) if (m > 64)
          for (int64_t i = 0; i < m; ++i) {
            for (int64_t j = 0; j < n; ++j) {
              const double g = self.grad.at(i, j);
              if (g == 0.0) continue;
              const double v = xv.at(i, j);
              const double b = bv.at(j);
              const double s = 1.0 / (1.0 + std::exp(-b * v));
              self.parents[0]->grad.at(i, j) +=
                  g * av.at(j) * (s + b * v * s * (1.0 - s));
            }
          }
        }
        const bool want_alpha = self.parents[1]->requires_grad;
        const bool want_beta = self.parents[2]->requires_grad;
        if (want_alpha || want_beta) {
#pragma omp parallel for schedule(static) if (n > 16)
          for (int64_t j = 0; j < n; ++j) {
            const double a = av.at(j);
            const double b = bv.at(j);
            double d_alpha = 0.0, d_beta = 0.0;
            for (int64_t i = 0; i < m; ++i) {
              const double g = self.grad.at(i, j);
              if (g == 0.0) continue;
              const double v = xv.at(i, j);
              const double s = 1.0 / (1.0 + std::exp(-b * v));
              d_alpha += g * v * s;
              d_beta += g * a * v * v * s * (1.0 - s);
            }
            if (want_alpha) self.parents[1]->grad.at(j) += d_alpha;
            if (want_beta) self.parents[2]->grad.at(j) += d_beta;
          }
        }
      }));
}

Var softmax_rows(const Var& x) {
  const int64_t m = x.rows(), n = x.cols();
  Tensor out({m, n}, 0.0);
#pragma omp parallel for schedule(static) if (m > 16)
  for (int64_t i = 0; i < m; ++i) {
    double mx = -1e300;
    for (int64_t j = 0; j < n; ++j) mx = std::max(mx, x.value().at(i, j));
    double denom = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      const double e = std::exp(x.value().at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (int64_t j = 0; j < n; ++j) out.at(i, j) /= denom;
  }
  return Var(make_node(std::move(out), {x.node()}, [m, n](Node& self) {
#pragma omp parallel for schedule(static) if (m > 16)
    for (int64_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j) dot += self.grad.at(i, j) * self.value.at(i, j);
      for (int64_t j = 0; j < n; ++j) {
        self.parents[0]->grad.at(i, j) +=
            self.value.at(i, j) * (self.grad.at(i, j) - dot);
      }
    }
  }));
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const int64_t m = x.rows(), n = x.cols();
  if (gamma.value().numel() != n || beta.value().numel() != n) {
    throw ShapeError("layer_norm: affine parameter length mismatch");
  }
  Tensor out({m, n}, 0.0);
  auto xhat = std::make_shared<Tensor>(Tensor({m, n}, 0.0));
  auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<size_t>(m));
#pragma omp parallel for schedule(static) if (m > 16)
  for (int64_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += x.value().at(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      const double d = x.value().at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[static_cast<size_t>(i)] = inv;
    for (int64_t j = 0; j < n; ++j) {
      const double h = (x.value().at(i, j) - mean) * inv;
      xhat->at(i, j) = h;
      out.at(i, j) = h * gamma.value().at(j) + beta.value().at(j);
    }
  }
  return Var(make_node(
      std::move(out), {x.node(), gamma.node(), beta.node()},
      [m, n, xhat, inv_sigma](Node& self) {
        const Tensor& gv = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
#pragma omp parallel for schedule(static) if (m > 16)
          for (int64_t i = 0; i < m; ++i) {
            double sum_gdy = 0.0, sum_gdy_x = 0.0;
            for (int64_t j = 0; j < n; ++j) {
              const double gdy = self.grad.at(i, j) * gv.at(j);
              sum_gdy += gdy;
              sum_gdy_x += gdy * xhat->at(i, j);
            }
            const double inv = (*inv_sigma)[static_cast<size_t>(i)];
            for (int64_t j = 0; j < n; ++j) {
              const double gdy = self.grad.at(i, j) * gv.at(j);
              self.parents[0]->grad.at(i, j) +=
                  inv * (gdy - (sum_gdy + xhat->at(i, j) * sum_gdy_x) /
                                   static_cast<double>(n));
            }
          }
        }
        if (self.parents[1]->requires_grad) {
#pragma omp parallel for schedule(static) if (n > 16)
          for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t i = 0; i < m; ++i) acc += self.grad.at(i, j) * xhat->at(i, j);
            self.parents[1]->grad.at(j) += acc;
          }
        }
        if (self.parents[2]->requires_grad) {
#pragma omp parallel for schedule(static) if (n > 16)
          for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t i = 0; i < m; ++i) acc += self.grad.at(i, j);
            self.parents[2]->grad.at(j) += acc;
          }
        }
      }));
}

Var dropout(const Var& x, double p, Rng& rng, bool train) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ArgumentError("dropout: p must be < 1");
  auto mask = std::make_shared<std::vector<double>>(x.value().v.size());
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor out = x.value();
  for (size_t i = 0; i < out.v.size(); ++i) {
    const double m = rng.bernoulli(p) ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out.v[i] *= m;
  }
  return Var(make_node(std::move(out), {x.node()}, [mask](Node& self) {
    for (size_t i = 0; i < self.grad.v.size(); ++i) {
      self.parents[0]->grad.v[i] += self.grad.v[i] * (*mask)[i];
    }
  }));
}

// -------------------------------------------------------------- convolutions

namespace {

// M[t, c*k + j] = x[t*stride + j - pad, c] (zero outside), M is [T_out, cin*k].
void im2col(const Tensor& x, int64_t cin_begin, int64_t cin_count,
            int64_t kernel, int64_t stride, int64_t pad, int64_t t_out,
            Tensor& m) {
  const int64_t T = x.rows();
  const int64_t cin_total = x.cols();
#pragma omp parallel for schedule(static) if (t_out > 64)
  for (int64_t t = 0; t < t_out; ++t) {
    double* row = m.data() + t * cin_count * kernel;
    for (int64_t c = 0; c < cin_count; ++c) {
      for (int64_t j = 0; j < kernel; ++j) {
        const int64_t src = t * stride + j - pad;
        row[c * kernel + j] =
            (src < 0 || src >= T)
                ? 0.0
                : x.v[static_cast<size_t>(src * cin_total + cin_begin + c)];
      }
    }
  }
}

void col2im_add(const Tensor& dm, int64_t cin_begin, int64_t cin_count,
                int64_t kernel, int64_t stride, int64_t pad, int64_t t_out,
                Tensor& dx) {
  const int64_t T = dx.rows();
  const int64_t cin_total = dx.cols();
  // Output-parallel: each input sample gathers from the (t, j) pairs with
  // t*stride + j - pad == dst, so threads never share a destination.
#pragma omp parallel for schedule(static) if (T > 64)
  for (int64_t dst = 0; dst < T; ++dst) {
    const int64_t t_hi = std::min((dst + pad) / stride, t_out - 1);
    const int64_t t_lo = std::max<int64_t>(0, t_hi - kernel);
    for (int64_t c = 0; c < cin_count; ++c) {
      double acc = 0.0;
      for (int64_t t = t_lo; t <= t_hi; ++t) {
        const int64_t j = dst + pad - t * stride;
        if (j < 0 || j >= kernel) continue;
        acc += dm.v[static_cast<size_t>((t * cin_count + c) * kernel + j)];
      }
      dx.v[static_cast<size_t>(dst * cin_total + cin_begin + c)] += acc;
    }
  }
}

}  // namespace

Var conv1d_valid(const Var& x, const Var& w, const Var& b, int64_t kernel,
                 int64_t stride) {
  const int64_t T = x.rows();
  const int64_t cin = x.cols();
  const int64_t cout = w.rows();
  if (w.cols() != cin * kernel) throw ShapeError("conv1d_valid: weight shape");
  if (T < kernel) throw ShapeError("conv1d_valid: input shorter than kernel");
  if (stride < 1) throw ArgumentError("conv1d_valid: stride must be >= 1");
  const int64_t t_out = (T - kernel) / stride + 1;

  auto cols = std::make_shared<Tensor>(Tensor({t_out, cin * kernel}, 0.0));
  im2col(x.value(), 0, cin, kernel, stride, 0, t_out, *cols);

  Tensor out({t_out, cout}, 0.0);
  // out = cols * w^T
  linalg::gemm(false, true, t_out, cout, cin * kernel, 1.0, cols->data(),
               cin * kernel, w.value().data(), cin * kernel, 0.0, out.data(),
               cout);
  const bool has_bias = b.defined();
  if (has_bias) {
    for (int64_t t = 0; t < t_out; ++t) {
      for (int64_t o = 0; o < cout; ++o) out.at(t, o) += b.value().at(o);
    }
  }

  std::vector<NodePtr> parents{x.node(), w.node()};
  if (has_bias) parents.push_back(b.node());
  return Var(make_node(
      std::move(out), std::move(parents),
      [cols, kernel, stride, t_out, cin, cout, has_bias](Node& self) {
        auto& xs = self.parents[0];
        auto& ws = self.parents[1];
        if (ws->requires_grad) {
          // dW = dOut^T * cols
          linalg::gemm(true, false, cout, cin * kernel, t_out, 1.0,
                       self.grad.data(), cout, cols->data(), cin * kernel, 1.0,
                       ws->grad.data(), cin * kernel);
        }
        if (has_bias && self.parents[2]->requires_grad) {
          for (int64_t t = 0; t < t_out; ++t) {
            for (int64_t o = 0; o < cout; ++o) {
              self.parents[2]->grad.at(o) += self.grad.at(t, o);
            }
          }
        }
        if (xs->requires_grad) {
          Tensor dcols({t_out, cin * kernel}, 0.0);
          linalg::gemm(false, false, t_out, cin * kernel, cout, 1.0,
                       self.grad.data(), cout, ws->value.data(), cin * kernel,
                       0.0, dcols.data(), cin * kernel);
          col2im_add(dcols, 0, cin, kernel, stride, 0, t_out, xs->grad);
        }
      }));
}

Var conv1d_same_grouped(const Var& x, const Var& w, const Var& b,
                        int64_t kernel, int64_t groups) {
  const int64_t T = x.rows();
  const int64_t cin = x.cols();
  const int64_t cout = w.rows();
  if (kernel % 2 == 0) throw ArgumentError("conv1d_same_grouped: kernel must be odd");
  if (cin % groups != 0 || cout % groups != 0) {
    throw ShapeError("conv1d_same_grouped: channels not divisible by groups");
  }
  const int64_t cin_g = cin / groups;
  const int64_t cout_g = cout / groups;
  if (w.cols() != cin_g * kernel) throw ShapeError("conv1d_same_grouped: weight shape");
  const int64_t pad = kernel / 2;

  auto cols = std::make_shared<std::vector<Tensor>>();
  cols->reserve(static_cast<size_t>(groups));
  Tensor out({T, cout}, 0.0);
  for (int64_t g = 0; g < groups; ++g) {
    Tensor m({T, cin_g * kernel}, 0.0);
    im2col(x.value(), g * cin_g, cin_g, kernel, 1, pad, T, m);
    // out slab [T, cout_g] at column offset g*cout_g
    linalg::gemm(false, true, T, cout_g, cin_g * kernel, 1.0, m.data(),
                 cin_g * kernel, w.value().data() + g * cout_g * cin_g * kernel,
                 cin_g * kernel, 0.0, out.data() + g * cout_g, cout);
    cols->push_back(std::move(m));
  }
  const bool has_bias = b.defined();
  if (has_bias) {
    for (int64_t t = 0; t < T; ++t) {
      for (int64_t o = 0; o < cout; ++o) out.at(t, o) += b.value().at(o);
    }
  }

  std::vector<NodePtr> parents{x.node(), w.node()};
  if (has_bias) parents.push_back(b.node());
  return Var(make_node(
      std::move(out), std::move(parents),
      [cols, kernel, groups, cin_g, cout_g, cout, T, pad, has_bias](Node& self) {
        auto& xs = self.parents[0];
        auto& ws = self.parents[1];
        if (has_bias && self.parents[2]->requires_grad) {
          for (int64_t t = 0; t < T; ++t) {
            for (int64_t o = 0; o < cout; ++o) {
              self.parents[2]->grad.at(o) += self.grad.at(t, o);
            }
          }
        }
        for (int64_t g = 0; g < groups; ++g) {
          const Tensor& m = (*cols)[static_cast<size_t>(g)];
          if (ws->requires_grad) {
            linalg::gemm(true, false, cout_g, cin_g * kernel, T, 1.0,
                         self.grad.data() + g * cout_g, cout, m.data(),
                         cin_g * kernel, 1.0,
                         ws->grad.data() + g * cout_g * cin_g * kernel,
                         cin_g * kernel);
          }
          if (xs->requires_grad) {
            Tensor dm({T, cin_g * kernel}, 0.0);
            linalg::gemm(false, false, T, cin_g * kernel, cout_g, 1.0,
                         self.grad.data() + g * cout_g, cout,
                         ws->value.data() + g * cout_g * cin_g * kernel,
                         cin_g * kernel, 0.0, dm.data(), cin_g * kernel);
            col2im_add(dm, g * cin_g, cin_g, kernel, 1, pad, T, xs->grad);
          }
        }
      }));
}

// ----------------------------------------------------------- sinc filterbank

Var sinc_kernels(const Var& f_low, const Var& bandwidth, int64_t kernel,
                 double sample_rate) {
  const int64_t F = f_low.value().numel();
  if (bandwidth.value().numel() != F) {
    throw ShapeError("sinc_kernels: parameter length mismatch");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw ArgumentError("sinc_kernels: kernel must be odd and positive");
  }
  const double nyq = sample_rate / 2.0;
  const double eps_hz = 1.0;

  auto f1s = std::make_shared<std::vector<double>>(static_cast<size_t>(F));
  auto f2s = std::make_shared<std::vector<double>>(static_cast<size_t>(F));
  auto f1_free = std::make_shared<std::vector<bool>>(static_cast<size_t>(F));
  auto f2_free = std::make_shared<std::vector<bool>>(static_cast<size_t>(F));

  const int64_t center = (kernel - 1) / 2;
  Tensor out({F, kernel}, 0.0);
  for (int64_t i = 0; i < F; ++i) {
    const double raw_low = f_low.value().at(i);
    const double raw_bw = bandwidth.value().at(i);
    const double abs_low = std::fabs(raw_low);
    const double f1 = std::min(abs_low, nyq - eps_hz);
    const double f2 = std::min(f1 + std::fabs(raw_bw), nyq);
    (*f1s)[static_cast<size_t>(i)] = f1;
    (*f2s)[static_cast<size_t>(i)] = f2;
    (*f1_free)[static_cast<size_t>(i)] = abs_low < nyq - eps_hz;
    (*f2_free)[static_cast<size_t>(i)] = f1 + std::fabs(raw_bw) < nyq;
    for (int64_t n = 0; n < kernel; ++n) {
      const double tau = static_cast<double>(n - center) / sample_rate;
      const double hi = (2.0 * f2 / sample_rate) * dsp::sinc(2.0 * f2 * tau);
      const double lo = (2.0 * f1 / sample_rate) * dsp::sinc(2.0 * f1 * tau);
      out.at(i, n) = (hi - lo) * dsp::hamming(n, kernel);
    }
  }

  return Var(make_node(
      std::move(out), {f_low.node(), bandwidth.node()},
      [F, kernel, center, sample_rate, f1s, f2s, f1_free, f2_free](Node& self) {
        const Tensor& raw_low = self.parents[0]->value;
        const Tensor& raw_bw = self.parents[1]->value;
        for (int64_t i = 0; i < F; ++i) {
          const double f1 = (*f1s)[static_cast<size_t>(i)];
          const double f2 = (*f2s)[static_cast<size_t>(i)];
          double d_f1 = 0.0, d_f2 = 0.0;
          for (int64_t n = 0; n < kernel; ++n) {
            const double g = self.grad.at(i, n);
            if (g == 0.0) continue;
            const double tau = static_cast<double>(n - center) / sample_rate;
            const double ham = dsp::hamming(n, kernel);
            // d/df [ (2f/fs) sinc(2 f tau) ] =
            //   (2/fs) sinc(2 f tau) + (2f/fs) sinc'(2 f tau) 2 tau
            const double dhi = (2.0 / sample_rate) * dsp::sinc(2.0 * f2 * tau) +
                               (2.0 * f2 / sample_rate) *
                                   dsp::sinc_derivative(2.0 * f2 * tau) * 2.0 * tau;
            const double dlo = (2.0 / sample_rate) * dsp::sinc(2.0 * f1 * tau) +
                               (2.0 * f1 / sample_rate) *
                                   dsp::sinc_derivative(2.0 * f1 * tau) * 2.0 * tau;
            d_f2 += g * ham * dhi;
            d_f1 -= g * ham * dlo;
          }
          const double sign_low =
              raw_low.at(i) > 0.0 ? 1.0 : (raw_low.at(i) < 0.0 ? -1.0 : 0.0);
          const double sign_bw =
              raw_bw.at(i) > 0.0 ? 1.0 : (raw_bw.at(i) < 0.0 ? -1.0 : 0.0);
          // f2 = min(f1 + |bw|, nyq) also moves with f1 when unclamped.
          double d_low = 0.0;
          if ((*f1_free)[static_cast<size_t>(i)]) {
            d_low = d_f1;
            if ((*f2_free)[static_cast<size_t>(i)]) d_low += d_f2;
            d_low *= sign_low;
          }
          double d_bw = 0.0;
          if ((*f2_free)[static_cast<size_t>(i)]) d_bw = d_f2 * sign_bw;
          if (self.parents[0]->requires_grad) {
            self.parents[0]->grad.at(i) += d_low;
          }
          if (self.parents[1]->requires_grad) {
            self.parents[1]->grad.at(i) += d_bw;
          }
        }
      }));
}

// ----------------------------------------------------------------- shape ops

Var gather_rows(const Var& x, std::vector<int64_t> idx) {
  const int64_t n = x.cols();
  Tensor out({static_cast<int64_t>(idx.size()), n}, 0.0);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= x.rows()) throw ShapeError("gather_rows: index");
    std::copy_n(x.value().data() + idx[i] * n, n,
                out.data() + static_cast<int64_t>(i) * n);
  }
  auto idx_ptr = std::make_shared<std::vector<int64_t>>(std::move(idx));
  return Var(make_node(std::move(out), {x.node()}, [idx_ptr, n](Node& self) {
    for (size_t i = 0; i < idx_ptr->size(); ++i) {
      const double* src = self.grad.data() + static_cast<int64_t>(i) * n;
      double* dst = self.parents[0]->grad.data() + (*idx_ptr)[i] * n;
      for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  }));
}

Var scatter_rows(const Var& x, std::vector<int64_t> idx, const Tensor& base) {
  const int64_t n = base.cols();
  if (x.cols() != n || static_cast<int64_t>(idx.size()) != x.rows()) {
    throw ShapeError("scatter_rows: shape mismatch");
  }
  Tensor out = base;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= base.rows()) throw ShapeError("scatter_rows: index");
    std::copy_n(x.value().data() + static_cast<int64_t>(i) * n, n,
                out.data() + idx[i] * n);
  }
  auto idx_ptr = std::make_shared<std::vector<int64_t>>(std::move(idx));
  return Var(make_node(std::move(out), {x.node()}, [idx_ptr, n](Node& self) {
    for (size_t i = 0; i < idx_ptr->size(); ++i) {
      const double* src = self.grad.data() + (*idx_ptr)[i] * n;
      double* dst = self.parents[0]->grad.data() + static_cast<int64_t>(i) * n;
      for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  }));
}

Var slice_cols(const Var& x, int64_t start, int64_t len) {
  const int64_t m = x.rows(), n = x.cols();
  if (start < 0 || start + len > n) throw ShapeError("slice_cols: range");
  Tensor out({m, len}, 0.0);
  for (int64_t i = 0; i < m; ++i) {
    std::copy_n(x.value().data() + i * n + start, len, out.data() + i * len);
  }
  return Var(make_node(std::move(out), {x.node()}, [m, n, start, len](Node& self) {
    for (int64_t i = 0; i < m; ++i) {
      const double* src = self.grad.data() + i * len;
      double* dst = self.parents[0]->grad.data() + i * n + start;
      for (int64_t j = 0; j < len; ++j) dst[j] += src[j];
    }
  }));
}

Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ArgumentError("concat_cols: empty input");
  const int64_t m = xs[0].rows();
  int64_t total = 0;
  for (const auto& x : xs) {
    if (x.rows() != m) throw ShapeError("concat_cols: row mismatch");
    total += x.cols();
  }
  Tensor out({m, total}, 0.0);
  std::vector<NodePtr> parents;
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const auto& x : xs) {
    const int64_t n = x.cols();
    for (int64_t i = 0; i < m; ++i) {
      std::copy_n(x.value().data() + i * n, n, out.data() + i * total + off);
    }
    parents.push_back(x.node());
    offsets.push_back(off);
    off += n;
  }
  auto offs = std::make_shared<std::vector<int64_t>>(std::move(offsets));
  return Var(make_node(std::move(out), std::move(parents), [m, total, offs](Node& self) {
    for (size_t pi = 0; pi < self.parents.size(); ++pi) {
      auto& p = self.parents[pi];
      if (!p->requires_grad) continue;
      const int64_t n = p->value.cols();
      const int64_t off2 = (*offs)[pi];
      for (int64_t i = 0; i < m; ++i) {
        const double* src = self.grad.data() + i * total + off2;
        double* dst = p->grad.data() + i * n;
        for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
      }
    }
  }));
}

// ---------------------------------------------------------------- reductions

Var sum_all(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().v) acc += v;
  Tensor out({1}, acc);
  return Var(make_node(std::move(out), {x.node()}, [](Node& self) {
    const double g = self.grad.at(0);
    for (auto& v : self.parents[0]->grad.v) v += g;
  }));
}

Var mean_all(const Var& x) {
  const double inv = 1.0 / static_cast<double>(x.value().numel());
  return scale(sum_all(x), inv);
}

Var mse_rows(const Var& pred, const Tensor& target, std::vector<int64_t> rows) {
  if (!pred.value().same_shape(target)) throw ShapeError("mse_rows: shapes");
  const int64_t n = pred.cols();
  if (rows.empty()) return Var::constant(Tensor({1}, 0.0));
  double acc = 0.0;
  for (int64_t r : rows) {
    for (int64_t j = 0; j < n; ++j) {
      const double d = pred.value().at(r, j) - target.at(r, j);
      acc += d * d;
    }
  }
  const double denom = static_cast<double>(rows.size()) * static_cast<double>(n);
  Tensor out({1}, acc / denom);
  auto rows_ptr = std::make_shared<std::vector<int64_t>>(std::move(rows));
  auto target_ptr = std::make_shared<Tensor>(target);
  return Var(make_node(std::move(out), {pred.node()},
                       [rows_ptr, target_ptr, n, denom](Node& self) {
                         const double g = self.grad.at(0) * 2.0 / denom;
                         for (int64_t r : *rows_ptr) {
                           for (int64_t j = 0; j < n; ++j) {
                             self.parents[0]->grad.at(r, j) +=
                                 g * (self.parents[0]->value.at(r, j) -
                                      target_ptr->at(r, j));
                           }
                         }
                       }));
}

Var focal_loss_from_logits(const Var& logits, const Tensor& targets,
                           double gamma, double eps) {
  if (!logits.value().same_shape(targets)) {
    throw ShapeError("focal_loss_from_logits: shapes");
  }
  const int64_t total = logits.value().numel();
  double acc = 0.0;
  for (int64_t i = 0; i < total; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-logits.value().at(i)));
    const double p = std::clamp(s, eps, 1.0 - eps);
    const double y = targets.at(i);
    const double pt = p * y + (1.0 - p) * (1.0 - y);
    const double ce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    acc += std::pow(1.0 - pt, gamma) * ce;
  }
  Tensor out({1}, acc / static_cast<double>(total));
  auto targets_ptr = std::make_shared<Tensor>(targets);
  return Var(make_node(
      std::move(out), {logits.node()}, [targets_ptr, gamma, eps, total](Node& self) {
        const double g = self.grad.at(0) / static_cast<double>(total);
        for (int64_t i = 0; i < total; ++i) {
          const double z = self.parents[0]->value.at(i);
          const double s = 1.0 / (1.0 + std::exp(-z));
          if (s < eps || s > 1.0 - eps) continue;  // clamped, zero slope
          const double p = s;
          const double y = targets_ptr->at(i);
          const double pt = p * y + (1.0 - p) * (1.0 - y);
          const double ce = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
          const double dce_dp = (p - y) / (p * (1.0 - p));
          double dl_dp = std::pow(1.0 - pt, gamma) * dce_dp;
          if (gamma != 0.0) {
            dl_dp -= gamma * std::pow(1.0 - pt, gamma - 1.0) * (2.0 * y - 1.0) * ce;
          }
          self.parents[0]->grad.at(i) += g * dl_dp * p * (1.0 - p);
        }
      }));
}

}  // namespace a2v::ad
