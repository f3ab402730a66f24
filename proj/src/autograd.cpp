// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "reenact/errors.hpp"

namespace reenact {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

Tensor& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

void Node::accumulate(const Tensor& g) {
  if (!requires_grad) return;
  Tensor& buf = grad_buffer();
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const { return node_->grad_buffer(); }

Var Var::make(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  Var out(std::move(value), false);
  bool needs = std::any_of(inputs.begin(), inputs.end(),
                           [](const Var& v) { return v.requires_grad(); });
  if (needs) {
    out.node_->requires_grad = true;
    out.node_->backward_fn = std::move(backward);
    out.node_->inputs.reserve(inputs.size());
    for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
  }
  return out;
}

void Var::backward() const {
  if (node_->value.size() != 1) {
    throw ShapeError("backward() without a seed needs a single-element output, got " +
                     shape_str(node_->value.shape()));
  }
  backward(Tensor(node_->value.shape(), 1.0));
}

void Var::backward(const Tensor& seed) const {
  require_shape(seed, node_->value.shape(), "backward seed");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

namespace ops {
namespace {

bool broadcasts(const Var& a, const Var& b) {
  if (a.shape() == b.shape()) return false;
  if (b.size() == 1) return true;
  throw ShapeError("elementwise op: shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()) + " are incompatible");
}

template <typename Fwd, typename DA, typename DB>
Var binary(const Var& a, const Var& b, Fwd fwd, DA da, DB db) {
  const bool bc = broadcasts(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[bc ? 0 : i]);
  return Var::make(std::move(out), {a, b}, [bc, da, db](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const Tensor& g = self.grad;
    if (na.requires_grad) {
      Tensor& ga = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i] * da(na.value[i], nb.value[bc ? 0 : i]);
    }
    if (nb.requires_grad) {
      Tensor& gb = nb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        gb[bc ? 0 : i] += g[i] * db(na.value[i], nb.value[bc ? 0 : i]);
    }
  });
}

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  return Var::make(std::move(out), {a}, [deriv](Node& self) {
    Node& na = *self.inputs[0];
    Tensor& ga = na.grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * deriv(na.value[i]);
  });
}

void require_chw(const Var& x, const char* what) {
  if (x.shape().size() != 3) {
    throw ShapeError(std::string(what) + ": expected a {C, H, W} map, got " +
                     shape_str(x.shape()));
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var mul_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double) { return s; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(const Var& a) {
  return Var::make(Tensor::scalar(a.value().sum()), {a}, [](Node& self) {
    Node& na = *self.inputs[0];
    Tensor& ga = na.grad_buffer();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(const Var& a) {
  if (a.size() == 0) throw InvalidArgument("mean of an empty tensor");
  const double n = static_cast<double>(a.size());
  return Var::make(Tensor::scalar(a.value().sum() / n), {a}, [n](Node& self) {
    Node& na = *self.inputs[0];
    Tensor& ga = na.grad_buffer();
    const double g = self.grad[0] / n;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var global_avg_pool(const Var& a) {
  require_chw(a, "global_avg_pool");
  const int c = a.shape()[0];
  const std::size_t hw = static_cast<std::size_t>(a.shape()[1]) * a.shape()[2];
  Tensor out({c});
  const double* src = a.value().data();
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += src[ch * hw + i];
    out[ch] = s / static_cast<double>(hw);
  }
  return Var::make(std::move(out), {a}, [c, hw](Node& self) {
    Tensor& ga = self.inputs[0]->grad_buffer();
    for (int ch = 0; ch < c; ++ch) {
      const double g = self.grad[ch] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) ga[ch * hw + i] += g;
    }
  });
}

Var flatten(const Var& a) {
  return Var::make(a.value().reshaped({static_cast<int>(a.size())}), {a}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad.reshaped(self.inputs[0]->value.shape()));
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_chw(x, "conv2d input");
  if (w.shape().size() != 4 || w.shape()[2] != w.shape()[3]) {
    throw ShapeError("conv2d weight: expected {Cout, Cin, k, k}, got " + shape_str(w.shape()));
  }
  const int cin = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int cout = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != cin) {
    throw ShapeError("conv2d: weight expects " + std::to_string(w.shape()[1]) +
                     " input channels, input has " + std::to_string(cin));
  }
  require_shape(b.value(), {cout}, "conv2d bias");
  if (stride < 1 || pad < 0) throw InvalidArgument("conv2d: bad stride/pad");
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  if (ho <= 0 || wo <= 0) {
    throw ShapeError("conv2d: input " + shape_str(x.shape()) + " too small for kernel " +
                     std::to_string(k));
  }
  const int kk = cin * k * k;
  const int p = ho * wo;
  const bool pointwise = (k == 1 && stride == 1 && pad == 0);

  auto col = std::make_shared<std::vector<double>>();
  if (!pointwise) {
    col->assign(static_cast<std::size_t>(kk) * p, 0.0);
    const double* src = x.value().data();
    for (int c = 0; c < cin; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double* row = col->data() + static_cast<std::size_t>((c * k + ky) * k + kx) * p;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const double* srow = src + (static_cast<std::size_t>(c) * h + iy) * wd;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < wd) row[oy * wo + ox] = srow[ix];
            }
          }
        }
      }
    }
  }
  const double* col_data = pointwise ? x.value().data() : col->data();

  Tensor out({cout, ho, wo});
  {
    MatMap o(out.data(), cout, p);
    ConstMatMap wm(w.value().data(), cout, kk);
    ConstMatMap cm(col_data, kk, p);
    o.noalias() = wm * cm;
    for (int c = 0; c < cout; ++c) o.row(c).array() += b.value()[c];
  }

  return Var::make(std::move(out), {x, w, b},
                   [=](Node& self) {
                     Node& nx = *self.inputs[0];
                     Node& nw = *self.inputs[1];
                     Node& nb = *self.inputs[2];
                     ConstMatMap g(self.grad.data(), cout, p);
                     const double* cdata = pointwise ? nx.value.data() : col->data();
                     if (nw.requires_grad) {
                       MatMap gw(nw.grad_buffer().data(), cout, kk);
                       gw.noalias() += g * ConstMatMap(cdata, kk, p).transpose();
                     }
                     if (nb.requires_grad) {
                       Tensor& gb = nb.grad_buffer();
                       for (int c = 0; c < cout; ++c) gb[c] += g.row(c).sum();
                     }
                     if (!nx.requires_grad) return;
                     ConstMatMap wm(nw.value.data(), cout, kk);
                     if (pointwise) {
                       MatMap gx(nx.grad_buffer().data(), kk, p);
                       gx.noalias() += wm.transpose() * g;
                       return;
                     }
                     RowMatrix dcol = wm.transpose() * g;
                     double* gx = nx.grad_buffer().data();
                     for (int c = 0; c < cin; ++c) {
                       for (int ky = 0; ky < k; ++ky) {
                         for (int kx = 0; kx < k; ++kx) {
                           const double* row = dcol.data() +
                               static_cast<std::size_t>((c * k + ky) * k + kx) * p;
                           for (int oy = 0; oy < ho; ++oy) {
                             const int iy = oy * stride - pad + ky;
                             if (iy < 0 || iy >= h) continue;
                             double* grow = gx + (static_cast<std::size_t>(c) * h + iy) * wd;
                             for (int ox = 0; ox < wo; ++ox) {
                               const int ix = ox * stride - pad + kx;
                               if (ix >= 0 && ix < wd) grow[ix] += row[oy * wo + ox];
                             }
                           }
                         }
                       }
                     }
                   });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_chw(x, "instance_norm");
  const int c = x.shape()[0];
  const std::size_t n = static_cast<std::size_t>(x.shape()[1]) * x.shape()[2];
  require_shape(gamma.value(), {c}, "instance_norm gamma");
  require_shape(beta.value(), {c}, "instance_norm beta");

  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<double>>(c);
  Tensor out(x.shape());
  const double* src = x.value().data();
  for (int ch = 0; ch < c; ++ch) {
    const double* xs = src + ch * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += xs[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xs[i] - mu) * (xs[i] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[ch] = is;
    const double g = gamma.value()[ch], bt = beta.value()[ch];
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (xs[i] - mu) * is;
      (*xhat)[ch * n + i] = z;
      out[ch * n + i] = g * z + bt;
    }
  }

  return Var::make(std::move(out), {x, gamma, beta}, [=](Node& self) {
    Node& nx = *self.inputs[0];
    Node& ng = *self.inputs[1];
    Node& nb = *self.inputs[2];
    const double dn = static_cast<double>(n);
    for (int ch = 0; ch < c; ++ch) {
      const double* dy = self.grad.data() + ch * n;
      const double* z = xhat->data() + ch * n;
      double sum_dy = 0.0, sum_dy_z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_dy += dy[i];
        sum_dy_z += dy[i] * z[i];
      }
      if (ng.requires_grad) ng.grad_buffer()[ch] += sum_dy_z;
      if (nb.requires_grad) nb.grad_buffer()[ch] += sum_dy;
      if (nx.requires_grad) {
        const double g = ng.value[ch];
        const double scale = g * (*inv_std)[ch] / dn;
        double* gx = nx.grad_buffer().data() + ch * n;
        for (std::size_t i = 0; i < n; ++i) {
          gx[i] += scale * (dn * dy[i] - sum_dy - z[i] * sum_dy_z);
        }
      }
    }
  });
}

Var upsample_nearest(const Var& x, int factor) {
  require_chw(x, "upsample_nearest");
  if (factor < 1) throw InvalidArgument("upsample factor must be >= 1");
  if (factor == 1) return x;
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int ho = h * factor, wo = w * factor;
  Tensor out({c, ho, wo});
  const Tensor& xv = x.value();
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) out.at(ch, y, xx) = xv.at(ch, y / factor, xx / factor);
  return Var::make(std::move(out), {x}, [=](Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < ho; ++y)
        for (int xx = 0; xx < wo; ++xx) gx.at(ch, y / factor, xx / factor) += self.grad.at(ch, y, xx);
  });
}

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgument("concat_channels of nothing");
  for (const auto& v : xs) require_chw(v, "concat_channels");
  const int h = xs[0].shape()[1], w = xs[0].shape()[2];
  int total = 0;
  for (const auto& v : xs) {
    if (v.shape()[1] != h || v.shape()[2] != w) {
      throw ShapeError("concat_channels: spatial sizes " + shape_str(xs[0].shape()) + " and " +
                       shape_str(v.shape()) + " differ");
    }
    total += v.shape()[0];
  }
  Tensor out({total, h, w});
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& v : xs) {
    offsets.push_back(off);
    std::copy(v.value().data(), v.value().data() + v.size(), out.data() + off);
    off += v.size();
  }
  return Var::make(std::move(out), xs, [offsets](Node& self) {
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      Node& in = *self.inputs[i];
      if (!in.requires_grad) continue;
      Tensor& g = in.grad_buffer();
      const double* src = self.grad.data() + offsets[i];
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
    }
  });
}

Var concat_flat(const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgument("concat_flat of nothing");
  std::vector<double> values;
  std::vector<std::size_t> offsets;
  for (const auto& v : xs) {
    offsets.push_back(values.size());
    values.insert(values.end(), v.value().values().begin(), v.value().values().end());
  }
  const int n = static_cast<int>(values.size());
  return Var::make(Tensor({n}, std::move(values)), xs, [offsets](Node& self) {
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      Node& in = *self.inputs[i];
      if (!in.requires_grad) continue;
      Tensor& g = in.grad_buffer();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += self.grad[offsets[i] + j];
    }
  });
}

}  // namespace ops
}  // namespace reenact
