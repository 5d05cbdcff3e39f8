#include "lifted/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "lifted/errors.hpp"

namespace lifted {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Grad buffer of parent `i`, or nullptr when it does not require one.
std::vector<double>* parent_grad(detail::Node& node, std::size_t i) {
  auto& parent = *node.parents[i];
  return parent.requires_grad ? &parent.ensure_grad() : nullptr;
}

const std::vector<double>& parent_data(const detail::Node& node, std::size_t i) {
  return node.parents[i]->data;
}

struct Broadcast {
  enum class Mode { kSame, kScalarB, kScalarA, kRowB, kGeneral };
  Shape shape;
  Mode mode = Mode::kGeneral;
  std::size_t width = 1;
  // Per output element offsets into a and b; only filled for kGeneral.
  std::vector<std::size_t> a_off;
  std::vector<std::size_t> b_off;

  std::size_t ia(std::size_t i) const {
    switch (mode) {
      case Mode::kSame:
      case Mode::kScalarB:
      case Mode::kRowB:
        return i;
      case Mode::kScalarA:
        return 0;
      default:
        return a_off[i];
    }
  }
  std::size_t ib(std::size_t i) const {
    switch (mode) {
      case Mode::kSame:
      case Mode::kScalarA:
        return i;
      case Mode::kScalarB:
        return 0;
      case Mode::kRowB:
        return i % width;
      default:
        return b_off[i];
    }
  }
};

std::shared_ptr<Broadcast> plan_broadcast(const Shape& a, const Shape& b,
                                          const char* op) {
  auto plan = std::make_shared<Broadcast>();
  using Mode = Broadcast::Mode;
  if (a == b) {
    plan->shape = a;
    plan->mode = Mode::kSame;
    return plan;
  }
  const std::size_t na = shape_numel(a), nb = shape_numel(b);
  if (nb == 1 && b.size() <= a.size()) {
    plan->shape = a;
    plan->mode = Mode::kScalarB;
    return plan;
  }
  if (na == 1 && a.size() <= b.size()) {
    plan->shape = b;
    plan->mode = Mode::kScalarA;
    return plan;
  }
  if (!a.empty() && b.size() <= a.size() && nb == a.back() && !b.empty() && b.back() == nb) {
    plan->shape = a;
    plan->mode = Mode::kRowB;
    plan->width = nb;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank), sa(rank, 1), sb(rank, 1);
  std::copy(a.begin(), a.end(), sa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), sb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  for (std::size_t d = 0; d < rank; ++d) {
    if (sa[d] != sb[d] && sa[d] != 1 && sb[d] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " + shape_to_string(a) +
                           " with " + shape_to_string(b));
    }
    out[d] = std::max(sa[d], sb[d]);
  }
  // Row-major strides, zeroed on broadcast axes.
  std::vector<std::size_t> stride_a(rank), stride_b(rank);
  std::size_t acc_a = 1, acc_b = 1;
  for (std::size_t d = rank; d-- > 0;) {
    stride_a[d] = sa[d] == 1 ? 0 : acc_a;
    stride_b[d] = sb[d] == 1 ? 0 : acc_b;
    acc_a *= sa[d];
    acc_b *= sb[d];
  }
  const std::size_t n = shape_numel(out);
  plan->a_off.resize(n);
  plan->b_off.resize(n);
  std::vector<std::size_t> index(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plan->a_off[i] = oa;
    plan->b_off[i] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      ++index[d];
      oa += stride_a[d];
      ob += stride_b[d];
      if (index[d] < out[d]) break;
      oa -= stride_a[d] * out[d];
      ob -= stride_b[d] * out[d];
      index[d] = 0;
    }
  }
  plan->shape = std::move(out);
  return plan;
}

// f(a, b) -> value; da(a, b, out) and db(a, b, out) are local partials.
template <class F, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f, DA da, DB db) {
  auto plan = plan_broadcast(a.shape(), b.shape(), name);
  const auto ad = a.data();
  const auto bd = b.data();
  const std::size_t n = shape_numel(plan->shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(ad[plan->ia(i)], bd[plan->ib(i)]);
  return Tensor::make_result(
      plan->shape, std::move(out), name, {a, b}, [plan, da, db](detail::Node& self) {
        const auto& x = parent_data(self, 0);
        const auto& y = parent_data(self, 1);
        auto* gx = parent_grad(self, 0);
        auto* gy = parent_grad(self, 1);
        const auto& g = self.grad;
        const auto& o = self.data;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t ia = plan->ia(i);
          const std::size_t ib = plan->ib(i);
          if (gx) (*gx)[ia] += g[i] * da(x[ia], y[ib], o[i]);
          if (gy) (*gy)[ib] += g[i] * db(x[ia], y[ib], o[i]);
        }
      });
}

// f(x) -> value; df(x, out) -> derivative.
template <class F, class DF>
Tensor unary_op(const Tensor& x, const char* name, F f, DF df) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = f(xd[i]);
  return Tensor::make_result(x.shape(), std::move(out), name, {x}, [df](detail::Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& xv = parent_data(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      (*gx)[i] += self.grad[i] * df(xv[i], self.data[i]);
    }
  });
}

// Decomposes `shape` around `axis` into outer * extent * inner.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_op(
      x, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor exp(const Tensor& x) {
  return unary_op(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double o) { return o; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      x, "softplus",
      [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor gelu(const Tensor& x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double a = 0.044715;
  return unary_op(
      x, "gelu",
      [](double v) { return 0.5 * v * (1.0 + std::tanh(c * (v + a * v * v * v))); },
      [](double v, double) {
        const double t = std::tanh(c * (v + a * v * v * v));
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * a * v * v);
      });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, "relu", [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
  return Tensor::make_result({n, m}, std::move(out), "matmul", {a, b},
                             [n, k, m](detail::Node& self) {
                               const auto& av = parent_data(self, 0);
                               const auto& bv = parent_data(self, 1);
                               const auto& g = self.grad;
                               if (auto* ga = parent_grad(self, 0)) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* grow = g.data() + i * m;
                                   for (std::size_t p = 0; p < k; ++p) {
                                     const double* brow = bv.data() + p * m;
                                     double acc = 0.0;
                                     for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
                                     (*ga)[i * k + p] += acc;
                                   }
                                 }
                               }
                               if (auto* gb = parent_grad(self, 1)) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* grow = g.data() + i * m;
                                   for (std::size_t p = 0; p < k; ++p) {
                                     const double aval = av[i * k + p];
                                     if (aval == 0.0) continue;
                                     double* gbrow = gb->data() + p * m;
                                     for (std::size_t j = 0; j < m; ++j) gbrow[j] += aval * grow[j];
                                   }
                                 }
                               }
                             });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) {
    throw DimensionError("transpose: expected a matrix, got " + shape_to_string(x.shape()));
  }
  const std::size_t r = x.dim(0), c = x.dim(1);
  const auto xd = x.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xd[i * c + j];
  return Tensor::make_result({c, r}, std::move(out), "transpose", {x},
                             [r, c](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j)
                                   (*gx)[i * c + j] += self.grad[j * r + i];
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_to_string(x.shape()) + " to " +
                         shape_to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), "reshape", {x},
                             [](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*gx)[i] += self.grad[i];
                             });
}

Tensor sum(const Tensor& x) {
  const auto xd = x.data();
  const double total = std::accumulate(xd.begin(), xd.end(), 0.0);
  return Tensor::make_result({1}, {total}, "sum", {x}, [](detail::Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const double g = self.grad[0];
    for (double& v : *gx) v += g;
  });
}

Tensor mean(const Tensor& x) {
  const auto n = static_cast<double>(x.numel());
  return scale(sum(x), 1.0 / n);
}

Tensor sum(const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis, "sum");
  Shape shape = x.shape();
  shape[axis] = 1;
  const auto xd = x.data();
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t e = 0; e < s.extent; ++e)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += xd[(o * s.extent + e) * s.inner + i];
  return Tensor::make_result(std::move(shape), std::move(out), "sum_axis", {x},
                             [s](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (std::size_t o = 0; o < s.outer; ++o)
                                 for (std::size_t e = 0; e < s.extent; ++e)
                                   for (std::size_t i = 0; i < s.inner; ++i)
                                     (*gx)[(o * s.extent + e) * s.inner + i] +=
                                         self.grad[o * s.inner + i];
                             });
}

namespace {

// Forward softmax over one axis; shared by softmax and log_softmax.
std::vector<double> softmax_forward(const Tensor& x, const AxisSplit& s, bool log_space) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t e) { return (o * s.extent + e) * s.inner + i; };
      double max = kNegInf;
      bool poisoned = false;
      for (std::size_t e = 0; e < s.extent; ++e) {
        const double v = xd[at(e)];
        if (std::isfinite(v)) max = std::max(max, v);
        poisoned = poisoned || std::isnan(v) || v == -kNegInf;
      }
      // NaN or +inf inputs propagate so callers see a non-finite result.
      if (poisoned) {
        for (std::size_t e = 0; e < s.extent; ++e) out[at(e)] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (max == kNegInf) {
        throw DegenerateDistributionError("softmax: every entry along axis is -inf");
      }
      double total = 0.0;
      for (std::size_t e = 0; e < s.extent; ++e) {
        const double v = xd[at(e)];
        total += v == kNegInf ? 0.0 : std::exp(v - max);
      }
      const double log_total = std::log(total);
      for (std::size_t e = 0; e < s.extent; ++e) {
        const double v = xd[at(e)];
        if (log_space) {
          out[at(e)] = v - max - log_total;
        } else {
          out[at(e)] = v == kNegInf ? 0.0 : std::exp(v - max) / total;
        }
      }
    }
  }
  return out;
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis, "softmax");
  auto out = softmax_forward(x, s, false);
  return Tensor::make_result(x.shape(), std::move(out), "softmax", {x},
                             [s](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               const auto& y = self.data;
                               const auto& g = self.grad;
                               for (std::size_t o = 0; o < s.outer; ++o) {
                                 for (std::size_t i = 0; i < s.inner; ++i) {
                                   auto at = [&](std::size_t e) {
                                     return (o * s.extent + e) * s.inner + i;
                                   };
                                   double dot = 0.0;
                                   for (std::size_t e = 0; e < s.extent; ++e)
                                     dot += g[at(e)] * y[at(e)];
                                   for (std::size_t e = 0; e < s.extent; ++e)
                                     (*gx)[at(e)] += y[at(e)] * (g[at(e)] - dot);
                                 }
                               }
                             });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis, "log_softmax");
  auto out = softmax_forward(x, s, true);
  return Tensor::make_result(x.shape(), std::move(out), "log_softmax", {x},
                             [s](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               const auto& y = self.data;
                               const auto& g = self.grad;
                               for (std::size_t o = 0; o < s.outer; ++o) {
                                 for (std::size_t i = 0; i < s.inner; ++i) {
                                   auto at = [&](std::size_t e) {
                                     return (o * s.extent + e) * s.inner + i;
                                   };
                                   double total = 0.0;
                                   for (std::size_t e = 0; e < s.extent; ++e) total += g[at(e)];
                                   for (std::size_t e = 0; e < s.extent; ++e)
                                     (*gx)[at(e)] += g[at(e)] - std::exp(y[at(e)]) * total;
                                 }
                               }
                             });
}

Tensor topk_mask(const Tensor& x, std::size_t k) {
  if (x.rank() == 0) throw DimensionError("topk_mask: scalar input");
  const std::size_t width = x.shape().back();
  if (k < 1 || k > width) {
    throw ContractError("topk_mask: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(width) + "]");
  }
  const std::size_t rows = x.numel() / width;
  const auto xd = x.data();
  std::vector<double> out(xd.size(), kNegInf);
  auto keep = std::make_shared<std::vector<std::size_t>>();
  keep->reserve(rows * k);
  std::vector<std::size_t> order(width);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * width;
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [row](std::size_t a, std::size_t b) {
                        // NaN ranks first so it reaches the output.
                        const bool na = std::isnan(row[a]), nb = std::isnan(row[b]);
                        if (na || nb) return na && (!nb || a < b);
                        return row[a] > row[b] || (row[a] == row[b] && a < b);
                      });
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t idx = r * width + order[j];
      out[idx] = xd[idx];
      keep->push_back(idx);
    }
  }
  return Tensor::make_result(x.shape(), std::move(out), "topk_mask", {x},
                             [keep](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (auto idx : *keep) (*gx)[idx] += self.grad[idx];
                             });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: input " + shape_to_string(x.shape()) + " with gain " +
                         shape_to_string(gain.shape()) + " and bias " +
                         shape_to_string(bias.shape()));
  }
  const std::size_t rows = x.numel() / d;
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  std::vector<double> out(xd.size());
  auto xhat = std::make_shared<std::vector<double>>(xd.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gd[j] + bd[j];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), "layer_norm", {x, gain, bias},
      [d, rows, xhat, inv_std](detail::Node& self) {
        const auto& g = self.grad;
        const auto& gain_v = parent_data(self, 1);
        auto* gx = parent_grad(self, 0);
        auto* gg = parent_grad(self, 1);
        auto* gb = parent_grad(self, 2);
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* grow = g.data() + r * d;
          const double* hrow = xhat->data() + r * d;
          double mean_dx = 0.0, mean_dxh = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            if (gg) (*gg)[j] += grow[j] * hrow[j];
            if (gb) (*gb)[j] += grow[j];
            dxhat[j] = grow[j] * gain_v[j];
            mean_dx += dxhat[j];
            mean_dxh += dxhat[j] * hrow[j];
          }
          if (!gx) continue;
          mean_dx /= static_cast<double>(d);
          mean_dxh /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (std::size_t j = 0; j < d; ++j)
            (*gx)[r * d + j] += is * (dxhat[j] - mean_dx - hrow[j] * mean_dxh);
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids) {
  if (table.rank() != 2) {
    throw DimensionError("embedding: table must be a matrix, got " +
                         shape_to_string(table.shape()));
  }
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  auto rows = std::make_shared<std::vector<std::int32_t>>(ids.begin(), ids.end());
  for (auto id : *rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ContractError("embedding: id " + std::to_string(id) + " outside vocabulary of " +
                          std::to_string(vocab));
    }
  }
  const auto td = table.data();
  std::vector<double> out(rows->size() * d);
  for (std::size_t t = 0; t < rows->size(); ++t)
    std::copy_n(td.data() + static_cast<std::size_t>((*rows)[t]) * d, d, out.data() + t * d);
  return Tensor::make_result({rows->size(), d}, std::move(out), "embedding", {table},
                             [rows, d](detail::Node& self) {
                               auto* gt = parent_grad(self, 0);
                               if (!gt) return;
                               for (std::size_t t = 0; t < rows->size(); ++t) {
                                 double* dst = gt->data() + static_cast<std::size_t>((*rows)[t]) * d;
                                 const double* src = self.grad.data() + t * d;
                                 for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                               }
                             });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& first = parts.front().shape();
  split_axis(first, axis, "concat");
  Shape shape = first;
  shape[axis] = 0;
  auto extents = std::make_shared<std::vector<std::size_t>>();
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) {
      throw DimensionError("concat: shape " + shape_to_string(s) + " incompatible with " +
                           shape_to_string(first) + " along axis " + std::to_string(axis));
    }
    extents->push_back(s[axis]);
    shape[axis] += s[axis];
  }
  const auto outer_split = split_axis(shape, axis, "concat");
  const std::size_t outer = outer_split.outer, inner = outer_split.inner;
  const std::size_t total = shape[axis];
  std::vector<double> out(shape_numel(shape));
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto pd = parts[pi].data();
    const std::size_t e = (*extents)[pi];
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pd.data() + o * e * inner, e * inner,
                  out.data() + (o * total + offset) * inner);
    offset += e;
  }
  return Tensor::make_result(std::move(shape), std::move(out), "concat", parts,
                             [extents, outer, inner, total](detail::Node& self) {
                               std::size_t off = 0;
                               for (std::size_t pi = 0; pi < extents->size(); ++pi) {
                                 const std::size_t e = (*extents)[pi];
                                 if (auto* gp = parent_grad(self, pi)) {
                                   for (std::size_t o = 0; o < outer; ++o) {
                                     const double* src =
                                         self.grad.data() + (o * total + off) * inner;
                                     double* dst = gp->data() + o * e * inner;
                                     for (std::size_t j = 0; j < e * inner; ++j) dst[j] += src[j];
                                   }
                                 }
                                 off += e;
                               }
                             });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const auto s = split_axis(x.shape(), axis, "slice");
  if (start + length > s.extent) {
    throw DimensionError("slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") exceeds axis " +
                         std::to_string(axis) + " of " + shape_to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  const auto xd = x.data();
  std::vector<double> out(s.outer * length * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xd.data() + (o * s.extent + start) * s.inner, length * s.inner,
                out.data() + o * length * s.inner);
  return Tensor::make_result(std::move(shape), std::move(out), "slice", {x},
                             [s, start, length](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (std::size_t o = 0; o < s.outer; ++o) {
                                 const double* src = self.grad.data() + o * length * s.inner;
                                 double* dst = gx->data() + (o * s.extent + start) * s.inner;
                                 for (std::size_t j = 0; j < length * s.inner; ++j) dst[j] += src[j];
                               }
                             });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("cross_entropy: logits " + shape_to_string(logits.shape()) + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  auto targets = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  for (int y : *targets) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ContractError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(c) + ")");
    }
  }
  auto logp = std::make_shared<std::vector<double>>(
      softmax_forward(logits, split_axis(logits.shape(), 1, "cross_entropy"), true));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total -= (*logp)[i * c + static_cast<std::size_t>((*targets)[i])];
  return Tensor::make_result({1}, {total / static_cast<double>(n)}, "cross_entropy", {logits},
                             [n, c, targets, logp](detail::Node& self) {
                               auto* gx = parent_grad(self, 0);
                               if (!gx) return;
                               const double g = self.grad[0] / static_cast<double>(n);
                               for (std::size_t i = 0; i < n; ++i) {
                                 for (std::size_t j = 0; j < c; ++j) {
                                   const double p = std::exp((*logp)[i * c + j]);
                                   const double onehot =
                                       static_cast<std::size_t>((*targets)[i]) == j ? 1.0 : 0.0;
                                   (*gx)[i * c + j] += g * (p - onehot);
                                 }
                               }
                             });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(x.numel());
  const double inv = 1.0 / (1.0 - rate);
  for (double& m : mask) m = keep(rng) ? inv : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add(matmul(x, weight), bias);
}

}  // namespace lifted
