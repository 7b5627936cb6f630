/*
 * Copyright 2026 The Layerwise Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "backend/onnx_ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "layerwise/common.hpp"

namespace layerwise::backend::onnx_detail {

const Attribute* Node::attr(const std::string& key) const {
  auto it = attributes.find(key);
  return it == attributes.end() ? nullptr : &it->second;
}

std::int64_t Node::attr_int(const std::string& key, std::int64_t fallback) const {
  const Attribute* a = attr(key);
  return a ? a->i : fallback;
}

float Node::attr_float(const std::string& key, float fallback) const {
  const Attribute* a = attr(key);
  return a ? a->f : fallback;
}

std::string Node::attr_string(const std::string& key, const std::string& fallback) const {
  const Attribute* a = attr(key);
  return a ? a->s : fallback;
}

std::optional<std::vector<std::int64_t>> Node::attr_ints(const std::string& key) const {
  const Attribute* a = attr(key);
  if (!a) return std::nullopt;
  return a->ints;
}

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void op_fail(const OpContext& ctx, const std::string& msg) {
  fail(ErrorCode::kInvalidArgument, ctx.node.op_type + ": " + msg);
}

const Tensor& need(const OpContext& ctx, const Inputs& in, std::size_t k) {
  if (k >= in.size() || in[k] == nullptr) op_fail(ctx, "missing input " + std::to_string(k));
  return *in[k];
}

const Tensor* opt(const Inputs& in, std::size_t k) { return k < in.size() ? in[k] : nullptr; }

std::int64_t norm_axis(const OpContext& ctx, std::int64_t axis, std::int64_t rank) {
  const std::int64_t a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= std::max<std::int64_t>(rank, 1)) {
    op_fail(ctx, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  return a;
}

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) s[d - 1] = s[d] * shape[d];
  return s;
}

Shape broadcast_shape(const OpContext& ctx, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::int64_t da = k < rank - a.size() ? 1 : a[k - (rank - a.size())];
    const std::int64_t db = k < rank - b.size() ? 1 : b[k - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      op_fail(ctx, "shapes " + shape_string(a) + " and " + shape_string(b) + " do not broadcast");
    }
    out[k] = da == 1 ? db : da;
  }
  return out;
}

// Element strides of `in` when viewed with shape `out` (broadcast dims get 0).
std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::int64_t> s(out.size(), 0);
  const auto own = strides_of(in);
  const std::size_t shift = out.size() - in.size();
  for (std::size_t k = 0; k < in.size(); ++k) s[k + shift] = in[k] == 1 ? 0 : own[k];
  return s;
}

// Walks `out` in row-major order, keeping one running offset per stride set.
template <class F>
void strided_loop(const Shape& out, const std::vector<std::vector<std::int64_t>>& strides, F&& f) {
  const std::int64_t n = numel(out);
  if (n == 0) return;
  const std::size_t rank = out.size();
  std::vector<std::int64_t> idx(rank, 0);
  std::vector<std::int64_t> off(strides.size(), 0);
  for (std::int64_t k = 0; k < n; ++k) {
    f(k, off);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      for (std::size_t j = 0; j < strides.size(); ++j) off[j] += strides[j][d];
      if (idx[d] < out[d]) break;
      for (std::size_t j = 0; j < strides.size(); ++j) off[j] -= strides[j][d] * out[d];
      idx[d] = 0;
    }
  }
}

Tensor as_float(const Tensor& t) {
  if (t.is_float()) return t;
  Tensor out;
  out.shape = t.shape;
  out.f.assign(t.i.begin(), t.i.end());
  return out;
}

template <class T, class F>
std::vector<T> broadcast_apply(const OpContext& ctx, const std::vector<T>& a, const Shape& as,
                               const std::vector<T>& b, const Shape& bs, Shape& out_shape, F&& fn) {
  out_shape = broadcast_shape(ctx, as, bs);
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
  if (as == bs) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fn(a[k], b[k]);
  } else if (b.size() == 1 && as == out_shape) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fn(a[k], b[0]);
  } else if (a.size() == 1 && bs == out_shape) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fn(a[0], b[k]);
  } else {
    strided_loop(out_shape, {broadcast_strides(as, out_shape), broadcast_strides(bs, out_shape)},
                 [&](std::int64_t k, const std::vector<std::int64_t>& off) {
                   out[static_cast<std::size_t>(k)] =
                       fn(a[static_cast<std::size_t>(off[0])], b[static_cast<std::size_t>(off[1])]);
                 });
  }
  return out;
}

enum class Arith { kAdd, kSub, kMul, kDiv, kPow, kMod };

std::int64_t ipow(std::int64_t base, std::int64_t exp) {
  if (exp < 0) return 0;
  std::int64_t r = 1;
  while (exp--) r *= base;
  return r;
}

std::vector<Tensor> arith(const OpContext& ctx, const Inputs& in, Arith op) {
  const Tensor& a = need(ctx, in, 0);
  const Tensor& b = need(ctx, in, 1);
  Tensor out;
  if (op == Arith::kPow && a.is_float()) {
    const Tensor bf = as_float(b);
    out.dtype = DType::kFloat;
    out.f = broadcast_apply(ctx, a.f, a.shape, bf.f, bf.shape, out.shape, [](float x, float y) {
      if (y == 2.0f) return x * x;
      if (y == 0.5f) return std::sqrt(x);
      return std::pow(x, y);
    });
    return {out};
  }
  if (a.is_float() || b.is_float()) {
    const Tensor af = as_float(a);
    const Tensor bf = as_float(b);
    out.dtype = DType::kFloat;
    out.f = broadcast_apply(ctx, af.f, af.shape, bf.f, bf.shape, out.shape, [op](float x, float y) {
      switch (op) {
        case Arith::kAdd:
          return x + y;
        case Arith::kSub:
          return x - y;
        case Arith::kMul:
          return x * y;
        case Arith::kDiv:
          return x / y;
        case Arith::kPow:
          return std::pow(x, y);
        case Arith::kMod:
          return std::fmod(x, y);
      }
      return 0.0f;
    });
    return {out};
  }
  if (op == Arith::kDiv || op == Arith::kMod) {
    for (auto v : b.i) {
      if (v == 0) op_fail(ctx, "integer division by zero");
    }
  }
  const bool fmod = ctx.node.attr_int("fmod", 0) != 0;
  out.dtype = DType::kInt64;
  out.i = broadcast_apply(ctx, a.i, a.shape, b.i, b.shape, out.shape,
                          [op, fmod](std::int64_t x, std::int64_t y) -> std::int64_t {
                            switch (op) {
                              case Arith::kAdd:
                                return x + y;
                              case Arith::kSub:
                                return x - y;
                              case Arith::kMul:
                                return x * y;
                              case Arith::kDiv:
                                return x / y;
                              case Arith::kPow:
                                return ipow(x, y);
                              case Arith::kMod: {
                                std::int64_t r = x % y;
                                if (!fmod && r != 0 && ((r < 0) != (y < 0))) r += y;
                                return r;
                              }
                            }
                            return 0;
                          });
  return {out};
}

std::vector<Tensor> op_add(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kAdd); }
std::vector<Tensor> op_sub(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kSub); }
std::vector<Tensor> op_mul(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kMul); }
std::vector<Tensor> op_div(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kDiv); }
std::vector<Tensor> op_pow(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kPow); }
std::vector<Tensor> op_mod(const OpContext& c, const Inputs& in) { return arith(c, in, Arith::kMod); }

enum class Cmp { kEq, kLt, kGt, kLe, kGe };

std::vector<Tensor> compare(const OpContext& ctx, const Inputs& in, Cmp op) {
  const Tensor& a = need(ctx, in, 0);
  const Tensor& b = need(ctx, in, 1);
  auto test = [op](auto x, auto y) -> std::int64_t {
    switch (op) {
      case Cmp::kEq:
        return x == y;
      case Cmp::kLt:
        return x < y;
      case Cmp::kGt:
        return x > y;
      case Cmp::kLe:
        return x <= y;
      case Cmp::kGe:
        return x >= y;
    }
    return 0;
  };
  Tensor out;
  out.dtype = DType::kBool;
  if (a.is_float() || b.is_float()) {
    const Tensor af = as_float(a);
    const Tensor bf = as_float(b);
    Shape shape;
    const auto r = broadcast_apply(ctx, af.f, af.shape, bf.f, bf.shape, shape,
                                   [&](float x, float y) { return static_cast<float>(test(x, y)); });
    out.shape = shape;
    out.i.assign(r.begin(), r.end());
  } else {
    out.i = broadcast_apply(ctx, a.i, a.shape, b.i, b.shape, out.shape, test);
  }
  return {out};
}

std::vector<Tensor> op_equal(const OpContext& c, const Inputs& in) { return compare(c, in, Cmp::kEq); }
std::vector<Tensor> op_less(const OpContext& c, const Inputs& in) { return compare(c, in, Cmp::kLt); }
std::vector<Tensor> op_greater(const OpContext& c, const Inputs& in) { return compare(c, in, Cmp::kGt); }
std::vector<Tensor> op_less_eq(const OpContext& c, const Inputs& in) { return compare(c, in, Cmp::kLe); }
std::vector<Tensor> op_greater_eq(const OpContext& c, const Inputs& in) { return compare(c, in, Cmp::kGe); }

std::vector<Tensor> logical(const OpContext& ctx, const Inputs& in, int op) {
  const Tensor& a = need(ctx, in, 0);
  const Tensor& b = need(ctx, in, 1);
  Tensor out;
  out.dtype = DType::kBool;
  out.i = broadcast_apply(ctx, a.i, a.shape, b.i, b.shape, out.shape, [op](std::int64_t x, std::int64_t y) {
    const bool p = x != 0, q = y != 0;
    return static_cast<std::int64_t>(op == 0 ? (p && q) : op == 1 ? (p || q) : (p != q));
  });
  return {out};
}

std::vector<Tensor> op_and(const OpContext& c, const Inputs& in) { return logical(c, in, 0); }
std::vector<Tensor> op_or(const OpContext& c, const Inputs& in) { return logical(c, in, 1); }
std::vector<Tensor> op_xor(const OpContext& c, const Inputs& in) { return logical(c, in, 2); }

std::vector<Tensor> op_not(const OpContext& ctx, const Inputs& in) {
  Tensor out = need(ctx, in, 0);
  out.dtype = DType::kBool;
  for (auto& v : out.i) v = v == 0;
  return {out};
}

std::vector<Tensor> op_where(const OpContext& ctx, const Inputs& in) {
  const Tensor& cond = need(ctx, in, 0);
  const Tensor& x = need(ctx, in, 1);
  const Tensor& y = need(ctx, in, 2);
  if (x.dtype != y.dtype) op_fail(ctx, "branch dtypes differ");
  const Shape out_shape = broadcast_shape(ctx, broadcast_shape(ctx, cond.shape, x.shape), y.shape);
  Tensor out;
  out.dtype = x.dtype;
  out.shape = out_shape;
  const auto n = static_cast<std::size_t>(numel(out_shape));
  if (x.is_float()) {
    out.f.resize(n);
  } else {
    out.i.resize(n);
  }
  strided_loop(out_shape,
               {broadcast_strides(cond.shape, out_shape), broadcast_strides(x.shape, out_shape),
                broadcast_strides(y.shape, out_shape)},
               [&](std::int64_t k, const std::vector<std::int64_t>& off) {
                 const bool pick = cond.i[static_cast<std::size_t>(off[0])] != 0;
                 const auto src = static_cast<std::size_t>(pick ? off[1] : off[2]);
                 const Tensor& t = pick ? x : y;
                 if (out.is_float()) {
                   out.f[static_cast<std::size_t>(k)] = t.f[src];
                 } else {
                   out.i[static_cast<std::size_t>(k)] = t.i[src];
                 }
               });
  return {out};
}

template <class F>
std::vector<Tensor> unary_float(const OpContext& ctx, const Inputs& in, F&& fn) {
  Tensor out = as_float(need(ctx, in, 0));
  for (auto& v : out.f) v = fn(v);
  return {out};
}

std::vector<Tensor> op_sqrt(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::sqrt(v); });
}
std::vector<Tensor> op_exp(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::exp(v); });
}
std::vector<Tensor> op_log(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::log(v); });
}
std::vector<Tensor> op_erf(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::erf(v); });
}
std::vector<Tensor> op_tanh(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::tanh(v); });
}
std::vector<Tensor> op_sigmoid(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}
std::vector<Tensor> op_relu(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return v > 0.0f ? v : 0.0f; });
}
std::vector<Tensor> op_reciprocal(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return 1.0f / v; });
}
std::vector<Tensor> op_floor(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::floor(v); });
}
std::vector<Tensor> op_ceil(const OpContext& c, const Inputs& in) {
  return unary_float(c, in, [](float v) { return std::ceil(v); });
}

std::vector<Tensor> op_neg(const OpContext& ctx, const Inputs& in) {
  Tensor out = need(ctx, in, 0);
  for (auto& v : out.f) v = -v;
  for (auto& v : out.i) v = -v;
  return {out};
}

std::vector<Tensor> op_abs(const OpContext& ctx, const Inputs& in) {
  Tensor out = need(ctx, in, 0);
  for (auto& v : out.f) v = std::fabs(v);
  for (auto& v : out.i) v = v < 0 ? -v : v;
  return {out};
}

std::vector<Tensor> op_gelu(const OpContext& ctx, const Inputs& in) {
  const bool tanh_approx = ctx.node.attr_string("approximate", "none") == "tanh";
  return unary_float(ctx, in, [tanh_approx](float v) {
    const double x = v;
    if (tanh_approx) {
      constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
      return static_cast<float>(0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x))));
    }
    return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
  });
}

std::vector<Tensor> op_clip(const OpContext& ctx, const Inputs& in) {
  float lo = -std::numeric_limits<float>::infinity();
  float hi = std::numeric_limits<float>::infinity();
  if (ctx.opset < 11) {
    lo = ctx.node.attr_float("min", lo);
    hi = ctx.node.attr_float("max", hi);
  } else {
    if (const Tensor* t = opt(in, 1)) lo = static_cast<float>(t->double_at(0));
    if (const Tensor* t = opt(in, 2)) hi = static_cast<float>(t->double_at(0));
  }
  Tensor out = need(ctx, in, 0);
  for (auto& v : out.f) v = std::min(std::max(v, lo), hi);
  for (auto& v : out.i) {
    v = std::min<std::int64_t>(std::max<std::int64_t>(v, static_cast<std::int64_t>(std::max(lo, -9.2e18f))),
                               static_cast<std::int64_t>(std::min(hi, 9.2e18f)));
  }
  return {out};
}

std::vector<Tensor> op_identity(const OpContext& ctx, const Inputs& in) { return {need(ctx, in, 0)}; }

std::vector<Tensor> op_dropout(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  std::vector<Tensor> out{x};
  if (ctx.node.outputs.size() > 1) {
    out.push_back(Tensor::bools(x.shape, std::vector<std::int64_t>(static_cast<std::size_t>(x.size()), 1)));
  }
  return out;
}

std::vector<Tensor> op_constant(const OpContext& ctx, const Inputs&) {
  for (const auto& [key, a] : ctx.node.attributes) {
    if (key == "value") return {a.t};
    if (key == "value_float") return {Tensor::scalar(a.f)};
    if (key == "value_int") return {Tensor::ints({}, {a.i})};
    if (key == "value_floats") return {Tensor::floats({static_cast<std::int64_t>(a.floats.size())}, a.floats)};
    if (key == "value_ints") return {Tensor::ints({static_cast<std::int64_t>(a.ints.size())}, a.ints)};
  }
  op_fail(ctx, "no supported value attribute");
}

// Batched matrix product with numpy broadcasting over leading dims.
std::vector<Tensor> op_matmul(const OpContext& ctx, const Inputs& in) {
  const Tensor a = as_float(need(ctx, in, 0));
  const Tensor b = as_float(need(ctx, in, 1));
  if (a.rank() == 0 || b.rank() == 0) op_fail(ctx, "scalar operand");
  Shape as = a.shape, bs = b.shape;
  const bool a_vec = as.size() == 1, b_vec = bs.size() == 1;
  if (a_vec) as.insert(as.begin(), 1);
  if (b_vec) bs.push_back(1);
  const std::int64_t m = as[as.size() - 2], k = as.back();
  const std::int64_t k2 = bs[bs.size() - 2], n = bs.back();
  if (k != k2) op_fail(ctx, "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(b.shape));
  const Shape batch_a(as.begin(), as.end() - 2), batch_b(bs.begin(), bs.end() - 2);
  const Shape batch = broadcast_shape(ctx, batch_a, batch_b);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out;
  out.shape = out_shape;
  out.f.assign(static_cast<std::size_t>(numel(out_shape)), 0.0f);
  auto sa = broadcast_strides(batch_a, batch);
  auto sb = broadcast_strides(batch_b, batch);
  for (auto& s : sa) s *= m * k;
  for (auto& s : sb) s *= k * n;
  const auto gemm = [&](std::int64_t idx, std::int64_t oa, std::int64_t ob) {
    Eigen::Map<const RowMatrix> ma(a.f.data() + oa, m, k);
    Eigen::Map<const RowMatrix> mb(b.f.data() + ob, k, n);
    Eigen::Map<RowMatrix> mc(out.f.data() + idx * m * n, m, n);
    mc.noalias() = ma * mb;
  };
  if (batch.empty()) {
    gemm(0, 0, 0);
  } else {
    strided_loop(batch, {sa, sb},
                 [&](std::int64_t idx, const std::vector<std::int64_t>& off) { gemm(idx, off[0], off[1]); });
  }
  if (a_vec) out_shape.erase(out_shape.end() - 2);
  if (b_vec) out_shape.pop_back();
  out.shape = out_shape;
  return {out};
}

std::vector<Tensor> op_gemm(const OpContext& ctx, const Inputs& in) {
  const Tensor a = as_float(need(ctx, in, 0));
  const Tensor b = as_float(need(ctx, in, 1));
  if (a.rank() != 2 || b.rank() != 2) op_fail(ctx, "operands must be rank 2");
  const bool ta = ctx.node.attr_int("transA", 0) != 0;
  const bool tb = ctx.node.attr_int("transB", 0) != 0;
  const float alpha = ctx.node.attr_float("alpha", 1.0f);
  const float beta = ctx.node.attr_float("beta", 1.0f);
  Eigen::Map<const RowMatrix> ma(a.f.data(), a.shape[0], a.shape[1]);
  Eigen::Map<const RowMatrix> mb(b.f.data(), b.shape[0], b.shape[1]);
  RowMatrix y;
  if (ta && tb) {
    y.noalias() = ma.transpose() * mb.transpose();
  } else if (ta) {
    y.noalias() = ma.transpose() * mb;
  } else if (tb) {
    y.noalias() = ma * mb.transpose();
  } else {
    if (ma.cols() != mb.rows()) op_fail(ctx, "inner dimensions differ");
    y.noalias() = ma * mb;
  }
  if (alpha != 1.0f) y *= alpha;
  Tensor out;
  out.shape = {y.rows(), y.cols()};
  out.f.assign(y.data(), y.data() + y.size());
  if (const Tensor* c = opt(in, 2)) {
    const Tensor cf = as_float(*c);
    Shape shape;
    out.f = broadcast_apply(ctx, out.f, out.shape, cf.f, cf.shape, shape,
                            [beta](float x, float z) { return x + beta * z; });
    if (shape != out.shape) op_fail(ctx, "bias does not broadcast to the output");
  }
  return {out};
}

// 2-D convolution via im2col and a per-group matrix product.
std::vector<Tensor> op_conv(const OpContext& ctx, const Inputs& in) {
  const Tensor x = as_float(need(ctx, in, 0));
  const Tensor w = as_float(need(ctx, in, 1));
  const Tensor* bias = opt(in, 2);
  if (x.rank() != 4 || w.rank() != 4) op_fail(ctx, "only 2-D convolution is supported");
  const std::int64_t batch = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const std::int64_t groups = ctx.node.attr_int("group", 1);
  if (groups <= 0 || cin % groups != 0 || cout % groups != 0 || w.shape[1] != cin / groups) {
    op_fail(ctx, "channel counts do not match the group layout");
  }
  const auto strides = ctx.node.attr_ints("strides").value_or(std::vector<std::int64_t>{1, 1});
  const auto dil = ctx.node.attr_ints("dilations").value_or(std::vector<std::int64_t>{1, 1});
  auto pads = ctx.node.attr_ints("pads").value_or(std::vector<std::int64_t>{0, 0, 0, 0});
  if (strides.size() != 2 || dil.size() != 2 || pads.size() != 4) op_fail(ctx, "bad strides, dilations or pads");
  const std::int64_t ekh = (kh - 1) * dil[0] + 1, ekw = (kw - 1) * dil[1] + 1;
  const std::string auto_pad = ctx.node.attr_string("auto_pad", "NOTSET");
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    const std::int64_t dims[2] = {h, wd};
    const std::int64_t ek[2] = {ekh, ekw};
    for (int d = 0; d < 2; ++d) {
      const std::int64_t o = (dims[d] + strides[d] - 1) / strides[d];
      const std::int64_t total = std::max<std::int64_t>(0, (o - 1) * strides[d] + ek[d] - dims[d]);
      const std::int64_t small = total / 2, big = total - small;
      pads[d] = auto_pad == "SAME_UPPER" ? small : big;
      pads[d + 2] = auto_pad == "SAME_UPPER" ? big : small;
    }
  } else if (auto_pad == "VALID") {
    pads = {0, 0, 0, 0};
  }
  const std::int64_t oh = (h + pads[0] + pads[2] - ekh) / strides[0] + 1;
  const std::int64_t ow = (wd + pads[1] + pads[3] - ekw) / strides[1] + 1;
  if (oh <= 0 || ow <= 0) op_fail(ctx, "kernel larger than padded input");
  const std::int64_t cg = cin / groups, mg = cout / groups;
  const std::int64_t rows = cg * kh * kw, cols = oh * ow;
  Tensor out;
  out.shape = {batch, cout, oh, ow};
  out.f.assign(static_cast<std::size_t>(numel(out.shape)), 0.0f);
  RowMatrix col(rows, cols);
  for (std::int64_t nb = 0; nb < batch; ++nb) {
    for (std::int64_t g = 0; g < groups; ++g) {
      for (std::int64_t c = 0; c < cg; ++c) {
        const float* plane = x.f.data() + ((nb * cin) + g * cg + c) * h * wd;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            float* dst = col.data() + ((c * kh + ky) * kw + kx) * cols;
            for (std::int64_t oy = 0; oy < oh; ++oy) {
              const std::int64_t iy = oy * strides[0] - pads[0] + ky * dil[0];
              for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t ix = ox * strides[1] - pads[1] + kx * dil[1];
                dst[oy * ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? plane[iy * wd + ix] : 0.0f;
              }
            }
          }
        }
      }
      Eigen::Map<const RowMatrix> wm(w.f.data() + g * mg * rows, mg, rows);
      Eigen::Map<RowMatrix> om(out.f.data() + (nb * cout + g * mg) * cols, mg, cols);
      om.noalias() = wm * col;
    }
    if (bias) {
      const Tensor bf = as_float(*bias);
      if (bf.size() != cout) op_fail(ctx, "bias length differs from output channels");
      for (std::int64_t m = 0; m < cout; ++m) {
        float* dst = out.f.data() + (nb * cout + m) * cols;
        for (std::int64_t k = 0; k < cols; ++k) dst[k] += bf.f[static_cast<std::size_t>(m)];
      }
    }
  }
  return {out};
}

std::vector<Tensor> softmax_impl(const OpContext& ctx, const Inputs& in, bool log_output) {
  Tensor x = as_float(need(ctx, in, 0));
  const std::int64_t rank = x.rank();
  const std::int64_t axis = norm_axis(ctx, ctx.node.attr_int("axis", ctx.opset >= 13 ? -1 : 1), rank);
  // Before opset 13 the input is coerced to 2-D at `axis`; from 13 on only that axis is normalized.
  std::int64_t outer = 1, len = 1, inner = 1;
  for (std::int64_t d = 0; d < rank; ++d) {
    if (d < axis) {
      outer *= x.shape[static_cast<std::size_t>(d)];
    } else if (d == axis || ctx.opset < 13) {
      len *= x.shape[static_cast<std::size_t>(d)];
    } else {
      inner *= x.shape[static_cast<std::size_t>(d)];
    }
  }
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      float* base = x.f.data() + o * len * inner + i;
      float mx = -std::numeric_limits<float>::infinity();
      for (std::int64_t k = 0; k < len; ++k) mx = std::max(mx, base[k * inner]);
      double sum = 0.0;
      for (std::int64_t k = 0; k < len; ++k) sum += std::exp(static_cast<double>(base[k * inner]) - mx);
      for (std::int64_t k = 0; k < len; ++k) {
        const double z = static_cast<double>(base[k * inner]) - mx;
        base[k * inner] = static_cast<float>(log_output ? z - std::log(sum) : std::exp(z) / sum);
      }
    }
  }
  return {x};
}

std::vector<Tensor> op_softmax(const OpContext& c, const Inputs& in) { return softmax_impl(c, in, false); }
std::vector<Tensor> op_log_softmax(const OpContext& c, const Inputs& in) { return softmax_impl(c, in, true); }

std::vector<Tensor> op_layer_norm(const OpContext& ctx, const Inputs& in) {
  const Tensor x = as_float(need(ctx, in, 0));
  const std::int64_t rank = x.rank();
  const std::int64_t axis = norm_axis(ctx, ctx.node.attr_int("axis", -1), rank);
  const double eps = ctx.node.attr_float("epsilon", 1e-5f);
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t d = 0; d < rank; ++d) (d < axis ? outer : inner) *= x.shape[static_cast<std::size_t>(d)];
  const Tensor scale = as_float(need(ctx, in, 1));
  const Tensor* bias_in = opt(in, 2);
  const Tensor bias = bias_in ? as_float(*bias_in) : Tensor();
  if (scale.size() != inner && scale.size() != 1) op_fail(ctx, "scale does not match normalized shape");
  if (bias_in && bias.size() != inner && bias.size() != 1) op_fail(ctx, "bias does not match normalized shape");
  Tensor y;
  y.shape = x.shape;
  y.f.resize(x.f.size());
  for (std::int64_t o = 0; o < outer; ++o) {
    const float* src = x.f.data() + o * inner;
    float* dst = y.f.data() + o * inner;
    double mean = 0.0;
    for (std::int64_t k = 0; k < inner; ++k) mean += src[k];
    mean /= static_cast<double>(inner);
    double var = 0.0;
    for (std::int64_t k = 0; k < inner; ++k) var += (src[k] - mean) * (src[k] - mean);
    var /= static_cast<double>(inner);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::int64_t k = 0; k < inner; ++k) {
      const auto sk = static_cast<std::size_t>(scale.size() == 1 ? 0 : k);
      double v = (src[k] - mean) * inv * scale.f[sk];
      if (bias_in) v += bias.f[static_cast<std::size_t>(bias.size() == 1 ? 0 : k)];
      dst[k] = static_cast<float>(v);
    }
  }
  return {y};
}

enum class Reduce { kSum, kMean, kMax, kMin, kProd };

std::vector<Tensor> reduce(const OpContext& ctx, const Inputs& in, Reduce op) {
  const Tensor x = as_float(need(ctx, in, 0));
  const std::int64_t rank = x.rank();
  std::optional<std::vector<std::int64_t>> axes;
  const bool axes_as_input = op == Reduce::kSum ? ctx.opset >= 13 : ctx.opset >= 18;
  if (axes_as_input) {
    if (const Tensor* t = opt(in, 1)) axes = t->to_ints();
  } else {
    axes = ctx.node.attr_ints("axes");
  }
  const bool keep = ctx.node.attr_int("keepdims", 1) != 0;
  if ((!axes || axes->empty()) && ctx.node.attr_int("noop_with_empty_axes", 0) != 0) return {x};
  std::vector<bool> reduced(static_cast<std::size_t>(rank), !axes || axes->empty());
  if (axes) {
    for (auto a : *axes) reduced[static_cast<std::size_t>(norm_axis(ctx, a, rank))] = true;
  }
  Shape kept_shape;  // output shape with reduced dims as 1
  for (std::int64_t d = 0; d < rank; ++d) {
    kept_shape.push_back(reduced[static_cast<std::size_t>(d)] ? 1 : x.shape[static_cast<std::size_t>(d)]);
  }
  const auto out_n = static_cast<std::size_t>(numel(kept_shape));
  double init = 0.0;
  if (op == Reduce::kMax) init = -std::numeric_limits<double>::infinity();
  if (op == Reduce::kMin) init = std::numeric_limits<double>::infinity();
  if (op == Reduce::kProd) init = 1.0;
  std::vector<double> acc(out_n, init);
  const auto out_strides = broadcast_strides(kept_shape, x.shape);
  strided_loop(x.shape, {out_strides}, [&](std::int64_t k, const std::vector<std::int64_t>& off) {
    double& a = acc[static_cast<std::size_t>(off[0])];
    const double v = x.f[static_cast<std::size_t>(k)];
    switch (op) {
      case Reduce::kSum:
      case Reduce::kMean:
        a += v;
        break;
      case Reduce::kMax:
        a = std::max(a, v);
        break;
      case Reduce::kMin:
        a = std::min(a, v);
        break;
      case Reduce::kProd:
        a *= v;
        break;
    }
  });
  if (op == Reduce::kMean) {
    const double count = static_cast<double>(x.size()) / static_cast<double>(std::max<std::size_t>(out_n, 1));
    for (auto& a : acc) a /= count;
  }
  Tensor out;
  if (keep) {
    out.shape = kept_shape;
  } else {
    for (std::int64_t d = 0; d < rank; ++d) {
      if (!reduced[static_cast<std::size_t>(d)]) out.shape.push_back(x.shape[static_cast<std::size_t>(d)]);
    }
  }
  out.f.assign(acc.begin(), acc.end());
  return {out};
}

std::vector<Tensor> op_reduce_sum(const OpContext& c, const Inputs& in) { return reduce(c, in, Reduce::kSum); }
std::vector<Tensor> op_reduce_mean(const OpContext& c, const Inputs& in) { return reduce(c, in, Reduce::kMean); }
std::vector<Tensor> op_reduce_max(const OpContext& c, const Inputs& in) { return reduce(c, in, Reduce::kMax); }
std::vector<Tensor> op_reduce_min(const OpContext& c, const Inputs& in) { return reduce(c, in, Reduce::kMin); }
std::vector<Tensor> op_reduce_prod(const OpContext& c, const Inputs& in) { return reduce(c, in, Reduce::kProd); }

Tensor with_shape(Tensor t, Shape shape) {
  t.shape = std::move(shape);
  return t;
}

std::vector<Tensor> op_reshape(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  auto target = need(ctx, in, 1).to_ints();
  const bool allow_zero = ctx.node.attr_int("allowzero", 0) != 0;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t d = 0; d < target.size(); ++d) {
    if (target[d] == 0 && !allow_zero) {
      if (d >= x.shape.size()) op_fail(ctx, "zero dimension copies a missing input dim");
      target[d] = x.shape[d];
    }
    if (target[d] == -1) {
      if (infer >= 0) op_fail(ctx, "more than one inferred dimension");
      infer = static_cast<int>(d);
    } else {
      known *= target[d];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.size() % known != 0) op_fail(ctx, "cannot infer dimension for " + shape_string(x.shape));
    target[static_cast<std::size_t>(infer)] = x.size() / known;
  }
  if (numel(target) != x.size()) {
    op_fail(ctx, "cannot reshape " + shape_string(x.shape) + " to " + shape_string(target));
  }
  return {with_shape(x, target)};
}

std::vector<Tensor> op_flatten(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  std::int64_t axis = ctx.node.attr_int("axis", 1);
  if (axis < 0) axis += x.rank();
  if (axis < 0 || axis > x.rank()) op_fail(ctx, "axis out of range");
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= x.shape[static_cast<std::size_t>(d)];
  return {with_shape(x, {outer, outer == 0 ? 0 : x.size() / outer})};
}

std::vector<std::int64_t> axes_from(const OpContext& ctx, const Inputs& in, int opset_as_input) {
  if (ctx.opset >= opset_as_input) {
    if (const Tensor* t = opt(in, 1)) return t->to_ints();
    return {};
  }
  return ctx.node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
}

std::vector<Tensor> op_squeeze(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const auto axes = axes_from(ctx, in, 13);
  std::vector<bool> drop(x.shape.size(), false);
  if (axes.empty()) {
    for (std::size_t d = 0; d < x.shape.size(); ++d) drop[d] = x.shape[d] == 1;
  } else {
    for (auto a : axes) {
      const auto d = static_cast<std::size_t>(norm_axis(ctx, a, x.rank()));
      if (x.shape[d] != 1) op_fail(ctx, "cannot squeeze a dimension of size " + std::to_string(x.shape[d]));
      drop[d] = true;
    }
  }
  Shape shape;
  for (std::size_t d = 0; d < x.shape.size(); ++d) {
    if (!drop[d]) shape.push_back(x.shape[d]);
  }
  return {with_shape(x, shape)};
}

std::vector<Tensor> op_unsqueeze(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const auto axes = axes_from(ctx, in, 13);
  const std::int64_t rank = x.rank() + static_cast<std::int64_t>(axes.size());
  std::vector<bool> inserted(static_cast<std::size_t>(rank), false);
  for (auto a : axes) {
    const auto d = static_cast<std::size_t>(norm_axis(ctx, a, rank));
    if (inserted[d]) op_fail(ctx, "repeated axis");
    inserted[d] = true;
  }
  Shape shape;
  std::size_t src = 0;
  for (std::size_t d = 0; d < inserted.size(); ++d) shape.push_back(inserted[d] ? 1 : x.shape[src++]);
  return {with_shape(x, shape)};
}

std::vector<Tensor> op_transpose(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const std::size_t rank = x.shape.size();
  std::vector<std::int64_t> perm(rank);
  if (auto p = ctx.node.attr_ints("perm")) {
    perm = *p;
  } else {
    for (std::size_t d = 0; d < rank; ++d) perm[d] = static_cast<std::int64_t>(rank - 1 - d);
  }
  if (perm.size() != rank) op_fail(ctx, "perm length differs from rank");
  const auto in_strides = strides_of(x.shape);
  Shape out_shape(rank);
  std::vector<std::int64_t> walk(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    const auto p = static_cast<std::size_t>(norm_axis(ctx, perm[d], static_cast<std::int64_t>(rank)));
    out_shape[d] = x.shape[p];
    walk[d] = in_strides[p];
  }
  Tensor out;
  out.dtype = x.dtype;
  out.shape = out_shape;
  if (x.is_float()) {
    out.f.resize(x.f.size());
  } else {
    out.i.resize(x.i.size());
  }
  strided_loop(out_shape, {walk}, [&](std::int64_t k, const std::vector<std::int64_t>& off) {
    if (out.is_float()) {
      out.f[static_cast<std::size_t>(k)] = x.f[static_cast<std::size_t>(off[0])];
    } else {
      out.i[static_cast<std::size_t>(k)] = x.i[static_cast<std::size_t>(off[0])];
    }
  });
  return {out};
}

std::vector<Tensor> op_concat(const OpContext& ctx, const Inputs& in) {
  if (in.empty()) op_fail(ctx, "no inputs");
  std::vector<const Tensor*> parts;
  for (const Tensor* t : in) {
    if (t) parts.push_back(t);
  }
  const Tensor& first = *parts.front();
  const std::int64_t rank = first.rank();
  const auto axis = static_cast<std::size_t>(norm_axis(ctx, ctx.node.attr_int("axis", 0), rank));
  const bool any_float = std::any_of(parts.begin(), parts.end(), [](const Tensor* t) { return t->is_float(); });
  Shape out_shape = first.shape;
  out_shape[axis] = 0;
  for (const Tensor* t : parts) {
    if (t->rank() != rank) op_fail(ctx, "ranks differ");
    for (std::size_t d = 0; d < static_cast<std::size_t>(rank); ++d) {
      if (d != axis && t->shape[d] != first.shape[d]) op_fail(ctx, "non-axis dimensions differ");
    }
    out_shape[axis] += t->shape[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < static_cast<std::size_t>(rank); ++d) {
    if (d < axis) outer *= out_shape[d];
    if (d > axis) inner *= out_shape[d];
  }
  Tensor out;
  out.dtype = any_float ? DType::kFloat : first.dtype;
  out.shape = out_shape;
  const auto total = static_cast<std::size_t>(numel(out_shape));
  if (any_float) {
    out.f.reserve(total);
  } else {
    out.i.reserve(total);
  }
  std::vector<Tensor> converted;
  converted.reserve(parts.size());
  for (const Tensor* t : parts) converted.push_back(any_float ? as_float(*t) : *t);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (const Tensor& t : converted) {
      const std::int64_t chunk = t.shape[axis] * inner;
      if (any_float) {
        out.f.insert(out.f.end(), t.f.begin() + o * chunk, t.f.begin() + (o + 1) * chunk);
      } else {
        out.i.insert(out.i.end(), t.i.begin() + o * chunk, t.i.begin() + (o + 1) * chunk);
      }
    }
  }
  return {out};
}

// Strided view described by a start offset and a per-output-dim walk.
Tensor gather_strided(const Tensor& x, const Shape& out_shape, std::int64_t base,
                      const std::vector<std::int64_t>& walk) {
  Tensor out;
  out.dtype = x.dtype;
  out.shape = out_shape;
  const auto n = static_cast<std::size_t>(numel(out_shape));
  if (x.is_float()) {
    out.f.resize(n);
  } else {
    out.i.resize(n);
  }
  strided_loop(out_shape, {walk}, [&](std::int64_t k, const std::vector<std::int64_t>& off) {
    const auto src = static_cast<std::size_t>(base + off[0]);
    if (out.is_float()) {
      out.f[static_cast<std::size_t>(k)] = x.f[src];
    } else {
      out.i[static_cast<std::size_t>(k)] = x.i[src];
    }
  });
  return out;
}

std::vector<Tensor> op_slice(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const std::int64_t rank = x.rank();
  std::vector<std::int64_t> starts, ends, axes, steps;
  if (ctx.opset < 10) {
    starts = ctx.node.attr_ints("starts").value_or(std::vector<std::int64_t>{});
    ends = ctx.node.attr_ints("ends").value_or(std::vector<std::int64_t>{});
    axes = ctx.node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  } else {
    starts = need(ctx, in, 1).to_ints();
    ends = need(ctx, in, 2).to_ints();
    if (const Tensor* t = opt(in, 3)) axes = t->to_ints();
    if (const Tensor* t = opt(in, 4)) steps = t->to_ints();
  }
  if (starts.size() != ends.size()) op_fail(ctx, "starts and ends differ in length");
  if (axes.empty()) {
    for (std::size_t k = 0; k < starts.size(); ++k) axes.push_back(static_cast<std::int64_t>(k));
  }
  if (steps.empty()) steps.assign(starts.size(), 1);
  if (axes.size() != starts.size() || steps.size() != starts.size()) op_fail(ctx, "slice parameter lengths differ");
  std::vector<std::int64_t> begin(static_cast<std::size_t>(rank), 0), step(static_cast<std::size_t>(rank), 1);
  Shape out_shape = x.shape;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto d = static_cast<std::size_t>(norm_axis(ctx, axes[k], rank));
    const std::int64_t n = x.shape[d];
    const std::int64_t st = steps[k];
    if (st == 0) op_fail(ctx, "zero step");
    std::int64_t s = starts[k], e = ends[k];
    if (s < 0) s += n;
    if (e < 0) e += n;
    if (st > 0) {
      s = std::clamp<std::int64_t>(s, 0, n);
      e = std::clamp<std::int64_t>(e, 0, n);
    } else {
      s = std::clamp<std::int64_t>(s, 0, n - 1);
      e = std::clamp<std::int64_t>(e, -1, n - 1);
    }
    const std::int64_t len = st > 0 ? (e > s ? (e - s + st - 1) / st : 0) : (s > e ? (s - e + (-st) - 1) / (-st) : 0);
    begin[d] = s;
    step[d] = st;
    out_shape[d] = len;
  }
  const auto strides = strides_of(x.shape);
  std::int64_t base = 0;
  std::vector<std::int64_t> walk(static_cast<std::size_t>(rank));
  for (std::size_t d = 0; d < static_cast<std::size_t>(rank); ++d) {
    if (out_shape[d] > 0) base += begin[d] * strides[d];
    walk[d] = step[d] * strides[d];
  }
  return {gather_strided(x, out_shape, base, walk)};
}

std::vector<Tensor> op_gather(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const Tensor& idx = need(ctx, in, 1);
  const std::int64_t rank = x.rank();
  const auto axis = static_cast<std::size_t>(norm_axis(ctx, ctx.node.attr_int("axis", 0), rank));
  const std::int64_t n = x.shape[axis];
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < x.shape.size(); ++d) {
    if (d < axis) outer *= x.shape[d];
    if (d > axis) inner *= x.shape[d];
  }
  Shape out_shape(x.shape.begin(), x.shape.begin() + static_cast<std::ptrdiff_t>(axis));
  out_shape.insert(out_shape.end(), idx.shape.begin(), idx.shape.end());
  out_shape.insert(out_shape.end(), x.shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, x.shape.end());
  const auto ids = idx.to_ints();
  Tensor out;
  out.dtype = x.dtype;
  out.shape = out_shape;
  const auto total = static_cast<std::size_t>(numel(out_shape));
  if (x.is_float()) {
    out.f.reserve(total);
  } else {
    out.i.reserve(total);
  }
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t j : ids) {
      if (j < 0) j += n;
      if (j < 0 || j >= n) op_fail(ctx, "index out of range");
      const std::int64_t from = (o * n + j) * inner;
      if (x.is_float()) {
        out.f.insert(out.f.end(), x.f.begin() + from, x.f.begin() + from + inner);
      } else {
        out.i.insert(out.i.end(), x.i.begin() + from, x.i.begin() + from + inner);
      }
    }
  }
  return {out};
}

std::vector<Tensor> op_shape(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const std::int64_t rank = x.rank();
  std::int64_t start = ctx.node.attr_int("start", 0);
  std::int64_t end = ctx.node.attr_int("end", rank);
  if (start < 0) start += rank;
  if (end < 0) end += rank;
  start = std::clamp<std::int64_t>(start, 0, rank);
  end = std::clamp<std::int64_t>(end, 0, rank);
  std::vector<std::int64_t> dims;
  for (std::int64_t d = start; d < end; ++d) dims.push_back(x.shape[static_cast<std::size_t>(d)]);
  return {Tensor::ints({static_cast<std::int64_t>(dims.size())}, dims)};
}

std::vector<Tensor> op_size(const OpContext& ctx, const Inputs& in) {
  return {Tensor::ints({}, {need(ctx, in, 0).size()})};
}

std::vector<Tensor> op_expand(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const Shape target = need(ctx, in, 1).to_ints();
  const Shape out_shape = broadcast_shape(ctx, x.shape, target);
  return {gather_strided(x, out_shape, 0, broadcast_strides(x.shape, out_shape))};
}

std::vector<Tensor> op_tile(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const auto reps = need(ctx, in, 1).to_ints();
  if (static_cast<std::int64_t>(reps.size()) != x.rank()) op_fail(ctx, "repeats length differs from rank");
  // View the output as [r0, d0, r1, d1, ...] with zero strides on the repeat axes.
  const auto strides = strides_of(x.shape);
  Shape view;
  std::vector<std::int64_t> walk;
  Shape out_shape;
  for (std::size_t d = 0; d < x.shape.size(); ++d) {
    view.push_back(reps[d]);
    walk.push_back(0);
    view.push_back(x.shape[d]);
    walk.push_back(strides[d]);
    out_shape.push_back(reps[d] * x.shape[d]);
  }
  return {with_shape(gather_strided(x, view, 0, walk), out_shape)};
}

int onnx_dtype_code(DType t) {
  switch (t) {
    case DType::kFloat:
      return 1;
    case DType::kInt64:
      return 7;
    case DType::kBool:
      return 9;
  }
  return 0;
}

std::vector<Tensor> op_cast(const OpContext& ctx, const Inputs& in) {
  Tensor x = need(ctx, in, 0);
  const std::int64_t to = ctx.node.attr_int("to", 1);
  switch (to) {
    case 1:    // float
    case 10:   // float16
    case 11:   // double
    case 16:   // bfloat16
      return {as_float(x)};
    case 6:    // int32
    case 7:    // int64
    case 2:    // uint8
    case 3:    // int8
    case 12:   // uint32
    case 13: {  // uint64
      if (x.is_float()) {
        Tensor out;
        out.dtype = DType::kInt64;
        out.shape = x.shape;
        out.i.reserve(x.f.size());
        for (float v : x.f) out.i.push_back(static_cast<std::int64_t>(v));
        return {out};
      }
      x.dtype = DType::kInt64;
      return {x};
    }
    case 9: {
      Tensor out;
      out.dtype = DType::kBool;
      out.shape = x.shape;
      if (x.is_float()) {
        for (float v : x.f) out.i.push_back(v != 0.0f);
      } else {
        for (auto v : x.i) out.i.push_back(v != 0);
      }
      return {out};
    }
    default:
      op_fail(ctx, "unsupported target type " + std::to_string(to));
  }
}

std::vector<Tensor> op_cast_like(const OpContext& ctx, const Inputs& in) {
  Node n = ctx.node;
  Attribute to;
  to.kind = Attribute::Kind::kInt;
  to.i = onnx_dtype_code(need(ctx, in, 1).dtype);
  n.attributes["to"] = to;
  const OpContext inner{n, ctx.opset};
  return op_cast(inner, {in[0]});
}

std::vector<Tensor> op_constant_of_shape(const OpContext& ctx, const Inputs& in) {
  const Shape shape = need(ctx, in, 0).to_ints();
  const auto n = static_cast<std::size_t>(numel(shape));
  const Attribute* v = ctx.node.attr("value");
  if (!v || v->t.size() == 0) return {Tensor::floats(shape, std::vector<float>(n, 0.0f))};
  const Tensor& t = v->t;
  Tensor out;
  out.dtype = t.dtype;
  out.shape = shape;
  if (t.is_float()) {
    out.f.assign(n, t.f[0]);
  } else {
    out.i.assign(n, t.i[0]);
  }
  return {out};
}

std::vector<Tensor> op_split(const OpContext& ctx, const Inputs& in) {
  const Tensor& x = need(ctx, in, 0);
  const std::int64_t rank = x.rank();
  const auto axis = static_cast<std::size_t>(norm_axis(ctx, ctx.node.attr_int("axis", 0), rank));
  const std::int64_t dim = x.shape[axis];
  const auto count = static_cast<std::int64_t>(ctx.node.outputs.size());
  std::vector<std::int64_t> sizes;
  if (ctx.opset >= 13) {
    if (const Tensor* t = opt(in, 1)) sizes = t->to_ints();
  } else if (auto s = ctx.node.attr_ints("split")) {
    sizes = *s;
  }
  if (sizes.empty()) {
    const std::int64_t parts = ctx.node.attr_int("num_outputs", count);
    const std::int64_t chunk = (dim + parts - 1) / parts;
    for (std::int64_t k = 0; k < parts; ++k) sizes.push_back(std::max<std::int64_t>(0, std::min(chunk, dim - k * chunk)));
  }
  if (std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}) != dim) op_fail(ctx, "split sizes do not sum to the axis length");
  const auto strides = strides_of(x.shape);
  std::vector<Tensor> outs;
  std::int64_t at = 0;
  for (auto len : sizes) {
    Shape shape = x.shape;
    shape[axis] = len;
    outs.push_back(gather_strided(x, shape, at * strides[axis], strides));
    at += len;
  }
  return outs;
}

std::vector<Tensor> op_range(const OpContext& ctx, const Inputs& in) {
  const Tensor& start = need(ctx, in, 0);
  const Tensor& limit = need(ctx, in, 1);
  const Tensor& delta = need(ctx, in, 2);
  if (start.is_float()) {
    const double s = start.double_at(0), l = limit.double_at(0), d = delta.double_at(0);
    if (d == 0.0) op_fail(ctx, "zero delta");
    const auto n = static_cast<std::int64_t>(std::max(0.0, std::ceil((l - s) / d)));
    std::vector<float> v(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = static_cast<float>(s + static_cast<double>(k) * d);
    return {Tensor::floats({n}, v)};
  }
  const std::int64_t s = start.int_at(0), l = limit.int_at(0), d = delta.int_at(0);
  if (d == 0) op_fail(ctx, "zero delta");
  const std::int64_t n = std::max<std::int64_t>(0, d > 0 ? (l - s + d - 1) / d : (s - l + (-d) - 1) / (-d));
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = s + k * d;
  return {Tensor::ints({n}, v)};
}

std::vector<Tensor> variadic(const OpContext& ctx, const Inputs& in, bool is_max) {
  Tensor acc = need(ctx, in, 0);
  for (std::size_t k = 1; k < in.size(); ++k) {
    const Tensor& b = need(ctx, in, k);
    Tensor next;
    if (acc.is_float() || b.is_float()) {
      const Tensor af = as_float(acc), bf = as_float(b);
      next.f = broadcast_apply(ctx, af.f, af.shape, bf.f, bf.shape, next.shape,
                               [is_max](float x, float y) { return is_max ? std::max(x, y) : std::min(x, y); });
    } else {
      next.dtype = DType::kInt64;
      next.i = broadcast_apply(ctx, acc.i, acc.shape, b.i, b.shape, next.shape,
                               [is_max](std::int64_t x, std::int64_t y) { return is_max ? std::max(x, y) : std::min(x, y); });
    }
    acc = std::move(next);
  }
  return {acc};
}

std::vector<Tensor> op_max(const OpContext& c, const Inputs& in) { return variadic(c, in, true); }
std::vector<Tensor> op_min(const OpContext& c, const Inputs& in) { return variadic(c, in, false); }

const std::map<std::string, OpFn, std::less<>>& registry() {
  static const std::map<std::string, OpFn, std::less<>> ops = {
      {"Abs", op_abs},
      {"Add", op_add},
      {"And", op_and},
      {"Cast", op_cast},
      {"CastLike", op_cast_like},
      {"Ceil", op_ceil},
      {"Clip", op_clip},
      {"Concat", op_concat},
      {"Constant", op_constant},
      {"ConstantOfShape", op_constant_of_shape},
      {"Conv", op_conv},
      {"Div", op_div},
      {"Dropout", op_dropout},
      {"Equal", op_equal},
      {"Erf", op_erf},
      {"Exp", op_exp},
      {"Expand", op_expand},
      {"Flatten", op_flatten},
      {"Floor", op_floor},
      {"Gather", op_gather},
      {"Gelu", op_gelu},
      {"Gemm", op_gemm},
      {"Greater", op_greater},
      {"GreaterOrEqual", op_greater_eq},
      {"Identity", op_identity},
      {"LayerNormalization", op_layer_norm},
      {"Less", op_less},
      {"LessOrEqual", op_less_eq},
      {"Log", op_log},
      {"LogSoftmax", op_log_softmax},
      {"MatMul", op_matmul},
      {"Max", op_max},
      {"Min", op_min},
      {"Mod", op_mod},
      {"Mul", op_mul},
      {"Neg", op_neg},
      {"Not", op_not},
      {"Or", op_or},
      {"Pow", op_pow},
      {"Range", op_range},
      {"Reciprocal", op_reciprocal},
      {"ReduceMax", op_reduce_max},
      {"ReduceMean", op_reduce_mean},
      {"ReduceMin", op_reduce_min},
      {"ReduceProd", op_reduce_prod},
      {"ReduceSum", op_reduce_sum},
      {"Relu", op_relu},
      {"Reshape", op_reshape},
      {"Shape", op_shape},
      {"Sigmoid", op_sigmoid},
      {"Size", op_size},
      {"Slice", op_slice},
      {"Softmax", op_softmax},
      {"Split", op_split},
      {"Sqrt", op_sqrt},
      {"Squeeze", op_squeeze},
      {"Sub", op_sub},
      {"Tanh", op_tanh},
      {"Tile", op_tile},
      {"Transpose", op_transpose},
      {"Unsqueeze", op_unsqueeze},
      {"Where", op_where},
      {"Xor", op_xor},
  };
  return ops;
}

}  // namespace

const OpFn* find_op(std::string_view op_type) {
  const auto& ops = registry();
  auto it = ops.find(op_type);
  return it == ops.end() ? nullptr : &it->second;
}

std::vector<std::string> supported_ops() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

}  // namespace layerwise::backend::onnx_detail
