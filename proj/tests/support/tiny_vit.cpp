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

#include "tiny_vit.hpp"

#include <cmath>

#include "graph_builder.hpp"
#include "layerwise/backend/model_spec.hpp"
#include "layerwise/common.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::testing {

namespace {

std::vector<float> normals(const CounterRng& rng, std::uint64_t& counter, std::size_t n, double scale,
                           double offset = 0.0) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(offset + scale * rng.normal(counter++));
  return out;
}

using Matrix = std::vector<std::vector<double>>;

Matrix layer_norm(const Matrix& x, const std::vector<float>& g, const std::vector<float>& b) {
  Matrix out = x;
  for (auto& row : out) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(row.size());
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] - mean) * inv * g[k] + b[k];
  }
  return out;
}

// x [T, in] times w [in, out] plus b.
Matrix affine(const Matrix& x, const std::vector<float>& w, const std::vector<float>& b, int in, int out) {
  Matrix y(x.size(), std::vector<double>(static_cast<std::size_t>(out)));
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (int o = 0; o < out; ++o) {
      double s = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) s += x[t][static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i * out + o)];
      y[t][static_cast<std::size_t>(o)] = s;
    }
  }
  return y;
}

}  // namespace

TinyVitWeights make_tiny_vit_weights(const TinyVitConfig& c) {
  const CounterRng rng(c.seed, RngStream::kGaussianNoise);
  std::uint64_t k = 0;
  const auto D = static_cast<std::size_t>(c.dim);
  const auto M = static_cast<std::size_t>(c.mlp);
  TinyVitWeights w;
  w.patch_w = normals(rng, k, D * 3 * static_cast<std::size_t>(c.patch * c.patch), 0.3);
  w.patch_b = normals(rng, k, D, 0.1);
  w.cls = normals(rng, k, D, 1.0);
  w.pos = normals(rng, k, static_cast<std::size_t>(c.tokens()) * D, 0.2);
  const double s_in = 1.0 / std::sqrt(static_cast<double>(c.dim));
  const double s_mlp = 1.0 / std::sqrt(static_cast<double>(c.mlp));
  for (int l = 0; l < c.layers; ++l) {
    BlockWeights b;
    b.ln1_g = normals(rng, k, D, 0.1, 1.0);
    b.ln1_b = normals(rng, k, D, 0.1);
    b.w_qkv = normals(rng, k, D * 3 * D, s_in);
    b.b_qkv = normals(rng, k, 3 * D, 0.05);
    b.w_o = normals(rng, k, D * D, s_in);
    b.b_o = normals(rng, k, D, 0.05);
    b.ln2_g = normals(rng, k, D, 0.1, 1.0);
    b.ln2_b = normals(rng, k, D, 0.1);
    b.w_1 = normals(rng, k, D * M, s_in);
    b.b_1 = normals(rng, k, M, 0.05);
    b.w_2 = normals(rng, k, M * D, s_mlp);
    b.b_2 = normals(rng, k, D, 0.05);
    w.blocks.push_back(std::move(b));
  }
  return w;
}

std::string tiny_vit_onnx(const TinyVitConfig& c, const TinyVitWeights& w) {
  const std::int64_t D = c.dim, H = c.heads, Dh = c.dim / c.heads, T = c.tokens(), P = c.patch, M = c.mlp;
  GraphBuilder g(17);
  g.input("pixel_values", {1, 3, c.image_size, c.image_size});
  g.floats("patch_w", {D, 3, P, P}, w.patch_w);
  g.floats("patch_b", {D}, w.patch_b);
  g.floats("cls", {1, 1, D}, w.cls);
  g.floats("pos", {1, T, D}, w.pos);
  g.ints("shape_flat", {3}, {1, D, -1});
  g.ints("shape_heads", {4}, {1, T, H, Dh});
  g.ints("shape_tokens", {3}, {1, T, D});
  g.ints("split_qkv", {3}, {D, D, D});
  g.ints("cls_index", {}, {0});
  g.floats("attn_scale", {}, {static_cast<float>(1.0 / std::sqrt(static_cast<double>(Dh)))});
  g.floats("half", {}, {0.5f});
  g.floats("one", {}, {1.0f});
  g.floats("sqrt2", {}, {static_cast<float>(std::sqrt(2.0))});

  g.node("Conv", {"pixel_values", "patch_w", "patch_b"}, {"patches"},
         {{"kernel_shape", std::vector<std::int64_t>{P, P}}, {"strides", std::vector<std::int64_t>{P, P}}});
  g.node("Reshape", {"patches", "shape_flat"}, {"patches_flat"});
  g.node("Transpose", {"patches_flat"}, {"patch_tokens"}, {{"perm", std::vector<std::int64_t>{0, 2, 1}}});
  g.node("Concat", {"cls", "patch_tokens"}, {"tokens"}, {{"axis", std::int64_t{1}}});
  g.node("Add", {"tokens", "pos"}, {"h0"});

  std::string h = "h0";
  for (int l = 0; l < c.layers; ++l) {
    const auto& b = w.blocks[static_cast<std::size_t>(l)];
    const std::string p = "b" + std::to_string(l + 1) + "_";
    auto n = [&](const std::string& s) { return p + s; };
    g.floats(n("ln1_g"), {D}, b.ln1_g);
    g.floats(n("ln1_b"), {D}, b.ln1_b);
    g.floats(n("w_qkv"), {D, 3 * D}, b.w_qkv);
    g.floats(n("b_qkv"), {3 * D}, b.b_qkv);
    g.floats(n("w_o"), {D, D}, b.w_o);
    g.floats(n("b_o"), {D}, b.b_o);
    g.floats(n("ln2_g"), {D}, b.ln2_g);
    g.floats(n("ln2_b"), {D}, b.ln2_b);
    g.floats(n("w_1"), {D, M}, b.w_1);
    g.floats(n("b_1"), {M}, b.b_1);
    g.floats(n("w_2"), {M, D}, b.w_2);
    g.floats(n("b_2"), {D}, b.b_2);

    g.node("LayerNormalization", {h, n("ln1_g"), n("ln1_b")}, {n("a")},
           {{"axis", std::int64_t{-1}}, {"epsilon", 1e-5f}});
    g.node("MatMul", {n("a"), n("w_qkv")}, {n("qkv_raw")});
    g.node("Add", {n("qkv_raw"), n("b_qkv")}, {n("qkv")});
    g.node("Split", {n("qkv"), "split_qkv"}, {n("q"), n("k"), n("v")}, {{"axis", std::int64_t{2}}});
    g.node("Reshape", {n("q"), "shape_heads"}, {n("q4")});
    g.node("Reshape", {n("k"), "shape_heads"}, {n("k4")});
    g.node("Reshape", {n("v"), "shape_heads"}, {n("v4")});
    g.node("Transpose", {n("q4")}, {n("qh")}, {{"perm", std::vector<std::int64_t>{0, 2, 1, 3}}});
    g.node("Transpose", {n("k4")}, {n("kt")}, {{"perm", std::vector<std::int64_t>{0, 2, 3, 1}}});
    g.node("Transpose", {n("v4")}, {n("vh")}, {{"perm", std::vector<std::int64_t>{0, 2, 1, 3}}});
    g.node("MatMul", {n("qh"), n("kt")}, {n("scores_raw")});
    g.node("Mul", {n("scores_raw"), "attn_scale"}, {n("scores")});
    g.node("Softmax", {n("scores")}, {n("probs")}, {{"axis", std::int64_t{-1}}});
    g.node("MatMul", {n("probs"), n("vh")}, {n("ctx_h")});
    g.node("Transpose", {n("ctx_h")}, {n("ctx_t")}, {{"perm", std::vector<std::int64_t>{0, 2, 1, 3}}});
    g.node("Reshape", {n("ctx_t"), "shape_tokens"}, {n("ctx")});
    g.node("MatMul", {n("ctx"), n("w_o")}, {n("attn_raw")});
    g.node("Add", {n("attn_raw"), n("b_o")}, {n("attn")});
    g.node("Add", {h, n("attn")}, {n("h_mid")});
    g.node("LayerNormalization", {n("h_mid"), n("ln2_g"), n("ln2_b")}, {n("m")},
           {{"axis", std::int64_t{-1}}, {"epsilon", 1e-5f}});
    g.node("MatMul", {n("m"), n("w_1")}, {n("u_raw")});
    g.node("Add", {n("u_raw"), n("b_1")}, {n("u")});
    // Exact GELU: 0.5 u (1 + erf(u / sqrt 2)).
    g.node("Div", {n("u"), "sqrt2"}, {n("u_s")});
    g.node("Erf", {n("u_s")}, {n("u_erf")});
    g.node("Add", {n("u_erf"), "one"}, {n("u_1")});
    g.node("Mul", {n("u"), n("u_1")}, {n("u_m")});
    g.node("Mul", {n("u_m"), "half"}, {n("gelu")});
    g.node("MatMul", {n("gelu"), n("w_2")}, {n("mlp_raw")});
    g.node("Add", {n("mlp_raw"), n("b_2")}, {n("mlp")});
    g.node("Add", {n("h_mid"), n("mlp")}, {n("h")});
    const std::string tap = "cls_block_" + std::to_string(l + 1);
    g.node("Gather", {n("h"), "cls_index"}, {tap}, {{"axis", std::int64_t{1}}});
    g.output(tap);
    h = n("h");
  }
  return g.serialize();
}

std::filesystem::path write_tiny_vit_package(const std::filesystem::path& dir, const TinyVitConfig& c) {
  std::filesystem::create_directories(dir);
  write_file(dir / "model.onnx", tiny_vit_onnx(c, make_tiny_vit_weights(c)));
  backend::ModelSpec spec;
  spec.name = c.name;
  spec.num_layers = c.layers;
  spec.hidden_dim = c.dim;
  spec.input_size = c.image_size;
  spec.mean = c.mean;
  spec.std = c.std;
  for (int l = 1; l <= c.layers; ++l) spec.tap_names.push_back("cls_block_" + std::to_string(l));
  spec.input_name = "pixel_values";
  spec.graph_path = dir / "model.onnx";
  spec.tap_point = "class token of the residual stream after each block";
  write_file(dir / "model.json", spec.to_json());
  return dir;
}

std::vector<std::vector<double>> tiny_vit_reference(const TinyVitConfig& c, const TinyVitWeights& w,
                                                    const backend::ModelInput& x) {
  const int D = c.dim, H = c.heads, Dh = c.dim / c.heads, P = c.patch, G = c.image_size / c.patch, T = c.tokens();
  Matrix h(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(D)));
  for (int d = 0; d < D; ++d) h[0][static_cast<std::size_t>(d)] = w.cls[static_cast<std::size_t>(d)];
  for (int gy = 0; gy < G; ++gy) {
    for (int gx = 0; gx < G; ++gx) {
      auto& tok = h[static_cast<std::size_t>(1 + gy * G + gx)];
      for (int d = 0; d < D; ++d) {
        double s = w.patch_b[static_cast<std::size_t>(d)];
        for (int ch = 0; ch < 3; ++ch) {
          for (int ky = 0; ky < P; ++ky) {
            for (int kx = 0; kx < P; ++kx) {
              s += w.patch_w[static_cast<std::size_t>(((d * 3 + ch) * P + ky) * P + kx)] *
                   x.at(ch, gy * P + ky, gx * P + kx);
            }
          }
        }
        tok[static_cast<std::size_t>(d)] = s;
      }
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < D; ++d) h[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] += w.pos[static_cast<std::size_t>(t * D + d)];
  }

  std::vector<std::vector<double>> taps;
  for (const auto& b : w.blocks) {
    const Matrix a = layer_norm(h, b.ln1_g, b.ln1_b);
    const Matrix qkv = affine(a, b.w_qkv, b.b_qkv, D, 3 * D);
    Matrix ctx(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(D), 0.0));
    const double scale = 1.0 / std::sqrt(static_cast<double>(Dh));
    for (int head = 0; head < H; ++head) {
      for (int i = 0; i < T; ++i) {
        std::vector<double> s(static_cast<std::size_t>(T));
        double mx = -1e300;
        for (int j = 0; j < T; ++j) {
          double dot = 0.0;
          for (int e = 0; e < Dh; ++e) {
            dot += qkv[static_cast<std::size_t>(i)][static_cast<std::size_t>(head * Dh + e)] *
                   qkv[static_cast<std::size_t>(j)][static_cast<std::size_t>(D + head * Dh + e)];
          }
          s[static_cast<std::size_t>(j)] = dot * scale;
          mx = std::max(mx, s[static_cast<std::size_t>(j)]);
        }
        double z = 0.0;
        for (auto& v : s) z += (v = std::exp(v - mx));
        for (int e = 0; e < Dh; ++e) {
          double acc = 0.0;
          for (int j = 0; j < T; ++j) {
            acc += s[static_cast<std::size_t>(j)] / z *
                   qkv[static_cast<std::size_t>(j)][static_cast<std::size_t>(2 * D + head * Dh + e)];
          }
          ctx[static_cast<std::size_t>(i)][static_cast<std::size_t>(head * Dh + e)] = acc;
        }
      }
    }
    const Matrix attn = affine(ctx, b.w_o, b.b_o, D, D);
    for (int t = 0; t < T; ++t) {
      for (int d = 0; d < D; ++d) h[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] += attn[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
    }
    const Matrix m = layer_norm(h, b.ln2_g, b.ln2_b);
    Matrix u = affine(m, b.w_1, b.b_1, D, c.mlp);
    for (auto& row : u) {
      for (auto& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    }
    const Matrix mlp = affine(u, b.w_2, b.b_2, c.mlp, D);
    for (int t = 0; t < T; ++t) {
      for (int d = 0; d < D; ++d) h[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] += mlp[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
    }
    taps.push_back(h[0]);
  }
  return taps;
}

}  // namespace layerwise::testing
